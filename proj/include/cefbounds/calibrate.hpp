#pragma once

// Least-squares cubic regression splines with fixed knots, used to estimate
// a curvature cap from a fully observed reference CEF. Natural splines have
// f'' = 0 at both ends of the support; free splines do not.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "cefbounds/core.hpp"

namespace cefb::calibrate {

enum class Boundary { natural, free };

struct ReferenceCurve {
    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> knots;  // interior knots; empty means quartiles of x
};

// Piecewise cubic in local coordinates: on [breaks[j], breaks[j+1]],
// f(x) = c0 + c1 t + c2 t^2 + c3 t^3 with t = x - breaks[j].
struct Spline {
    std::vector<double> breaks;
    std::vector<Eigen::Vector4d> coefs;

    [[nodiscard]] std::size_t segment(double x) const {
        auto it = std::upper_bound(breaks.begin(), breaks.end(), x);
        auto j = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - breaks.begin() - 1, 0));
        return std::min(j, coefs.size() - 1);
    }

    [[nodiscard]] double operator()(double x) const {
        auto j = segment(x);
        const auto& c = coefs[j];
        double t = x - breaks[j];
        return c(0) + t * (c(1) + t * (c(2) + t * c(3)));
    }

    [[nodiscard]] double derivative(double x) const {
        auto j = segment(x);
        const auto& c = coefs[j];
        double t = x - breaks[j];
        return c(1) + t * (2.0 * c(2) + 3.0 * t * c(3));
    }

    [[nodiscard]] double second_derivative(double x) const {
        auto j = segment(x);
        const auto& c = coefs[j];
        return 2.0 * c(2) + 6.0 * c(3) * (x - breaks[j]);
    }
};

struct SplineFit {
    Spline spline;
    std::vector<double> knots;
    std::vector<double> fitted;
    std::vector<double> residuals;
    double rss = 0.0;
    Boundary boundary = Boundary::natural;
};

[[nodiscard]] inline std::vector<double> quartile_knots(const std::vector<double>& x) {
    std::vector<double> s = x;
    std::sort(s.begin(), s.end());
    std::vector<double> out;
    for (double p : {0.25, 0.5, 0.75}) {
        double h = p * static_cast<double>(s.size() - 1);
        auto i = static_cast<std::size_t>(h);
        double t = h - static_cast<double>(i);
        out.push_back(i + 1 < s.size() ? s[i] + t * (s[i + 1] - s[i]) : s[i]);
    }
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

namespace detail {

using cefb::detail::concat;

// Basis functions on the unit interval and their first two derivatives.
// `knots` are interior knots in unit coordinates.
struct Basis {
    Boundary boundary;
    std::vector<double> knots;

    [[nodiscard]] std::size_t size() const {
        return boundary == Boundary::natural ? knots.size() + 2 : knots.size() + 4;
    }

    // deriv = 0, 1 or 2.
    [[nodiscard]] Eigen::VectorXd eval(double s, int deriv) const {
        Eigen::VectorXd out(static_cast<Eigen::Index>(size()));
        auto tp = [&](double k) {
            double t = s - k;
            if (t <= 0.0) return 0.0;
            if (deriv == 0) return t * t * t;
            if (deriv == 1) return 3.0 * t * t;
            return 6.0 * t;
        };
        out(0) = deriv == 0 ? 1.0 : 0.0;
        out(1) = deriv == 0 ? s : (deriv == 1 ? 1.0 : 0.0);
        if (boundary == Boundary::free) {
            out(2) = deriv == 0 ? s * s : (deriv == 1 ? 2.0 * s : 2.0);
            out(3) = deriv == 0 ? s * s * s : (deriv == 1 ? 3.0 * s * s : 6.0 * s);
            for (std::size_t j = 0; j < knots.size(); ++j) out(static_cast<Eigen::Index>(4 + j)) = tp(knots[j]);
            return out;
        }
        // Natural basis over boundary knots 0 and 1 plus the interior knots.
        std::vector<double> all{0.0};
        all.insert(all.end(), knots.begin(), knots.end());
        all.push_back(1.0);
        std::size_t m = all.size();
        auto d = [&](std::size_t k) { return (tp(all[k]) - tp(all[m - 1])) / (all[m - 1] - all[k]); };
        double last = d(m - 2);
        for (std::size_t k = 0; k + 2 < m; ++k) out(static_cast<Eigen::Index>(2 + k)) = d(k) - last;
        return out;
    }
};

}  // namespace detail

[[nodiscard]] inline Eigen::MatrixXd design_matrix(const ReferenceCurve& curve, const std::vector<double>& knots,
                                                   Boundary boundary) {
    double lo = *std::min_element(curve.x.begin(), curve.x.end());
    double hi = *std::max_element(curve.x.begin(), curve.x.end());
    detail::Basis basis{boundary, {}};
    for (double k : knots) basis.knots.push_back((k - lo) / (hi - lo));
    Eigen::MatrixXd x(static_cast<Eigen::Index>(curve.x.size()), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t i = 0; i < curve.x.size(); ++i)
        x.row(static_cast<Eigen::Index>(i)) = basis.eval((curve.x[i] - lo) / (hi - lo), 0).transpose();
    return x;
}

inline void check_curve(const ReferenceCurve& curve, const std::vector<double>& knots) {
    if (curve.x.size() != curve.y.size())
        throw ValidationError("reference curve needs matching x and y columns");
    if (curve.x.size() < 2) throw ValidationError("reference curve needs at least two points");
    for (std::size_t i = 0; i < curve.x.size(); ++i)
        if (!std::isfinite(curve.x[i]) || !std::isfinite(curve.y[i]))
            throw ValidationError(detail::concat("reference point ", i + 1, " is not finite"));
    double lo = *std::min_element(curve.x.begin(), curve.x.end());
    double hi = *std::max_element(curve.x.begin(), curve.x.end());
    for (std::size_t j = 0; j < knots.size(); ++j) {
        if (!(knots[j] > lo && knots[j] < hi))
            throw ValidationError(detail::concat("knot ", knots[j], " is not strictly inside [", lo,
                                                 ", ", hi, "]"));
        if (j > 0 && !(knots[j] > knots[j - 1]))
            throw ValidationError("knots must be strictly increasing");
    }
    std::vector<double> edges{lo};
    edges.insert(edges.end(), knots.begin(), knots.end());
    edges.push_back(hi);
    for (std::size_t j = 0; j + 1 < edges.size(); ++j) {
        auto count = std::count_if(curve.x.begin(), curve.x.end(), [&](double x) {
            return x >= edges[j] && x <= edges[j + 1];
        });
        if (count < 2)
            throw ValidationError(detail::concat("spline segment [", edges[j], ", ", edges[j + 1],
                                                 "] holds fewer than two points"));
    }
}

[[nodiscard]] inline SplineFit fit_spline(const ReferenceCurve& curve, Boundary boundary = Boundary::natural) {
    std::vector<double> knots = curve.knots.empty() ? quartile_knots(curve.x) : curve.knots;
    check_curve(curve, knots);
    double lo = *std::min_element(curve.x.begin(), curve.x.end());
    double hi = *std::max_element(curve.x.begin(), curve.x.end());
    double w = hi - lo;

    Eigen::MatrixXd x = design_matrix(curve, knots, boundary);
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(curve.y.data(), static_cast<Eigen::Index>(curve.y.size()));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < x.cols())
        throw ValidationError(detail::concat("spline design is rank deficient (rank ", qr.rank(), " of ",
                                             x.cols(), "); add points or drop knots"));
    Eigen::VectorXd beta = qr.solve(y);

    SplineFit fit;
    fit.knots = knots;
    fit.boundary = boundary;
    Eigen::VectorXd yhat = x * beta;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        fit.fitted.push_back(yhat(i));
        fit.residuals.push_back(y(i) - yhat(i));
        fit.rss += (y(i) - yhat(i)) * (y(i) - yhat(i));
    }

    // Convert to local piecewise form in original units.
    detail::Basis basis{boundary, {}};
    for (double k : knots) basis.knots.push_back((k - lo) / w);
    fit.spline.breaks.push_back(lo);
    fit.spline.breaks.insert(fit.spline.breaks.end(), knots.begin(), knots.end());
    fit.spline.breaks.push_back(hi);
    for (std::size_t j = 0; j + 1 < fit.spline.breaks.size(); ++j) {
        double a = fit.spline.breaks[j], b = fit.spline.breaks[j + 1];
        double sa = (a - lo) / w, sb = (b - lo) / w;
        double f0 = basis.eval(sa, 0).dot(beta);
        double f1 = basis.eval(sa, 1).dot(beta) / w;
        double f2a = basis.eval(sa, 2).dot(beta) / (w * w);
        double f2b = basis.eval(sb, 2).dot(beta) / (w * w);
        fit.spline.coefs.emplace_back(f0, f1, 0.5 * f2a, (f2b - f2a) / (6.0 * (b - a)));
    }
    return fit;
}

// Largest |f''| over the support. f'' is piecewise linear, so the maximum
// sits at a break.
[[nodiscard]] inline double max_curvature(const Spline& s) {
    double out = 0.0;
    for (std::size_t j = 0; j < s.coefs.size(); ++j) {
        const auto& c = s.coefs[j];
        double h = s.breaks[j + 1] - s.breaks[j];
        out = std::max({out, std::abs(2.0 * c(2)), std::abs(2.0 * c(2) + 6.0 * c(3) * h)});
    }
    return out;
}

inline constexpr double kSuggestedCapMultiple = 2.0;

[[nodiscard]] inline double suggested_cap(double max_curv) { return kSuggestedCapMultiple * max_curv; }

}  // namespace cefb::calibrate
