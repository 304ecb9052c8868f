#pragma once

// Two-stage bounds over a discretized CEF. The support is cut into N equal
// cells; gamma_i is the CEF on cell i. Stage one finds the smallest
// bin-weighted MSE reachable under the shape constraints, stage two
// extremizes a linear statistic among CEFs that reach it.
//
// All solves run in normalized outcome units u = (y - y_min) / width.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cefbounds/active_set.hpp"
#include "cefbounds/core.hpp"
#include "cefbounds/simplex.hpp"

namespace cefb::numeric {

// Stage-one MSE at or below this (normalized) counts as an exact fit.
inline constexpr double kZeroMse = 1e-12;
// Half-width of the bin-mean band used when the fit is not exact; widened
// tenfold per retry up to kMaxBinBand.
inline constexpr double kBinBand = 1e-12;
inline constexpr double kMaxBinBand = 1e-9;

namespace detail {
using cefb::detail::concat;
}

struct ConstraintSet {
    bool monotone = true;
    double curvature_limit = kInf;  // outcome units per (conditioning unit)^2

    [[nodiscard]] std::string tag() const {
        std::string t = monotone ? "monotone" : "no monotonicity";
        if (std::isinf(curvature_limit)) t += "; curvature unbounded";
        else t += detail::concat("; curvature <= ", curvature_limit);
        return t;
    }

    void check() const {
        if (std::isnan(curvature_limit) || curvature_limit < 0.0)
            throw ValidationError(
                detail::concat("curvature limit must be >= 0 or inf, got ", curvature_limit));
    }
};

// Equal-width partition of the support with bin boundaries snapped to cell
// edges.
struct Grid {
    double lo = 0.0, hi = 1.0, spacing = 1.0;
    std::vector<double> edges;                 // n + 1
    Eigen::VectorXd weights;                   // cell masses
    std::vector<std::size_t> first_cell;       // per bin, plus one past the end
    Eigen::MatrixXd bin_rows;                  // K x n bin-mean operator
    Eigen::VectorXd bin_masses;                // K, snapped
    std::vector<std::string> warnings;

    [[nodiscard]] std::size_t cells() const { return edges.size() - 1; }
    [[nodiscard]] std::size_t bins() const { return first_cell.size() - 1; }
    [[nodiscard]] double midpoint(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }

    [[nodiscard]] std::vector<double> midpoints() const {
        std::vector<double> out;
        for (std::size_t i = 0; i < cells(); ++i) out.push_back(midpoint(i));
        return out;
    }

    // Cell containing x; edges belong to the cell on their right, the last
    // edge to the last cell.
    [[nodiscard]] std::size_t cell_of(double x) const {
        if (x < lo || x > hi)
            throw ValidationError(
                detail::concat("x = ", x, " is outside the support [", lo, ", ", hi, "]"));
        auto it = std::upper_bound(edges.begin(), edges.end(), x);
        auto i = static_cast<std::size_t>(it - edges.begin());
        return std::min(i, cells()) - 1;
    }
};

[[nodiscard]] inline Grid discretize(const ValidatedInput& v, std::size_t n) {
    if (n < v.bins())
        throw ValidationError(detail::concat("partition count ", n, " is smaller than the bin count ",
                                             v.bins()));
    Grid g;
    g.lo = v.lo();
    g.hi = v.hi();
    double width = g.hi - g.lo;
    g.spacing = width / static_cast<double>(n);
    for (std::size_t i = 0; i <= n; ++i)
        g.edges.push_back(i == n ? g.hi : g.lo + width * static_cast<double>(i) / static_cast<double>(n));

    const auto& bd = v.sample.boundaries;
    for (std::size_t k = 0; k <= v.bins(); ++k) {
        double pos = (bd[k] - g.lo) / g.spacing;
        auto j = static_cast<std::size_t>(std::llround(pos));
        double snap = std::abs(g.edges[j] - bd[k]);
        if (snap > 1e-9 * width)
            g.warnings.push_back(detail::concat("boundary ", bd[k], " snapped to partition edge ",
                                                g.edges[j], " (distance ", snap, ")"));
        if (k > 0 && j <= g.first_cell.back())
            throw ValidationError(detail::concat("bin ", k, " [", bd[k - 1], ", ", bd[k],
                                                 "] is narrower than one partition at N = ", n));
        g.first_cell.push_back(j);
    }

    g.weights.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        g.weights(static_cast<Eigen::Index>(i)) = v.dist.mass(g.edges[i], g.edges[i + 1]);

    std::size_t bins = v.bins();
    g.bin_rows = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(bins), static_cast<Eigen::Index>(n));
    g.bin_masses.resize(static_cast<Eigen::Index>(bins));
    for (std::size_t k = 0; k < bins; ++k) {
        auto a = static_cast<Eigen::Index>(g.first_cell[k]);
        auto len = static_cast<Eigen::Index>(g.first_cell[k + 1] - g.first_cell[k]);
        double m = g.weights.segment(a, len).sum();
        if (!(m > 0.0))
            throw ValidationError(detail::concat("bin ", k + 1, " has zero mass on the partition grid"));
        g.bin_masses(static_cast<Eigen::Index>(k)) = m;
        g.bin_rows.row(static_cast<Eigen::Index>(k)).segment(a, len) = g.weights.segment(a, len) / m;
    }
    return g;
}

struct StageOneResult {
    double min_mse = 0.0;  // squared outcome units
    GridCEF witness;       // user orientation
    Eigen::VectorXd fitted;  // canonical normalized bin means of the witness
    std::vector<std::string> warnings;
};

struct StatBounds {
    StatisticSpec spec;
    double lower = 0.0;
    double upper = 0.0;
    GridCEF lower_witness;
    GridCEF upper_witness;
};

namespace detail {

struct Normalizer {
    double y_min, width;
    [[nodiscard]] double to_unit(double y) const { return (y - y_min) / width; }
    [[nodiscard]] double from_unit(double u) const { return y_min + width * u; }
};

inline Normalizer normalizer(const ValidatedInput& v) {
    return {v.sample.range.y_min, v.sample.range.width()};
}

inline Eigen::VectorXd unit_means(const ValidatedInput& v) {
    auto nz = normalizer(v);
    Eigen::VectorXd r(static_cast<Eigen::Index>(v.bins()));
    for (std::size_t k = 0; k < v.bins(); ++k) r(static_cast<Eigen::Index>(k)) = nz.to_unit(v.sample.means[k]);
    return r;
}

// Shape rows: monotone differences and curvature second differences.
struct Shape {
    Eigen::MatrixXd rows;
    Eigen::VectorXd lo, hi;
};

inline Shape shape_rows(const ValidatedInput& v, const Grid& g, const ConstraintSet& cs) {
    auto n = static_cast<Eigen::Index>(g.cells());
    double cap = cs.curvature_limit * g.spacing * g.spacing / v.sample.range.width();
    bool curv = std::isfinite(cap) && cap < 2.0 && n >= 3;
    Eigen::Index m = (cs.monotone ? n - 1 : 0) + (curv ? n - 2 : 0);
    Shape s{Eigen::MatrixXd::Zero(m, n), Eigen::VectorXd(m), Eigen::VectorXd(m)};
    Eigen::Index r = 0;
    if (cs.monotone)
        for (Eigen::Index i = 0; i + 1 < n; ++i, ++r) {
            s.rows(r, i) = -1.0;
            s.rows(r, i + 1) = 1.0;
            s.lo(r) = 0.0;
            s.hi(r) = 1.0;
        }
    if (curv)
        for (Eigen::Index i = 1; i + 1 < n; ++i, ++r) {
            s.rows(r, i - 1) = 1.0;
            s.rows(r, i) = -2.0;
            s.rows(r, i + 1) = 1.0;
            s.lo(r) = -cap;
            s.hi(r) = cap;
        }
    return s;
}

inline lp::Problem bounded_lp(const Grid& g, const Shape& s, const Eigen::VectorXd& target, double band) {
    auto n = static_cast<Eigen::Index>(g.cells());
    auto k = g.bin_rows.rows();
    auto ms = s.rows.rows();
    lp::Problem p;
    p.a.resize(ms + k, n);
    p.a.topRows(ms) = s.rows;
    p.a.bottomRows(k) = g.bin_rows;
    p.row_lo.resize(ms + k);
    p.row_hi.resize(ms + k);
    p.row_lo.head(ms) = s.lo;
    p.row_hi.head(ms) = s.hi;
    p.row_lo.tail(k) = target.array() - band;
    p.row_hi.tail(k) = target.array() + band;
    p.x_lo = Eigen::VectorXd::Zero(n);
    p.x_hi = Eigen::VectorXd::Ones(n);
    return p;
}

inline GridCEF to_user(const ValidatedInput& v, const Grid& g, const Eigen::VectorXd& u) {
    auto nz = normalizer(v);
    GridCEF out;
    out.grid_spacing = g.spacing;
    for (Eigen::Index i = 0; i < u.size(); ++i) out.values.push_back(v.to_user(nz.from_unit(std::clamp(u(i), 0.0, 1.0))));
    return out;
}

inline Eigen::VectorXd from_user(const ValidatedInput& v, const GridCEF& cef) {
    auto nz = normalizer(v);
    Eigen::VectorXd u(static_cast<Eigen::Index>(cef.values.size()));
    for (std::size_t i = 0; i < cef.values.size(); ++i)
        u(static_cast<Eigen::Index>(i)) = nz.to_unit(v.flipped ? -cef.values[i] : cef.values[i]);
    return u;
}

inline void check_constraints(const ValidatedInput& v, const ConstraintSet& cs) {
    cs.check();
    if (cs.monotone && !v.monotone())
        throw ValidationError("monotone constraint requested but the sample direction is none");
}

}  // namespace detail

// Bin-weighted MSE of a user-orientation grid CEF, in squared outcome units.
[[nodiscard]] inline double mse(const ValidatedInput& v, const Grid& g, const GridCEF& cef) {
    Eigen::VectorXd y(static_cast<Eigen::Index>(cef.values.size()));
    for (std::size_t i = 0; i < cef.values.size(); ++i) y(static_cast<Eigen::Index>(i)) = cef.values[i];
    Eigen::VectorXd fit = g.bin_rows * y;
    double out = 0.0;
    for (std::size_t k = 0; k < v.bins(); ++k) {
        double r = v.to_user(v.sample.means[k]);
        double d = fit(static_cast<Eigen::Index>(k)) - r;
        out += g.bin_masses(static_cast<Eigen::Index>(k)) * d * d;
    }
    return out;
}

[[nodiscard]] inline StageOneResult stage1_min_mse(const ValidatedInput& v, const Grid& g,
                                                   const ConstraintSet& cs) {
    detail::check_constraints(v, cs);
    StageOneResult out;
    if (!cs.monotone && std::isinf(cs.curvature_limit))
        out.warnings.push_back(
            "no shape constraint: bounds are the outcome range away from bin averages");
    auto shape = detail::shape_rows(v, g, cs);
    Eigen::VectorXd r = detail::unit_means(v);
    double width = v.sample.range.width();

    lp::Simplex exact(detail::bounded_lp(g, shape, r, 0.0));
    if (exact.feasible()) {
        Eigen::VectorXd u = exact.phase_one_point();
        out.witness = detail::to_user(v, g, u);
        out.fitted = g.bin_rows * u;
        out.min_mse = 0.0;
        return out;
    }

    qp::Problem p;
    Eigen::VectorXd sw = g.bin_masses.cwiseSqrt();
    p.e = sw.asDiagonal() * g.bin_rows;
    p.f = sw.cwiseProduct(r);
    p.c = shape.rows;
    p.row_lo = shape.lo;
    p.row_hi = shape.hi;
    auto n = static_cast<Eigen::Index>(g.cells());
    p.x_lo = Eigen::VectorXd::Zero(n);
    p.x_hi = Eigen::VectorXd::Ones(n);
    double level = g.bin_masses.dot(r) / g.bin_masses.sum();
    auto res = qp::solve(p, Eigen::VectorXd::Constant(n, level));
    Eigen::VectorXd u = res.x.cwiseMax(0.0).cwiseMin(1.0);
    out.fitted = g.bin_rows * u;
    Eigen::VectorXd d = out.fitted - r;
    double unit_mse = (g.bin_masses.array() * d.array().square()).sum();
    out.min_mse = unit_mse * width * width;
    out.witness = detail::to_user(v, g, u);
    if (unit_mse > kZeroMse)
        out.warnings.push_back(detail::concat(
            "constraints cannot reproduce the bin means (minimum MSE ", out.min_mse,
            "); bounds are conditional on the best-fitting bin means"));
    return out;
}

// Coefficients c with statistic = c . gamma (gamma in any outcome units).
[[nodiscard]] inline Eigen::VectorXd stat_coefficients(const ValidatedInput& v, const Grid& g,
                                                       const StatisticSpec& spec) {
    spec.check(g.lo, g.hi);
    auto n = static_cast<Eigen::Index>(g.cells());
    Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
    auto slope_coefs = [&](double& xbar) {
        double total = g.weights.sum();
        xbar = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) xbar += g.weights(i) * g.midpoint(static_cast<std::size_t>(i));
        xbar /= total;
        Eigen::VectorXd s(n);
        double sxx = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double dx = g.midpoint(static_cast<std::size_t>(i)) - xbar;
            s(i) = g.weights(i) * dx;
            sxx += g.weights(i) * dx * dx;
        }
        if (!(sxx > 0.0)) throw ValidationError("best-linear slope undefined: all mass in one partition");
        return Eigen::VectorXd(s / sxx);
    };
    switch (spec.kind) {
        case StatisticSpec::Kind::point:
            c(static_cast<Eigen::Index>(g.cell_of(spec.a))) = 1.0;
            break;
        case StatisticSpec::Kind::interval_mean: {
            double total = v.dist.mass(spec.a, spec.b);
            if (!(total > 0.0))
                throw ValidationError(detail::concat("interval [", spec.a, ", ", spec.b,
                                                     "] has zero probability mass"));
            for (Eigen::Index i = 0; i < n; ++i) {
                double lo = std::max(spec.a, g.edges[static_cast<std::size_t>(i)]);
                double hi = std::min(spec.b, g.edges[static_cast<std::size_t>(i) + 1]);
                if (hi > lo) c(i) = v.dist.mass(lo, hi) / total;
            }
            break;
        }
        case StatisticSpec::Kind::best_linear_slope: {
            double xbar;
            c = slope_coefs(xbar);
            break;
        }
        case StatisticSpec::Kind::best_linear_value: {
            double xbar;
            Eigen::VectorXd s = slope_coefs(xbar);
            c = g.weights / g.weights.sum() + (spec.a - xbar) * s;
            break;
        }
    }
    return c;
}

[[nodiscard]] inline double eval_stat(const ValidatedInput& v, const Grid& g, const GridCEF& cef,
                                      const StatisticSpec& spec) {
    if (cef.values.size() != g.cells())
        throw ValidationError(detail::concat("grid CEF has ", cef.values.size(),
                                             " values, grid has ", g.cells(), " partitions"));
    Eigen::VectorXd c = stat_coefficients(v, g, spec);
    double out = 0.0;
    for (std::size_t i = 0; i < cef.values.size(); ++i) out += c(static_cast<Eigen::Index>(i)) * cef.values[i];
    return out;
}

// Stage-two feasible set {gamma in shape polytope : bin means hit target}.
// Built once and reused for any number of linear objectives.
class StageTwo {
public:
    StageTwo(const ValidatedInput& v, const Grid& g, const ConstraintSet& cs, const StageOneResult& s1)
        : v_(v), g_(g) {
        detail::check_constraints(v, cs);
        auto shape = detail::shape_rows(v, g, cs);
        Eigen::VectorXd r = detail::unit_means(v);
        double width = v.sample.range.width();
        if (s1.min_mse <= kZeroMse * width * width) {
            lp_.emplace(detail::bounded_lp(g, shape, r, 0.0));
        } else {
            for (double band = kBinBand; band <= kMaxBinBand * 1.0001; band *= 10.0) {
                lp_.emplace(detail::bounded_lp(g, shape, s1.fitted, band));
                if (lp_->feasible()) break;
            }
        }
        if (!lp_->feasible())
            throw InfeasibleError(detail::concat(
                "no CEF satisfies the constraints at the stage-one fit (phase-one residual ",
                lp_->infeasibility(), ")"));
    }

    // Bounds on c . gamma (user units) with attaining witnesses.
    [[nodiscard]] StatBounds bound(const Eigen::VectorXd& c, const StatisticSpec& spec,
                                   lp::Simplex::Basis* warm_lo = nullptr,
                                   lp::Simplex::Basis* warm_hi = nullptr) const {
        // c . y = c . (y_min + width u) in canonical orientation.
        auto nz = detail::normalizer(v_);
        double offset = nz.y_min * c.sum();
        auto lo = lp_->minimize(c, warm_lo);
        auto hi = lp_->maximize(c, warm_hi);
        double canon_lo = offset + nz.width * lo.objective;
        double canon_hi = offset + nz.width * hi.objective;
        StatBounds out;
        out.spec = spec;
        if (v_.flipped) {
            out.lower = -canon_hi;
            out.upper = -canon_lo;
            out.lower_witness = detail::to_user(v_, g_, hi.x);
            out.upper_witness = detail::to_user(v_, g_, lo.x);
        } else {
            out.lower = canon_lo;
            out.upper = canon_hi;
            out.lower_witness = detail::to_user(v_, g_, lo.x);
            out.upper_witness = detail::to_user(v_, g_, hi.x);
        }
        if (out.upper < out.lower) out.upper = out.lower = 0.5 * (out.lower + out.upper);
        return out;
    }

private:
    const ValidatedInput& v_;
    const Grid& g_;
    std::optional<lp::Simplex> lp_;
};

[[nodiscard]] inline StatBounds stage2_bound_stat(const ValidatedInput& v, const Grid& g,
                                                  const ConstraintSet& cs, const StatisticSpec& spec,
                                                  const StageOneResult& s1) {
    StageTwo st(v, g, cs, s1);
    return st.bound(stat_coefficients(v, g, spec), spec);
}

// Pointwise bounds at every partition; grid points are cell midpoints.
[[nodiscard]] inline CEFEnvelope cef_envelope_numeric(const ValidatedInput& v, const Grid& g,
                                                      const ConstraintSet& cs,
                                                      const StageOneResult& s1) {
    StageTwo st(v, g, cs, s1);
    CEFEnvelope env;
    env.provenance = CEFEnvelope::Provenance::numeric;
    env.constraint_tag = cs.tag() + detail::concat("; numeric N = ", g.cells());
    lp::Simplex::Basis warm_lo, warm_hi;
    auto n = static_cast<Eigen::Index>(g.cells());
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
        c(i) = 1.0;
        double x = g.midpoint(static_cast<std::size_t>(i));
        auto b = st.bound(c, StatisticSpec::point(x), &warm_lo, &warm_hi);
        env.grid.push_back(x);
        env.lower.push_back(b.lower);
        env.upper.push_back(b.upper);
    }
    return env;
}

// Convenience: validate-free full run for one statistic.
struct NumericRun {
    Grid grid;
    StageOneResult stage1;
};

[[nodiscard]] inline NumericRun prepare(const ValidatedInput& v, std::size_t n, const ConstraintSet& cs) {
    NumericRun run{discretize(v, n), {}};
    run.stage1 = stage1_min_mse(v, run.grid, cs);
    return run;
}

}  // namespace cefb::numeric
