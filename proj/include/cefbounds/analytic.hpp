#pragma once

// Closed-form sharp bounds on E(y|x) and on interval means when x is
// interval censored with a known distribution and the CEF is weakly
// increasing. Every bound comes with a constructive step-function witness.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "cefbounds/core.hpp"

namespace cefb::analytic {

// Differences r_{k+1} - r_{k-1} below this (relative to the outcome range)
// force a constant CEF on bin k.
inline constexpr double kTieTolerance = 1e-10;
// a or b within this fraction of the support width of a boundary counts as
// lying on it.
inline constexpr double kBoundaryTolerance = 1e-9;
inline constexpr int kBisectionIterations = 80;
inline constexpr double kBisectionWidth = 1e-12;

struct Crossover {
    double location = 0.0;  // x_k*
    double share = 0.0;     // within-bin CDF at x_k*
    bool degenerate = false;
};

using CrossoverTable = std::vector<Crossover>;

struct PointBounds {
    double lower = 0.0;
    double upper = 0.0;
    bool clamped = false;
};

struct MuBounds {
    double a = 0.0;
    double b = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    bool point_identified = false;
};

// Piecewise-constant function over the support. Pieces are contiguous and
// ordered; the value at a breakpoint is free between the one-sided limits.
struct StepFunction {
    struct Piece {
        double lo, hi, value;
    };
    std::vector<Piece> pieces;

    [[nodiscard]] double left_limit(double x) const {
        for (std::size_t i = 0; i < pieces.size(); ++i)
            if (x <= pieces[i].hi && (x > pieces[i].lo || i == 0)) return pieces[i].value;
        return pieces.back().value;
    }

    [[nodiscard]] double right_limit(double x) const {
        for (std::size_t i = 0; i < pieces.size(); ++i)
            if (x < pieces[i].hi && x >= pieces[i].lo) return pieces[i].value;
        return pieces.back().value;
    }

    // Density-weighted mean over [a, b].
    [[nodiscard]] double mean(const DistributionSpec& dist, double a, double b) const {
        double num = 0.0;
        for (const auto& p : pieces) {
            double lo = std::max(a, p.lo), hi = std::min(b, p.hi);
            if (hi > lo) num += p.value * dist.mass(lo, hi);
        }
        return num / dist.mass(a, b);
    }

    [[nodiscard]] bool is_weakly_increasing() const {
        for (std::size_t i = 1; i < pieces.size(); ++i)
            if (pieces[i].value < pieces[i - 1].value) return false;
        return true;
    }

    [[nodiscard]] StepFunction negated() const {
        StepFunction out = *this;
        for (auto& p : out.pieces) p.value = -p.value;
        return out;
    }
};

namespace detail {

// Within-bin share G_k(x) = P(x_k <= X <= x | bin k).
inline double share(const ValidatedInput& v, std::size_t k, double x) {
    const auto& bd = v.sample.boundaries;
    return v.dist.mass(bd[k], x) / v.bin_masses[k];
}

inline bool degenerate(const ValidatedInput& v, std::size_t k) {
    auto kk = static_cast<long>(k);
    return std::abs(v.r(kk + 1) - v.r(kk - 1)) < kTieTolerance * v.sample.range.width();
}

inline Crossover crossover_canonical(const ValidatedInput& v, std::size_t k) {
    const auto& bd = v.sample.boundaries;
    auto kk = static_cast<long>(k);
    double rl = v.r(kk - 1), rk = v.r(kk), ru = v.r(kk + 1);
    double x0 = bd[k], x1 = bd[k + 1];
    Crossover c;
    if (degenerate(v, k)) {
        c.degenerate = true;
        c.location = x0;
        c.share = 0.0;
        return c;
    }
    c.share = std::clamp((ru - rk) / (ru - rl), 0.0, 1.0);
    if (c.share <= 0.0 || c.share >= 1.0) {
        c.location = c.share <= 0.0 ? x0 : x1;
        return c;
    }
    if (v.dist.kind() == DistributionSpec::Kind::uniform) {
        double xs = (x1 * ru - (x1 - x0) * rk - x0 * rl) / (ru - rl);
        c.location = std::clamp(xs, x0, x1);
        return c;
    }
    double lo = x0, hi = x1;
    double width_tol = kBisectionWidth * (v.hi() - v.lo());
    for (int it = 0; it < kBisectionIterations && hi - lo >= width_tol; ++it) {
        double mid = 0.5 * (lo + hi);
        if (share(v, k, mid) < c.share) lo = mid;
        else hi = mid;
    }
    c.location = 0.5 * (lo + hi);
    return c;
}

// x lies on the rising side of the crossover. A crossover at the right edge
// (bin mean tied with the one below) keeps the whole bin on the low side.
inline bool below(double x, const Crossover& c) { return x < c.location || c.share >= 1.0; }

// Sharp bounds for x in bin k, canonical orientation. x may be either edge
// of the bin; the right edge is treated as the left limit.
inline PointBounds bounds_canonical(const ValidatedInput& v, std::size_t k, double x,
                                    const Crossover& c) {
    auto kk = static_cast<long>(k);
    double rl = v.r(kk - 1), rk = v.r(kk), ru = v.r(kk + 1);
    PointBounds out;
    if (c.degenerate) {
        out.lower = out.upper = rk;
        return out;
    }
    double g = share(v, k, x);
    double lower, upper;
    if (below(x, c)) {
        lower = rl;
        upper = (rk - rl <= 0.0) ? rl : rl + (rk - rl) / (1.0 - g);
    } else {
        upper = ru;
        lower = (ru - rk <= 0.0) ? ru : ru - (ru - rk) / g;
    }
    double slack = 1e-9 * v.sample.range.width();
    auto clamp_flag = [&](double val) {
        double cl = std::clamp(val, rl, ru);
        if (std::abs(cl - val) > slack || !std::isfinite(val)) out.clamped = true;
        return std::isfinite(val) ? cl : (val > 0 ? ru : rl);
    };
    out.lower = clamp_flag(lower);
    out.upper = clamp_flag(upper);
    return out;
}

inline StepFunction flat_except(const ValidatedInput& v, std::size_t k,
                                std::vector<StepFunction::Piece> inside) {
    StepFunction f;
    const auto& bd = v.sample.boundaries;
    for (std::size_t j = 0; j < v.bins(); ++j) {
        if (j != k) {
            f.pieces.push_back({bd[j], bd[j + 1], v.sample.means[j]});
            continue;
        }
        for (const auto& p : inside)
            if (p.hi > p.lo) f.pieces.push_back(p);
    }
    return f;
}

inline StepFunction lower_witness_canonical(const ValidatedInput& v, std::size_t k, double x) {
    const auto& bd = v.sample.boundaries;
    auto kk = static_cast<long>(k);
    auto c = crossover_canonical(v, k);
    if (c.degenerate) return flat_except(v, k, {{bd[k], bd[k + 1], v.r(kk)}});
    if (below(x, c))
        return flat_except(v, k,
                           {{bd[k], c.location, v.r(kk - 1)}, {c.location, bd[k + 1], v.r(kk + 1)}});
    double low = bounds_canonical(v, k, x, c).lower;
    return flat_except(v, k, {{bd[k], x, low}, {x, bd[k + 1], v.r(kk + 1)}});
}

inline StepFunction upper_witness_canonical(const ValidatedInput& v, std::size_t k, double x) {
    const auto& bd = v.sample.boundaries;
    auto kk = static_cast<long>(k);
    auto c = crossover_canonical(v, k);
    if (c.degenerate) return flat_except(v, k, {{bd[k], bd[k + 1], v.r(kk)}});
    if (!below(x, c))
        return flat_except(v, k,
                           {{bd[k], c.location, v.r(kk - 1)}, {c.location, bd[k + 1], v.r(kk + 1)}});
    double up = bounds_canonical(v, k, x, c).upper;
    return flat_except(v, k, {{bd[k], x, v.r(kk - 1)}, {x, bd[k + 1], up}});
}

inline void require_monotone(const ValidatedInput& v) {
    if (!v.monotone())
        throw ValidationError(
            "analytic bounds require a monotone direction (increasing or decreasing)");
}

}  // namespace detail

// Manski-Tamer bounds [r_{k-1}, r_{k+1}] for the bin containing x.
[[nodiscard]] inline Interval manski_tamer(const ValidatedInput& v, double x) {
    detail::require_monotone(v);
    auto k = static_cast<long>(v.bin_of(x));
    double lo = v.r(k - 1), hi = v.r(k + 1);
    if (v.flipped) return {-hi, -lo};
    return {lo, hi};
}

// Crossover point of bin k (0-based). Under uniform x this is the closed
// form; otherwise bisection on the within-bin CDF.
[[nodiscard]] inline Crossover crossover(const ValidatedInput& v, std::size_t k) {
    detail::require_monotone(v);
    if (k >= v.bins()) throw ValidationError(cefb::detail::concat("bin index ", k, " out of range"));
    return detail::crossover_canonical(v, k);
}

[[nodiscard]] inline CrossoverTable crossovers(const ValidatedInput& v) {
    CrossoverTable t;
    for (std::size_t k = 0; k < v.bins(); ++k) t.push_back(crossover(v, k));
    return t;
}

// Bounds for x treated as a point of bin k, including x = x_{k+1} as the
// left limit from inside the bin.
[[nodiscard]] inline PointBounds bounds_in_bin(const ValidatedInput& v, std::size_t k, double x) {
    detail::require_monotone(v);
    const auto& bd = v.sample.boundaries;
    if (k >= v.bins() || x < bd[k] || x > bd[k + 1])
        throw ValidationError(cefb::detail::concat("x = ", x, " is not in bin ", k + 1));
    auto b = detail::bounds_canonical(v, k, x, detail::crossover_canonical(v, k));
    if (v.flipped) return {-b.upper, -b.lower, b.clamped};
    return b;
}

[[nodiscard]] inline PointBounds cef_bounds(const ValidatedInput& v, double x) {
    detail::require_monotone(v);
    return bounds_in_bin(v, v.bin_of(x), x);
}

[[nodiscard]] inline CEFEnvelope cef_envelope(const ValidatedInput& v, const std::vector<double>& grid) {
    CEFEnvelope env;
    env.provenance = CEFEnvelope::Provenance::analytic;
    env.constraint_tag = v.dist.kind() == DistributionSpec::Kind::uniform
                             ? "monotone; uniform x; analytic"
                             : "monotone; gridded x; analytic";
    env.grid = grid;
    for (double x : grid) {
        auto b = cef_bounds(v, x);
        env.lower.push_back(b.lower);
        env.upper.push_back(b.upper);
    }
    return env;
}

// Witnesses: monotone step CEFs (user orientation) that reproduce every bin
// mean and pass through the lower / upper bound at x.
[[nodiscard]] inline StepFunction lower_witness(const ValidatedInput& v, double x) {
    detail::require_monotone(v);
    auto k = v.bin_of(x);
    if (v.flipped) return detail::upper_witness_canonical(v, k, x).negated();
    return detail::lower_witness_canonical(v, k, x);
}

[[nodiscard]] inline StepFunction upper_witness(const ValidatedInput& v, double x) {
    detail::require_monotone(v);
    auto k = v.bin_of(x);
    if (v.flipped) return detail::lower_witness_canonical(v, k, x).negated();
    return detail::upper_witness_canonical(v, k, x);
}

// Mass-weighted average of the bin means over whole bins [x_i, x_j].
[[nodiscard]] inline double bin_average(const ValidatedInput& v, std::size_t first, std::size_t last) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = first; k < last; ++k) {
        num += v.bin_masses[k] * v.sample.means[k];
        den += v.bin_masses[k];
    }
    return num / den;
}

[[nodiscard]] inline MuBounds mu_bounds(const ValidatedInput& v, double a, double b) {
    detail::require_monotone(v);
    StatisticSpec::interval_mean(a, b).check(v.lo(), v.hi());
    const auto& bd = v.sample.boundaries;
    MuBounds out;
    out.a = a;
    out.b = b;

    double tol = kBoundaryTolerance * (v.hi() - v.lo());
    auto nearest = [&](double x) {
        auto it = std::min_element(bd.begin(), bd.end(), [&](double p, double q) {
            return std::abs(p - x) < std::abs(q - x);
        });
        return static_cast<std::size_t>(it - bd.begin());
    };
    std::size_t ia = nearest(a), ib = nearest(b);
    if (std::abs(bd[ia] - a) <= tol && std::abs(bd[ib] - b) <= tol && ia < ib) {
        double m = bin_average(v, ia, ib);
        out.lower = out.upper = v.to_user(m);
        out.point_identified = true;
        return out;
    }
    if (v.dist.mass(a, b) <= 0.0)
        throw ValidationError(cefb::detail::concat("interval [", a, ", ", b, "] has zero probability mass"));

    std::size_t h = v.bin_of(a), k = v.bin_of(b);
    auto ch = detail::crossover_canonical(v, h);
    auto ck = detail::crossover_canonical(v, k);
    double y_max_a = detail::bounds_canonical(v, h, a, ch).upper;
    double y_min_b = detail::bounds_canonical(v, k, b, ck).lower;
    double lo, hi;
    if (h == k) {
        lo = y_min_b;
        hi = y_max_a;
    } else {
        double total = v.dist.mass(a, b);
        double head = v.dist.mass(a, bd[h + 1]);
        double tail = v.dist.mass(bd[k], b);
        double middle = 0.0;
        for (std::size_t j = h + 1; j < k; ++j) middle += v.sample.means[j] * v.bin_masses[j];
        lo = (v.sample.means[h] * head + middle + y_min_b * tail) / total;
        hi = (y_max_a * head + middle + v.sample.means[k] * tail) / total;
    }
    if (v.flipped) {
        out.lower = -hi;
        out.upper = -lo;
    } else {
        out.lower = lo;
        out.upper = hi;
    }
    return out;
}

// The lower mu witness is the point witness at b; the upper one is the point
// witness at a. Both keep every other bin flat at its mean.
[[nodiscard]] inline StepFunction mu_lower_witness(const ValidatedInput& v, double a, double b) {
    if (v.flipped) return detail::upper_witness_canonical(v, v.bin_of(a), a).negated();
    return detail::lower_witness_canonical(v, v.bin_of(b), b);
}

[[nodiscard]] inline StepFunction mu_upper_witness(const ValidatedInput& v, double a, double b) {
    if (v.flipped) return detail::lower_witness_canonical(v, v.bin_of(b), b).negated();
    return detail::upper_witness_canonical(v, v.bin_of(a), a);
}

}  // namespace cefb::analytic
