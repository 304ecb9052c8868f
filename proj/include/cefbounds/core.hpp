#pragma once

// Domain types shared by every module: outcome ranges, binned samples,
// the known distribution of the latent conditioning variable, envelopes
// and statistic specifications. All math downstream assumes a weakly
// increasing CEF; decreasing samples are negated on ingest by validate().

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cefb {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Bad user input: malformed files, inconsistent samples, out-of-support queries.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The constraint set admits no CEF consistent with the data.
class InfeasibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Iteration budget exhausted or numerical breakdown inside a solver.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
template <typename... Args>
[[nodiscard]] std::string concat(Args&&... args) {
    std::ostringstream os;
    os.precision(12);
    (os << ... << std::forward<Args>(args));
    return os.str();
}
}  // namespace detail

struct OutcomeRange {
    double y_min = 0.0;
    double y_max = 100.0;

    [[nodiscard]] double width() const { return y_max - y_min; }

    void check() const {
        if (!std::isfinite(y_min) || !std::isfinite(y_max))
            throw ValidationError("outcome range must be finite");
        if (!(y_min < y_max))
            throw ValidationError(detail::concat("outcome range requires y_min < y_max, got [",
                                                 y_min, ", ", y_max, "]"));
    }
};

enum class Direction { increasing, decreasing, none };

[[nodiscard]] inline const char* to_string(Direction d) {
    switch (d) {
        case Direction::increasing: return "increasing";
        case Direction::decreasing: return "decreasing";
        case Direction::none: return "none";
    }
    return "?";
}

// K bins given by K+1 boundaries and the observed mean outcome in each.
struct BinnedSample {
    std::vector<double> boundaries;
    std::vector<double> means;
    Direction direction = Direction::increasing;
    OutcomeRange range;

    [[nodiscard]] std::size_t bins() const { return means.size(); }
    [[nodiscard]] double support_lo() const { return boundaries.front(); }
    [[nodiscard]] double support_hi() const { return boundaries.back(); }
};

// Known distribution of the latent conditioning variable. The gridded form
// is a CDF table interpolated linearly (piecewise-constant density).
class DistributionSpec {
public:
    enum class Kind { uniform, gridded };

    static DistributionSpec uniform(double lo, double hi) {
        if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
            throw ValidationError(detail::concat("uniform support requires lo < hi, got [", lo,
                                                 ", ", hi, "]"));
        DistributionSpec d;
        d.kind_ = Kind::uniform;
        d.lo_ = lo;
        d.hi_ = hi;
        return d;
    }

    static DistributionSpec gridded(std::vector<double> xs, std::vector<double> cdf) {
        if (xs.size() != cdf.size() || xs.size() < 2)
            throw ValidationError("CDF grid needs at least two (x, F) pairs");
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!std::isfinite(xs[i]) || !std::isfinite(cdf[i]))
                throw ValidationError(detail::concat("CDF grid entry ", i + 1, " is not finite"));
            if (i > 0 && !(xs[i] > xs[i - 1]))
                throw ValidationError(
                    detail::concat("CDF grid x values must be strictly increasing at entry ", i + 1));
            if (i > 0 && cdf[i] < cdf[i - 1])
                throw ValidationError(
                    detail::concat("CDF values must be weakly increasing at entry ", i + 1));
        }
        if (cdf.front() != 0.0)
            throw ValidationError(detail::concat("CDF must start at 0, got ", cdf.front()));
        if (cdf.back() != 1.0)
            throw ValidationError(detail::concat("CDF must end at 1, got ", cdf.back()));
        DistributionSpec d;
        d.kind_ = Kind::gridded;
        d.lo_ = xs.front();
        d.hi_ = xs.back();
        d.xs_ = std::move(xs);
        d.cdf_ = std::move(cdf);
        return d;
    }

    [[nodiscard]] Kind kind() const { return kind_; }
    [[nodiscard]] double support_lo() const { return lo_; }
    [[nodiscard]] double support_hi() const { return hi_; }
    [[nodiscard]] const std::vector<double>& grid_x() const { return xs_; }
    [[nodiscard]] const std::vector<double>& grid_cdf() const { return cdf_; }

    // F(x), with queries outside the support rejected.
    [[nodiscard]] double cdf(double x) const {
        if (x < lo_ || x > hi_)
            throw ValidationError(
                detail::concat("x = ", x, " is outside the support [", lo_, ", ", hi_, "]"));
        if (kind_ == Kind::uniform) return (x - lo_) / (hi_ - lo_);
        if (x == hi_) return 1.0;
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        auto i = static_cast<std::size_t>(it - xs_.begin()) - 1;
        double t = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
        return cdf_[i] + t * (cdf_[i + 1] - cdf_[i]);
    }

    // Probability that x lies in [lo, hi].
    [[nodiscard]] double mass(double lo, double hi) const {
        if (lo > hi)
            throw ValidationError(detail::concat("bin_mass requires lo <= hi, got [", lo, ", ", hi,
                                                 "]"));
        if (lo < lo_ || hi > hi_)
            throw ValidationError(detail::concat("interval [", lo, ", ", hi,
                                                 "] is outside the support [", lo_, ", ", hi_, "]"));
        if (lo == hi) return 0.0;
        if (kind_ == Kind::uniform) return (hi - lo) / (hi_ - lo_);
        return cdf(hi) - cdf(lo);
    }

    // Points where the density may jump inside [lo, hi], endpoints included.
    // Between consecutive points the density is constant.
    [[nodiscard]] std::vector<double> breakpoints(double lo, double hi) const {
        std::vector<double> pts{lo};
        if (kind_ == Kind::gridded)
            for (double x : xs_)
                if (x > lo && x < hi) pts.push_back(x);
        pts.push_back(hi);
        return pts;
    }

private:
    Kind kind_ = Kind::uniform;
    double lo_ = 0.0;
    double hi_ = 1.0;
    std::vector<double> xs_;
    std::vector<double> cdf_;
};

[[nodiscard]] inline double bin_mass(const DistributionSpec& dist, double lo, double hi) {
    return dist.mass(lo, hi);
}

// Per-grid-point bounds on E(y|x).
struct CEFEnvelope {
    enum class Provenance { analytic, numeric };

    std::vector<double> grid;
    std::vector<double> lower;
    std::vector<double> upper;
    Provenance provenance = Provenance::analytic;
    std::string constraint_tag;
};

// Discretized candidate CEF: gamma_i is the CEF mean on partition i.
struct GridCEF {
    std::vector<double> values;
    double grid_spacing = 0.0;
};

struct StatisticSpec {
    enum class Kind { point, interval_mean, best_linear_slope, best_linear_value };

    Kind kind = Kind::point;
    double a = 0.0;  // point x, interval start, or evaluation x
    double b = 0.0;  // interval end

    static StatisticSpec point(double x) { return {Kind::point, x, 0.0}; }
    static StatisticSpec interval_mean(double a, double b) { return {Kind::interval_mean, a, b}; }
    static StatisticSpec slope() { return {Kind::best_linear_slope, 0.0, 0.0}; }
    static StatisticSpec linear_value(double x) { return {Kind::best_linear_value, x, 0.0}; }

    [[nodiscard]] std::string describe() const {
        switch (kind) {
            case Kind::point: return detail::concat("point:", a);
            case Kind::interval_mean: return detail::concat("mu:", a, ",", b);
            case Kind::best_linear_slope: return "slope";
            case Kind::best_linear_value: return detail::concat("linear:", a);
        }
        return "?";
    }

    void check(double lo, double hi) const {
        auto inside = [&](double x) { return x >= lo && x <= hi; };
        switch (kind) {
            case Kind::point:
            case Kind::best_linear_value:
                if (!inside(a))
                    throw ValidationError(detail::concat("statistic point ", a,
                                                         " is outside the support [", lo, ", ", hi,
                                                         "]"));
                break;
            case Kind::interval_mean:
                if (!(a < b))
                    throw ValidationError(
                        detail::concat("interval mean requires a < b, got a = ", a, ", b = ", b));
                if (!inside(a) || !inside(b))
                    throw ValidationError(detail::concat("interval [", a, ", ", b,
                                                         "] is outside the support [", lo, ", ",
                                                         hi, "]"));
                break;
            case Kind::best_linear_slope: break;
        }
    }
};

struct ValidateOptions {
    // Accept means that violate the declared direction. Only meaningful for
    // curvature-only analysis; monotone bounds on such data are meaningless.
    bool allow_direction_violation = false;
};

// A sample/distribution pair that passed validation, stored in canonical
// (weakly increasing) orientation. `flipped` records whether outcomes were
// negated on ingest.
struct ValidatedInput {
    BinnedSample sample;
    DistributionSpec dist;
    bool flipped = false;
    Direction declared = Direction::increasing;
    std::vector<double> bin_masses;

    [[nodiscard]] std::size_t bins() const { return sample.bins(); }
    [[nodiscard]] double lo() const { return sample.support_lo(); }
    [[nodiscard]] double hi() const { return sample.support_hi(); }
    [[nodiscard]] bool monotone() const { return declared != Direction::none; }

    // Bin index under the rule x_k belongs to bin k and x_{K+1} to bin K.
    [[nodiscard]] std::size_t bin_of(double x) const {
        if (x < lo() || x > hi())
            throw ValidationError(detail::concat("x = ", x, " is outside the support [", lo(), ", ",
                                                 hi(), "]"));
        const auto& bd = sample.boundaries;
        auto it = std::upper_bound(bd.begin(), bd.end(), x);
        auto k = static_cast<std::size_t>(it - bd.begin());
        return std::min(k, bins()) - 1;
    }

    // r_k with r_0 = y_min and r_{K+1} = y_max (0-based bins: r(-1), r(K)).
    [[nodiscard]] double r(long k) const {
        if (k < 0) return sample.range.y_min;
        if (k >= static_cast<long>(bins())) return sample.range.y_max;
        return sample.means[static_cast<std::size_t>(k)];
    }

    // Map a canonical-orientation value back to the user's orientation.
    [[nodiscard]] double to_user(double v) const { return flipped ? -v : v; }
};

// Negates outcomes and flips the range. Applying it twice restores the
// original bit-for-bit.
[[nodiscard]] inline BinnedSample flip(const BinnedSample& s) {
    BinnedSample out = s;
    for (double& m : out.means) m = -m;
    out.range = OutcomeRange{-s.range.y_max, -s.range.y_min};
    if (s.direction == Direction::increasing) out.direction = Direction::decreasing;
    else if (s.direction == Direction::decreasing) out.direction = Direction::increasing;
    return out;
}

[[nodiscard]] inline ValidatedInput validate(const BinnedSample& sample, const DistributionSpec& dist,
                                             const ValidateOptions& opts = {}) {
    sample.range.check();
    const auto& bd = sample.boundaries;
    if (sample.means.empty()) throw ValidationError("sample needs at least one bin");
    if (bd.size() != sample.means.size() + 1)
        throw ValidationError(detail::concat("expected ", sample.means.size() + 1,
                                             " boundaries for ", sample.means.size(),
                                             " bins, got ", bd.size()));
    for (std::size_t i = 0; i < bd.size(); ++i) {
        if (!std::isfinite(bd[i]))
            throw ValidationError(detail::concat("boundary ", i + 1, " is not finite"));
        if (i > 0 && !(bd[i] > bd[i - 1]))
            throw ValidationError(detail::concat("boundaries must be strictly increasing: bin ", i,
                                                 " [", bd[i - 1], ", ", bd[i],
                                                 "] has zero or negative width"));
    }
    if (bd.front() != dist.support_lo() || bd.back() != dist.support_hi())
        throw ValidationError(detail::concat("sample support [", bd.front(), ", ", bd.back(),
                                             "] does not match distribution support [",
                                             dist.support_lo(), ", ", dist.support_hi(), "]"));
    for (std::size_t k = 0; k < sample.means.size(); ++k) {
        double m = sample.means[k];
        if (!std::isfinite(m) || m < sample.range.y_min || m > sample.range.y_max)
            throw ValidationError(detail::concat("mean of bin ", k + 1, " (", m,
                                                 ") is outside the outcome range [",
                                                 sample.range.y_min, ", ", sample.range.y_max,
                                                 "]"));
    }
    if (!opts.allow_direction_violation && sample.direction != Direction::none) {
        bool inc = sample.direction == Direction::increasing;
        for (std::size_t k = 1; k < sample.means.size(); ++k) {
            double prev = sample.means[k - 1], cur = sample.means[k];
            if (inc ? cur < prev : cur > prev)
                throw ValidationError(detail::concat(
                    "bin means violate the declared ", to_string(sample.direction),
                    " direction between bins ", k, " and ", k + 1, " (", prev, " then ", cur,
                    "); use direction none for curvature-only analysis"));
        }
    }

    ValidatedInput v;
    v.declared = sample.direction;
    v.flipped = sample.direction == Direction::decreasing;
    v.sample = v.flipped ? flip(sample) : sample;
    if (v.flipped) v.sample.direction = Direction::increasing;
    v.dist = dist;
    for (std::size_t k = 0; k < sample.means.size(); ++k) {
        double m = dist.mass(bd[k], bd[k + 1]);
        if (!(m > 0.0))
            throw ValidationError(detail::concat("bin ", k + 1, " [", bd[k], ", ", bd[k + 1],
                                                 "] has zero probability mass"));
        v.bin_masses.push_back(m);
    }
    return v;
}

// Closed interval of outcome values.
struct Interval {
    double lower = 0.0;
    double upper = 0.0;

    [[nodiscard]] bool contains(const Interval& o, double tol = 0.0) const {
        return lower <= o.lower + tol && o.upper <= upper + tol;
    }
};

}  // namespace cefb
