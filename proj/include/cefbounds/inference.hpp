#pragma once

// Bootstrap confidence sets for bound endpoints.
//
// Random stream (version 1): replicate b uses std::mt19937_64 seeded with
// splitmix64(seed + (b + 1) * 0x9E3779B97F4A7C15). Uniforms are
// (bits >> 11) * 2^-53, normals come from the Marsaglia polar method
// (second variate discarded), integers in [0, n) by rejection on the top
// multiple of n. The standard library engine is fully specified, so draws
// are identical on every platform.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "cefbounds/core.hpp"
#include "cefbounds/io.hpp"
#include "cefbounds/numeric.hpp"

namespace cefb::inference {

inline constexpr int kRngVersion = 1;
inline constexpr int kMaxRedraws = 10;
inline constexpr double kMaxFailureRate = 0.01;

[[nodiscard]] inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class Stream {
public:
    Stream(std::uint64_t seed, std::uint64_t replicate)
        : eng_(splitmix64(seed + (replicate + 1) * 0x9E3779B97F4A7C15ULL)) {}

    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double normal() {
        while (true) {
            double u = 2.0 * uniform() - 1.0, v = 2.0 * uniform() - 1.0;
            double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
        }
    }

    std::uint64_t below(std::uint64_t n) {
        std::uint64_t limit = (UINT64_MAX / n) * n;
        while (true) {
            std::uint64_t x = eng_();
            if (x < limit) return x % n;
        }
    }

private:
    std::mt19937_64 eng_;
};

// Individual observations tagged with their bin.
struct MicroData {
    std::vector<double> boundaries;
    std::vector<std::size_t> bin;
    std::vector<double> y;
};

// Per-bin summary statistics.
struct CountData {
    std::vector<double> boundaries;
    std::vector<double> mean, sd;
    std::vector<double> n;
};

struct Settings {
    OutcomeRange range;
    Direction direction = Direction::increasing;
    numeric::ConstraintSet constraints;
    StatisticSpec spec;
    std::size_t grid = 100;
    std::size_t replicates = 1000;
    std::uint64_t seed = 0;
    double alpha = 0.05;
};

struct Replicate {
    std::size_t index = 0;
    int attempts = 0;
    bool ok = false;
    double lower = 0.0, upper = 0.0;
};

struct BootstrapResult {
    double lower = 0.0, upper = 0.0;      // full-sample bounds
    double ci_lower = 0.0, ci_upper = 0.0;  // confidence set
    std::vector<Replicate> archive;        // in replicate order
    std::size_t failures = 0;
};

// Type-7 quantile (linear interpolation between order statistics).
[[nodiscard]] inline double quantile(std::vector<double> xs, double p) {
    if (xs.empty()) throw ValidationError("quantile of an empty set");
    std::sort(xs.begin(), xs.end());
    double h = p * static_cast<double>(xs.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

namespace detail {

inline BinnedSample micro_sample(const MicroData& d, const std::vector<std::size_t>& rows, const Settings& s) {
    std::size_t k = d.boundaries.size() - 1;
    std::vector<double> sum(k, 0.0), cnt(k, 0.0);
    for (auto r : rows) {
        sum[d.bin[r]] += d.y[r];
        cnt[d.bin[r]] += 1.0;
    }
    BinnedSample out{d.boundaries, {}, s.direction, s.range};
    for (std::size_t j = 0; j < k; ++j) {
        if (cnt[j] == 0.0) throw ValidationError(cefb::detail::concat("bin ", j + 1, " has no observations"));
        out.means.push_back(sum[j] / cnt[j]);
    }
    return out;
}

inline std::pair<double, double> bounds_for(const BinnedSample& sample, const DistributionSpec& dist,
                                            const Settings& s) {
    ValidateOptions opts;
    opts.allow_direction_violation = s.direction == Direction::none;
    auto v = validate(sample, dist, opts);
    auto run = numeric::prepare(v, s.grid, s.constraints);
    auto b = numeric::stage2_bound_stat(v, run.grid, s.constraints, s.spec, run.stage1);
    return {b.lower, b.upper};
}

template <typename Draw>
BootstrapResult run(const BinnedSample& full, const DistributionSpec& dist, const Settings& s, Draw draw) {
    if (s.replicates < 100) throw ValidationError(cefb::detail::concat("bootstrap needs B >= 100, got ", s.replicates));
    if (!(s.alpha > 0.0 && s.alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    BootstrapResult res;
    std::tie(res.lower, res.upper) = bounds_for(full, dist, s);
    res.archive.resize(s.replicates);
    for (std::size_t b = 0; b < s.replicates; ++b) {
        Stream rng(s.seed, b);
        Replicate& rep = res.archive[b];
        rep.index = b;
        for (rep.attempts = 1; rep.attempts <= kMaxRedraws; ++rep.attempts) {
            try {
                std::tie(rep.lower, rep.upper) = bounds_for(draw(rng), dist, s);
                rep.ok = true;
                break;
            } catch (const ValidationError&) {
            } catch (const InfeasibleError&) {
            }
        }
        rep.attempts = std::min(rep.attempts, kMaxRedraws);
        if (!rep.ok) ++res.failures;
    }
    if (static_cast<double>(res.failures) > kMaxFailureRate * static_cast<double>(s.replicates))
        throw InfeasibleError(cefb::detail::concat(res.failures, " of ", s.replicates,
                                                   " bootstrap replicates stayed infeasible after ", kMaxRedraws,
                                                   " redraws (limit ", kMaxFailureRate * 100.0, "%)"));
    std::vector<double> lows, highs;
    for (const auto& r : res.archive)
        if (r.ok) {
            lows.push_back(r.lower);
            highs.push_back(r.upper);
        }
    res.ci_lower = std::min(quantile(lows, s.alpha / 2.0), res.lower);
    res.ci_upper = std::max(quantile(highs, 1.0 - s.alpha / 2.0), res.upper);
    return res;
}

}  // namespace detail

[[nodiscard]] inline BinnedSample full_sample(const MicroData& d, const Settings& s) {
    std::vector<std::size_t> all(d.y.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return detail::micro_sample(d, all, s);
}

[[nodiscard]] inline BinnedSample full_sample(const CountData& d, const Settings& s) {
    return BinnedSample{d.boundaries, d.mean, s.direction, s.range};
}

// Rows resampled iid with replacement from the whole sample.
[[nodiscard]] inline BootstrapResult bootstrap_bounds(const MicroData& d, const DistributionSpec& dist,
                                                      const Settings& s) {
    if (d.y.empty()) throw ValidationError("microdata is empty");
    auto n = static_cast<std::uint64_t>(d.y.size());
    return detail::run(full_sample(d, s), dist, s, [&](Stream& rng) {
        std::vector<std::size_t> rows(d.y.size());
        for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
        return detail::micro_sample(d, rows, s);
    });
}

// Bin means redrawn as mean + sd / sqrt(n) * standard normal.
[[nodiscard]] inline BootstrapResult bootstrap_bounds(const CountData& d, const DistributionSpec& dist,
                                                      const Settings& s) {
    for (std::size_t k = 0; k < d.n.size(); ++k) {
        if (!(d.n[k] >= 1.0)) throw ValidationError(cefb::detail::concat("bin ", k + 1, " needs n >= 1"));
        if (!(d.sd[k] >= 0.0)) throw ValidationError(cefb::detail::concat("bin ", k + 1, " needs sd >= 0"));
    }
    return detail::run(full_sample(d, s), dist, s, [&](Stream& rng) {
        BinnedSample out{d.boundaries, {}, s.direction, s.range};
        for (std::size_t k = 0; k < d.mean.size(); ++k)
            out.means.push_back(d.mean[k] + d.sd[k] / std::sqrt(d.n[k]) * rng.normal());
        return out;
    });
}

inline void write_archive(std::ostream& os, const BootstrapResult& r) {
    os << "replicate,attempts,ok,lower,upper\n";
    for (const auto& rep : r.archive)
        os << rep.index << ',' << rep.attempts << ',' << (rep.ok ? 1 : 0) << ',' << io::format_number(rep.lower)
           << ',' << io::format_number(rep.upper) << '\n';
}

[[nodiscard]] inline MicroData read_micro(std::istream& in, const std::string& source) {
    auto t = io::read_csv(in, source, {{"bin_lo", "bin_hi", "y"}});
    MicroData d;
    std::vector<std::pair<double, double>> bins;
    for (const auto& r : t.rows) {
        if (!(r.values[1] > r.values[0])) throw ValidationError(t.where(r.line) + "bin_hi must exceed bin_lo");
        bins.emplace_back(r.values[0], r.values[1]);
    }
    std::sort(bins.begin(), bins.end());
    bins.erase(std::unique(bins.begin(), bins.end()), bins.end());
    d.boundaries.push_back(bins.front().first);
    for (const auto& [lo, hi] : bins) {
        if (lo != d.boundaries.back())
            throw ValidationError(source + cefb::detail::concat(": bin [", lo, ", ", hi,
                                                                "] overlaps or leaves a gap after ", d.boundaries.back()));
        d.boundaries.push_back(hi);
    }
    for (const auto& r : t.rows) {
        auto it = std::lower_bound(d.boundaries.begin(), d.boundaries.end(), r.values[0]);
        d.bin.push_back(static_cast<std::size_t>(it - d.boundaries.begin()));
        d.y.push_back(r.values[2]);
    }
    return d;
}

[[nodiscard]] inline CountData read_counts(std::istream& in, const std::string& source) {
    auto t = io::read_csv(in, source, {{"bin_lo", "bin_hi", "mean", "sd", "n"}});
    CountData d;
    d.boundaries = io::tiled_boundaries(t);
    for (const auto& r : t.rows) {
        d.mean.push_back(r.values[2]);
        d.sd.push_back(r.values[3]);
        d.n.push_back(r.values[4]);
        if (!(r.values[4] >= 1.0)) throw ValidationError(t.where(r.line) + "n must be at least 1");
        if (!(r.values[3] >= 0.0)) throw ValidationError(t.where(r.line) + "sd must be nonnegative");
    }
    return d;
}

}  // namespace cefb::inference
