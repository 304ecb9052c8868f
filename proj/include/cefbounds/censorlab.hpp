#pragma once

// Simulation harness: interval-censor a known CEF under a known
// distribution, recover bounds from the bin means and check whether they
// contain the truth.

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "cefbounds/analytic.hpp"
#include "cefbounds/calibrate.hpp"
#include "cefbounds/core.hpp"
#include "cefbounds/io.hpp"
#include "cefbounds/numeric.hpp"

namespace cefb::censorlab {

// A truth CEF: a function plus the points where it may fail to be smooth.
struct Truth {
    std::function<double(double)> f;
    std::vector<double> breaks;

    [[nodiscard]] double operator()(double x) const { return f(x); }

    static Truth from_function(std::function<double(double)> f, std::vector<double> breaks = {}) {
        return {std::move(f), std::move(breaks)};
    }

    static Truth from_spline(calibrate::Spline s) {
        auto br = s.breaks;
        return {[s = std::move(s)](double x) { return s(x); }, std::move(br)};
    }

    // Piecewise-linear interpolation through the points (sorted by x).
    static Truth from_points(std::vector<double> xs, std::vector<double> ys) {
        if (xs.size() != ys.size() || xs.size() < 2)
            throw ValidationError("truth curve needs at least two (x, y) points");
        for (std::size_t i = 1; i < xs.size(); ++i)
            if (!(xs[i] > xs[i - 1])) throw ValidationError("truth curve x values must be strictly increasing");
        auto br = xs;
        return {[xs = std::move(xs), ys = std::move(ys)](double x) {
                    auto it = std::upper_bound(xs.begin(), xs.end(), x);
                    std::size_t i = std::clamp<std::size_t>(static_cast<std::size_t>(it - xs.begin()), 1, xs.size() - 1) - 1;
                    double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                    return ys[i] + t * (ys[i + 1] - ys[i]);
                },
                std::move(br)};
    }

    // Piecewise constant on N equal cells starting at lo.
    static Truth from_grid(const GridCEF& g, double lo) {
        std::vector<double> br;
        for (std::size_t i = 0; i <= g.values.size(); ++i) br.push_back(lo + g.grid_spacing * static_cast<double>(i));
        return {[g, lo](double x) {
                    auto i = static_cast<std::size_t>(std::max(0.0, std::floor((x - lo) / g.grid_spacing)));
                    return g.values[std::min(i, g.values.size() - 1)];
                },
                std::move(br)};
    }
};

namespace detail {

inline constexpr std::array<double, 4> kNodes{0.1834346424956498, 0.5255324099163290, 0.7966664774136267,
                                              0.9602898564975363};
inline constexpr std::array<double, 4> kWeights{0.3626837833783620, 0.3137066458778873, 0.2223810344533745,
                                                0.1012285362903763};
inline constexpr int kSubdivisions = 16;

// Plain mean of f over [a, b] by composite 8-point Gauss-Legendre.
inline double plain_mean(const Truth& t, double a, double b) {
    double h = (b - a) / kSubdivisions, sum = 0.0;
    for (int s = 0; s < kSubdivisions; ++s) {
        double c = a + h * (s + 0.5), r = 0.5 * h;
        for (std::size_t j = 0; j < kNodes.size(); ++j)
            sum += kWeights[j] * (t(c - r * kNodes[j]) + t(c + r * kNodes[j]));
    }
    return sum / (2.0 * kSubdivisions);
}

}  // namespace detail

// Mass-weighted average of the truth over [lo, hi]. Zero-mass intervals
// fall back to the plain average.
[[nodiscard]] inline double average(const Truth& t, const DistributionSpec& dist, double lo, double hi) {
    auto pts = dist.breakpoints(lo, hi);
    for (double b : t.breaks)
        if (b > lo && b < hi) pts.push_back(b);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        double m = dist.mass(pts[i], pts[i + 1]);
        if (m <= 0.0) continue;
        num += m * detail::plain_mean(t, pts[i], pts[i + 1]);
        den += m;
    }
    if (den <= 0.0) return detail::plain_mean(t, lo, hi);
    return num / den;
}

[[nodiscard]] inline BinnedSample censor(const Truth& t, const DistributionSpec& dist,
                                         const std::vector<double>& boundaries, OutcomeRange range,
                                         Direction direction = Direction::increasing) {
    if (boundaries.size() < 2) throw ValidationError("censoring needs at least two boundaries");
    BinnedSample s;
    s.boundaries = boundaries;
    s.range = range;
    s.direction = direction;
    for (std::size_t k = 0; k + 1 < boundaries.size(); ++k) {
        double lo = boundaries[k], hi = boundaries[k + 1];
        if (!(hi > lo)) throw ValidationError(cefb::detail::concat("censoring bin ", k + 1, " is empty"));
        if (!(dist.mass(lo, hi) > 0.0))
            throw ValidationError(cefb::detail::concat("censoring bin ", k + 1, " [", lo, ", ", hi,
                                                       "] has zero probability mass"));
        s.means.push_back(average(t, dist, lo, hi));
    }
    return s;
}

// Truth as a grid CEF: mass-weighted average over each partition.
[[nodiscard]] inline GridCEF resample(const Truth& t, const DistributionSpec& dist, const numeric::Grid& g) {
    GridCEF out;
    out.grid_spacing = g.spacing;
    for (std::size_t i = 0; i < g.cells(); ++i) out.values.push_back(average(t, dist, g.edges[i], g.edges[i + 1]));
    return out;
}

// Truth values comparable with an envelope: partition averages for numeric
// envelopes (whose grid points are partition midpoints), point values for
// analytic ones.
[[nodiscard]] inline std::vector<double> truth_for(const Truth& t, const DistributionSpec& dist,
                                                   const CEFEnvelope& env, double partition_width) {
    std::vector<double> out;
    for (double x : env.grid) {
        if (env.provenance == CEFEnvelope::Provenance::numeric) {
            double lo = std::max(dist.support_lo(), x - 0.5 * partition_width);
            double hi = std::min(dist.support_hi(), x + 0.5 * partition_width);
            out.push_back(average(t, dist, lo, hi));
        } else {
            out.push_back(t(x));
        }
    }
    return out;
}

struct Violation {
    std::size_t index = 0;
    double x = 0.0, truth = 0.0, lower = 0.0, upper = 0.0;
};

struct Coverage {
    std::vector<bool> contained;
    double fraction = 0.0;
    std::vector<Violation> violations;

    [[nodiscard]] bool complete() const { return violations.empty(); }
};

[[nodiscard]] inline Coverage coverage_report(const std::vector<double>& truth, const CEFEnvelope& env,
                                              double tol = 1e-7) {
    if (truth.size() != env.grid.size())
        throw ValidationError(cefb::detail::concat("truth has ", truth.size(), " points, envelope has ",
                                                   env.grid.size()));
    Coverage c;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        bool in = env.lower[i] - tol <= truth[i] && truth[i] <= env.upper[i] + tol;
        c.contained.push_back(in);
        if (in) ++hits;
        else c.violations.push_back({i, env.grid[i], truth[i], env.lower[i], env.upper[i]});
    }
    c.fraction = truth.empty() ? 1.0 : static_cast<double>(hits) / static_cast<double>(truth.size());
    return c;
}

// Experiment driven by a JSON config; see README for the schema. Writes one
// envelope CSV per constraint set and summary.csv into the output directory
// and returns the summary as JSON.
[[nodiscard]] inline nlohmann::json run_experiment(const nlohmann::json& cfg, const std::filesystem::path& base) {
    using nlohmann::json;
    auto path_of = [&](const std::string& p) {
        std::filesystem::path q(p);
        return q.is_absolute() ? q : base / q;
    };
    auto need = [&](const char* key) -> const json& {
        if (!cfg.contains(key)) throw ValidationError(std::string("experiment config is missing '") + key + "'");
        return cfg.at(key);
    };

    std::vector<double> boundaries = need("boundaries").get<std::vector<double>>();
    if (boundaries.size() < 2) throw ValidationError("experiment needs at least two boundaries");
    auto rng = need("range").get<std::vector<double>>();
    if (rng.size() != 2) throw ValidationError("experiment 'range' must be [y_min, y_max]");
    OutcomeRange range{rng[0], rng[1]};

    DistributionSpec dist = DistributionSpec::uniform(boundaries.front(), boundaries.back());
    if (cfg.contains("distribution")) {
        const auto& d = cfg.at("distribution");
        if (d.contains("cdf")) dist = io::read_distribution_file(path_of(d.at("cdf").get<std::string>()).string());
    }

    const auto& tcfg = need("truth");
    calibrate::ReferenceCurve curve;
    if (tcfg.contains("curve")) {
        curve = io::read_curve_file(path_of(tcfg.at("curve").get<std::string>()).string());
    } else if (tcfg.contains("points")) {
        for (const auto& p : tcfg.at("points")) {
            curve.x.push_back(p.at(0).get<double>());
            curve.y.push_back(p.at(1).get<double>());
        }
    } else {
        throw ValidationError("experiment truth needs 'curve' or 'points'");
    }
    Truth truth;
    double truth_curvature = -1.0;
    if (tcfg.contains("knots")) {
        curve.knots = tcfg.at("knots").get<std::vector<double>>();
        auto boundary = tcfg.value("boundary", std::string("natural")) == "free" ? calibrate::Boundary::free
                                                                                 : calibrate::Boundary::natural;
        auto fit = calibrate::fit_spline(curve, boundary);
        truth_curvature = calibrate::max_curvature(fit.spline);
        truth = Truth::from_spline(fit.spline);
    } else {
        truth = Truth::from_points(curve.x, curve.y);
    }

    std::string dir_name = cfg.value("direction", std::string("increasing"));
    Direction direction = dir_name == "decreasing" ? Direction::decreasing
                          : dir_name == "none"     ? Direction::none
                                                   : Direction::increasing;
    auto n = cfg.value("grid", static_cast<std::size_t>(100));
    auto sample = censor(truth, dist, boundaries, range, direction);
    auto v = validate(sample, dist);
    auto grid = numeric::discretize(v, n);
    auto truth_grid = resample(truth, dist, grid);

    std::vector<StatisticSpec> stats;
    for (const auto& s : cfg.value("statistics", json::array())) stats.push_back(io::parse_statistic(s.get<std::string>()));

    std::filesystem::path out_dir = path_of(cfg.value("output_dir", std::string("simulate_out")));
    std::filesystem::create_directories(out_dir);
    std::ofstream summary(out_dir / "summary.csv");
    summary << "constraint,monotone,curvature,min_mse,coverage,violations,statistic,lower,upper,truth\n";

    json result;
    result["bin_means"] = sample.means;
    result["truth_max_curvature"] = truth_curvature < 0 ? json(nullptr) : json(truth_curvature);
    result["runs"] = json::array();
    std::size_t idx = 0;
    for (const auto& c : need("constraints")) {
        numeric::ConstraintSet cs;
        cs.monotone = c.value("monotone", true);
        const auto& curv = c.contains("curvature") ? c.at("curvature") : json("inf");
        cs.curvature_limit = curv.is_string() ? io::parse_limit(curv.get<std::string>()) : curv.get<double>();
        auto s1 = numeric::stage1_min_mse(v, grid, cs);
        auto env = numeric::cef_envelope_numeric(v, grid, cs, s1);
        auto cov = coverage_report(truth_grid.values, env, 1e-7 * range.width());

        auto file = out_dir / cefb::detail::concat("envelope_", idx, ".csv");
        std::ofstream os(file);
        os << "x,lower,upper,truth,contained\n";
        for (std::size_t i = 0; i < env.grid.size(); ++i)
            os << io::format_number(env.grid[i]) << ',' << io::format_number(env.lower[i]) << ','
               << io::format_number(env.upper[i]) << ',' << io::format_number(truth_grid.values[i]) << ','
               << (cov.contained[i] ? 1 : 0) << '\n';

        json run;
        run["constraint"] = cs.tag();
        run["envelope"] = file.filename().string();
        run["min_mse"] = s1.min_mse;
        run["coverage"] = cov.fraction;
        run["violations"] = cov.violations.size();
        run["warnings"] = s1.warnings;
        run["statistics"] = json::array();
        auto row_prefix = [&] {
            return "\"" + cs.tag() + "\"," + (cs.monotone ? "1" : "0") + "," + io::format_number(cs.curvature_limit) +
                   "," + io::format_number(s1.min_mse) + "," + io::format_number(cov.fraction) + "," +
                   std::to_string(cov.violations.size());
        };
        if (stats.empty()) summary << row_prefix() << ",,,,\n";
        for (const auto& st : stats) {
            auto b = numeric::stage2_bound_stat(v, grid, cs, st, s1);
            double tv = numeric::eval_stat(v, grid, truth_grid, st);
            summary << row_prefix() << "," << st.describe() << "," << io::format_number(b.lower) << ","
                    << io::format_number(b.upper) << "," << io::format_number(tv) << "\n";
            run["statistics"].push_back({{"spec", st.describe()}, {"lower", b.lower}, {"upper", b.upper}, {"truth", tv}});
        }
        result["runs"].push_back(run);
        ++idx;
    }
    return result;
}

}  // namespace cefb::censorlab
