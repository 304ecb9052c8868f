#pragma once

// Command-line front end. run() parses arguments, dispatches to a
// subcommand and maps errors to exit codes: 0 success, 2 invalid input,
// 3 infeasible constraints, 1 anything else.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cefbounds/analytic.hpp"
#include "cefbounds/calibrate.hpp"
#include "cefbounds/censorlab.hpp"
#include "cefbounds/core.hpp"
#include "cefbounds/doublecensor.hpp"
#include "cefbounds/inference.hpp"
#include "cefbounds/io.hpp"
#include "cefbounds/numeric.hpp"
#include "cefbounds/version.hpp"

namespace cefb::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitInfeasible = 3;

[[nodiscard]] inline std::string version_string() {
    return std::string("cefbounds ") + kVersion + " (" + kConstraintSemantics + ")";
}

// FNV-1a, 64 bit.
class Hasher {
public:
    void add(std::string_view s) {
        for (unsigned char c : s) {
            h_ ^= c;
            h_ *= 0x100000001B3ULL;
        }
        h_ ^= 0xFF;  // field separator
        h_ *= 0x100000001B3ULL;
    }

    void add_file(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ValidationError("cannot open " + path);
        std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        add(data);
    }

    [[nodiscard]] std::string hex() const {
        std::ostringstream os;
        os << std::hex << std::setw(16) << std::setfill('0') << h_;
        return os.str();
    }

private:
    std::uint64_t h_ = 0xCBF29CE484222325ULL;
};

namespace detail {

// Numbers go through format_number so JSON output is 12 significant digits.
inline json num(double v) {
    if (!std::isfinite(v)) return json(io::format_number(v));
    return json::parse(io::format_number(v));
}

inline json nums(const std::vector<double>& vs) {
    json out = json::array();
    for (double v : vs) out.push_back(num(v));
    return out;
}

inline OutcomeRange parse_range(const std::string& text) {
    auto comma = text.find(',');
    if (comma == std::string::npos) throw ValidationError("--range expects ymin,ymax, got '" + text + "'");
    OutcomeRange r{io::detail::parse_number(io::detail::trim(std::string_view(text).substr(0, comma)), "--range: "),
                   io::detail::parse_number(io::detail::trim(std::string_view(text).substr(comma + 1)), "--range: ")};
    r.check();
    return r;
}

inline Direction parse_direction(const std::string& text) {
    if (text == "inc") return Direction::increasing;
    if (text == "dec") return Direction::decreasing;
    return Direction::none;
}

inline std::vector<double> parse_list(const std::string& text, const char* what) {
    std::vector<double> out;
    for (auto tok : io::detail::split(text)) out.push_back(io::detail::parse_number(tok, std::string(what) + ": "));
    return out;
}

// Shared flags for commands that bound a CEF.
struct ModelFlags {
    std::string sample;
    std::string dist = "uniform";
    std::string monotone = "inc";
    std::string curvature = "inf";
    std::size_t grid = 100;
    std::string range;
    std::string engine = "numeric";
    bool allow_violation = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--dist", dist, "distribution CSV (x,cdf) or 'uniform' over the sample support");
        cmd->add_option("--monotone", monotone, "direction of the CEF")
            ->check(CLI::IsMember({"inc", "dec", "none"}));
        cmd->add_option("--curvature", curvature,
                        "cap on |E''(y|x)| in outcome units per (x unit)^2, or inf");
        cmd->add_option("--grid", grid, "partition count N for the numeric engine")->check(CLI::PositiveNumber);
        cmd->add_option("--range", range, "outcome range ymin,ymax")->required();
        cmd->add_option("--engine", engine, "analytic (monotone, no curvature cap) or numeric")
            ->check(CLI::IsMember({"analytic", "numeric"}));
        cmd->add_flag("--allow-direction-violation", allow_violation,
                      "accept bin means that break the declared direction");
    }

    [[nodiscard]] DistributionSpec distribution(const std::vector<double>& boundaries) const {
        if (dist == "uniform") return DistributionSpec::uniform(boundaries.front(), boundaries.back());
        return io::read_distribution_file(dist);
    }

    [[nodiscard]] numeric::ConstraintSet constraints() const {
        numeric::ConstraintSet cs;
        cs.monotone = monotone != "none";
        cs.curvature_limit = io::parse_limit(curvature);
        cs.check();
        return cs;
    }

    void require_analytic_capable() const {
        if (engine != "analytic") return;
        if (!std::isinf(io::parse_limit(curvature)))
            throw ValidationError("the analytic engine has no curvature constraint; use --engine numeric");
        if (monotone == "none")
            throw ValidationError("the analytic engine needs --monotone inc or dec; use --engine numeric");
    }
};

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw ValidationError("cannot write " + path);
    os << text;
}

}  // namespace detail

struct BoundsCommand {
    detail::ModelFlags model;
    std::string out_path, summary_path;
    double display_scale = 1.0;

    void attach(CLI::App* cmd) {
        cmd->add_option("sample", model.sample, "binned sample CSV (bin_lo,bin_hi,mean[,count])")->required();
        model.attach(cmd);
        cmd->add_option("--out", out_path, "envelope CSV path (default: stdout)");
        cmd->add_option("--summary", summary_path, "summary JSON path (default: stdout after the CSV is written to --out)");
        cmd->add_option("--display-scale", display_scale, "multiply printed outcomes, e.g. 100000 for rates per 100,000");
    }

    int run(std::ostream& out) const {
        model.require_analytic_capable();
        auto range = detail::parse_range(model.range);
        auto direction = detail::parse_direction(model.monotone);
        auto sample = io::read_sample_file(model.sample, range, direction);
        auto dist = model.distribution(sample.boundaries);
        auto v = validate(sample, dist, {model.allow_violation});
        auto cs = model.constraints();

        CEFEnvelope env;
        json summary;
        std::vector<std::string> warnings;
        auto g = numeric::discretize(v, model.grid);
        if (model.engine == "analytic") {
            env = analytic::cef_envelope(v, g.midpoints());
            for (double x : env.grid)
                if (analytic::cef_bounds(v, x).clamped)
                    warnings.push_back(cefb::detail::concat("bound clamped to the Manski-Tamer interval at x = ", x));
            summary["min_mse"] = 0.0;
            json xs = json::array();
            for (const auto& c : analytic::crossovers(v)) xs.push_back(detail::num(c.location));
            summary["crossovers"] = xs;
        } else {
            auto s1 = numeric::stage1_min_mse(v, g, cs);
            env = numeric::cef_envelope_numeric(v, g, cs, s1);
            summary["min_mse"] = detail::num(s1.min_mse);
            warnings = s1.warnings;
            warnings.insert(warnings.begin(), g.warnings.begin(), g.warnings.end());
        }
        for (auto& y : env.lower) y *= display_scale;
        for (auto& y : env.upper) y *= display_scale;

        std::ostringstream csv;
        io::write_envelope(csv, env);
        summary["engine"] = model.engine;
        summary["constraint_tag"] = env.constraint_tag;
        summary["points"] = env.grid.size();
        summary["display_scale"] = detail::num(display_scale);
        summary["warnings"] = warnings;

        if (out_path.empty()) out << csv.str();
        else detail::write_text(out_path, csv.str());
        if (!summary_path.empty()) detail::write_text(summary_path, summary.dump(2) + "\n");
        else if (!out_path.empty()) out << summary.dump(2) << "\n";
        return kExitOk;
    }
};

struct StatCommand {
    detail::ModelFlags model;
    std::string stat;
    std::size_t bootstrap = 0;
    std::uint64_t seed = 0;
    std::string input_kind = "bins";
    double alpha = 0.05;
    std::string witness_path, archive_path;

    void attach(CLI::App* cmd) {
        cmd->add_option("sample", model.sample, "input CSV; format set by --input-kind")->required();
        model.attach(cmd);
        cmd->add_option("--stat", stat, "point:x | mu:a,b | slope | linear:x")->required();
        cmd->add_option("--bootstrap", bootstrap, "bootstrap replicate count B (>= 100)");
        cmd->add_option("--seed", seed, "bootstrap seed");
        cmd->add_option("--input-kind", input_kind, "bins, micro (bin_lo,bin_hi,y) or counts (bin_lo,bin_hi,mean,sd,n)")
            ->check(CLI::IsMember({"bins", "micro", "counts"}));
        cmd->add_option("--alpha", alpha, "confidence set level is 1 - alpha");
        cmd->add_option("--witness", witness_path, "write the two attaining grid CEFs to this CSV (numeric engine)");
        cmd->add_option("--archive", archive_path, "write per-replicate bootstrap bounds to this CSV");
    }

    int run(std::ostream& out) const {
        model.require_analytic_capable();
        auto range = detail::parse_range(model.range);
        auto direction = detail::parse_direction(model.monotone);
        auto spec = io::parse_statistic(stat);

        BinnedSample sample;
        std::optional<inference::MicroData> micro;
        std::optional<inference::CountData> counts;
        inference::Settings settings;
        settings.range = range;
        settings.direction = direction;
        settings.constraints = model.constraints();
        settings.spec = spec;
        settings.grid = model.grid;
        settings.replicates = bootstrap;
        settings.seed = seed;
        settings.alpha = alpha;
        if (input_kind == "bins") {
            sample = io::read_sample_file(model.sample, range, direction);
        } else if (input_kind == "micro") {
            std::ifstream in(model.sample);
            if (!in) throw ValidationError("cannot open " + model.sample);
            micro = inference::read_micro(in, model.sample);
            sample = inference::full_sample(*micro, settings);
        } else {
            std::ifstream in(model.sample);
            if (!in) throw ValidationError("cannot open " + model.sample);
            counts = inference::read_counts(in, model.sample);
            sample = inference::full_sample(*counts, settings);
        }
        auto dist = model.distribution(sample.boundaries);
        auto v = validate(sample, dist, {model.allow_violation});
        spec.check(v.lo(), v.hi());
        auto cs = settings.constraints;
        double tol = 1e-9 * range.width();

        json res;
        res["spec"] = spec.describe();
        res["engine"] = model.engine;
        std::vector<std::string> warnings;
        if (model.engine == "analytic") {
            if (spec.kind == StatisticSpec::Kind::point) {
                auto b = analytic::cef_bounds(v, spec.a);
                res["lower"] = detail::num(b.lower);
                res["upper"] = detail::num(b.upper);
                res["point_identified"] = b.upper - b.lower <= tol;
            } else if (spec.kind == StatisticSpec::Kind::interval_mean) {
                auto b = analytic::mu_bounds(v, spec.a, spec.b);
                res["lower"] = detail::num(b.lower);
                res["upper"] = detail::num(b.upper);
                res["point_identified"] = b.point_identified;
            } else {
                throw ValidationError("the analytic engine handles point and mu statistics; use --engine numeric");
            }
            if (!witness_path.empty()) throw ValidationError("--witness needs --engine numeric");
        } else {
            auto run = numeric::prepare(v, model.grid, cs);
            auto b = numeric::stage2_bound_stat(v, run.grid, cs, spec, run.stage1);
            res["lower"] = detail::num(b.lower);
            res["upper"] = detail::num(b.upper);
            res["point_identified"] = b.upper - b.lower <= tol;
            res["min_mse"] = detail::num(run.stage1.min_mse);
            warnings = run.grid.warnings;
            warnings.insert(warnings.end(), run.stage1.warnings.begin(), run.stage1.warnings.end());
            if (!witness_path.empty()) {
                std::ostringstream os;
                os << "x,lower_witness,upper_witness\n";
                for (std::size_t i = 0; i < run.grid.cells(); ++i)
                    os << io::format_number(run.grid.midpoint(i)) << ',' << io::format_number(b.lower_witness.values[i])
                       << ',' << io::format_number(b.upper_witness.values[i]) << '\n';
                detail::write_text(witness_path, os.str());
            }
        }
        res["constraint_tag"] = cs.tag();
        res["warnings"] = warnings;

        if (bootstrap > 0) {
            if (model.engine == "analytic")
                throw ValidationError("--bootstrap runs on the numeric engine; drop --engine analytic");
            inference::BootstrapResult boot;
            if (micro) boot = inference::bootstrap_bounds(*micro, dist, settings);
            else if (counts) boot = inference::bootstrap_bounds(*counts, dist, settings);
            else throw ValidationError("--bootstrap needs --input-kind micro or counts");
            res["confidence_set"] = {{"lower", detail::num(boot.ci_lower)},
                                     {"upper", detail::num(boot.ci_upper)},
                                     {"alpha", detail::num(alpha)},
                                     {"replicates", bootstrap},
                                     {"failed_replicates", boot.failures},
                                     {"seed", seed},
                                     {"rng_version", inference::kRngVersion}};
            if (!archive_path.empty()) {
                std::ostringstream os;
                inference::write_archive(os, boot);
                detail::write_text(archive_path, os.str());
            }
        }
        out << res.dump(2) << "\n";
        return kExitOk;
    }
};

struct SimulateCommand {
    std::string config;

    void attach(CLI::App* cmd) {
        cmd->add_option("config", config, "experiment JSON config")->required();
    }

    int run(std::ostream& out) const {
        std::ifstream in(config);
        if (!in) throw ValidationError("cannot open " + config);
        json cfg;
        try {
            cfg = json::parse(in);
        } catch (const json::exception& e) {
            throw ValidationError(config + ": " + e.what());
        }
        auto base = std::filesystem::path(config).parent_path();
        json res;
        try {
            res = censorlab::run_experiment(cfg, base);
        } catch (const json::exception& e) {
            throw ValidationError(config + ": " + e.what());
        }
        Hasher h;
        h.add_file(config);
        res["manifest"] = {{"version", kVersion},
                           {"constraint_semantics", kConstraintSemantics},
                           {"inputs_hash", h.hex()},
                           {"seed", nullptr}};
        auto out_dir = base / cfg.value("output_dir", std::string("simulate_out"));
        detail::write_text((out_dir / "manifest.json").string(), res["manifest"].dump(2) + "\n");
        out << res.dump(2) << "\n";
        return kExitOk;
    }
};

struct CalibrateCommand {
    std::string curve;
    std::string knots;
    std::string boundary = "natural";
    std::string fitted_path;

    void attach(CLI::App* cmd) {
        cmd->add_option("curve", curve, "reference curve CSV (x,y)")->required();
        cmd->add_option("--knots", knots, "interior knots k1,k2,... (default: quartiles of x)");
        cmd->add_option("--boundary", boundary, "natural (f''=0 at the ends) or free")
            ->check(CLI::IsMember({"natural", "free"}));
        cmd->add_option("--fitted", fitted_path, "write x,y,fitted,second_derivative to this CSV");
    }

    int run(std::ostream& out) const {
        auto c = io::read_curve_file(curve);
        if (!knots.empty()) c.knots = detail::parse_list(knots, "--knots");
        auto fit = calibrate::fit_spline(c, boundary == "free" ? calibrate::Boundary::free : calibrate::Boundary::natural);
        double cmax = calibrate::max_curvature(fit.spline);
        if (!fitted_path.empty()) {
            std::ostringstream os;
            os << "x,y,fitted,second_derivative\n";
            for (std::size_t i = 0; i < c.x.size(); ++i)
                os << io::format_number(c.x[i]) << ',' << io::format_number(c.y[i]) << ','
                   << io::format_number(fit.fitted[i]) << ',' << io::format_number(fit.spline.second_derivative(c.x[i]))
                   << '\n';
            detail::write_text(fitted_path, os.str());
        }
        Hasher h;
        h.add_file(curve);
        h.add(knots);
        h.add(boundary);
        json res{{"knots", detail::nums(fit.knots)},
                 {"boundary", boundary},
                 {"rss", detail::num(fit.rss)},
                 {"max_curvature", detail::num(cmax)},
                 {"suggested_cap", detail::num(calibrate::suggested_cap(cmax))},
                 {"manifest",
                  {{"version", kVersion},
                   {"constraint_semantics", kConstraintSemantics},
                   {"inputs_hash", h.hex()},
                   {"seed", nullptr}}}};
        out << res.dump(2) << "\n";
        return kExitOk;
    }
};

struct DoubleCensorCommand {
    std::string matrix;
    std::string dist = "uniform";
    std::string monotone = "inc";
    std::string curvature = "inf";
    std::size_t grid = 100;
    std::string stat;

    void attach(CLI::App* cmd) {
        cmd->add_option("matrix", matrix, "transition matrix CSV")->required();
        cmd->add_option("--dist", dist, "parent distribution CSV (x,cdf) or 'uniform'");
        cmd->add_option("--monotone", monotone, "inc or none")->check(CLI::IsMember({"inc", "none"}));
        cmd->add_option("--curvature", curvature, "curvature cap or inf");
        cmd->add_option("--grid", grid, "partition count N")->check(CLI::PositiveNumber);
        cmd->add_option("--stat", stat, "point:x | mu:a,b | slope | linear:x")->required();
    }

    int run(std::ostream& out) const {
        auto tm = doublecensor::read_transition_file(matrix);
        auto pd = dist == "uniform"
                      ? DistributionSpec::uniform(tm.parent_boundaries.front(), tm.parent_boundaries.back())
                      : io::read_distribution_file(dist);
        numeric::ConstraintSet cs{monotone == "inc", io::parse_limit(curvature)};
        auto spec = io::parse_statistic(stat);
        auto u = doublecensor::double_censored_stat_bounds(tm, pd, cs, spec, grid);
        auto dom = doublecensor::dominance_check(tm);

        json res;
        res["spec"] = spec.describe();
        res["lower"] = detail::num(u.lower);
        res["upper"] = detail::num(u.upper);
        res["lower_scenario"] = doublecensor::to_string(u.lower_from);
        res["upper_scenario"] = doublecensor::to_string(u.upper_from);
        res["scenarios"] = json::array();
        for (const auto& sb : u.scenarios) {
            auto sm = doublecensor::scenario_means(tm, sb.scenario);
            json place = json::array();
            for (const auto& row : sm.placement) {
                json r = json::array();
                for (const auto& s : row) r.push_back({detail::num(s.lo), detail::num(s.hi)});
                place.push_back(r);
            }
            res["scenarios"].push_back({{"scenario", doublecensor::to_string(sb.scenario)},
                                        {"means", detail::nums(sb.means)},
                                        {"placement", place},
                                        {"min_mse", detail::num(sb.min_mse)},
                                        {"lower", detail::num(sb.bounds.lower)},
                                        {"upper", detail::num(sb.bounds.upper)}});
        }
        res["dominance_violations"] = {{"input", dom.input.size()}, {"low_mobility", dom.low.size()},
                                       {"high_mobility", dom.high.size()}};
        res["warnings"] = u.warnings;
        Hasher h;
        h.add_file(matrix);
        if (dist != "uniform") h.add_file(dist);
        h.add(monotone + "|" + curvature + "|" + std::to_string(grid) + "|" + stat);
        res["manifest"] = {{"version", kVersion},
                           {"constraint_semantics", kConstraintSemantics},
                           {"inputs_hash", h.hex()},
                           {"seed", nullptr}};
        out << res.dump(2) << "\n";
        return kExitOk;
    }
};

// argv-style entry point; args excludes the program name.
[[nodiscard]] inline int run(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sharp bounds on conditional expectation functions with an interval-censored regressor", "cefbounds"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    BoundsCommand bounds;
    StatCommand stat;
    SimulateCommand simulate;
    CalibrateCommand calibrate;
    DoubleCensorCommand dc;
    bounds.attach(app.add_subcommand("bounds", "pointwise CEF envelope"));
    stat.attach(app.add_subcommand("stat", "bounds on one statistic, optionally with a bootstrap confidence set"));
    simulate.attach(app.add_subcommand("simulate", "censor a known CEF and check recovery"));
    calibrate.attach(app.add_subcommand("calibrate", "suggest a curvature cap from a reference curve"));
    dc.attach(app.add_subcommand("doublecensor", "bounds when the outcome is also binned"));

    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    }

    try {
        auto* sub = app.get_subcommands().front();
        std::string name = sub->get_name();
        if (name == "bounds") return bounds.run(out);
        if (name == "stat") return stat.run(out);
        if (name == "simulate") return simulate.run(out);
        if (name == "calibrate") return calibrate.run(out);
        return dc.run(out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        return kExitInvalid;
    } catch (const InfeasibleError& e) {
        err << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace cefb::cli
