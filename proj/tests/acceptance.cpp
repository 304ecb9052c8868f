// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cefbounds/analytic.hpp"
#include "cefbounds/calibrate.hpp"
#include "cefbounds/censorlab.hpp"
#include "cefbounds/doublecensor.hpp"
#include "cefbounds/inference.hpp"
#include "cefbounds/numeric.hpp"
#include "instances.hpp"
#include "oracles.hpp"

using namespace cefb;

namespace {

// Collects failed checks; the first few are printed.
struct Check {
    int failures = 0;
    std::vector<std::string> notes;

    void expect(bool ok, const std::string& what) {
        if (ok) return;
        ++failures;
        if (notes.size() < 5) notes.push_back(what);
    }
    void near(double got, double want, double tol, const std::string& what) {
        std::ostringstream os;
        os.precision(17);
        os << what << ": got " << got << ", want " << want << " +- " << tol;
        expect(std::abs(got - want) <= tol, os.str());
    }
};

struct Outcome {
    bool ok;
    std::string detail;
};

Outcome verdict(const Check& c, const std::string& summary) {
    std::string d = summary;
    for (const auto& n : c.notes) d += "\n      " + n;
    return {c.failures == 0, d};
}

// Same 200 instances for the refinement and cross-engine criteria.
std::vector<inst::Instance> suite() {
    std::mt19937_64 rng(20240601);
    std::vector<inst::Instance> out;
    for (int t = 0; t < 200; ++t) out.push_back(inst::random_monotone(rng, t % 2 == 1, t % 3 == 0));
    return out;
}

double worst_mean_error(const analytic::StepFunction& f, const BinnedSample& s, const DistributionSpec& d) {
    double worst = 0;
    for (std::size_t k = 0; k < s.bins(); ++k)
        worst = std::max(worst, std::abs(f.mean(d, s.boundaries[k], s.boundaries[k + 1]) - s.means[k]));
    return worst;
}

bool monotone_in(const analytic::StepFunction& f, Direction d) {
    return d == Direction::increasing ? f.is_weakly_increasing() : f.negated().is_weakly_increasing();
}

double attain_gap(const analytic::StepFunction& f, double x, double value) {
    return std::min(std::abs(f.left_limit(x) - value), std::abs(f.right_limit(x) - value));
}

numeric::ConstraintSet constraints(bool monotone, double cap) {
    numeric::ConstraintSet cs;
    cs.monotone = monotone;
    cs.curvature_limit = cap;
    return cs;
}

CEFEnvelope numeric_envelope(const ValidatedInput& v, std::size_t n, const numeric::ConstraintSet& cs) {
    auto run = numeric::prepare(v, n, cs);
    return numeric::cef_envelope_numeric(v, run.grid, cs, run.stage1);
}

// Merge bins j and j + 1 into their mass-weighted average.
BinnedSample merge(const BinnedSample& s, const DistributionSpec& d, std::size_t j) {
    BinnedSample out = s;
    double m0 = bin_mass(d, s.boundaries[j], s.boundaries[j + 1]);
    double m1 = bin_mass(d, s.boundaries[j + 1], s.boundaries[j + 2]);
    out.means[j] = (m0 * s.means[j] + m1 * s.means[j + 1]) / (m0 + m1);
    out.means.erase(out.means.begin() + static_cast<long>(j) + 1);
    out.boundaries.erase(out.boundaries.begin() + static_cast<long>(j) + 1);
    return out;
}

// ---------------------------------------------------------------------------

Outcome analytic_vs_oracle() {
    Check c;
    auto v = validate({{0, 6, 10}, {2, 8}, Direction::increasing, {0, 10}}, DistributionSpec::uniform(0, 10));
    double up3 = analytic::cef_bounds(v, 3).upper;
    double cross = analytic::crossover(v, 0).location;
    double lo5 = analytic::cef_bounds(v, 5).lower;
    c.near(up3, 4.0, 1e-9, "upper(3)");
    c.near(cross, 4.5, 1e-9, "crossover");
    c.near(lo5, 0.8, 1e-9, "lower(5)");

    // cells of width 0.05, outcome levels 0, 0.5, ..., 10
    std::vector<int> bin_of;
    for (int i = 0; i < 200; ++i) bin_of.push_back(i < 120 ? 0 : 1);
    auto o = oracle::monotone_lattice(bin_of, {480, 1280}, 21);
    c.expect(o.feasible, "lattice oracle infeasible");
    const double step = 0.5, dx = 0.05;
    // a constant cell starting at 3 can reach the upper bound at its left edge
    c.near(step * o.hi[60], up3, step + 1e-9, "oracle upper on [3, 3.05]");
    // the cell ending at 5 carries the lower bound at its right edge
    c.near(step * o.lo[99], lo5, step + 1e-9, "oracle lower on [4.95, 5]");
    int first = -1;
    for (int i = 0; i < 120 && first < 0; ++i)
        if (o.lo[i] > 0) first = i;
    c.near(dx * first, cross, dx + 1e-9, "first positive oracle lower");
    char buf[160];
    std::snprintf(buf, sizeof buf, "upper(3)=%.12g crossover=%.12g lower(5)=%.12g; oracle %.2f / %.2f / %.2f", up3,
                  cross, lo5, step * o.hi[60], dx * first, step * o.lo[99]);
    return verdict(c, buf);
}

Outcome refinement_and_sharpness() {
    Check c;
    double worst_mean = 0, worst_attain = 0;
    std::size_t points = 0;
    for (const auto& in : suite()) {
        auto v = validate(in.sample, in.dist);
        for (int i = 0; i <= 200; ++i) {
            double x = 0.5 * i;
            auto b = analytic::cef_bounds(v, x);
            auto mt = analytic::manski_tamer(v, x);
            c.expect(b.lower >= mt.lower - 1e-12 && b.upper <= mt.upper + 1e-12, "outside Manski-Tamer");
            auto lw = analytic::lower_witness(v, x), uw = analytic::upper_witness(v, x);
            worst_mean = std::max({worst_mean, worst_mean_error(lw, in.sample, in.dist),
                                   worst_mean_error(uw, in.sample, in.dist)});
            worst_attain = std::max({worst_attain, attain_gap(lw, x, b.lower), attain_gap(uw, x, b.upper)});
            c.expect(monotone_in(lw, in.sample.direction) && monotone_in(uw, in.sample.direction),
                     "witness breaks the direction");
            ++points;
        }
    }
    c.expect(worst_mean <= 1e-9, "witness bin means off by " + std::to_string(worst_mean));
    c.expect(worst_attain <= 1e-9, "witness misses its bound by " + std::to_string(worst_attain));
    char buf[160];
    std::snprintf(buf, sizeof buf, "%zu points; worst bin-mean error %.2e, worst attainment gap %.2e", points,
                  worst_mean, worst_attain);
    return verdict(c, buf);
}

Outcome cross_engine() {
    Check c;
    const std::size_t n = 50;
    double worst = 0;
    for (const auto& in : suite()) {
        auto v = validate(in.sample, in.dist);
        auto run = numeric::prepare(v, n, numeric::ConstraintSet{});
        auto env = numeric::cef_envelope_numeric(v, run.grid, numeric::ConstraintSet{}, run.stage1);
        bool dec = v.flipped;
        for (std::size_t i = 0; i < n; ++i) {
            // the analytic bound is taken within one partition of the
            // midpoint: at the cell edge where a cell-constant CEF binds
            std::size_t k = v.bin_of(run.grid.midpoint(i));
            double left = run.grid.edges[i], right = run.grid.edges[i + 1];
            double lo = analytic::bounds_in_bin(v, k, dec ? left : right).lower;
            double hi = analytic::bounds_in_bin(v, k, dec ? right : left).upper;
            worst = std::max({worst, std::abs(env.lower[i] - lo), std::abs(env.upper[i] - hi)});
        }
    }
    c.expect(worst <= 1e-6, "largest engine gap " + std::to_string(worst));
    char buf[120];
    std::snprintf(buf, sizeof buf, "200 instances, N = %zu; largest gap %.2e", n, worst);
    return verdict(c, buf);
}

Outcome point_identification() {
    Check c;
    std::mt19937_64 rng(4242);
    double worst = 0;
    int checked = 0;
    for (int t = 0; t < 8; ++t) {
        auto truth = inst::random_truth(rng);
        auto dist = t % 2 ? inst::random_cdf(rng) : DistributionSpec::uniform(0, 100);
        auto bd = inst::random_boundaries(rng, 4);
        auto in = inst::censored(truth, bd, dist);
        auto v = validate(in.sample, in.dist);
        for (double cap : {kInf, 2 * truth.max_curvature(), truth.max_curvature()}) {
            auto cs = constraints(true, cap);
            auto run = numeric::prepare(v, 50, cs);
            c.expect(run.stage1.min_mse == 0.0, "censored truth not reproduced");
            for (std::size_t a = 0; a < bd.size(); ++a)
                for (std::size_t b = a + 1; b < bd.size(); ++b) {
                    double mass = 0, sum = 0;
                    for (std::size_t k = a; k < b; ++k) {
                        double m = dist.mass(bd[k], bd[k + 1]);
                        mass += m;
                        sum += m * in.sample.means[k];
                    }
                    double want = sum / mass;
                    auto nb = numeric::stage2_bound_stat(v, run.grid, cs, StatisticSpec::interval_mean(bd[a], bd[b]),
                                                         run.stage1);
                    worst = std::max({worst, std::abs(nb.lower - want), std::abs(nb.upper - want)});
                    if (std::isinf(cap)) {
                        auto ab = analytic::mu_bounds(v, bd[a], bd[b]);
                        worst = std::max({worst, std::abs(ab.lower - want), std::abs(ab.upper - want)});
                        c.expect(ab.point_identified, "analytic mu not flagged as point identified");
                    }
                    ++checked;
                }
        }
    }
    c.expect(worst <= 1e-12, "largest deviation " + std::to_string(worst));
    char buf[120];
    std::snprintf(buf, sizeof buf, "%d boundary intervals (uniform + gridded, cap inf/2x/1x); largest deviation %.2e",
                  checked, worst);
    return verdict(c, buf);
}

// Conditional mean of x within [a, b] under a piecewise-constant density.
double mean_x(const DistributionSpec& d, double a, double b) {
    if (d.kind() == DistributionSpec::Kind::uniform) return 0.5 * (a + b);
    const auto& xs = d.grid_x();
    const auto& f = d.grid_cdf();
    double mass = 0, sum = 0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        double lo = std::max(a, xs[i]), hi = std::min(b, xs[i + 1]);
        if (hi <= lo) continue;
        double m = (f[i + 1] - f[i]) * (hi - lo) / (xs[i + 1] - xs[i]);
        mass += m;
        sum += m * 0.5 * (lo + hi);
    }
    return sum / mass;
}

Outcome linear_limit() {
    Check c;
    std::mt19937_64 rng(777);
    double worst = 0;
    int used = 0;
    for (int t = 0; t < 60 && used < 30; ++t) {
        auto in = inst::random_monotone(rng, t % 2 == 1, false);
        bool shuffled = t % 3 == 0;
        if (shuffled) {
            std::shuffle(in.sample.means.begin(), in.sample.means.end(), rng);
            in.sample.direction = Direction::none;
        }
        auto v = validate(in.sample, in.dist);
        std::vector<double> xs;
        for (std::size_t k = 0; k < v.bins(); ++k)
            xs.push_back(mean_x(in.dist, in.sample.boundaries[k], in.sample.boundaries[k + 1]));
        auto line = oracle::weighted_ols(xs, in.sample.means, v.bin_masses);
        // a fitted line that leaves the outcome range is clipped, not OLS
        bool inside = true;
        for (double x : {0.0, 100.0}) {
            double y = line.intercept + line.slope * x;
            inside = inside && y >= 0 && y <= 100;
        }
        if (!inside) continue;
        ++used;
        auto cs = constraints(!shuffled, 0.0);
        auto run = numeric::prepare(v, 50, cs);
        auto slope = numeric::stage2_bound_stat(v, run.grid, cs, StatisticSpec::slope(), run.stage1);
        auto icpt = numeric::stage2_bound_stat(v, run.grid, cs, StatisticSpec::linear_value(0), run.stage1);
        worst = std::max({worst, std::abs(slope.lower - line.slope), std::abs(slope.upper - line.slope),
                          std::abs(icpt.lower - line.intercept), std::abs(icpt.upper - line.intercept)});
        auto env = numeric::cef_envelope_numeric(v, run.grid, cs, run.stage1);
        for (std::size_t i = 0; i < env.grid.size(); ++i) {
            double pred = line.intercept + line.slope * env.grid[i];
            worst = std::max({worst, std::abs(env.lower[i] - pred), std::abs(env.upper[i] - pred)});
        }
    }
    c.expect(used >= 20, "too few usable instances: " + std::to_string(used));
    c.expect(worst <= 1e-8, "largest deviation " + std::to_string(worst));
    char buf[120];
    std::snprintf(buf, sizeof buf, "%d instances; slope, intercept and %s; largest deviation %.2e", used,
                  "all 50 predicted values", worst);
    return verdict(c, buf);
}

Outcome containment() {
    Check c;
    calibrate::ReferenceCurve ref;
    for (int i = 0; i <= 100; ++i) {
        ref.x.push_back(i);
        ref.y.push_back(200 + 600 * std::exp(-i / 20.0));
    }
    ref.knots = {20, 40, 60, 80};
    auto fit = calibrate::fit_spline(ref, calibrate::Boundary::free);
    double cmax = calibrate::max_curvature(fit.spline);
    auto truth = censorlab::Truth::from_spline(fit.spline);
    for (double x = 0; x < 100; x += 0.01) c.expect(truth(x + 0.01) <= truth(x), "spline truth is not decreasing");

    auto dist = DistributionSpec::uniform(0, 100);
    auto sample = censorlab::censor(truth, dist, {0, 39, 68, 100}, {0, 1000}, Direction::decreasing);
    auto v = validate(sample, dist);
    auto grid = numeric::discretize(v, 100);
    auto truth_grid = censorlab::resample(truth, dist, grid);

    std::string report;
    auto run = [&](double cap) {
        auto cs = constraints(true, cap);
        auto s1 = numeric::stage1_min_mse(v, grid, cs);
        auto env = numeric::cef_envelope_numeric(v, grid, cs, s1);
        auto cov = censorlab::coverage_report(truth_grid.values, env, 1e-7 * 1000);
        char buf[120];
        std::snprintf(buf, sizeof buf, " cap %.3g: %.0f%% (%zu violations)", cap, 100 * cov.fraction,
                      cov.violations.size());
        report += buf;
        return cov;
    };
    for (double mult : {1.0, 1.5, 4.0, kInf}) {
        auto cov = run(mult * cmax);
        c.expect(cov.complete() && cov.fraction == 1.0, "containment lost at cap >= max curvature");
    }
    // Just below the truth's curvature the truth is infeasible but can still
    // sit inside the envelope; the sweep shows where containment breaks.
    std::string failing;
    for (double mult : {0.9, 0.75, 0.5, 0.4, 0.25}) {
        auto cov = run(mult * cmax);
        bool failed = !cov.complete() && cov.fraction < 1.0;
        c.expect(cov.violations.size() == static_cast<std::size_t>(std::lround((1 - cov.fraction) * 100)),
                 "violation list does not match the coverage fraction");
        if (failed) failing += (failing.empty() ? "" : ", ") + io::format_number(mult) + "x";
        if (mult == 0.25) c.expect(failed && !cov.violations.empty(), "no containment failure detected at 0.25x");
    }
    report += "; failure detected at " + (failing.empty() ? std::string("none") : failing);
    char buf[80];
    std::snprintf(buf, sizeof buf, "max|truth''| = %.4g;", cmax);
    return verdict(c, buf + report);
}

Outcome nesting() {
    Check c;
    int envelopes = 0;
    // curvature nesting on censored smooth truths
    std::mt19937_64 rng(9001);
    for (int t = 0; t < 10; ++t) {
        auto truth = inst::random_truth(rng);
        auto dist = t % 2 ? inst::random_cdf(rng) : DistributionSpec::uniform(0, 100);
        auto in = inst::censored(truth, inst::random_boundaries(rng, inst::pick(rng, 3, 5)), dist);
        auto v = validate(in.sample, in.dist);
        CEFEnvelope wider;
        bool first = true;
        for (double mult : {kInf, 4.0, 2.0, 1.0}) {
            auto env = numeric_envelope(v, 50, constraints(true, mult * truth.max_curvature()));
            ++envelopes;
            if (!first)
                for (std::size_t i = 0; i < env.grid.size(); ++i)
                    c.expect(env.lower[i] >= wider.lower[i] - 1e-9 && env.upper[i] <= wider.upper[i] + 1e-9,
                             "tighter cap widened the envelope");
            wider = env;
            first = false;
        }
    }
    // bin merging on the randomized monotone suite
    std::vector<double> xs;
    for (int i = 0; i <= 200; ++i) xs.push_back(0.5 * i);
    auto all = suite();
    for (std::size_t t = 0; t < all.size(); ++t) {
        const auto& in = all[t];
        auto v = validate(in.sample, in.dist);
        std::size_t j = t % (in.sample.bins() - 1);
        auto w = validate(merge(in.sample, in.dist, j), in.dist);
        auto a = analytic::cef_envelope(v, xs), b = analytic::cef_envelope(w, xs);
        envelopes += 2;
        for (std::size_t i = 0; i < xs.size(); ++i)
            c.expect(b.lower[i] <= a.lower[i] + 1e-9 && b.upper[i] >= a.upper[i] - 1e-9,
                     "merged analytic envelope lost a point");
        for (double lo : {0.0, 13.0, 40.0})
            for (double hi : {55.0, 87.0, 100.0}) {
                auto ma = analytic::mu_bounds(v, lo, hi), mb = analytic::mu_bounds(w, lo, hi);
                c.expect(mb.lower <= ma.lower + 1e-9 && mb.upper >= ma.upper - 1e-9, "merged mu bounds shrank");
            }
        if (t % 5 == 0) {
            auto cs = constraints(true, kInf);
            auto na = numeric_envelope(v, 50, cs), nb = numeric_envelope(w, 50, cs);
            envelopes += 2;
            for (std::size_t i = 0; i < na.grid.size(); ++i)
                c.expect(nb.lower[i] <= na.lower[i] + 1e-9 && nb.upper[i] >= na.upper[i] - 1e-9,
                         "merged numeric envelope lost a point");
            auto rv = numeric::prepare(v, 50, cs), rw = numeric::prepare(w, 50, cs);
            auto mu = StatisticSpec::interval_mean(13, 87);
            auto ma = numeric::stage2_bound_stat(v, rv.grid, cs, mu, rv.stage1);
            auto mb = numeric::stage2_bound_stat(w, rw.grid, cs, mu, rw.stage1);
            c.expect(mb.lower <= ma.lower + 1e-9 && mb.upper >= ma.upper - 1e-9, "merged numeric mu shrank");
        }
    }
    return verdict(c, std::to_string(envelopes) + " envelopes compared");
}

Outcome double_censoring() {
    Check c;
    using namespace doublecensor;
    TransitionMatrix tm;
    tm.parent_boundaries = {0, 50, 100};
    tm.child_boundaries = {0, 27, 100};
    tm.mass.resize(2, 2);
    // bottom child bin mass 0.27 split 0.55 / 0.45 between the parent bins
    tm.mass << 0.27 * 0.55, 0.5 - 0.27 * 0.55, 0.27 * 0.45, 0.5 - 0.27 * 0.45;
    auto dist = DistributionSpec::uniform(0, 100);
    validate(tm, dist);
    auto low = scenario_means(tm, Scenario::low_mobility);
    c.near(low.placement[0][0].lo, 0.0, 1e-12, "low mobility, bottom parent start");
    c.near(low.placement[0][0].hi, 14.85, 1e-12, "low mobility, bottom parent end");
    c.near(low.placement[1][0].lo, 14.85, 1e-12, "low mobility, top parent start");
    c.near(low.placement[1][0].hi, 27.0, 1e-12, "low mobility, top parent end");
    for (auto sc : {Scenario::low_mobility, Scenario::high_mobility}) {
        auto sm = scenario_means(tm, sc);
        c.near(0.5 * sm.means[0] + 0.5 * sm.means[1], 50.0, 1e-9, std::string("budget, ") + to_string(sc));
    }
    int stats = 0;
    for (double cap : {kInf, 0.01})
        for (auto spec : {StatisticSpec::interval_mean(0, 50), StatisticSpec::interval_mean(10, 80),
                          StatisticSpec::slope(), StatisticSpec::point(25), StatisticSpec::linear_value(50)}) {
            auto u = double_censored_stat_bounds(tm, dist, constraints(true, cap), spec, 50);
            for (const auto& s : u.scenarios)
                c.expect(u.lower <= s.bounds.lower && u.upper >= s.bounds.upper,
                         "union misses " + std::string(to_string(s.scenario)) + " for " + spec.describe());
            ++stats;
        }
    char buf[160];
    std::snprintf(buf, sizeof buf, "low mobility [%.12g, %.12g] / [%.12g, %.12g]; %d union checks",
                  low.placement[0][0].lo, low.placement[0][0].hi, low.placement[1][0].lo, low.placement[1][0].hi,
                  stats);
    return verdict(c, buf);
}

std::string archive(const inference::BootstrapResult& r) {
    std::ostringstream os;
    inference::write_archive(os, r);
    return os.str();
}

Outcome bootstrap() {
    Check c;
    std::mt19937_64 rng(31337);
    auto dist = DistributionSpec::uniform(0, 100);
    int identical = 0, degenerate = 0, contained = 0;
    for (int t = 0; t < 50; ++t) {
        inference::CountData d;
        // boundaries on multiples of 5 so every bin spans whole cells at N = 20
        d.boundaries = {0, 100};
        std::vector<double> cuts;
        for (int b = 5; b <= 95; b += 5) cuts.push_back(b);
        std::shuffle(cuts.begin(), cuts.end(), rng);
        d.boundaries.insert(d.boundaries.end(), cuts.begin(), cuts.begin() + inst::pick(rng, 1, 3));
        std::sort(d.boundaries.begin(), d.boundaries.end());
        std::size_t k = d.boundaries.size() - 1;
        for (std::size_t j = 0; j < k; ++j) {
            d.mean.push_back(inst::unif(rng, 10, 90));
            d.sd.push_back(inst::unif(rng, 1, 25));
            d.n.push_back(inst::pick(rng, 30, 2000));
        }
        std::sort(d.mean.begin(), d.mean.end());
        inference::Settings s;
        s.range = {0, 100};
        s.grid = 20;
        s.replicates = 100;
        s.seed = static_cast<std::uint64_t>(t);
        const StatisticSpec specs[] = {StatisticSpec::slope(), StatisticSpec::interval_mean(20, 60),
                                       StatisticSpec::point(45)};
        s.spec = specs[t % 3];
        s.constraints = constraints(true, t % 2 ? kInf : 0.05);
        inference::BootstrapResult r;
        try {
            r = inference::bootstrap_bounds(d, dist, s);
        } catch (const std::exception& e) {
            c.expect(false, "dataset " + std::to_string(t) + ": " + e.what());
            continue;
        }
        bool in = r.ci_lower <= r.lower && r.ci_upper >= r.upper;
        c.expect(in, "confidence set misses the full-sample interval, dataset " + std::to_string(t));
        contained += in;
        if (t % 5 == 0) {
            bool same = archive(r) == archive(inference::bootstrap_bounds(d, dist, s));
            c.expect(same, "reseeded run differs, dataset " + std::to_string(t));
            identical += same;
            auto flat = d;
            std::fill(flat.sd.begin(), flat.sd.end(), 0.0);
            auto z = inference::bootstrap_bounds(flat, dist, s);
            bool eq = z.ci_lower == z.lower && z.ci_upper == z.upper;
            c.expect(eq, "sd = 0 did not collapse, dataset " + std::to_string(t));
            degenerate += eq;
        }
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "50 count datasets, B = 100: %d contained, %d/10 bit-identical reruns, %d/10 sd=0 collapses",
                  contained, identical, degenerate);
    return verdict(c, buf);
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double limit_s;  // 0: no runtime limit
        std::function<Outcome()> run;
    };
    const Criterion criteria[] = {
        {"1 analytic vs lattice oracle", 10, analytic_vs_oracle},
        {"2 refinement and sharpness", 60, refinement_and_sharpness},
        {"3 cross-engine equivalence", 0, cross_engine},
        {"4 point identification", 0, point_identification},
        {"5 linear limit", 0, linear_limit},
        {"6 containment simulation", 120, containment},
        {"7 nesting laws", 0, nesting},
        {"8 double censoring", 0, double_censoring},
        {"9 bootstrap determinism and degeneracy", 0, bootstrap},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o{false, ""};
        try {
            o = cr.run();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (cr.limit_s > 0 && secs > cr.limit_s) {
            o.ok = false;
            o.detail += " [over the " + std::to_string(static_cast<int>(cr.limit_s)) + " s limit]";
        }
        std::printf("%s  criterion %-40s %7.2f s  %s\n", o.ok ? "PASS" : "FAIL", cr.name, secs, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.ok;
    }
    std::printf("%d of 9 criteria passed\n", 9 - failed);
    return failed == 0 ? 0 : 1;
}
