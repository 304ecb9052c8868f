#pragma once

// Outcome censoring on top of conditioning censoring. Children's ranks are
// only known up to child bins, so the conditional mean child rank of each
// parent bin is bracketed by two scenarios: ranks independent of parents
// within each child bin (high mobility) and ranks sorted by parent bin
// within each child bin (low mobility). Statistic bounds are computed under
// both and united.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "cefbounds/core.hpp"
#include "cefbounds/io.hpp"
#include "cefbounds/numeric.hpp"

namespace cefb::doublecensor {

inline constexpr double kBudgetTolerance = 1e-9;

struct TransitionMatrix {
    std::vector<double> parent_boundaries;  // K + 1
    std::vector<double> child_boundaries;   // H + 1
    Eigen::MatrixXd mass;                   // K x H joint probabilities

    [[nodiscard]] std::size_t parents() const { return parent_boundaries.size() - 1; }
    [[nodiscard]] std::size_t children() const { return child_boundaries.size() - 1; }
    [[nodiscard]] double child_lo() const { return child_boundaries.front(); }
    [[nodiscard]] double child_hi() const { return child_boundaries.back(); }
};

enum class Scenario { low_mobility, high_mobility };

[[nodiscard]] inline const char* to_string(Scenario s) {
    return s == Scenario::low_mobility ? "low_mobility" : "high_mobility";
}

struct SubInterval {
    double lo = 0.0, hi = 0.0;
};

struct ScenarioMeans {
    Scenario scenario = Scenario::high_mobility;
    std::vector<double> means;                       // per parent bin
    std::vector<std::vector<SubInterval>> placement;  // [parent][child] rank interval
};

namespace detail {

inline std::string sums(const Eigen::VectorXd& v) {
    std::string out = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + io::format_number(v(i));
    return out + "]";
}

inline std::vector<double> uniform_masses(const std::vector<double>& bd) {
    std::vector<double> out;
    double w = bd.back() - bd.front();
    for (std::size_t i = 0; i + 1 < bd.size(); ++i) out.push_back((bd[i + 1] - bd[i]) / w);
    return out;
}

inline void check_boundaries(const std::vector<double>& bd, const char* what) {
    if (bd.size() < 2) throw ValidationError(std::string(what) + " boundaries need at least two values");
    for (std::size_t i = 1; i < bd.size(); ++i)
        if (!(bd[i] > bd[i - 1]))
            throw ValidationError(cefb::detail::concat(what, " boundaries must be strictly increasing at ", bd[i]));
}

}  // namespace detail

// Budget coherence: nonnegative entries summing to one, row sums equal to
// the parent bin masses under `parent_dist`, column sums equal to the child
// bin masses under uniform child ranks.
inline void validate(const TransitionMatrix& tm, const DistributionSpec& parent_dist) {
    detail::check_boundaries(tm.parent_boundaries, "parent");
    detail::check_boundaries(tm.child_boundaries, "child");
    auto k = static_cast<Eigen::Index>(tm.parents()), h = static_cast<Eigen::Index>(tm.children());
    if (tm.mass.rows() != k || tm.mass.cols() != h)
        throw ValidationError(cefb::detail::concat("transition matrix is ", tm.mass.rows(), "x", tm.mass.cols(),
                                                   ", boundaries imply ", k, "x", h));
    for (Eigen::Index i = 0; i < k; ++i)
        for (Eigen::Index j = 0; j < h; ++j)
            if (!std::isfinite(tm.mass(i, j)) || tm.mass(i, j) < 0.0)
                throw ValidationError(cefb::detail::concat("transition mass at parent bin ", i + 1, ", child bin ",
                                                           j + 1, " must be finite and >= 0, got ", tm.mass(i, j)));
    double total = tm.mass.sum();
    if (std::abs(total - 1.0) > kBudgetTolerance)
        throw ValidationError(cefb::detail::concat("transition masses sum to ", io::format_number(total),
                                                   ", expected 1"));
    Eigen::VectorXd rows = tm.mass.rowwise().sum();
    Eigen::VectorXd cols = tm.mass.colwise().sum().transpose();
    Eigen::VectorXd want_rows(k), want_cols(h);
    for (Eigen::Index i = 0; i < k; ++i)
        want_rows(i) = parent_dist.mass(tm.parent_boundaries[static_cast<std::size_t>(i)],
                                        tm.parent_boundaries[static_cast<std::size_t>(i) + 1]);
    auto cm = detail::uniform_masses(tm.child_boundaries);
    for (Eigen::Index j = 0; j < h; ++j) want_cols(j) = cm[static_cast<std::size_t>(j)];
    if ((rows - want_rows).lpNorm<Eigen::Infinity>() > kBudgetTolerance)
        throw ValidationError("budget violated: row sums " + detail::sums(rows) +
                              " differ from parent bin masses " + detail::sums(want_rows));
    if ((cols - want_cols).lpNorm<Eigen::Infinity>() > kBudgetTolerance)
        throw ValidationError("budget violated: column sums " + detail::sums(cols) +
                              " differ from child bin masses " + detail::sums(want_cols));
    for (Eigen::Index i = 0; i < k; ++i)
        if (!(rows(i) > 0.0))
            throw ValidationError(cefb::detail::concat("parent bin ", i + 1, " has zero mass"));
}

[[nodiscard]] inline ScenarioMeans scenario_means(const TransitionMatrix& tm, Scenario scenario) {
    auto k = tm.parents(), h = tm.children();
    Eigen::VectorXd rows = tm.mass.rowwise().sum();
    Eigen::VectorXd cols = tm.mass.colwise().sum().transpose();
    ScenarioMeans out;
    out.scenario = scenario;
    out.placement.assign(k, std::vector<SubInterval>(h));
    for (std::size_t j = 0; j < h; ++j) {
        double lo = tm.child_boundaries[j], hi = tm.child_boundaries[j + 1];
        double q = cols(static_cast<Eigen::Index>(j));
        double cursor = lo;
        for (std::size_t i = 0; i < k; ++i) {
            if (scenario == Scenario::high_mobility) {
                out.placement[i][j] = {lo, hi};
                continue;
            }
            double share = q > 0.0 ? tm.mass(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / q : 0.0;
            double next = i + 1 == k ? hi : cursor + share * (hi - lo);
            out.placement[i][j] = {cursor, next};
            cursor = next;
        }
    }
    for (std::size_t i = 0; i < k; ++i) {
        double m = 0.0;
        for (std::size_t j = 0; j < h; ++j) {
            const auto& s = out.placement[i][j];
            m += tm.mass(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * 0.5 * (s.lo + s.hi);
        }
        out.means.push_back(m / rows(static_cast<Eigen::Index>(i)));
    }
    return out;
}

// Conditional child-rank CDF of parent bin i implied by a scenario.
[[nodiscard]] inline double implied_cdf(const TransitionMatrix& tm, const ScenarioMeans& sm, std::size_t i,
                                        double y) {
    double row = tm.mass.row(static_cast<Eigen::Index>(i)).sum(), out = 0.0;
    for (std::size_t j = 0; j < tm.children(); ++j) {
        const auto& s = sm.placement[i][j];
        double m = tm.mass(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        double frac = y >= s.hi ? 1.0 : (y <= s.lo ? 0.0 : (y - s.lo) / (s.hi - s.lo));
        out += m * frac;
    }
    return out / row;
}

struct DominanceViolation {
    std::size_t parent = 0;  // violation between this parent bin and the next
    double at = 0.0;         // child rank where the lower bin's CDF is below the higher bin's
    double excess = 0.0;
};

struct DominanceReport {
    std::vector<DominanceViolation> input;  // binned row-conditional CDFs
    std::vector<DominanceViolation> low;
    std::vector<DominanceViolation> high;
};

// First-order dominance of parent bin i+1 over bin i: its child-rank CDF lies
// weakly below. Violations are reported, never repaired.
[[nodiscard]] inline DominanceReport dominance_check(const TransitionMatrix& tm, double tol = 1e-12) {
    DominanceReport rep;
    auto k = tm.parents(), h = tm.children();
    Eigen::VectorXd rows = tm.mass.rowwise().sum();
    for (std::size_t i = 0; i + 1 < k; ++i) {
        double a = 0.0, b = 0.0;
        for (std::size_t j = 0; j + 1 < h; ++j) {
            a += tm.mass(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / rows(static_cast<Eigen::Index>(i));
            b += tm.mass(static_cast<Eigen::Index>(i + 1), static_cast<Eigen::Index>(j)) /
                 rows(static_cast<Eigen::Index>(i + 1));
            if (b > a + tol) rep.input.push_back({i, tm.child_boundaries[j + 1], b - a});
        }
    }
    for (auto sc : {Scenario::low_mobility, Scenario::high_mobility}) {
        auto sm = scenario_means(tm, sc);
        std::vector<double> pts(tm.child_boundaries);
        for (const auto& row : sm.placement)
            for (const auto& s : row) {
                pts.push_back(s.lo);
                pts.push_back(s.hi);
            }
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        auto& dst = sc == Scenario::low_mobility ? rep.low : rep.high;
        for (std::size_t i = 0; i + 1 < k; ++i)
            for (double y : pts) {
                double a = implied_cdf(tm, sm, i, y), b = implied_cdf(tm, sm, i + 1, y);
                if (b > a + tol) dst.push_back({i, y, b - a});
            }
    }
    return rep;
}

struct ScenarioBounds {
    Scenario scenario = Scenario::high_mobility;
    std::vector<double> means;
    double min_mse = 0.0;
    numeric::StatBounds bounds;
};

struct UnionBounds {
    StatisticSpec spec;
    double lower = 0.0, upper = 0.0;
    Scenario lower_from = Scenario::low_mobility, upper_from = Scenario::low_mobility;
    std::vector<ScenarioBounds> scenarios;
    std::vector<std::string> warnings;
};

[[nodiscard]] inline BinnedSample scenario_sample(const TransitionMatrix& tm, const ScenarioMeans& sm) {
    BinnedSample s;
    s.boundaries = tm.parent_boundaries;
    s.means = sm.means;
    s.direction = Direction::increasing;
    s.range = OutcomeRange{tm.child_lo(), tm.child_hi()};
    return s;
}

[[nodiscard]] inline UnionBounds double_censored_stat_bounds(const TransitionMatrix& tm, const DistributionSpec& dist,
                                                             const numeric::ConstraintSet& cs, const StatisticSpec& spec,
                                                             std::size_t grid_n = 100) {
    validate(tm, dist);
    UnionBounds out;
    out.spec = spec;
    auto dom = dominance_check(tm);
    if (!dom.input.empty())
        out.warnings.push_back(cefb::detail::concat(dom.input.size(),
                                                    " first-order dominance violation(s) between adjacent parent rows"));
    bool first = true;
    for (auto sc : {Scenario::low_mobility, Scenario::high_mobility}) {
        auto sm = scenario_means(tm, sc);
        auto sample = scenario_sample(tm, sm);
        // Scenario means that fall against the direction are left to the
        // stage-one fit, which reports the misfit as a warning.
        ValidateOptions opts;
        opts.allow_direction_violation = true;
        if (!cs.monotone) sample.direction = Direction::none;
        auto v = cefb::validate(sample, dist, opts);
        auto run = numeric::prepare(v, grid_n, cs);
        for (const auto& w : run.grid.warnings) out.warnings.push_back(w);
        for (const auto& w : run.stage1.warnings) out.warnings.push_back(std::string(to_string(sc)) + ": " + w);
        ScenarioBounds sb{sc, sm.means, run.stage1.min_mse, numeric::stage2_bound_stat(v, run.grid, cs, spec, run.stage1)};
        if (first || sb.bounds.lower < out.lower) {
            out.lower = sb.bounds.lower;
            out.lower_from = sc;
        }
        if (first || sb.bounds.upper > out.upper) {
            out.upper = sb.bounds.upper;
            out.upper_from = sc;
        }
        first = false;
        out.scenarios.push_back(std::move(sb));
    }
    return out;
}

// CSV layout: the first row holds a corner label followed by the H+1 child
// boundaries; each body row holds a parent lower boundary followed by H joint
// masses; a final row holds the last parent boundary alone.
[[nodiscard]] inline TransitionMatrix read_transition(std::istream& in, const std::string& source) {
    std::vector<std::pair<std::size_t, std::vector<std::string_view>>> lines;
    std::vector<std::string> storage;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (io::detail::trim(line).empty()) continue;
        storage.push_back(line);
        lines.emplace_back(lineno, std::vector<std::string_view>{});
    }
    for (std::size_t i = 0; i < storage.size(); ++i) lines[i].second = io::detail::split(storage[i]);
    auto where = [&](std::size_t ln) { return cefb::detail::concat(source, ":", ln, ": "); };
    if (lines.size() < 3) throw ValidationError(source + ": transition matrix needs a header, body rows and a final boundary row");

    TransitionMatrix tm;
    const auto& head = lines.front();
    for (std::size_t c = 1; c < head.second.size(); ++c)
        tm.child_boundaries.push_back(io::detail::parse_number(head.second[c], where(head.first)));
    if (tm.child_boundaries.size() < 2)
        throw ValidationError(where(head.first) + "header needs at least two child boundaries after the corner cell");
    std::size_t h = tm.child_boundaries.size() - 1;
    std::vector<std::vector<double>> body;
    for (std::size_t r = 1; r + 1 < lines.size(); ++r) {
        const auto& [ln, cells] = lines[r];
        if (cells.size() != h + 1)
            throw ValidationError(where(ln) + cefb::detail::concat("expected a parent boundary and ", h,
                                                                   " masses, found ", cells.size(), " cells"));
        tm.parent_boundaries.push_back(io::detail::parse_number(cells[0], where(ln)));
        std::vector<double> row;
        for (std::size_t c = 1; c <= h; ++c) row.push_back(io::detail::parse_number(cells[c], where(ln)));
        body.push_back(std::move(row));
    }
    const auto& last = lines.back();
    std::size_t filled = 0;
    for (auto c : last.second) filled += c.empty() ? 0 : 1;
    if (filled != 1 || last.second[0].empty())
        throw ValidationError(where(last.first) + "final row must hold only the last parent boundary");
    tm.parent_boundaries.push_back(io::detail::parse_number(last.second[0], where(last.first)));
    tm.mass.resize(static_cast<Eigen::Index>(body.size()), static_cast<Eigen::Index>(h));
    for (std::size_t i = 0; i < body.size(); ++i)
        for (std::size_t j = 0; j < h; ++j) tm.mass(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = body[i][j];
    return tm;
}

[[nodiscard]] inline TransitionMatrix read_transition_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return read_transition(in, path);
}

}  // namespace cefb::doublecensor
