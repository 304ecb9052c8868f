#pragma once

// Locale-independent CSV reading and number formatting. Every parse error
// carries the source name and 1-based line number.

#include <charconv>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cefbounds/calibrate.hpp"
#include "cefbounds/core.hpp"

namespace cefb::io {

// 12 significant digits, '.' decimal point regardless of locale.
[[nodiscard]] inline std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

struct CsvRow {
    std::size_t line = 0;
    std::vector<double> values;
};

struct CsvTable {
    std::string source;
    std::vector<std::string> header;
    std::vector<CsvRow> rows;

    [[nodiscard]] std::string where(std::size_t line) const {
        return detail::concat(source, ":", line, ": ");
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_number(std::string_view tok, const std::string& where) {
    double v = 0.0;
    const char* first = tok.data();
    if (!tok.empty() && tok.front() == '+') ++first;
    auto res = std::from_chars(first, tok.data() + tok.size(), v);
    if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        throw ValidationError(where + "cannot parse '" + std::string(tok) + "' as a number");
    return v;
}

}  // namespace detail

// Reads a numeric CSV whose header must be one of `accepted` (each a list of
// column names). Returns the rows with the matched header.
[[nodiscard]] inline CsvTable read_csv(std::istream& in, const std::string& source,
                                       const std::vector<std::vector<std::string>>& accepted) {
    CsvTable t;
    t.source = source;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view(line);
        if (lineno == 1 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
        if (detail::trim(view).empty()) continue;
        auto cells = detail::split(view);
        if (!have_header) {
            for (auto c : cells) t.header.emplace_back(c);
            bool ok = false;
            for (const auto& h : accepted) ok = ok || h == t.header;
            if (!ok) {
                std::string want;
                for (std::size_t i = 0; i < accepted.size(); ++i) {
                    if (i) want += " or ";
                    for (std::size_t j = 0; j < accepted[i].size(); ++j)
                        want += (j ? "," : "") + accepted[i][j];
                }
                throw ValidationError(t.where(lineno) + "unexpected header '" + std::string(detail::trim(view)) +
                                      "', expected " + want);
            }
            have_header = true;
            continue;
        }
        if (cells.size() != t.header.size())
            throw ValidationError(t.where(lineno) + cefb::detail::concat("expected ", t.header.size(),
                                                                      " columns, found ", cells.size()));
        CsvRow row{lineno, {}};
        for (auto c : cells) row.values.push_back(detail::parse_number(c, t.where(lineno)));
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw ValidationError(source + ": file is empty");
    if (t.rows.empty()) throw ValidationError(source + ": no data rows");
    return t;
}

[[nodiscard]] inline CsvTable read_csv_file(const std::string& path,
                                            const std::vector<std::vector<std::string>>& accepted) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return read_csv(in, path, accepted);
}

// Boundaries from consecutive bin_lo,bin_hi columns; bins must tile the
// support without gaps.
[[nodiscard]] inline std::vector<double> tiled_boundaries(const CsvTable& t) {
    std::vector<double> bd;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        double lo = t.rows[i].values[0], hi = t.rows[i].values[1];
        if (!(hi > lo))
            throw ValidationError(t.where(t.rows[i].line) + "bin_hi must exceed bin_lo");
        if (i == 0) bd.push_back(lo);
        else if (lo != bd.back())
            throw ValidationError(t.where(t.rows[i].line) +
                                  cefb::detail::concat("bin_lo ", lo, " does not continue the previous bin_hi ",
                                                       bd.back()));
        bd.push_back(hi);
    }
    return bd;
}

// Binned sample: bin_lo,bin_hi,mean[,count]. Counts are accepted and ignored.
[[nodiscard]] inline BinnedSample read_sample(std::istream& in, const std::string& source,
                                              OutcomeRange range, Direction direction) {
    auto t = read_csv(in, source, {{"bin_lo", "bin_hi", "mean"}, {"bin_lo", "bin_hi", "mean", "count"}});
    BinnedSample s;
    s.boundaries = tiled_boundaries(t);
    for (const auto& r : t.rows) s.means.push_back(r.values[2]);
    s.range = range;
    s.direction = direction;
    return s;
}

[[nodiscard]] inline BinnedSample read_sample_file(const std::string& path, OutcomeRange range,
                                                   Direction direction) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return read_sample(in, path, range, direction);
}

[[nodiscard]] inline DistributionSpec read_distribution(std::istream& in, const std::string& source) {
    auto t = read_csv(in, source, {{"x", "cdf"}});
    std::vector<double> xs, fs;
    for (const auto& r : t.rows) {
        xs.push_back(r.values[0]);
        fs.push_back(r.values[1]);
    }
    try {
        return DistributionSpec::gridded(std::move(xs), std::move(fs));
    } catch (const ValidationError& e) {
        throw ValidationError(source + ": " + e.what());
    }
}

[[nodiscard]] inline DistributionSpec read_distribution_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return read_distribution(in, path);
}

[[nodiscard]] inline calibrate::ReferenceCurve read_curve(std::istream& in, const std::string& source) {
    auto t = read_csv(in, source, {{"x", "y"}});
    calibrate::ReferenceCurve c;
    for (const auto& r : t.rows) {
        c.x.push_back(r.values[0]);
        c.y.push_back(r.values[1]);
    }
    return c;
}

[[nodiscard]] inline calibrate::ReferenceCurve read_curve_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    return read_curve(in, path);
}

inline void write_envelope(std::ostream& os, const CEFEnvelope& env) {
    os << "x,lower,upper\n";
    for (std::size_t i = 0; i < env.grid.size(); ++i)
        os << format_number(env.grid[i]) << ',' << format_number(env.lower[i]) << ','
           << format_number(env.upper[i]) << '\n';
}

[[nodiscard]] inline CEFEnvelope read_envelope(std::istream& in, const std::string& source) {
    auto t = read_csv(in, source, {{"x", "lower", "upper"}});
    CEFEnvelope env;
    for (const auto& r : t.rows) {
        env.grid.push_back(r.values[0]);
        env.lower.push_back(r.values[1]);
        env.upper.push_back(r.values[2]);
    }
    return env;
}

inline void write_grid_cef(std::ostream& os, const std::vector<double>& x, const GridCEF& cef) {
    os << "x,value\n";
    for (std::size_t i = 0; i < cef.values.size(); ++i)
        os << format_number(x[i]) << ',' << format_number(cef.values[i]) << '\n';
}

// "point:x", "mu:a,b", "slope" or "linear:x".
[[nodiscard]] inline StatisticSpec parse_statistic(const std::string& text) {
    auto bad = [&] {
        return ValidationError("cannot parse statistic '" + text +
                               "'; expected point:x, mu:a,b, slope or linear:x");
    };
    auto num = [&](std::string_view tok) {
        try {
            return detail::parse_number(detail::trim(tok), "");
        } catch (const ValidationError&) {
            throw bad();
        }
    };
    std::string_view s(text);
    if (s == "slope") return StatisticSpec::slope();
    auto colon = s.find(':');
    if (colon == std::string_view::npos) throw bad();
    auto kind = s.substr(0, colon);
    auto args = detail::split(s.substr(colon + 1));
    if (kind == "point" && args.size() == 1) return StatisticSpec::point(num(args[0]));
    if (kind == "linear" && args.size() == 1) return StatisticSpec::linear_value(num(args[0]));
    if (kind == "mu" && args.size() == 2) return StatisticSpec::interval_mean(num(args[0]), num(args[1]));
    throw bad();
}

// A number or "inf".
[[nodiscard]] inline double parse_limit(const std::string& text) {
    if (text == "inf" || text == "Inf" || text == "infinity") return kInf;
    return detail::parse_number(detail::trim(text), "curvature: ");
}

}  // namespace cefb::io
