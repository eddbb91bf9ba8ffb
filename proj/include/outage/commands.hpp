#pragma once

// Command drivers behind the outage-bench CLI: each returns a Table that can
// be written as CSV or JSON.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "outage/analytic.hpp"
#include "outage/mc.hpp"
#include "outage/scenario.hpp"

namespace outage::commands {

using Cell = std::variant<std::monostate, std::int64_t, double, std::string>;

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<Cell>> rows;
    bool ok = true;   // false if any row carries an error status
};

inline std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << csv_quote(t.header[i]);
    os << "\r\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            std::visit(
                [&](const auto& v) {
                    using V = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<V, std::int64_t>) os << v;
                    else if constexpr (std::is_same_v<V, double>) os << format_number(v);
                    else if constexpr (std::is_same_v<V, std::string>) os << csv_quote(v);
                },
                row[i]);
        }
        os << "\r\n";
    }
}

// Numbers are emitted with the same 12 significant digits as the CSV.
inline void write_json(std::ostream& os, const Table& t) {
    os << "[";
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        os << (r ? ",\n " : "\n ") << "{";
        for (std::size_t i = 0; i < t.header.size(); ++i) {
            os << (i ? ", " : "") << nlohmann::json(t.header[i]).dump() << ": ";
            std::visit(
                [&](const auto& v) {
                    using V = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<V, std::monostate>) os << "null";
                    else if constexpr (std::is_same_v<V, std::int64_t>) os << v;
                    else if constexpr (std::is_same_v<V, double>) os << format_number(v);
                    else os << nlohmann::json(v).dump();
                },
                t.rows[r][i]);
        }
        os << "}";
    }
    os << (t.rows.empty() ? "]\n" : "\n]\n");
}

inline std::string to_csv(const Table& t) {
    std::ostringstream os;
    write_csv(os, t);
    return os.str();
}

inline std::string error_status(const std::exception& e) { return std::string("error: ") + e.what(); }

/// Per-user analytic bounds at the scenario's rate.
inline Table cmd_analytic(const scenario::Scenario& s, const analytic::AnalyticOptions& opts = {}) {
    s.system.validate();
    Table t;
    t.header = {"user", "p_select", "loose_bound", "tight_bound", "p_out_1", "p_out_2", "status"};
    for (std::size_t k = 0; k < s.system.users(); ++k) {
        std::vector<Cell> row{static_cast<std::int64_t>(k + 1)};
        try {
            const auto r = analytic::evaluate_bounds(s.system, k, opts);
            row.insert(row.end(), {r.p_select, r.loose, r.tight, r.p_out_1, r.p_out_2, std::string("ok")});
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            row.insert(row.end(), {Cell{}, Cell{}, Cell{}, Cell{}, Cell{}, error_status(e)});
            t.ok = false;
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Per-user Monte Carlo estimates. Conditional columns are left empty where
/// fewer than mc::kMinConditionalSupport trials support them.
inline Table cmd_simulate(const scenario::Scenario& s) {
    const auto report = mc::estimate_outage(s.system, s.mc);
    const int n = s.system.slots;
    Table t;
    t.header = {"user", "p_out", "se", "p_select", "p_select_se"};
    for (int i = 0; i <= n; ++i) t.header.push_back("slots_" + std::to_string(i));
    for (int i = 0; i <= n; ++i) t.header.push_back("cond_out_" + std::to_string(i));
    t.header.push_back("status");
    for (std::size_t k = 0; k < s.system.users(); ++k) {
        std::vector<Cell> row{static_cast<std::int64_t>(k + 1), report.outage(k), report.standard_error(k),
                              report.selection(k), report.selection_standard_error(k)};
        for (auto c : report.users[k].histogram) row.emplace_back(static_cast<std::int64_t>(c));
        for (int i = 0; i <= n; ++i) {
            const auto c = report.conditional(k, i);
            row.push_back(c.low_support ? Cell{} : Cell{c.estimate});
        }
        row.emplace_back(std::string("ok"));
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// Parses "start:stop:step" (inclusive) or a comma-separated list, and
/// requires a nonempty, strictly increasing result.
inline std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> grid;
    const auto to_double = [&](const std::string& s) {
        std::size_t pos = 0;
        double v;
        try {
            v = std::stod(s, &pos);
        } catch (const std::exception&) {
            throw ConfigError("grid: cannot parse '" + s + "'");
        }
        if (pos != s.size()) throw ConfigError("grid: cannot parse '" + s + "'");
        return v;
    };
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw ConfigError("grid: range form is start:stop:step");
        const double start = to_double(parts[0]), stop = to_double(parts[1]), step = to_double(parts[2]);
        if (!(step > 0.0)) throw ConfigError("grid: step must be positive");
        const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9));
        for (long i = 0; i <= count; ++i) grid.push_back(start + static_cast<double>(i) * step);
    } else {
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ',');)
            if (!p.empty()) grid.push_back(to_double(p));
    }
    if (grid.empty()) throw ConfigError("grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw ConfigError("grid must be strictly increasing");
    return grid;
}

/// Parses a 1-based user list such as "8-12" or "1,3,5" into 0-based indices.
inline std::vector<std::size_t> parse_users(const std::string& spec, std::size_t users) {
    std::vector<std::size_t> out;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ',');) {
        if (p.empty()) continue;
        long lo, hi;
        try {
            const auto dash = p.find('-');
            lo = std::stol(p.substr(0, dash));
            hi = dash == std::string::npos ? lo : std::stol(p.substr(dash + 1));
        } catch (const std::exception&) {
            throw ConfigError("users: cannot parse '" + p + "'");
        }
        if (lo < 1 || hi < lo || static_cast<std::size_t>(hi) > users)
            throw ConfigError("users: '" + p + "' is outside 1.." + std::to_string(users));
        for (long u = lo; u <= hi; ++u) out.push_back(static_cast<std::size_t>(u - 1));
    }
    if (out.empty()) throw ConfigError("users: empty selection");
    return out;
}

namespace detail {

inline Table sweep_table() {
    Table t;
    t.header = {"parameter", "value", "user", "loose", "tight", "mc_estimate", "mc_se", "status"};
    return t;
}

inline void append_sweep_rows(Table& t, const char* parameter, double value,
                              const analytic::BoundEvaluator& bounds, double rate, const mc::OutageReport& mc) {
    for (std::size_t k = 0; k < bounds.users(); ++k) {
        std::vector<Cell> row{std::string(parameter), value, static_cast<std::int64_t>(k + 1)};
        try {
            const auto b = bounds.evaluate(k, rate);
            row.insert(row.end(), {b.loose, b.tight});
            row.insert(row.end(), {mc.outage(k), mc.standard_error(k), std::string("ok")});
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            row.insert(row.end(), {Cell{}, Cell{}, mc.outage(k), mc.standard_error(k), error_status(e)});
            t.ok = false;
        }
        t.rows.push_back(std::move(row));
    }
}

} // namespace detail

/// Bounds and Monte Carlo estimates over a grid of required rates. One set
/// of channel draws serves every grid point.
inline Table cmd_sweep_rate(const scenario::Scenario& s, const std::vector<double>& rates,
                            const analytic::AnalyticOptions& opts = {}) {
    if (rates.empty()) throw ConfigError("grid is empty");
    const analytic::BoundEvaluator bounds(s.system, opts);
    const auto reports = mc::estimate_outage_rates(s.system, s.mc, rates);
    Table t = detail::sweep_table();
    for (std::size_t r = 0; r < rates.size(); ++r)
        detail::append_sweep_rows(t, "rate", rates[r], bounds, rates[r], reports[r]);
    return t;
}

/// Bounds and Monte Carlo estimates as the CSIT error variance of `users` is
/// swept. Every grid point reuses the scenario seed.
inline Table cmd_sweep_error(const scenario::Scenario& s, const std::vector<double>& xi2_grid,
                             const std::vector<std::size_t>& users, const analytic::AnalyticOptions& opts = {}) {
    if (xi2_grid.empty()) throw ConfigError("grid is empty");
    Table t = detail::sweep_table();
    for (double xi2 : xi2_grid) {
        auto system = s.system;
        for (auto k : users) system.profiles.at(k).xi2 = xi2;
        system.validate();
        const analytic::BoundEvaluator bounds(system, opts);
        const auto report = mc::estimate_outage(system, s.mc);
        detail::append_sweep_rows(t, "xi2", xi2, bounds, system.rate, report);
    }
    return t;
}

} // namespace outage::commands
