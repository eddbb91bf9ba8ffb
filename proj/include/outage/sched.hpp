#pragma once

// Per-slot user selection policies.

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "outage/errors.hpp"
#include "outage/rng.hpp"

namespace outage::sched {

enum class Policy { max, random, proportional_fair };

inline std::string_view to_string(Policy p) {
    switch (p) {
    case Policy::max: return "max";
    case Policy::random: return "random";
    case Policy::proportional_fair: return "pf";
    }
    return "?";
}

inline Policy parse_policy(std::string_view name) {
    if (name == "max") return Policy::max;
    if (name == "random") return Policy::random;
    if (name == "pf" || name == "proportional_fair") return Policy::proportional_fair;
    throw ConfigError("unknown scheduler '" + std::string(name) + "' (expected max, random or pf)");
}

/// Index of the largest estimated power; ties go to the lowest index.
inline std::size_t select_max(std::span<const double> gamma_hats) {
    if (gamma_hats.empty()) throw DomainError("select_max: empty list");
    std::size_t best = 0;
    for (std::size_t j = 1; j < gamma_hats.size(); ++j)
        if (gamma_hats[j] > gamma_hats[best]) best = j;
    return best;
}

inline std::size_t select_random(std::size_t users, RngStream& rng) {
    if (users == 0) throw DomainError("select_random: no users");
    if (users == 1) return 0;
    return static_cast<std::size_t>(rng.below(users));
}

/// Proportional-fair bookkeeping for one delay window.
struct PfState {
    std::vector<double> cumulative;   // achieved true rate summed over past slots
    double epsilon = 1e-6;

    PfState() = default;
    explicit PfState(std::size_t users, double eps = 1e-6) : cumulative(users, 0.0), epsilon(eps) {
        if (!(eps > 0.0)) throw DomainError("PfState: epsilon must be positive");
    }

    void reset() { std::fill(cumulative.begin(), cumulative.end(), 0.0); }
    void record(std::size_t user, double achieved_rate) { cumulative.at(user) += achieved_rate; }
};

/// argmax_k est_rates[k] / (epsilon + cumulative[k]); ties to the lowest index.
inline std::size_t select_pf(std::span<const double> est_rates, const PfState& state) {
    if (est_rates.empty()) throw DomainError("select_pf: empty list");
    if (est_rates.size() != state.cumulative.size())
        throw DomainError("select_pf: rate list and state sizes differ");
    std::size_t best = 0;
    double best_metric = est_rates[0] / (state.epsilon + state.cumulative[0]);
    for (std::size_t j = 1; j < est_rates.size(); ++j) {
        const double metric = est_rates[j] / (state.epsilon + state.cumulative[j]);
        if (metric > best_metric) {
            best = j;
            best_metric = metric;
        }
    }
    return best;
}

} // namespace outage::sched
