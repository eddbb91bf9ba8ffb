#pragma once

// JSON scenario files and the built-in presets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "outage/analytic.hpp"
#include "outage/errors.hpp"
#include "outage/mc.hpp"
#include "outage/sched.hpp"

namespace outage::scenario {

struct Scenario {
    analytic::SystemConfig system;
    mc::McConfig mc;
};

inline double snr_db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

namespace detail {

template <class T>
T read(const nlohmann::json& j, const char* key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("scenario field '") + key + "': " + e.what());
    }
}

} // namespace detail

/// Parses a scenario object. Exactly one of "snr_db" and "rho" must be
/// present, as must "users"; other fields take defaults. Unknown keys are
/// rejected.
inline Scenario parse_scenario(const nlohmann::json& j) {
    static const std::vector<std::string> known = {"snr_db", "rho",  "rate", "slots",     "users",
                                                   "scheduler", "trials", "seed", "pf_epsilon"};
    if (!j.is_object()) throw ConfigError("scenario must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (std::find(known.begin(), known.end(), key) == known.end())
            throw ConfigError("unknown scenario field '" + key + "'");

    Scenario s;
    const bool has_db = j.contains("snr_db");
    const bool has_rho = j.contains("rho");
    if (has_db == has_rho) throw ConfigError("scenario needs exactly one of 'snr_db' and 'rho'");
    s.system.rho = has_db ? snr_db_to_linear(detail::read<double>(j, "snr_db")) : detail::read<double>(j, "rho");
    if (j.contains("rate")) s.system.rate = detail::read<double>(j, "rate");
    if (j.contains("slots")) s.system.slots = detail::read<int>(j, "slots");

    if (!j.contains("users") || !j.at("users").is_array()) throw ConfigError("scenario needs a 'users' array");
    for (const auto& u : j.at("users")) {
        if (!u.is_object()) throw ConfigError("each user must be an object with sigma2 and xi2");
        s.system.profiles.push_back({detail::read<double>(u, "sigma2"),
                                     u.contains("xi2") ? detail::read<double>(u, "xi2") : 0.0});
    }

    if (j.contains("scheduler")) s.mc.policy = sched::parse_policy(detail::read<std::string>(j, "scheduler"));
    if (j.contains("trials")) s.mc.trials = detail::read<std::uint64_t>(j, "trials");
    if (j.contains("seed")) s.mc.seed = detail::read<std::uint64_t>(j, "seed");
    if (j.contains("pf_epsilon")) s.mc.pf_epsilon = detail::read<double>(j, "pf_epsilon");

    s.system.validate();
    s.mc.validate();
    return s;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("scenario file '" + path + "': " + e.what());
    }
    return parse_scenario(j);
}

inline nlohmann::json to_json(const Scenario& s) {
    nlohmann::json users = nlohmann::json::array();
    for (const auto& u : s.system.profiles) users.push_back({{"sigma2", u.sigma2}, {"xi2", u.xi2}});
    return {{"rho", s.system.rho},
            {"rate", s.system.rate},
            {"slots", s.system.slots},
            {"users", users},
            {"scheduler", std::string(sched::to_string(s.mc.policy))},
            {"trials", s.mc.trials},
            {"seed", s.mc.seed},
            {"pf_epsilon", s.mc.pf_epsilon}};
}

/// Twelve non-identical users: sigma2_j = 0.9 + 0.1 j, xi2_j = 0.025 (j - 1),
/// so only user 1 has perfect CSIT. N = 5 slots at 10 dB.
inline Scenario heterogeneous_preset() {
    Scenario s;
    for (int j = 1; j <= 12; ++j) s.system.profiles.push_back({0.9 + 0.1 * j, 0.025 * (j - 1)});
    s.system.rho = snr_db_to_linear(10.0);
    s.system.rate = 1.0;
    s.system.slots = 5;
    return s;
}

/// Twelve users with sigma2 = 1: users 1-7 have perfect CSIT, users 8-12
/// share the error variance `xi2`.
inline Scenario partial_csit_preset(double xi2 = 0.1) {
    Scenario s;
    for (int j = 1; j <= 12; ++j) s.system.profiles.push_back({1.0, j <= 7 ? 0.0 : xi2});
    s.system.rho = snr_db_to_linear(10.0);
    s.system.rate = 1.0;
    s.system.slots = 5;
    s.system.validate();
    return s;
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names = {"heterogeneous", "partial-csit"};
    return names;
}

inline Scenario preset(const std::string& name) {
    if (name == "heterogeneous") return heterogeneous_preset();
    if (name == "partial-csit") return partial_csit_preset();
    throw ConfigError("unknown preset '" + name + "' (expected heterogeneous or partial-csit)");
}

} // namespace outage::scenario
