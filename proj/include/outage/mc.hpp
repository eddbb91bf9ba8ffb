#pragma once

// Seeded, parallel Monte Carlo estimator of the delay-constrained outage.
//
// Trial t draws N slots from RngStream(seed, t). Trials are grouped into
// fixed-size chunks that workers claim in any order, and every reported
// quantity is an integer count, so results do not depend on the number of
// workers.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "outage/analytic.hpp"
#include "outage/channel.hpp"
#include "outage/rng.hpp"
#include "outage/sched.hpp"

namespace outage::mc {

using analytic::SystemConfig;
using sched::Policy;

struct McConfig {
    std::uint64_t trials = 1'000'000;
    std::uint64_t seed = 1;
    Policy policy = Policy::max;
    double pf_epsilon = 1e-6;
    /// 0 selects the hardware concurrency, capped by OUTAGE_BENCH_THREADS.
    unsigned workers = 0;

    void validate() const {
        if (trials < 1) throw ConfigError("trials must be at least 1");
        if (!(pf_epsilon > 0.0)) throw ConfigError("pf_epsilon must be positive");
    }
};

/// Number of worker threads to use for `requested` (0 = automatic). The
/// OUTAGE_BENCH_THREADS environment variable caps the result.
inline unsigned resolve_workers(unsigned requested) {
    unsigned n = requested != 0 ? requested : std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("OUTAGE_BENCH_THREADS"); env != nullptr && *env != '\0') {
        char* end = nullptr;
        const long cap = std::strtol(env, &end, 10);
        if (end != env && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return std::max(1u, n);
}

/// Per-user tallies for one required rate.
struct UserOutage {
    std::uint64_t outages = 0;
    std::uint64_t selections = 0;                    // slots in which the user was scheduled
    std::vector<std::uint64_t> histogram;            // trials by |S_k|, length N+1
    std::vector<std::uint64_t> conditional_outages;  // outages by |S_k|, length N+1
};

struct ConditionalEstimate {
    double estimate = 0.0;
    double standard_error = 0.0;
    std::uint64_t count = 0;
    bool low_support = true;   // fewer than kMinConditionalSupport events
};

inline constexpr std::uint64_t kMinConditionalSupport = 100;

struct OutageReport {
    std::uint64_t trials = 0;
    int slots = 0;
    double rate = 0.0;
    std::vector<UserOutage> users;

    double outage(std::size_t k) const {
        return static_cast<double>(users.at(k).outages) / static_cast<double>(trials);
    }
    double standard_error(std::size_t k) const {
        const double p = outage(k);
        return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
    }
    double selection(std::size_t k) const {
        return static_cast<double>(users.at(k).selections) / (static_cast<double>(trials) * slots);
    }
    double selection_standard_error(std::size_t k) const {
        const double p = selection(k);
        return std::sqrt(p * (1.0 - p) / (static_cast<double>(trials) * slots));
    }
    ConditionalEstimate conditional(std::size_t k, int count) const {
        const auto& u = users.at(k);
        const auto i = static_cast<std::size_t>(count);
        if (count < 0 || i >= u.histogram.size()) throw DomainError("conditional: slot count out of range");
        ConditionalEstimate c;
        c.count = u.histogram[i];
        c.low_support = c.count < kMinConditionalSupport;
        if (c.count > 0) {
            c.estimate = static_cast<double>(u.conditional_outages[i]) / static_cast<double>(c.count);
            c.standard_error = std::sqrt(c.estimate * (1.0 - c.estimate) / static_cast<double>(c.count));
        }
        return c;
    }
};

namespace detail {

struct TrialOutcome {
    std::vector<double> rate_sum;
    std::vector<int> slots_won;
};

class TrialRunner {
public:
    TrialRunner(const SystemConfig& system, const McConfig& mc)
        : model_(system.profiles), rho_(system.rho), slots_(system.slots), mc_(mc),
          pf_(system.users(), mc.pf_epsilon) {
        draw_.gamma_hat.resize(system.users());
        draw_.gamma.resize(system.users());
        est_rates_.resize(system.users());
        outcome_.rate_sum.resize(system.users());
        outcome_.slots_won.resize(system.users());
    }

    const TrialOutcome& run(std::uint64_t trial) {
        RngStream rng(mc_.seed, trial);
        std::fill(outcome_.rate_sum.begin(), outcome_.rate_sum.end(), 0.0);
        std::fill(outcome_.slots_won.begin(), outcome_.slots_won.end(), 0);
        pf_.reset();
        for (int s = 0; s < slots_; ++s) {
            model_.draw(rng, draw_);
            std::size_t k = 0;
            switch (mc_.policy) {
            case Policy::max: k = sched::select_max(draw_.gamma_hat); break;
            case Policy::random: k = sched::select_random(model_.users(), rng); break;
            case Policy::proportional_fair:
                for (std::size_t j = 0; j < est_rates_.size(); ++j)
                    est_rates_[j] = channel::achievable_rate(draw_.gamma_hat[j], rho_);
                k = sched::select_pf(est_rates_, pf_);
                break;
            }
            const double achieved = channel::achievable_rate(draw_.gamma[k], rho_);
            outcome_.rate_sum[k] += achieved;
            ++outcome_.slots_won[k];
            if (mc_.policy == Policy::proportional_fair) pf_.record(k, achieved);
        }
        return outcome_;
    }

private:
    channel::ChannelModel model_;
    double rho_;
    int slots_;
    McConfig mc_;
    sched::PfState pf_;
    channel::SlotDraw draw_;
    std::vector<double> est_rates_;
    TrialOutcome outcome_;
};

inline constexpr std::uint64_t kChunkTrials = 4096;

} // namespace detail

/// Runs one set of trials and tallies outage for every rate in `rates`
/// using the same channel draws (common random numbers). Rates must be
/// nonnegative.
inline std::vector<OutageReport> estimate_outage_rates(const SystemConfig& system, const McConfig& mc,
                                                       std::span<const double> rates) {
    SystemConfig checked = system;
    checked.rate = 0.0;
    checked.validate();
    mc.validate();
    for (double r : rates)
        if (!std::isfinite(r) || r < 0.0) throw ConfigError("rate must be nonnegative and finite");

    const std::size_t users = system.users();
    const auto slots = static_cast<std::size_t>(system.slots);
    const std::size_t n_rates = rates.size();
    std::vector<double> thresholds;
    for (double r : rates) thresholds.push_back(r * system.slots);

    // counts[r][k][i]: outages; histogram[k][i]; selections[k]
    struct Tally {
        std::vector<std::uint64_t> outages;        // [r][k][i]
        std::vector<std::uint64_t> histogram;      // [k][i]
        std::vector<std::uint64_t> selections;     // [k]
    };
    const auto make_tally = [&] {
        return Tally{std::vector<std::uint64_t>(n_rates * users * (slots + 1), 0),
                     std::vector<std::uint64_t>(users * (slots + 1), 0), std::vector<std::uint64_t>(users, 0)};
    };

    const std::uint64_t chunks = (mc.trials + detail::kChunkTrials - 1) / detail::kChunkTrials;
    const unsigned workers = static_cast<unsigned>(
        std::min<std::uint64_t>(resolve_workers(mc.workers), chunks));
    std::vector<Tally> tallies(workers, make_tally());
    std::atomic<std::uint64_t> next_chunk{0};

    const auto work = [&](unsigned w) {
        detail::TrialRunner runner(system, mc);
        Tally& t = tallies[w];
        for (;;) {
            const std::uint64_t c = next_chunk.fetch_add(1);
            if (c >= chunks) break;
            const std::uint64_t end = std::min(mc.trials, (c + 1) * detail::kChunkTrials);
            for (std::uint64_t trial = c * detail::kChunkTrials; trial < end; ++trial) {
                const auto& out = runner.run(trial);
                for (std::size_t k = 0; k < users; ++k) {
                    const auto won = static_cast<std::size_t>(out.slots_won[k]);
                    ++t.histogram[k * (slots + 1) + won];
                    t.selections[k] += won;
                    for (std::size_t r = 0; r < n_rates; ++r)
                        if (out.rate_sum[k] < thresholds[r]) ++t.outages[(r * users + k) * (slots + 1) + won];
                }
            }
        }
    };

    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    }

    Tally total = make_tally();
    for (const auto& t : tallies) {
        for (std::size_t i = 0; i < total.outages.size(); ++i) total.outages[i] += t.outages[i];
        for (std::size_t i = 0; i < total.histogram.size(); ++i) total.histogram[i] += t.histogram[i];
        for (std::size_t i = 0; i < users; ++i) total.selections[i] += t.selections[i];
    }

    std::vector<OutageReport> reports(n_rates);
    for (std::size_t r = 0; r < n_rates; ++r) {
        auto& rep = reports[r];
        rep.trials = mc.trials;
        rep.slots = system.slots;
        rep.rate = rates[r];
        rep.users.resize(users);
        for (std::size_t k = 0; k < users; ++k) {
            auto& u = rep.users[k];
            u.selections = total.selections[k];
            u.histogram.assign(total.histogram.begin() + static_cast<std::ptrdiff_t>(k * (slots + 1)),
                               total.histogram.begin() + static_cast<std::ptrdiff_t>((k + 1) * (slots + 1)));
            const auto base = static_cast<std::ptrdiff_t>((r * users + k) * (slots + 1));
            u.conditional_outages.assign(total.outages.begin() + base,
                                         total.outages.begin() + base + static_cast<std::ptrdiff_t>(slots + 1));
            for (auto c : u.conditional_outages) u.outages += c;
        }
    }
    return reports;
}

/// Outage estimates at the configured rate.
inline OutageReport estimate_outage(const SystemConfig& system, const McConfig& mc) {
    system.validate();
    const double rate = system.rate;
    return estimate_outage_rates(system, mc, std::span<const double>(&rate, 1)).front();
}

/// Outage frequency of user k among trials in which it was scheduled in
/// exactly `count` slots.
inline ConditionalEstimate estimate_conditional(const SystemConfig& system, const McConfig& mc,
                                                std::size_t k, int count) {
    if (k >= system.users()) throw DomainError("estimate_conditional: user index out of range");
    if (count < 0 || count > system.slots) throw DomainError("estimate_conditional: slot count out of range");
    return estimate_outage(system, mc).conditional(k, count);
}

} // namespace outage::mc
