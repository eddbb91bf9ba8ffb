#pragma once

// Acceptance criteria for the analytic bounds and the simulator. Each check
// returns a CriterionResult; tolerances are fixed here, trial counts come
// from a Budget so that `outage-bench validate` can run a reduced version.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "outage/analytic.hpp"
#include "outage/commands.hpp"
#include "outage/mc.hpp"
#include "outage/numerics.hpp"
#include "outage/scenario.hpp"
#include "outage/validation/oracles.hpp"

namespace outage::validation {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct Budget {
    std::uint64_t preset_trials = 1'000'000;     // bound validity, tightness, selection law, schedulers
    std::uint64_t conditional_events = 10'000;   // single-slot conditional oracle
    std::size_t pair_samples = 1'000'000;        // two-slot pair oracle
    std::uint64_t sweep_trials = 200'000;        // error-variance sweep, per grid point
    std::uint64_t repro_trials = 50'000;
    std::uint64_t seed = 20160601;
};

inline Budget full_budget() { return {}; }

inline Budget quick_budget() {
    Budget b;
    b.preset_trials = 100'000;
    b.conditional_events = 2'000;
    b.pair_samples = 100'000;
    b.sweep_trials = 50'000;
    b.repro_trials = 10'000;
    return b;
}

// Tolerances.
inline constexpr double kIdentityTol = 1e-10;
inline constexpr double kNormalizationTol = 1e-9;
inline constexpr double kEqualCompetitorTol = 1e-10;
inline constexpr double kSelectionSumTol = 1e-9;
inline constexpr double kZ = 3.0;                 // standard errors for agreement checks
inline constexpr double kTightnessZ = 5.0;
inline constexpr double kTightnessSlack = 0.01;
inline constexpr double kOrderingSlack = 1e-12;   // tight - loose >= -kOrderingSlack
inline constexpr double kPlateauOutage = 1e-3;
inline constexpr double kGofLevel = 0.01;         // family-wise over all users

namespace detail {

inline std::string fmt(double v) { return commands::format_number(v); }

template <class F>
CriterionResult timed(int id, std::string title, F&& body) {
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r{id, std::move(title), false, "", 0.0};
    try {
        body(r);
    } catch (const std::exception& e) {
        r.passed = false;
        r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

// Threshold t with law.cdf(t) ~ target, by bisection on a log scale.
inline double quantile(const analytic::SelectedPowerLaw& law, double target) {
    double lo = 1e-12, hi = 1.0;
    while (law.cdf(hi) < target) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = std::sqrt(lo * hi);
        (law.cdf(mid) < target ? lo : hi) = mid;
    }
    return hi;
}

inline std::vector<double> rate_grid(double start, double stop, double step) {
    std::vector<double> g;
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) g.push_back(start + static_cast<double>(i) * step);
    return g;
}

} // namespace detail

/// Runs the criteria. The 12-user preset simulation is shared between the
/// criteria that need it.
class AcceptanceSuite {
public:
    explicit AcceptanceSuite(Budget budget = full_budget()) : budget_(budget) {}

    const Budget& budget() const noexcept { return budget_; }

    // 1. Marcum Q / noncentral chi-squared identity and normalization.
    CriterionResult special_functions() const {
        return detail::timed(1, "special-function identities", [&](CriterionResult& r) {
            const double grid[] = {0.0, 0.5, 1.0, 2.0, 5.0};
            double worst_identity = 0.0;
            for (double a : grid)
                for (double b : grid)
                    // Tail by quadrature of the Bessel-form density, independent of the
                    // Poisson series behind marcum_q1.
                    worst_identity = std::max(worst_identity,
                                              std::abs(numerics::marcum_q1(a, b) - ncx2_tail_by_quadrature(b * b, a * a)));
            double worst_norm = 0.0;
            for (double lambda : {0.0, 1.0, 10.0, 100.0}) {
                const double mass =
                    numerics::integrate([lambda](double z) { return numerics::ncx2_pdf(z, lambda); }, 0.0, INFINITY)
                        .value;
                worst_norm = std::max(worst_norm, std::abs(mass - 1.0));
            }
            r.passed = worst_identity < kIdentityTol && worst_norm < kNormalizationTol;
            r.detail = "max |Q1 - density tail| = " + detail::fmt(worst_identity) + ", max |mass - 1| = " + detail::fmt(worst_norm);
        });
    }

    // 2. Single-slot conditional outage against the conditional simulator.
    CriterionResult single_slot_law() const {
        return detail::timed(2, "single-slot conditional outage vs conditional MC", [&](CriterionResult& r) {
            RngStream rng(budget_.seed, 2);
            std::ostringstream d;
            r.passed = true;
            for (int users : {2, 3, 5, 8, 12}) {
                analytic::SystemConfig sys;
                for (int j = 0; j < users; ++j) {
                    const double sigma2 = 0.5 + 1.5 * rng.uniform();
                    sys.profiles.push_back({sigma2, sigma2 * rng.uniform()});
                }
                sys.rho = 10.0;
                sys.slots = 1;
                std::size_t k = 0;
                for (std::size_t j = 1; j < sys.profiles.size(); ++j)
                    if (sys.profiles[j].sigma_hat2() > sys.profiles[k].sigma_hat2()) k = j;
                const analytic::SelectedPowerLaw law(k, sys.profiles);
                const double t = detail::quantile(law, 0.3);
                sys.rate = std::log2(1.0 + sys.rho * t);
                const double analytic_value = analytic::cond_rate_outage(law, sys.rho, sys.rate);

                mc::McConfig mcfg;
                mcfg.seed = budget_.seed + static_cast<std::uint64_t>(users);
                mcfg.trials = static_cast<std::uint64_t>(
                    std::ceil(1.15 * static_cast<double>(budget_.conditional_events) / law.selection_probability()));
                auto c = mc::estimate_conditional(sys, mcfg, k, 1);
                if (c.count < budget_.conditional_events) {
                    mcfg.trials *= 2;
                    c = mc::estimate_conditional(sys, mcfg, k, 1);
                }
                const bool ok = c.count >= budget_.conditional_events &&
                                std::abs(c.estimate - analytic_value) <= kZ * c.standard_error;
                r.passed = r.passed && ok;
                d << "K=" << users << ": analytic " << detail::fmt(analytic_value) << " mc " << detail::fmt(c.estimate)
                  << " +- " << detail::fmt(c.standard_error) << " (n=" << c.count << ")" << (ok ? "" : " FAIL") << "; ";
            }
            r.detail = d.str();
        });
    }

    // 3. Equal-competitor form against the general subset expansion.
    CriterionResult equal_competitor_form() const {
        return detail::timed(3, "equal-competitor form vs general expansion", [&](CriterionResult& r) {
            double worst = 0.0;
            for (int users : {2, 3, 5, 8, 12}) {
                for (double competitor_sigma2 : {0.5, 1.0, 2.0}) {
                    for (double own_xi2 : {0.0, 0.05, 0.3}) {
                        std::vector<channel::UserProfile> p(static_cast<std::size_t>(users),
                                                            {competitor_sigma2, 0.1 * competitor_sigma2});
                        p.back() = {1.3, own_xi2};
                        const analytic::SelectedPowerLaw law(p.size() - 1, p);
                        for (double theta : {0.1, 1.0, 3.0, 6.0}) {
                            const double general = analytic::cond_rate_outage(law, 10.0, theta);
                            const double equal =
                                analytic::cond_rate_outage_equal_competitors(p.size() - 1, p, 10.0, theta);
                            worst = std::max(worst, std::abs(general - equal));
                        }
                    }
                }
            }
            r.passed = worst < kEqualCompetitorTol;
            r.detail = "max difference " + detail::fmt(worst);
        });
    }

    // 4. Reduced two-slot integral against the brute-force pair oracle.
    CriterionResult two_slot_term() const {
        return detail::timed(4, "two-slot term vs pair MC", [&](CriterionResult& r) {
            struct Case {
                std::vector<channel::UserProfile> profiles;
                std::size_t user;
                double rho;
                double theta;
            };
            const std::vector<Case> cases = {
                {{{0.5, 0.0}, {0.5, 0.0}}, 0, 1.0, 2.0},
                {{{1.1, 0.1}, {1.6, 0.1}, {2.1, 0.1}}, 2, 10.0, 8.0},
                {{{1.0, 0.0}, {1.0, 0.3}, {2.0, 0.0}, {2.0, 0.5}}, 3, 5.0, 6.0},
                {{{1.0, 0.5}, {1.0, 0.2}}, 1, 10.0, 5.0},
                {{{0.8, 0.2}, {1.0, 0.0}, {1.2, 0.6}, {1.4, 0.1}, {1.6, 0.8}}, 3, 10.0, 7.0},
            };
            std::ostringstream d;
            r.passed = true;
            std::uint64_t seed = budget_.seed + 400;
            for (const auto& c : cases) {
                const analytic::SelectedPowerLaw law(c.user, c.profiles);
                const double exact = analytic::two_slot_outage(law, c.rho, c.theta);
                const auto mc = two_slot_pair_oracle(c.profiles, c.user, c.rho, c.theta, budget_.pair_samples, ++seed);
                const bool ok = std::abs(mc.estimate - exact) <= kZ * mc.standard_error;
                r.passed = r.passed && ok;
                d << "K=" << c.profiles.size() << ": " << detail::fmt(exact) << " vs " << detail::fmt(mc.estimate)
                  << " +- " << detail::fmt(mc.standard_error) << (ok ? "" : " FAIL") << "; ";
            }
            r.detail = d.str();
        });
    }

    // 5. Loose <= tight <= MC + 3 SE on the 12-user preset, R = 0.1 .. 2.0.
    CriterionResult bound_validity() {
        return detail::timed(5, "bound validity on the 12-user preset", [&](CriterionResult& r) {
            const auto& run = preset_run();
            int violations = 0, checked = 0;
            double worst_order = 0.0, worst_excess = -1.0;
            std::string first;
            for (std::size_t ri = 0; ri < run.rates.size(); ++ri) {
                for (std::size_t k = 0; k < run.bounds->users(); ++k) {
                    const auto b = run.bounds->evaluate(k, run.rates[ri]);
                    const double p = run.reports[ri].outage(k);
                    const double se = run.reports[ri].standard_error(k);
                    const double excess = (b.tight - p) / std::max(se, 1e-300);
                    worst_order = std::min(worst_order, b.tight - b.loose);
                    worst_excess = std::max(worst_excess, excess);
                    ++checked;
                    const bool ok = b.tight - b.loose >= -kOrderingSlack && b.tight <= p + kZ * se &&
                                    b.loose <= b.tight + kOrderingSlack;
                    if (!ok && violations++ == 0)
                        first = "R=" + detail::fmt(run.rates[ri]) + " user " + std::to_string(k + 1) + ": loose " +
                                detail::fmt(b.loose) + " tight " + detail::fmt(b.tight) + " mc " + detail::fmt(p) +
                                " se " + detail::fmt(se);
                }
            }
            r.passed = violations == 0;
            r.detail = std::to_string(checked) + " points, " + std::to_string(violations) +
                       " violations; min(tight - loose) = " + detail::fmt(worst_order) +
                       ", max (tight - mc)/se = " + detail::fmt(worst_excess) + (first.empty() ? "" : "; first: " + first);
        });
    }

    // 6. Tightness for small rates (R <= 0.5) for the most frequently
    // scheduled user.
    CriterionResult tightness() {
        return detail::timed(6, "tightness for R <= 0.5 (best user)", [&](CriterionResult& r) {
            const auto& run = preset_run();
            std::size_t best = 0;
            for (std::size_t k = 1; k < run.bounds->users(); ++k)
                if (run.bounds->law(k).selection_probability() > run.bounds->law(best).selection_probability()) best = k;
            std::ostringstream d;
            d << "user " << best + 1 << ": ";
            r.passed = true;
            int points = 0;
            for (std::size_t ri = 0; ri < run.rates.size(); ++ri) {
                if (run.rates[ri] > 0.5 + 1e-12) continue;
                ++points;
                const double tight = run.bounds->evaluate(best, run.rates[ri]).tight;
                const double p = run.reports[ri].outage(best);
                const double se = run.reports[ri].standard_error(best);
                const bool ok = std::abs(tight - p) <= kTightnessZ * se + kTightnessSlack;
                r.passed = r.passed && ok;
                d << "R=" << detail::fmt(run.rates[ri]) << " gap " << detail::fmt(std::abs(tight - p))
                  << (ok ? "" : " FAIL") << "; ";
            }
            r.passed = r.passed && points > 0;
            r.detail = d.str();
        });
    }

    // 7. Plateau: where a single slot almost surely carries RN bits, the
    // bound sits on (1 - p)^N.
    CriterionResult plateau() const {
        return detail::timed(7, "staircase plateau", [&](CriterionResult& r) {
            const auto s = scenario::heterogeneous_preset();
            const analytic::BoundEvaluator bounds(s.system);
            const int n = s.system.slots;
            int qualifying = 0, violations = 0;
            double worst = 0.0;
            for (double rate : detail::rate_grid(0.005, 0.5, 0.005)) {
                for (std::size_t k = 0; k < bounds.users(); ++k) {
                    const auto b = bounds.evaluate(k, rate);
                    if (b.p_out_1 >= kPlateauOutage) continue;
                    ++qualifying;
                    const double dev = std::abs(b.tight - std::pow(1.0 - b.p_select, n));
                    worst = std::max(worst, dev);
                    if (!(dev < n * kPlateauOutage)) ++violations;
                }
            }
            r.passed = qualifying > 0 && violations == 0;
            r.detail = std::to_string(qualifying) + " qualifying points, max |tight - (1-p)^N| = " + detail::fmt(worst);
        });
    }

    // 8. Selection probabilities and slot-count law.
    CriterionResult selection_law() {
        return detail::timed(8, "selection law", [&](CriterionResult& r) {
            const auto& run = preset_run();
            const auto& rep = run.reports.front();
            numerics::CompensatedSum total;
            int p_fail = 0, gof_fail = 0;
            double worst_stat = 0.0;
            for (std::size_t k = 0; k < run.bounds->users(); ++k) {
                const double p = run.bounds->law(k).selection_probability();
                total += p;
                if (std::abs(rep.selection(k) - p) > kZ * rep.selection_standard_error(k)) ++p_fail;
                const auto pmf = analytic::slot_count_pmf(p, rep.slots);
                const auto g = chi_square_gof(rep.users[k].histogram, pmf,
                                              kGofLevel / static_cast<double>(run.bounds->users()));
                worst_stat = std::max(worst_stat, g.statistic / std::max(g.critical, 1e-300));
                if (!g.passed) ++gof_fail;
            }
            const double sum_err = std::abs(total.value() - 1.0);
            r.passed = sum_err < kSelectionSumTol && p_fail == 0 && gof_fail == 0;
            r.detail = "|sum p - 1| = " + detail::fmt(sum_err) + ", p-hat outside 3 SE: " + std::to_string(p_fail) +
                       ", GOF failures at 1% family-wise: " + std::to_string(gof_fail) + " (max stat/critical " + detail::fmt(worst_stat) + ")";
        });
    }

    // 9. Error-variance sweep: imperfect users lose, perfect users gain.
    CriterionResult error_sweep() const {
        return detail::timed(9, "error-variance sweep trends", [&](CriterionResult& r) {
            auto s = scenario::partial_csit_preset(0.0);
            s.mc.trials = budget_.sweep_trials;
            s.mc.seed = budget_.seed + 900;
            const std::vector<double> grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
            std::vector<mc::OutageReport> reports;
            for (double xi2 : grid) {
                auto sys = s.system;
                for (std::size_t k = 7; k < 12; ++k) sys.profiles[k].xi2 = xi2;
                reports.push_back(mc::estimate_outage(sys, s.mc));
            }
            int violations = 0, strict = 0;
            for (std::size_t g = 1; g < grid.size(); ++g) {
                for (std::size_t k = 0; k < 12; ++k) {
                    const double prev = reports[g - 1].outage(k), cur = reports[g].outage(k);
                    const double se = std::hypot(reports[g - 1].standard_error(k), reports[g].standard_error(k));
                    const double change = k >= 7 ? cur - prev : prev - cur;   // expected >= 0
                    if (change < 0.0) {
                        ++violations;
                        if (change < -kZ * se) ++strict;
                    }
                }
            }
            r.passed = strict == 0;
            r.detail = "imperfect users 8-12 at xi2 = 0.5: " + detail::fmt(reports.back().outage(11)) +
                       ", perfect user 1: " + detail::fmt(reports.back().outage(0)) + " (from " +
                       detail::fmt(reports.front().outage(0)) + "); reversals " + std::to_string(violations) +
                       ", beyond 3 SE " + std::to_string(strict);
        });
    }

    // 10. Scheduler ordering at R = 0.2.
    CriterionResult scheduler_ordering() {
        return detail::timed(10, "scheduler ordering at R = 0.2", [&](CriterionResult& r) {
            auto s = scenario::heterogeneous_preset();
            s.system.rate = 0.2;
            s.mc.trials = budget_.preset_trials;
            s.mc.seed = budget_.seed;
            const auto& run = preset_run();
            const auto at = std::find_if(run.rates.begin(), run.rates.end(),
                                         [](double v) { return std::abs(v - 0.2) < 1e-12; });
            const auto& max_rep = run.reports.at(static_cast<std::size_t>(at - run.rates.begin()));
            s.mc.policy = sched::Policy::random;
            const auto rnd_rep = mc::estimate_outage(s.system, s.mc);
            s.mc.policy = sched::Policy::proportional_fair;
            const auto pf_rep = mc::estimate_outage(s.system, s.mc);

            int confirmed = 0, indeterminate = 0, contradicted = 0;
            std::string against;
            const auto compare = [&](const std::string& label, double worse, double worse_se, double better,
                                     double better_se) {
                const double diff = worse - better;
                const double se = std::hypot(worse_se, better_se);
                if (diff > kZ * se) {
                    ++confirmed;
                } else if (diff < -kZ * se) {
                    ++contradicted;
                    against += " " + label;
                } else {
                    ++indeterminate;
                }
            };
            for (std::size_t k = 0; k < s.system.users(); ++k)
                compare("random<max@user" + std::to_string(k + 1), rnd_rep.outage(k), rnd_rep.standard_error(k),
                        max_rep.outage(k), max_rep.standard_error(k));
            std::size_t worst = 0;
            for (std::size_t k = 1; k < s.system.users(); ++k)
                if (max_rep.outage(k) > max_rep.outage(worst)) worst = k;
            compare("pf>max@user" + std::to_string(worst + 1), max_rep.outage(worst), max_rep.standard_error(worst),
                    pf_rep.outage(worst),
                    pf_rep.standard_error(worst));
            r.passed = contradicted == 0;
            r.detail = std::to_string(confirmed) + " confirmed, " + std::to_string(indeterminate) + " indeterminate, " +
                       std::to_string(contradicted) + " contradicted" + (against.empty() ? "" : " (" + against.substr(1) + ")") +
                       "; worst user " + std::to_string(worst + 1) +
                       ": max " + detail::fmt(max_rep.outage(worst)) + " pf " + detail::fmt(pf_rep.outage(worst)) +
                       " random " + detail::fmt(rnd_rep.outage(worst));
        });
    }

    // 11. Byte-identical simulate output across runs and worker caps.
    CriterionResult reproducibility() const {
        return detail::timed(11, "reproducible simulate output", [&](CriterionResult& r) {
            auto s = scenario::heterogeneous_preset();
            s.mc.trials = budget_.repro_trials;
            s.mc.seed = budget_.seed + 1100;
            s.mc.workers = 8;   // the environment cap decides
            const char* saved = std::getenv("OUTAGE_BENCH_THREADS");
            const std::string saved_value = saved ? saved : "";
            std::vector<std::string> outputs;
            for (const char* cap : {"1", "1", "4", "8"}) {
                ::setenv("OUTAGE_BENCH_THREADS", cap, 1);
                outputs.push_back(commands::to_csv(commands::cmd_simulate(s)));
            }
            if (saved) ::setenv("OUTAGE_BENCH_THREADS", saved_value.c_str(), 1);
            else ::unsetenv("OUTAGE_BENCH_THREADS");
            r.passed = std::all_of(outputs.begin(), outputs.end(), [&](const auto& o) { return o == outputs.front(); });
            r.detail = std::to_string(outputs.front().size()) + " bytes, caps {1,1,4,8}";
        });
    }

    std::vector<CriterionResult> run_all(const std::function<void(const CriterionResult&)>& on_result = {}) {
        std::vector<CriterionResult> out;
        const auto add = [&](CriterionResult r) {
            if (on_result) on_result(r);
            out.push_back(std::move(r));
        };
        add(special_functions());
        add(single_slot_law());
        add(equal_competitor_form());
        add(two_slot_term());
        add(bound_validity());
        add(tightness());
        add(plateau());
        add(selection_law());
        add(error_sweep());
        add(scheduler_ordering());
        add(reproducibility());
        return out;
    }

private:
    struct PresetRun {
        std::vector<double> rates;
        std::optional<analytic::BoundEvaluator> bounds;
        std::vector<mc::OutageReport> reports;
    };

    const PresetRun& preset_run() {
        if (!preset_) {
            auto s = scenario::heterogeneous_preset();
            s.mc.trials = budget_.preset_trials;
            s.mc.seed = budget_.seed;
            PresetRun run;
            run.rates = detail::rate_grid(0.1, 2.0, 0.1);
            run.bounds.emplace(s.system);
            run.reports = mc::estimate_outage_rates(s.system, s.mc, run.rates);
            preset_ = std::move(run);
        }
        return *preset_;
    }

    Budget budget_;
    std::optional<PresetRun> preset_;
};

} // namespace outage::validation
