#pragma once

// Analytical outage quantities for max-based scheduling over independent
// Rayleigh users with imperfect CSIT.
//
// Notation used below: for user k, W is the largest estimated power among the
// other users, p the probability that user k is scheduled in a slot, and
// G(t) = Pr{gamma_k < t | user k scheduled} the law of the power it actually
// receives when scheduled. For Rayleigh users G is a signed mixture of
// exponentials indexed by subsets S of the competitors:
//
//   G(t) = 1 - sum_S c_S exp(-t / beta_S),
//   A_S = sigma_hat2_k * sum_{m in S} 1 / sigma_hat2_m,
//   c_S = (-1)^|S| / (p (1 + A_S)),
//   beta_S = 2 sigma_hat2_k / (1 + A_S) + xi2_k,
//
// and p = sum_S (-1)^|S| / (1 + A_S).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "outage/channel.hpp"
#include "outage/errors.hpp"
#include "outage/numerics.hpp"

namespace outage::analytic {

using channel::UserProfile;

/// Hard limit on the number of competitors for the closed-form subset
/// expansion (2^25 terms).
inline constexpr int kExpansionCeiling = 25;

struct AnalyticOptions {
    /// Competitor count above which the quadrature fallback is used. Values
    /// above kExpansionCeiling are rejected.
    int max_expansion_competitors = 20;
    numerics::QuadratureSpec quadrature{};

    void validate() const {
        if (max_expansion_competitors < 0 || max_expansion_competitors > kExpansionCeiling)
            throw ConfigError("max_expansion_competitors must lie in [0, " +
                              std::to_string(kExpansionCeiling) + "]");
        quadrature.validate();
    }
};

struct SystemConfig {
    std::vector<UserProfile> profiles;
    double rho = 10.0;   // linear SNR
    double rate = 1.0;   // required rate R, bits per channel use
    int slots = 5;       // delay window N

    std::size_t users() const noexcept { return profiles.size(); }

    void validate() const {
        channel::validate_profiles(profiles);
        if (!std::isfinite(rho) || !(rho > 0.0)) throw ConfigError("rho must be positive and finite");
        if (!std::isfinite(rate) || rate < 0.0) throw ConfigError("rate must be nonnegative and finite");
        if (slots < 1) throw ConfigError("slots must be at least 1");
    }
};

/// Power threshold (2^theta - 1) / rho for a rate threshold theta. Returns
/// +inf when 2^theta overflows.
inline double power_threshold(double theta, double rho) {
    if (std::isnan(theta) || theta < 0.0) throw DomainError("rate threshold must be nonnegative");
    if (!(rho > 0.0)) throw DomainError("rho must be positive");
    return std::expm1(theta * std::numbers::ln2) / rho;
}

namespace detail {

// Inverse estimate variances of the users that can beat user k. Users with
// sigma_hat2 = 0 never report a positive estimate and drop out.
inline std::vector<double> competitor_inverse_variances(std::size_t k,
                                                        std::span<const UserProfile> profiles) {
    std::vector<double> inv;
    for (std::size_t j = 0; j < profiles.size(); ++j)
        if (j != k && profiles[j].sigma_hat2() > 0.0) inv.push_back(1.0 / profiles[j].sigma_hat2());
    return inv;
}

inline void require_user(std::size_t k, std::span<const UserProfile> profiles) {
    if (k >= profiles.size())
        throw DomainError("user index " + std::to_string(k) + " out of range for " +
                          std::to_string(profiles.size()) + " users");
}

inline void require_not_all_degenerate(std::span<const UserProfile> profiles) {
    for (const auto& u : profiles)
        if (u.sigma_hat2() > 0.0) return;
    throw ConfigError("every user has sigma_hat2 = 0; the scheduler has no information");
}

// Calls visit(odd, sum) for every subset of `values`, where odd is the parity
// of the subset size and sum the subset sum. Sums are assembled from two
// half-tables so each is at most two rounding steps from exact.
template <class Visit>
void for_each_subset(std::span<const double> values, Visit&& visit) {
    const std::size_t m = values.size();
    const std::size_t low_bits = m / 2;
    const std::size_t high_bits = m - low_bits;
    const auto table = [&](std::size_t offset, std::size_t bits) {
        std::vector<double> t(std::size_t{1} << bits, 0.0);
        for (std::size_t mask = 1; mask < t.size(); ++mask) {
            const auto lsb = static_cast<std::size_t>(std::countr_zero(mask));
            t[mask] = t[mask & (mask - 1)] + values[offset + lsb];
        }
        return t;
    };
    const auto low = table(0, low_bits);
    const auto high = table(low_bits, high_bits);
    for (std::size_t h = 0; h < high.size(); ++h) {
        const int hp = std::popcount(h);
        for (std::size_t l = 0; l < low.size(); ++l) {
            const bool odd = ((hp + std::popcount(l)) & 1) != 0;
            visit(odd, high[h] + low[l]);
        }
    }
}

struct ExpansionTerm {
    double ratio_sum;   // A_S
    double weight;      // (-1)^|S| / (1 + A_S), merged over equal A_S
};

// Inclusion-exclusion terms for user k, with terms that share A_S merged.
inline std::vector<ExpansionTerm> selection_expansion(double sigma_hat2_k,
                                                      std::span<const double> competitor_inv) {
    std::vector<ExpansionTerm> raw;
    raw.reserve(std::size_t{1} << competitor_inv.size());
    for_each_subset(competitor_inv, [&](bool odd, double inv_sum) {
        const double a = sigma_hat2_k * inv_sum;
        raw.push_back({a, (odd ? -1.0 : 1.0) / (1.0 + a)});
    });
    std::sort(raw.begin(), raw.end(),
              [](const ExpansionTerm& x, const ExpansionTerm& y) { return x.ratio_sum < y.ratio_sum; });

    std::vector<ExpansionTerm> merged;
    std::size_t i = 0;
    while (i < raw.size()) {
        const double anchor = raw[i].ratio_sum;
        std::vector<double> group;
        std::size_t j = i;
        while (j < raw.size() && raw[j].ratio_sum - anchor <= 1e-12 * std::max(1.0, anchor)) {
            group.push_back(raw[j].weight);
            ++j;
        }
        const double w = numerics::sorted_compensated_sum(std::move(group));
        if (w != 0.0) merged.push_back({anchor, w});
        i = j;
    }
    return merged;
}

inline double expansion_total(std::span<const ExpansionTerm> terms) {
    std::vector<double> w;
    w.reserve(terms.size());
    for (const auto& t : terms) w.push_back(t.weight);
    return numerics::sorted_compensated_sum(std::move(w));
}

} // namespace detail

enum class CdfForm { product, expansion };

/// F_W(x) = prod_{j != k} Pr{gamma_hat_j <= x}, either as the direct product
/// or as its inclusion-exclusion expansion.
inline double max_competitor_cdf(std::size_t k, std::span<const UserProfile> profiles, double x,
                                 CdfForm form = CdfForm::product) {
    detail::require_user(k, profiles);
    numerics::detail::require_nonnegative(x, "max_competitor_cdf");
    const auto inv = detail::competitor_inverse_variances(k, profiles);
    if (form == CdfForm::product) {
        double f = 1.0;
        for (double v : inv) f *= -std::expm1(-0.5 * x * v);
        return f;
    }
    if (inv.size() > static_cast<std::size_t>(kExpansionCeiling))
        throw CapabilityError("subset expansion of the competitor cdf supports at most " +
                              std::to_string(kExpansionCeiling) + " competitors; use the product form");
    std::vector<double> terms;
    terms.reserve(std::size_t{1} << inv.size());
    detail::for_each_subset(inv, [&](bool odd, double inv_sum) {
        terms.push_back((odd ? -1.0 : 1.0) * std::exp(-0.5 * x * inv_sum));
    });
    return numerics::sorted_compensated_sum(std::move(terms));
}

/// Signed-coefficient exponential mixture G(t) = 1 - sum c_i exp(-t / beta_i).
class HyperexpMixture {
public:
    struct Term {
        double coefficient;
        double scale;
    };

    HyperexpMixture() = default;
    explicit HyperexpMixture(std::vector<Term> terms) : terms_(std::move(terms)) {
        for (const auto& t : terms_)
            if (!(t.scale > 0.0)) throw DomainError("HyperexpMixture: scales must be positive");
    }

    std::span<const Term> terms() const noexcept { return terms_; }

    double coefficient_sum() const {
        numerics::CompensatedSum s;
        for (const auto& t : terms_) s += t.coefficient;
        return s.value();
    }

    // Written as -sum c_i expm1(-t/beta_i), which equals the defining form
    // when sum c_i = 1 and keeps full relative precision near t = 0.
    double cdf(double t) const {
        if (t <= 0.0) return 0.0;
        if (std::isinf(t)) return 1.0;
        numerics::CompensatedSum s;
        for (const auto& term : terms_) s += -term.coefficient * std::expm1(-t / term.scale);
        return std::clamp(s.value(), 0.0, 1.0);
    }

    double pdf(double t) const {
        if (t < 0.0 || std::isinf(t)) return 0.0;
        numerics::CompensatedSum s;
        for (const auto& term : terms_) s += term.coefficient / term.scale * std::exp(-t / term.scale);
        return std::max(0.0, s.value());
    }

private:
    std::vector<Term> terms_;
};

/// Law of the true power delivered to user k in a slot where it is scheduled.
///
/// Backed by the closed-form HyperexpMixture when the competitor count is
/// within AnalyticOptions::max_expansion_competitors; otherwise cdf and pdf
/// are evaluated by quadrature over the estimate x with the product form of
/// F_W:
///   G(t) = (1/p) int (1 - Q1(sqrt(2x)/xi, sqrt(2t)/xi)) F_W(x) f(x) dx.
class SelectedPowerLaw {
public:
    SelectedPowerLaw(std::size_t k, std::span<const UserProfile> profiles, const AnalyticOptions& opts = {})
        : profile_((detail::require_user(k, profiles), profiles[k])), quadrature_(opts.quadrature) {
        channel::validate_profiles(profiles);
        opts.validate();
        detail::require_not_all_degenerate(profiles);
        competitor_inv_ = detail::competitor_inverse_variances(k, profiles);
        if (profile_.sigma_hat2() == 0.0) {
            probability_ = 0.0;
            return;
        }
        if (competitor_inv_.size() <= static_cast<std::size_t>(opts.max_expansion_competitors)) {
            build_mixture();
        } else {
            probability_ = over_estimate([this](double x) { return competitor_cdf(x) * estimate_pdf(x); });
        }
    }

    double selection_probability() const noexcept { return probability_; }
    bool never_selected() const noexcept { return probability_ == 0.0; }
    bool closed_form() const noexcept { return mixture_ != nullptr; }
    const HyperexpMixture* mixture() const noexcept { return mixture_.get(); }
    const UserProfile& profile() const noexcept { return profile_; }

    double cdf(double t) const {
        if (never_selected()) return 1.0;
        if (t <= 0.0) return 0.0;
        if (std::isinf(t)) return 1.0;
        if (mixture_) return mixture_->cdf(t);
        double value;
        if (profile_.perfect_csit()) {
            value = numerics::integrate(
                        [this](double x) { return competitor_cdf(x) * estimate_pdf(x); }, 0.0, t,
                        quadrature_)
                        .value;
        } else {
            const double xi = std::sqrt(profile_.xi2);
            const double b = std::sqrt(2.0 * t) / xi;
            value = over_estimate([&](double x) {
                const double below = 1.0 - numerics::marcum_q1(std::sqrt(2.0 * x) / xi, b);
                return below * competitor_cdf(x) * estimate_pdf(x);
            });
        }
        return std::clamp(value / probability_, 0.0, 1.0);
    }

    double pdf(double t) const {
        if (never_selected() || t < 0.0 || std::isinf(t)) return 0.0;
        if (mixture_) return mixture_->pdf(t);
        if (profile_.perfect_csit()) return competitor_cdf(t) * estimate_pdf(t) / probability_;
        // gamma | x is (xi2/2) chi2(2, 2x/xi2).
        const double scale = 2.0 / profile_.xi2;
        const double value = over_estimate([&](double x) {
            return scale * numerics::ncx2_pdf(scale * t, scale * x) * competitor_cdf(x) * estimate_pdf(x);
        });
        return std::max(0.0, value / probability_);
    }

private:
    // int_0^inf f(x) dx in units of the mean estimated power.
    template <class F>
    double over_estimate(const F& f) const {
        const double unit = 2.0 * profile_.sigma_hat2();
        return unit * numerics::integrate([&](double y) { return f(unit * y); }, 0.0, INFINITY, quadrature_).value;
    }

    double competitor_cdf(double x) const {
        double f = 1.0;
        for (double v : competitor_inv_) f *= -std::expm1(-0.5 * x * v);
        return f;
    }

    double estimate_pdf(double x) const {
        const double mean = 2.0 * profile_.sigma_hat2();
        return std::exp(-x / mean) / mean;
    }

    void build_mixture() {
        const double sh2 = profile_.sigma_hat2();
        const auto expansion = detail::selection_expansion(sh2, competitor_inv_);
        probability_ = std::clamp(detail::expansion_total(expansion), 0.0, 1.0);
        std::vector<HyperexpMixture::Term> terms;
        terms.reserve(expansion.size());
        for (const auto& e : expansion)
            terms.push_back({e.weight / probability_, 2.0 * sh2 / (1.0 + e.ratio_sum) + profile_.xi2});
        mixture_ = std::make_shared<const HyperexpMixture>(std::move(terms));
    }

    UserProfile profile_;
    numerics::QuadratureSpec quadrature_;
    std::vector<double> competitor_inv_;
    double probability_ = 0.0;
    std::shared_ptr<const HyperexpMixture> mixture_;
};

/// Probability that user k has the largest estimated power in a slot.
inline double selection_prob(std::size_t k, std::span<const UserProfile> profiles,
                             const AnalyticOptions& opts = {}) {
    return SelectedPowerLaw(k, profiles, opts).selection_probability();
}

/// Binomial law of the number of slots (out of N) given to a user.
inline std::vector<double> slot_count_pmf(double p, int slots) {
    if (std::isnan(p) || p < 0.0 || p > 1.0) throw DomainError("slot_count_pmf: p must lie in [0, 1]");
    if (slots < 1) throw DomainError("slot_count_pmf: slots must be at least 1");
    const auto n = static_cast<std::size_t>(slots);
    std::vector<double> pmf(n + 1, 0.0);
    if (p == 0.0) {
        pmf.front() = 1.0;
        return pmf;
    }
    if (p == 1.0) {
        pmf.back() = 1.0;
        return pmf;
    }
    if (n <= 1000) {
        const double lp = std::log(p);
        const double lq = std::log1p(-p);
        double binom = 1.0;
        for (std::size_t i = 0; i <= n; ++i) {
            if (i > 0) binom = binom * static_cast<double>(n - i + 1) / static_cast<double>(i);
            pmf[i] = binom * std::exp(static_cast<double>(i) * lp + static_cast<double>(n - i) * lq);
        }
    } else {
        // Ratio recurrence outward from the mode, then normalize.
        const double odds = p / (1.0 - p);
        const auto mode = std::min(n, static_cast<std::size_t>(std::floor(static_cast<double>(n + 1) * p)));
        pmf[mode] = 1.0;
        for (std::size_t i = mode; i < n; ++i)
            pmf[i + 1] = pmf[i] * odds * static_cast<double>(n - i) / static_cast<double>(i + 1);
        for (std::size_t i = mode; i > 0; --i)
            pmf[i - 1] = pmf[i] / odds * static_cast<double>(i) / static_cast<double>(n - i + 1);
        numerics::CompensatedSum total;
        for (double v : pmf) total += v;
        for (double& v : pmf) v /= total.value();
    }
    return pmf;
}

/// Closed-form mixture G for user k. Requires the expansion path.
inline HyperexpMixture selected_power_cdf(std::size_t k, std::span<const UserProfile> profiles,
                                          const AnalyticOptions& opts = {}) {
    const SelectedPowerLaw law(k, profiles, opts);
    if (law.never_selected())
        throw DomainError("selected_power_cdf: user " + std::to_string(k + 1) +
                          " is never scheduled (sigma_hat2 = 0)");
    if (!law.closed_form())
        throw CapabilityError("selected_power_cdf: too many competitors for the closed-form mixture");
    return *law.mixture();
}

/// Pr{log2(1 + rho Gamma) < theta | user scheduled} = G((2^theta - 1) / rho).
inline double cond_rate_outage(const SelectedPowerLaw& law, double rho, double theta) {
    const double t = power_threshold(theta, rho);
    if (law.never_selected()) return 1.0;
    return law.cdf(t);
}

inline double cond_rate_outage(std::size_t k, std::span<const UserProfile> profiles, double rho,
                               double theta, const AnalyticOptions& opts = {}) {
    return cond_rate_outage(SelectedPowerLaw(k, profiles, opts), rho, theta);
}

/// The same conditional outage when every competitor of user k has the same
/// estimate variance; the subset sum collapses to K terms with binomial
/// multiplicities. Throws DomainError if the competitors differ.
inline double cond_rate_outage_equal_competitors(std::size_t k, std::span<const UserProfile> profiles,
                                                 double rho, double theta) {
    detail::require_user(k, profiles);
    channel::validate_profiles(profiles);
    detail::require_not_all_degenerate(profiles);
    const double t = power_threshold(theta, rho);
    const auto& user = profiles[k];
    if (user.sigma_hat2() == 0.0) return 1.0;

    const auto inv = detail::competitor_inverse_variances(k, profiles);
    for (double v : inv)
        if (std::abs(v - inv.front()) > 1e-14 * inv.front())
            throw DomainError("cond_rate_outage_equal_competitors: competitor variances differ");
    if (std::isinf(t)) return 1.0;

    const std::size_t m = inv.size();
    const double ratio = m == 0 ? 0.0 : user.sigma_hat2() * inv.front();
    std::vector<double> selection, survival;
    double binom = 1.0;
    for (std::size_t j = 0; j <= m; ++j) {
        if (j > 0) binom = binom * static_cast<double>(m - j + 1) / static_cast<double>(j);
        const double denom = 1.0 + static_cast<double>(j) * ratio;
        const double w = ((j % 2) ? -binom : binom) / denom;
        const double scale = 2.0 * user.sigma_hat2() / denom + user.xi2;
        selection.push_back(w);
        survival.push_back(w * std::exp(-t / scale));
    }
    const double p = numerics::sorted_compensated_sum(std::move(selection));
    const double tail = numerics::sorted_compensated_sum(std::move(survival));
    return std::clamp(1.0 - tail / p, 0.0, 1.0);
}

/// Exact two-slot conditional outage
///   Pr{(1 + rho g1)(1 + rho g2) < 2^theta}, g1, g2 iid ~ G,
/// reduced to int_0^T g(t) G((T - t)/(1 + rho t)) dt with T = (2^theta - 1)/rho.
inline double two_slot_outage(const SelectedPowerLaw& law, double rho, double theta,
                              const numerics::QuadratureSpec& spec = {}) {
    const double upper = power_threshold(theta, rho);
    if (law.never_selected()) return 1.0;
    if (upper == 0.0) return 0.0;
    if (std::isinf(upper)) return 1.0;
    const auto integrand = [&](double t) { return law.pdf(t) * law.cdf((upper - t) / (1.0 + rho * t)); };
    // The density lives on the scale of the user's mean power while `upper`
    // can be many orders larger; geometric breakpoints keep the first panels
    // from stepping over it.
    const double scale = 2.0 * law.profile().sigma_hat2() + law.profile().xi2;
    numerics::CompensatedSum total;
    double lo = 0.0;
    for (double cut = scale / 16.0; lo < upper; cut *= 4.0) {
        const double hi = std::min(cut, upper);
        total += numerics::integrate(integrand, lo, hi, spec).value;
        lo = hi;
    }
    return std::clamp(total.value(), 0.0, 1.0);
}

inline double cond_outage_two_slots(std::size_t k, std::span<const UserProfile> profiles, double rho,
                                    double rate, int slots, const AnalyticOptions& opts = {}) {
    if (slots < 1) throw DomainError("cond_outage_two_slots: slots must be at least 1");
    return two_slot_outage(SelectedPowerLaw(k, profiles, opts), rho, rate * slots, opts.quadrature);
}

struct BoundReport {
    std::size_t user = 0;
    double p_select = 0.0;
    std::vector<double> slot_pmf;
    double loose = 0.0;
    double tight = 0.0;
    double p_out_1 = 0.0;   // Pr{outage | scheduled once}, theta = RN
    double p_out_2 = 0.0;   // Pr{outage | scheduled twice}, exact
};

namespace detail {

inline BoundReport bounds_from_law(std::size_t k, const SelectedPowerLaw& law, double rho, int slots,
                                   double rate, bool exact_two_slot, const numerics::QuadratureSpec& spec) {
    if (!std::isfinite(rate) || rate < 0.0) throw ConfigError("rate must be nonnegative and finite");
    const double total = rate * slots;
    BoundReport r;
    r.user = k;
    r.p_select = law.selection_probability();
    r.slot_pmf = slot_count_pmf(r.p_select, slots);
    r.p_out_1 = cond_rate_outage(law, rho, total);
    r.p_out_2 = exact_two_slot ? two_slot_outage(law, rho, total, spec) : 0.0;

    numerics::CompensatedSum loose, tight;
    // Zero scheduled slots is always an outage.
    loose += r.slot_pmf[0];
    tight += r.slot_pmf[0];
    for (int i = 1; i <= slots; ++i) {
        const double w = r.slot_pmf[static_cast<std::size_t>(i)];
        if (w == 0.0) continue;
        const double per_slot = i == 1 ? r.p_out_1 : cond_rate_outage(law, rho, total / i);
        const double union_term = std::pow(per_slot, i);
        loose += w * union_term;
        tight += w * ((i == 2 && exact_two_slot) ? r.p_out_2 : union_term);
    }
    r.loose = std::clamp(loose.value(), 0.0, 1.0);
    r.tight = exact_two_slot ? std::clamp(tight.value(), 0.0, 1.0) : r.loose;
    return r;
}

} // namespace detail

/// Caches the per-user laws of a configuration so that bounds can be
/// evaluated over many rates without rebuilding the mixtures.
class BoundEvaluator {
public:
    BoundEvaluator(std::vector<UserProfile> profiles, double rho, int slots, AnalyticOptions opts = {})
        : profiles_(std::move(profiles)), rho_(rho), slots_(slots), opts_(opts) {
        SystemConfig{profiles_, rho_, 0.0, slots_}.validate();
        laws_.reserve(profiles_.size());
        for (std::size_t k = 0; k < profiles_.size(); ++k) laws_.emplace_back(k, profiles_, opts_);
    }

    explicit BoundEvaluator(const SystemConfig& config, AnalyticOptions opts = {})
        : BoundEvaluator(config.profiles, config.rho, config.slots, opts) {}

    std::size_t users() const noexcept { return profiles_.size(); }
    const SelectedPowerLaw& law(std::size_t k) const { return laws_.at(k); }

    BoundReport evaluate(std::size_t k, double rate, bool exact_two_slot = true) const {
        return detail::bounds_from_law(k, laws_.at(k), rho_, slots_, rate, exact_two_slot, opts_.quadrature);
    }

private:
    std::vector<UserProfile> profiles_;
    double rho_;
    int slots_;
    AnalyticOptions opts_;
    std::vector<SelectedPowerLaw> laws_;
};

inline BoundReport evaluate_bounds(const SystemConfig& config, std::size_t k, const AnalyticOptions& opts = {}) {
    config.validate();
    const SelectedPowerLaw law(k, config.profiles, opts);
    return detail::bounds_from_law(k, law, config.rho, config.slots, config.rate, true, opts.quadrature);
}

/// Union-bound lower bound on the delay-constrained outage of user k.
inline double outage_lower_bound_loose(const SystemConfig& config, std::size_t k,
                                       const AnalyticOptions& opts = {}) {
    config.validate();
    const SelectedPowerLaw law(k, config.profiles, opts);
    return detail::bounds_from_law(k, law, config.rho, config.slots, config.rate, false, opts.quadrature).loose;
}

/// As the union bound, with the two-slot term evaluated exactly.
inline double outage_lower_bound_tight(const SystemConfig& config, std::size_t k,
                                       const AnalyticOptions& opts = {}) {
    return evaluate_bounds(config, k, opts).tight;
}

} // namespace outage::analytic
