#pragma once

// Independent reference computations used by the test suites and by
// `outage-bench validate`. Nothing here calls the closed-form analytic paths
// it is used to check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "outage/channel.hpp"
#include "outage/numerics.hpp"
#include "outage/rng.hpp"
#include "outage/sched.hpp"

namespace outage::validation {

/// Power series sum_m (x/2)^{2m} / (m!)^2 in extended precision.
inline long double i0_power_series(long double x) {
    const long double q = x * x / 4.0L;
    long double term = 1.0L, sum = 1.0L;
    for (int m = 1; m < 2000; ++m) {
        term *= q / (static_cast<long double>(m) * m);
        sum += term;
        if (term < 1e-22L * sum) break;
    }
    return sum;
}

/// Noncentral chi-squared density (2 d.o.f.) as a Poisson mixture of
/// central chi-squared densities with 2 + 2k degrees of freedom.
inline double ncx2_pdf_poisson_series(double z, double lambda) {
    const long double half_l = lambda / 2.0L;
    const long double half_z = z / 2.0L;
    long double sum = 0.0L;
    // term_k = e^{-l/2} (l/2)^k / k! * (z/2)^k e^{-z/2} / (2 k!)
    for (int k = 0; k < 5000; ++k) {
        const long double lk = -half_l - half_z + k * (std::log(half_l + 1e-300L) + std::log(half_z + 1e-300L)) -
                               2.0L * std::lgamma(k + 1.0L);
        const long double term = (k == 0 ? std::exp(-half_l - half_z) : std::exp(lk)) / 2.0L;
        sum += term;
        if (k > half_l + half_z + 10 && term < 1e-22L * sum) break;
    }
    return static_cast<double>(sum);
}

/// Pr{chi2(2, lambda) > t} by adaptive quadrature of the density tail.
inline double ncx2_tail_by_quadrature(double t, double lambda) {
    numerics::QuadratureSpec spec;
    spec.abs_tol = 1e-13;
    spec.rel_tol = 1e-12;
    return numerics::integrate([lambda](double z) { return numerics::ncx2_pdf(z, lambda); }, t, INFINITY, spec)
        .value;
}

struct Proportion {
    double estimate = 0.0;
    double standard_error = 0.0;
    std::uint64_t count = 0;
};

inline Proportion proportion(std::uint64_t hits, std::uint64_t n) {
    Proportion p;
    p.count = n;
    if (n == 0) return p;
    p.estimate = static_cast<double>(hits) / static_cast<double>(n);
    p.standard_error = std::sqrt(p.estimate * (1.0 - p.estimate) / static_cast<double>(n));
    return p;
}

/// True powers of user k in slots where it wins the max scheduler, drawn
/// until `count` samples are collected. Returns the samples and the number
/// of slots drawn.
inline std::pair<std::vector<double>, std::uint64_t> sample_selected_power(
    std::span<const channel::UserProfile> profiles, std::size_t k, std::size_t count, std::uint64_t seed,
    std::uint64_t max_slots = 1'000'000'000ULL) {
    const channel::ChannelModel model(profiles);
    channel::SlotDraw draw;
    std::vector<double> out;
    out.reserve(count);
    std::uint64_t slots = 0;
    for (std::uint64_t block = 0; out.size() < count; ++block) {
        RngStream rng(seed, block);
        for (int i = 0; i < 4096 && out.size() < count; ++i) {
            model.draw(rng, draw);
            ++slots;
            if (sched::select_max(draw.gamma_hat) == k) out.push_back(draw.gamma[k]);
        }
        if (slots > max_slots) throw std::runtime_error("sample_selected_power: user is almost never selected");
    }
    return {std::move(out), slots};
}

/// Brute-force two-slot oracle: pairs consecutive conditional samples and
/// counts (1 + rho g1)(1 + rho g2) < 2^theta.
inline Proportion two_slot_pair_oracle(std::span<const channel::UserProfile> profiles, std::size_t k,
                                       double rho, double theta, std::size_t pairs, std::uint64_t seed) {
    const auto [samples, slots] = sample_selected_power(profiles, k, 2 * pairs, seed);
    (void)slots;
    const double target = std::exp2(theta);
    std::uint64_t hits = 0;
    for (std::size_t i = 0; i < pairs; ++i)
        if ((1.0 + rho * samples[2 * i]) * (1.0 + rho * samples[2 * i + 1]) < target) ++hits;
    return proportion(hits, pairs);
}

/// Two-sided Kolmogorov-Smirnov distance between a sample and a cdf.
inline double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// Asymptotic 1% critical value of the one-sample KS statistic.
inline double ks_critical_1pct(std::size_t n) { return 1.6276 / std::sqrt(static_cast<double>(n)); }

struct GoodnessOfFit {
    double statistic = 0.0;
    int dof = 0;
    double critical = 0.0;
    bool passed = false;
};

/// Pearson chi-squared test of observed counts against known probabilities
/// (no fitted parameters) at significance level `alpha`. Cells are pooled
/// left to right until each expected count is at least 5.
inline GoodnessOfFit chi_square_gof(std::span<const std::uint64_t> observed, std::span<const double> probs,
                                    double alpha = 0.01) {
    if (observed.size() != probs.size()) throw std::invalid_argument("chi_square_gof: size mismatch");
    double n = 0.0;
    for (auto o : observed) n += static_cast<double>(o);
    std::vector<double> obs, expd;
    double o_acc = 0.0, e_acc = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        o_acc += static_cast<double>(observed[i]);
        e_acc += probs[i] * n;
        if (e_acc >= 5.0) {
            obs.push_back(o_acc);
            expd.push_back(e_acc);
            o_acc = e_acc = 0.0;
        }
    }
    if (!obs.empty()) {
        obs.back() += o_acc;
        expd.back() += e_acc;
    }
    GoodnessOfFit g;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const double d = obs[i] - expd[i];
        g.statistic += d * d / expd[i];
    }
    g.dof = static_cast<int>(obs.size()) - 1;
    if (g.dof < 1) {
        g.passed = true;
        return g;
    }
    g.critical = boost::math::quantile(boost::math::complement(boost::math::chi_squared(g.dof), alpha));
    g.passed = g.statistic < g.critical;
    return g;
}

} // namespace outage::validation
