#pragma once

// Special functions and adaptive quadrature.
//
// Everything here is a pure function of its arguments.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <tuple>
#include <utility>
#include <vector>

#include "outage/errors.hpp"

namespace outage::numerics {

/// Neumaier (improved Kahan) running sum.
class CompensatedSum {
public:
    CompensatedSum& operator+=(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            compensation_ += (sum_ - t) + x;
        else
            compensation_ += (x - t) + sum_;
        sum_ = t;
        return *this;
    }
    double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

/// Sums a range after sorting by ascending magnitude. Used for the
/// alternating inclusion-exclusion series where cancellation dominates.
inline double sorted_compensated_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end(),
              [](double a, double b) { return std::abs(a) < std::abs(b); });
    CompensatedSum s;
    for (double v : values) s += v;
    return s.value();
}

namespace detail {

inline void require_nonnegative_finite(double x, const char* what) {
    if (!std::isfinite(x)) throw DomainError(std::string(what) + ": argument must be finite");
    if (x < 0.0) throw DomainError(std::string(what) + ": argument must be nonnegative");
}

inline void require_nonnegative(double x, const char* what) {
    if (std::isnan(x)) throw DomainError(std::string(what) + ": argument is NaN");
    if (x < 0.0) throw DomainError(std::string(what) + ": argument must be nonnegative");
}

// Below this the power series is summed directly; above it the asymptotic
// expansion of e^{-x} I0(x) converges to full precision.
inline constexpr double kBesselSeriesLimit = 30.0;

inline double bessel_i0_series(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0;
    CompensatedSum sum;
    sum += term;
    for (int m = 1; m < 500; ++m) {
        term *= q / (static_cast<double>(m) * m);
        sum += term;
        if (term < 1e-18 * sum.value()) break;
    }
    return sum.value();
}

// e^{-x} I0(x) ~ (2 pi x)^{-1/2} sum_k ((2k-1)!!)^2 / (k! (8x)^k)
inline double bessel_i0e_asymptotic(double x) {
    double term = 1.0;
    CompensatedSum sum;
    sum += term;
    for (int k = 1; k < 200; ++k) {
        const double next = term * (2.0 * k - 1.0) * (2.0 * k - 1.0) / (8.0 * k * x);
        if (next > term) break;
        term = next;
        sum += term;
        if (term < 1e-18 * sum.value()) break;
    }
    return sum.value() / std::sqrt(2.0 * M_PI * x);
}

} // namespace detail

/// Modified Bessel function of the first kind, order zero.
inline double bessel_i0(double x) {
    detail::require_nonnegative_finite(x, "bessel_i0");
    if (x <= detail::kBesselSeriesLimit) return detail::bessel_i0_series(x);
    // Overflows to +inf past x ~ 713, which is the correct IEEE answer.
    return std::exp(x) * detail::bessel_i0e_asymptotic(x);
}

/// Exponentially scaled Bessel function, e^{-x} I0(x). Never overflows.
inline double bessel_i0e(double x) {
    detail::require_nonnegative_finite(x, "bessel_i0e");
    if (x <= detail::kBesselSeriesLimit) return std::exp(-x) * detail::bessel_i0_series(x);
    return detail::bessel_i0e_asymptotic(x);
}

/// Density of the noncentral chi-squared law with two degrees of freedom,
/// f(z; lambda) = 1/2 exp(-(z + lambda)/2) I0(sqrt(lambda z)).
inline double ncx2_pdf(double z, double lambda) {
    detail::require_nonnegative(z, "ncx2_pdf");
    detail::require_nonnegative_finite(lambda, "ncx2_pdf");
    if (std::isinf(z)) return 0.0;
    // -(z + lambda)/2 + sqrt(lambda z) = -(sqrt z - sqrt lambda)^2 / 2
    const double s = std::sqrt(lambda * z);
    const double d = std::sqrt(z) - std::sqrt(lambda);
    return 0.5 * std::exp(-0.5 * d * d) * bessel_i0e(s);
}

namespace detail {

// Pr{N <= M} for independent N ~ Poisson(nu), M ~ Poisson(mu).
//
// Conditioning on M gives the Poisson mixture of central chi-squared
// survival functions:
//   Pr{chi2(2, 2 mu) > 2 nu} = sum_k Pois(k; mu) Pr{chi2(2 + 2k) > 2 nu}
//                            = sum_k Pois(k; mu) Pr{N <= k}.
// Summation starts at the mode of M and walks outward. Each direction stops
// once the geometric bound on the remaining Poisson weight (times S_k <= 1)
// drops below kTailEps.
inline double poisson_mixture_sf(double mu, double nu) {
    constexpr double kTailEps = 1e-17;
    if (nu == 0.0) return 1.0;
    if (std::isinf(nu)) return 0.0;
    if (mu == 0.0) return std::exp(-nu);

    const double log_mu = std::log(mu);
    const double log_nu = std::log(nu);
    const auto k0 = static_cast<long>(std::floor(mu));
    const auto log_pois = [](double k, double log_mean, double mean) {
        return -mean + k * log_mean - std::lgamma(k + 1.0);
    };

    // S_{k0} = Pr{N <= k0}, summed from the largest term downward/upward.
    double s0;
    {
        const long start = std::min<long>(k0, static_cast<long>(std::floor(nu)));
        CompensatedSum acc;
        double lp = log_pois(static_cast<double>(start), log_nu, nu);
        const double peak = std::exp(lp);
        acc += peak;
        for (long j = start; j > 0; --j) {
            lp += std::log(static_cast<double>(j)) - log_nu;
            const double t = std::exp(lp);
            acc += t;
            if (t < 1e-19 * acc.value()) break;
        }
        lp = log_pois(static_cast<double>(start), log_nu, nu);
        for (long j = start + 1; j <= k0; ++j) {
            lp += log_nu - std::log(static_cast<double>(j));
            const double t = std::exp(lp);
            acc += t;
            if (t < 1e-19 * acc.value()) break;
        }
        s0 = std::min(1.0, acc.value());
    }

    const double lw0 = log_pois(static_cast<double>(k0), log_mu, mu);
    const double lp0 = log_pois(static_cast<double>(k0), log_nu, nu);

    CompensatedSum total;
    total += std::exp(lw0) * s0;

    // Forward: k = k0+1, k0+2, ...
    {
        double lw = lw0, lp = lp0, s = s0;
        for (long k = k0 + 1;; ++k) {
            const double kd = static_cast<double>(k);
            lw += log_mu - std::log(kd);
            lp += log_nu - std::log(kd);
            s = std::min(1.0, s + std::exp(lp));
            const double w = std::exp(lw);
            total += w * s;
            // sum_{j>k} w_j <= w_{k+1} / (1 - mu/(k+2))
            const double next = w * mu / (kd + 1.0);
            const double ratio = mu / (kd + 2.0);
            if (ratio < 1.0 && next / (1.0 - ratio) < kTailEps) break;
        }
    }
    // Backward: k = k0-1, ..., 0
    {
        double lw = lw0, lp = lp0, s = s0;
        for (long k = k0 - 1; k >= 0; --k) {
            const double kd = static_cast<double>(k);
            // S_k = S_{k+1} - Pr{N = k+1}
            s = std::max(0.0, s - std::exp(lp));
            lw += std::log(kd + 1.0) - log_mu;
            lp += std::log(kd + 1.0) - log_nu;
            const double w = std::exp(lw);
            total += w * s;
            // sum_{j<k} w_j <= w_{k-1} / (1 - (k-1)/mu)
            if (k == 0) break;
            const double prev = w * kd / mu;
            const double ratio = (kd - 1.0) / mu;
            if (prev / (1.0 - ratio) < kTailEps) break;
        }
    }
    return std::clamp(total.value(), 0.0, 1.0);
}

} // namespace detail

/// Survival function Pr{chi2(2, lambda) > t}.
inline double ncx2_sf(double t, double lambda) {
    detail::require_nonnegative(t, "ncx2_sf");
    detail::require_nonnegative_finite(lambda, "ncx2_sf");
    return detail::poisson_mixture_sf(0.5 * lambda, 0.5 * t);
}

/// First-order Marcum Q-function, Q1(a, b) = Pr{chi2(2, a^2) > b^2}.
inline double marcum_q1(double a, double b) {
    detail::require_nonnegative_finite(a, "marcum_q1");
    detail::require_nonnegative(b, "marcum_q1");
    return detail::poisson_mixture_sf(0.5 * a * a, 0.5 * b * b);
}

struct QuadratureSpec {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_depth = 50;

    void validate() const {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
            throw DomainError("QuadratureSpec: tolerances must be positive");
        if (max_depth < 1) throw DomainError("QuadratureSpec: max_depth must be at least 1");
    }
};

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    long evaluations = 0;
};

namespace detail {

struct KronrodEstimate {
    double value;
    double error;
};

// 7-point Gauss / 15-point Kronrod pair on [a, b].
template <class F>
KronrodEstimate gauss_kronrod_15(const F& f, double a, double b) {
    static constexpr std::array<double, 8> xgk = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
    static constexpr std::array<double, 8> wgk = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static constexpr std::array<double, 4> wg = {
        0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = fc * wgk[7];
    double gauss = fc * wg[3];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * xgk[j];
        const double sum = f(center - dx) + f(center + dx);
        kronrod += wgk[j] * sum;
        if (j % 2 == 1) gauss += wg[j / 2] * sum;
    }
    return {kronrod * half, std::abs((kronrod - gauss) * half)};
}

struct Panel {
    double a, b, value, error;
    int depth;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
QuadratureResult integrate_finite(const F& f, double a, double b, const QuadratureSpec& spec) {
    constexpr long kMaxPanels = 200000;
    std::vector<Panel> open;   // max-heap on error
    QuadratureResult out;

    const auto first = gauss_kronrod_15(f, a, b);
    out.evaluations = 15;
    open.push_back({a, b, first.value, first.error, 0});

    double frozen_value = 0.0, frozen_error = 0.0;
    const auto totals = [&] {
        CompensatedSum value, error;
        for (const auto& p : open) {
            value += p.value;
            error += p.error;
        }
        value += frozen_value;
        error += frozen_error;
        return std::pair{value.value(), error.value()};
    };
    const auto target = [&](double value) { return std::max(spec.abs_tol, spec.rel_tol * std::abs(value)); };

    double total_value = first.value;
    double total_error = first.error;
    long panels = 1;
    while (total_error > target(total_value)) {
        // Frozen panels alone above the target: no amount of splitting helps.
        if (open.empty() || panels >= kMaxPanels || frozen_error > target(total_value)) {
            std::tie(total_value, total_error) = totals();
            throw ConvergenceError("integrate: subdivision limit reached before tolerance was met",
                                   total_value, total_error);
        }
        std::pop_heap(open.begin(), open.end());
        const Panel worst = open.back();
        open.pop_back();
        if (worst.depth >= spec.max_depth) {
            frozen_value += worst.value;
            frozen_error += worst.error;
            continue;
        }
        const double mid = 0.5 * (worst.a + worst.b);
        const auto left = gauss_kronrod_15(f, worst.a, mid);
        const auto right = gauss_kronrod_15(f, mid, worst.b);
        out.evaluations += 30;
        ++panels;
        open.push_back({worst.a, mid, left.value, left.error, worst.depth + 1});
        std::push_heap(open.begin(), open.end());
        open.push_back({mid, worst.b, right.value, right.error, worst.depth + 1});
        std::push_heap(open.begin(), open.end());
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        // Refresh the running totals now and then to shed accumulated drift.
        if ((panels & (panels - 1)) == 0 || panels % 4096 == 0) std::tie(total_value, total_error) = totals();
    }
    std::tie(out.value, out.error) = totals();
    return out;
}

} // namespace detail

/// Adaptive Gauss-Kronrod (7/15) integration of f over [a, b].
///
/// The upper limit may be +infinity, in which case the interval is mapped
/// onto (0, 1] with x = a + (1 - u)/u. Panels are bisected in order of their
/// error estimate until the summed estimate meets the tolerance. Throws
/// ConvergenceError (carrying the best estimate) when every panel above the
/// tolerance has reached spec.max_depth.
template <class F>
QuadratureResult integrate(const F& f, double a, double b, const QuadratureSpec& spec = {}) {
    spec.validate();
    if (std::isnan(a) || std::isnan(b)) throw DomainError("integrate: NaN limit");
    if (std::isinf(a)) throw DomainError("integrate: lower limit must be finite");
    if (a == b) return {};
    if (b < a) {
        auto r = integrate(f, b, a, spec);
        r.value = -r.value;
        return r;
    }
    if (std::isinf(b)) {
        const auto mapped = [&](double u) {
            const double x = a + (1.0 - u) / u;
            if (std::isinf(x)) return 0.0;
            return f(x) / (u * u);
        };
        return detail::integrate_finite(mapped, 0.0, 1.0, spec);
    }
    return detail::integrate_finite(f, a, b, spec);
}

} // namespace outage::numerics
