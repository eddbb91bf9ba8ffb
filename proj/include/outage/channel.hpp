#pragma once

// Rayleigh block-fading channel with additive CSIT error, h = h_hat + w.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "outage/errors.hpp"
#include "outage/rng.hpp"

namespace outage::channel {

/// Per-user variances.
///
/// sigma2 is the configured channel variance and xi2 = E|w|^2 the CSIT
/// error power. The estimate h_hat has independent real and imaginary parts
/// with variance sigma_hat2() = sigma2 - xi2 each, so |h_hat|^2 is
/// exponential with mean 2 sigma_hat2. The error has per-component variance
/// xi2 / 2.
struct UserProfile {
    double sigma2 = 1.0;
    double xi2 = 0.0;

    double sigma_hat2() const noexcept { return sigma2 - xi2; }
    bool perfect_csit() const noexcept { return xi2 == 0.0; }
};

/// One slot's powers for every user: estimated |h_hat|^2 and true |h|^2.
struct SlotDraw {
    std::vector<double> gamma_hat;
    std::vector<double> gamma;
};

inline void validate_profiles(std::span<const UserProfile> profiles) {
    if (profiles.empty()) throw ConfigError("at least one user is required");
    for (std::size_t j = 0; j < profiles.size(); ++j) {
        const auto& u = profiles[j];
        if (!std::isfinite(u.sigma2) || !(u.sigma2 > 0.0))
            throw ConfigError(j, "sigma2", "must be positive and finite");
        if (!std::isfinite(u.xi2) || u.xi2 < 0.0)
            throw ConfigError(j, "xi2", "must be nonnegative and finite");
        if (u.xi2 > u.sigma2)
            throw ConfigError(j, "xi2", "must not exceed sigma2 (" + std::to_string(u.sigma2) + ")");
    }
}

/// Precomputed per-component standard deviations for fast slot generation.
class ChannelModel {
public:
    explicit ChannelModel(std::span<const UserProfile> profiles) {
        validate_profiles(profiles);
        estimate_sd_.reserve(profiles.size());
        error_sd_.reserve(profiles.size());
        for (const auto& u : profiles) {
            estimate_sd_.push_back(std::sqrt(u.sigma_hat2()));
            error_sd_.push_back(std::sqrt(0.5 * u.xi2));
        }
    }

    std::size_t users() const noexcept { return estimate_sd_.size(); }

    /// Fills `out` with one slot. Each user consumes exactly four normal
    /// variates (estimate re/im, then error re/im) whether or not its error
    /// is zero, which keeps streams aligned across error-variance sweeps.
    void draw(RngStream& rng, SlotDraw& out) const {
        const std::size_t k = users();
        out.gamma_hat.resize(k);
        out.gamma.resize(k);
        for (std::size_t j = 0; j < k; ++j) {
            const double hr = estimate_sd_[j] * rng.normal();
            const double hi = estimate_sd_[j] * rng.normal();
            const double wr = error_sd_[j] * rng.normal();
            const double wi = error_sd_[j] * rng.normal();
            out.gamma_hat[j] = hr * hr + hi * hi;
            const double tr = hr + wr;
            const double ti = hi + wi;
            out.gamma[j] = tr * tr + ti * ti;
        }
    }

private:
    std::vector<double> estimate_sd_;
    std::vector<double> error_sd_;
};

inline SlotDraw draw_slot(std::span<const UserProfile> profiles, RngStream& rng) {
    SlotDraw out;
    ChannelModel(profiles).draw(rng, out);
    return out;
}

/// log2(1 + rho * gamma), bits per channel use.
inline double achievable_rate(double gamma, double rho) {
    return std::log2(1.0 + rho * gamma);
}

} // namespace outage::channel
