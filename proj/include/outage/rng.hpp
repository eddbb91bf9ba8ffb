#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace outage {

namespace detail {

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

/// Seeded random stream addressed by (seed, stream index).
///
/// The engine is SplitMix64; the starting state is a hash of the seed and
/// the stream index, so trial t of a Monte Carlo run always sees the same
/// numbers no matter which worker executes it. Gaussian variates come from
/// std::normal_distribution, fixed per build.
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream) noexcept
        : state_(detail::splitmix64_mix(seed + 0x9e3779b97f4a7c15ULL) ^
                 detail::splitmix64_mix(stream * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return detail::splitmix64_mix(state_);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Standard normal variate.
    double normal() { return normal_(*this); }

    /// Uniform integer on {0, ..., n-1}; n must be positive.
    std::uint64_t below(std::uint64_t n) {
        return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(*this);
    }

private:
    std::uint64_t state_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace outage
