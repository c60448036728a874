#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace lodada {

// Deterministic RNG with self-contained uniform/normal generation.
// std::mt19937_64 has a standard-mandated sequence, but the standard
// distributions do not, so doubles are derived here directly.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::size_t index(std::size_t n) {
        // Rejection-free modulo bias is negligible for n << 2^64; keep exact anyway.
        std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return static_cast<std::size_t>(x % n);
    }

    // Standard normal via Box-Muller; caches the second deviate.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        double u2 = uniform();
        double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * M_PI * u2);
        has_spare_ = true;
        return mag * std::cos(2.0 * M_PI * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

namespace detail {
inline constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ull;
    }
    return h;
}

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}
}  // namespace detail

// Derives an independent named stream from a master seed. Every stage of a
// run draws from its own stream so stages can be added, skipped, or
// parallelized without perturbing the others.
inline std::uint64_t substream(std::uint64_t master_seed, std::string_view label) {
    return detail::splitmix64(master_seed ^ detail::fnv1a64(label));
}

inline std::uint64_t substream(std::uint64_t master_seed, std::string_view label, std::uint64_t index) {
    return detail::splitmix64(substream(master_seed, label) + 0x9e3779b97f4a7c15ull * (index + 1));
}

}  // namespace lodada
