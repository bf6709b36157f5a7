#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "percept/errors.hpp"

namespace percept {

// Seed derivation and random drawing are implemented from scratch on top of
// splitmix64 so that every value is reproducible bit-for-bit across platforms
// and standard-library versions. All experiment randomness flows through this
// header; nothing else in the library touches a global RNG.

/// splitmix64 finalizer; bijective on 64-bit values.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a over a byte string.
constexpr std::uint64_t hash64(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : text) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Stable seed derivation: mixes a component into a base seed. Chains of
/// derive_seed calls define every per-participant / per-episode / per-run
/// random stream in the project.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t component) {
    return splitmix64_mix(base ^ (component + 0x9e3779b97f4a7c15ULL + (base << 6) + (base >> 2)));
}

constexpr std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
    return derive_seed(base, hash64(tag));
}

template <typename First, typename Second, typename... Rest>
constexpr std::uint64_t derive_seed(std::uint64_t base, First first, Second second, Rest... rest) {
    return derive_seed(derive_seed(base, first), second, rest...);
}

/// Deterministic random stream (splitmix64 sequence).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Unbiased uniform integer in [0, n); rejection sampling.
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw InvalidArgument("Rng::next_below: n must be positive");
        const std::uint64_t threshold = (0ULL - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    /// Uniform integer in [lo, hi] inclusive.
    long long next_int(long long lo, long long hi) {
        if (lo > hi) throw InvalidArgument("Rng::next_int: empty range");
        return lo + static_cast<long long>(
                        next_below(static_cast<std::uint64_t>(hi - lo) + 1ULL));
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    /// Box-Muller transform.
    double gaussian(double mean, double sd) {
        const double u1 = 1.0 - next_double();  // (0, 1]
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sd * r * std::cos(2.0 * M_PI * u2);
    }

    bool bernoulli(double p) { return next_double() < p; }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[next_below(i)]);
        }
    }

    /// k distinct indices drawn uniformly from [0, n), in shuffled order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        if (k > n) throw InvalidArgument("sample_without_replacement: k exceeds population");
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        // Partial Fisher-Yates: the first k slots end up uniformly sampled.
        for (std::size_t i = 0; i < k; ++i) {
            std::swap(pool[i], pool[i + next_below(n - i)]);
        }
        pool.resize(k);
        return pool;
    }

private:
    std::uint64_t state_;
};

}  // namespace percept
