#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace icp {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Mixes a base seed with a tag path (e.g. {repeat, fold}) so that every
/// component of an experiment draws from a decorrelated stream while the
/// whole run stays a function of one user-facing seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags) {
    std::uint64_t s = splitmix64(base);
    for (std::uint64_t t : tags) {
        s = splitmix64(s ^ splitmix64(t + 0x632BE59BD9B4E019ull));
    }
    return s;
}

/// Deterministic random source. mt19937_64 has a standardized output
/// sequence and the mappings below avoid std::*_distribution, whose results
/// are implementation-defined, so streams are reproducible everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    /// Unbiased uniform integer in [0, n); n must be positive.
    std::size_t next_index(std::size_t n) {
        const std::uint64_t span = static_cast<std::uint64_t>(n);
        const std::uint64_t rem = (std::numeric_limits<std::uint64_t>::max() % span + 1) % span;
        std::uint64_t x = engine_();
        if (rem != 0) {
            // accept x < 2^64 - rem; (0 - rem) wraps to exactly that bound
            while (x >= (0ull - rem)) x = engine_();
        }
        return static_cast<std::size_t>(x % span);
    }

    /// Standard normal via Box-Muller; no cached spare, so the stream
    /// position stays a simple function of the call count.
    double next_normal() {
        double u1 = next_unit();
        while (u1 <= 0.0) u1 = next_unit();
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Fisher-Yates, driven by next_index for portability.
    template <typename T>
    void shuffle(std::vector<T>& values) {
        for (std::size_t i = values.size(); i > 1; --i) {
            std::swap(values[i - 1], values[next_index(i)]);
        }
    }

    std::vector<std::size_t> permutation(std::size_t n) {
        std::vector<std::size_t> order(n);
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        shuffle(order);
        return order;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace icp
