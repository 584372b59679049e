#pragma once

// Random streams with results fixed by the seed alone. The standard engines
// are fully specified, but std::*_distribution and std::shuffle are not, so
// the transforms to uniform/normal deviates and permutations live here.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace lddmd {

/// splitmix64 finalizer; also a counter-based generator: mix(seed + k).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (the second deviate is cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Permutation of 0..n-1 determined by (seed, stream); Fisher-Yates driven by
/// a counter-based hash so each epoch's order is independent of the others.
inline std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed, std::uint64_t stream) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = i;
    }
    const std::uint64_t base = splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ull));
    for (std::size_t i = n; i > 1; --i) {
        // 128-bit multiply-shift maps a 64-bit draw onto [0, i).
        const std::uint64_t draw = splitmix64(base + i);
        const auto j = static_cast<std::size_t>((static_cast<unsigned __int128>(draw) * i) >> 64);
        std::swap(p[i - 1], p[j]);
    }
    return p;
}

}  // namespace lddmd
