#include "lddmd/dynamics.hpp"

#include <algorithm>
#include <numbers>
#include <numeric>

#include "lddmd/kernels.hpp"

namespace lddmd {

std::vector<double> dense_matrix(const BlockRotationDynamics<double>& k) {
    k.validate();
    const std::size_t n = k.dim();
    std::vector<double> m(n * n, 0.0);
    for (std::size_t b = 0; b < k.omegas.size(); ++b) {
        const double angle = wrap_angle(k.omegas[b] * k.dt);
        const double scale = std::exp(-(k.mus[b] * k.dt));
        const double c = scale * std::cos(angle);
        const double s = scale * std::sin(angle);
        const std::size_t r = 2 * b;
        m[r * n + r] = c;
        m[r * n + r + 1] = -s;
        m[(r + 1) * n + r] = s;
        m[(r + 1) * n + r + 1] = c;
    }
    return m;
}

std::vector<double> spectral_init(std::span<const double> y, std::size_t latent_dim, double dt,
                                  FrequencyUnits units) {
    const std::size_t n = y.size();
    if (latent_dim == 0 || latent_dim % 2 != 0) {
        throw ConfigError("spectral_init: latent dimension must be even and positive, got " +
                          std::to_string(latent_dim));
    }
    if (!(dt > 0.0)) {
        throw ConfigError("spectral_init: dt must be positive");
    }
    if (n < latent_dim) {
        throw ConfigError("spectral_init: sequence of length " + std::to_string(n) +
                          " is shorter than the latent dimension " + std::to_string(latent_dim));
    }
    // Bins 1 .. (n-1)/2: excludes DC and, for even n, the Nyquist bin.
    const std::size_t usable = (n - 1) / 2;
    const std::size_t wanted = latent_dim / 2;
    if (wanted > usable) {
        throw ConfigError("spectral_init: " + std::to_string(wanted) + " frequencies requested but only " +
                          std::to_string(usable) + " usable DFT bins for length " + std::to_string(n));
    }

    // Rescale by a power of two so sums of squares cannot overflow; the
    // scaling is exact and leaves the ranking of the bins unchanged.
    double peak = 0.0;
    for (double v : y) {
        peak = std::max(peak, std::abs(v));
    }
    if (!std::isfinite(peak)) {
        throw ConfigError("spectral_init: sequence has non-finite values");
    }
    int exponent = 0;
    std::frexp(peak, &exponent);
    std::vector<double> scaled(n);
    for (std::size_t t = 0; t < n; ++t) {
        scaled[t] = std::ldexp(y[t], -exponent);
    }

    const auto& kt = kernels::active();
    const double mean = kt.sum(scaled.data(), n) / static_cast<double>(n);
    std::vector<double> centered(n);
    double energy = 0.0;
    double raw_energy = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        centered[t] = scaled[t] - mean;
        energy += centered[t] * centered[t];
        raw_energy += scaled[t] * scaled[t];
    }
    if (!(energy > 1e-24 * std::max(1.0, raw_energy))) {
        throw ConfigError("spectral_init: sequence has no energy away from zero frequency");
    }

    std::vector<double> cos_table(n);
    std::vector<double> sin_table(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
        cos_table[m] = std::cos(angle);
        sin_table[m] = std::sin(angle);
    }
    std::vector<double> power(usable);
    kt.dft_power(centered.data(), n, cos_table.data(), sin_table.data(), 1, usable + 1, power.data());

    std::vector<std::size_t> order(usable);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return power[a] > power[b]; });

    const double base = 1.0 / (static_cast<double>(n) * dt);
    const double factor = units == FrequencyUnits::Angular ? 2.0 * std::numbers::pi * base : base;
    std::vector<double> out;
    out.reserve(wanted);
    for (std::size_t i = 0; i < wanted; ++i) {
        out.push_back(factor * static_cast<double>(order[i] + 1));
    }
    return out;
}

}  // namespace lddmd
