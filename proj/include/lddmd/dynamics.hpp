#pragma once

// Block-diagonal rotation dynamics: d/2 blocks e^{-mu dt} R(omega dt).

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lddmd/ad.hpp"
#include "lddmd/errors.hpp"
#include "lddmd/scalar_math.hpp"

namespace lddmd {

template <class T>
struct BlockRotationDynamics {
    std::vector<T> omegas;  // angular frequency per block [rad / time]
    std::vector<T> mus;     // decay rate per block [1 / time]
    double dt = 1.0;        // observation interval [time]

    std::size_t dim() const { return 2 * omegas.size(); }

    void validate() const {
        if (omegas.size() != mus.size()) {
            throw ShapeError("dynamics: " + std::to_string(omegas.size()) + " omegas but " +
                             std::to_string(mus.size()) + " mus");
        }
        if (!(dt > 0.0)) {
            throw ConfigError("dynamics: dt must be positive");
        }
    }
};

/// K^j v in closed form: block i is rotated by j * omega_i * dt (reduced
/// modulo 2 pi) and scaled by exp(-j * mu_i * dt).
template <class T>
std::vector<T> apply_power(const BlockRotationDynamics<T>& k, std::uint64_t j, std::span<const T> v) {
    using std::cos;
    using std::exp;
    using std::sin;
    if (v.size() != k.dim()) {
        throw ShapeError("dynamics: vector has length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(k.dim()));
    }
    const double steps = static_cast<double>(j);
    std::vector<T> out(v.size());
    for (std::size_t b = 0; b < k.omegas.size(); ++b) {
        const T angle = wrap_angle(k.omegas[b] * k.dt * steps);
        const T c = cos(angle);
        const T s = sin(angle);
        const T scale = exp(-(k.mus[b] * k.dt * steps));
        const T& v0 = v[2 * b];
        const T& v1 = v[2 * b + 1];
        out[2 * b] = scale * (c * v0 - s * v1);
        out[2 * b + 1] = scale * (s * v0 + c * v1);
    }
    return out;
}

/// One application of K.
template <class T>
std::vector<T> apply(const BlockRotationDynamics<T>& k, std::span<const T> v) {
    return apply_power(k, 1, v);
}

/// Dense row-major dim x dim matrix of K.
std::vector<double> dense_matrix(const BlockRotationDynamics<double>& k);

enum class FrequencyUnits {
    Angular,  // 2 pi k / (N dt)
    Cycles,   // k / (N dt), the value a Fourier frequency axis reports
};

/// The latent_dim/2 strongest non-DC, non-Nyquist DFT bins of the
/// mean-removed sequence, ordered by decreasing magnitude (ties: lower
/// frequency first), converted to frequencies in the requested units.
std::vector<double> spectral_init(std::span<const double> y, std::size_t latent_dim, double dt,
                                  FrequencyUnits units = FrequencyUnits::Angular);

}  // namespace lddmd
