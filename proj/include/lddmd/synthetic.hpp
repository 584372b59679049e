#pragma once

// Reference system used for the synthetic experiment: a 2-d periodic input
// x, a 2-d latent z driven by x through a coupling, and a scalar softplus
// readout y = g(z).
//
//   psi1(x) = (2 (x1 - sin x2), x2 / 4)          x rotates at pi/100 per step
//   psi2(z) = (2 (z1 - z2^2 - 3), 3 z2)          z rotates at pi/(100 sqrt 10)
//   f(x)    = (x1^2 + x2^2, x1 - x2)
//   g(z)    = softplus(-z1 - 3/4 z2 + 3/2)
//
//   (x^j, z^j) = Phi^{-1} K Phi (x^{j-1}, z^{j-1}),  Phi(x, z) = (psi1(x), f(x) + psi2(z))
//   (x^0, z^0) = Phi^{-1}((0, 1), (1, 1))

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

#include "lddmd/data.hpp"
#include "lddmd/model.hpp"

namespace lddmd {

struct SyntheticConfig {
    std::size_t n_steps = 2000;
    double noise_sigma_y = 0.05;  // fraction of the clean target's standard deviation
    double noise_sigma_x = 0.0;   // fraction of the clean inputs' pooled standard deviation
    std::uint64_t seed = 0;

    void validate() const;
};

struct SyntheticData {
    TimeSeriesDataset clean;
    TimeSeriesDataset noisy;
    Matrix latent;          // N x 2 ground-truth z-series
    double sigma_x = 0.0;   // absolute noise levels actually applied
    double sigma_y = 0.0;
};

SyntheticData generate_synthetic(const SyntheticConfig& config);

namespace synthetic {

inline constexpr double kOmegaInput = std::numbers::pi / 100.0;
inline const double kOmegaLatent = std::numbers::pi / (100.0 * std::sqrt(10.0));

using Vec2 = std::array<double, 2>;

Vec2 psi1(const Vec2& x);
Vec2 psi1_inverse(const Vec2& u);
Vec2 psi2(const Vec2& z);
Vec2 psi2_inverse(const Vec2& v);
Vec2 coupling(const Vec2& x);
double readout(const Vec2& z);

/// psi1 as a DDMD diffeomorphism.
struct Psi1 {};
std::vector<double> diffeo_forward(const Psi1&, std::span<const double> x);
std::vector<double> diffeo_inverse(const Psi1&, std::span<const double> u);

/// The x-dynamics as a DDMD model: psi1 conjugating a rotation by pi/100.
DdmdModel<double, Psi1> input_dynamics();

/// The reference system written exactly in LDDMD form. psi2 alone is not an
/// additive coupling layer, but it factors as an affine map of z followed by
/// an even-parity coupling with p(s) = -s^2 / 18, and the affine part folds
/// into the readout: y = softplus(-w1/2 - w2/4 - 3/2). f is one hidden layer
/// of width 3 (x1^2, x2^2, x1 - x2), z0 = (1, 1), and the readout has width 1.
LddmdModel<double> ground_truth_model();

/// Maps the wrapped model's latent state w back to the reference z:
/// z = (w1 / 2 + 3, w2 / 3).
Vec2 latent_from_model(const Vec2& w);

}  // namespace synthetic

}  // namespace lddmd
