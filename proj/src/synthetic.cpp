#include "lddmd/synthetic.hpp"

#include <cmath>

#include "lddmd/errors.hpp"
#include "lddmd/scalar_math.hpp"

namespace lddmd {

void SyntheticConfig::validate() const {
    if (n_steps < 2) {
        throw ConfigError("synthetic: n_steps must be at least 2, got " + std::to_string(n_steps));
    }
    if (!(noise_sigma_y >= 0.0) || !(noise_sigma_x >= 0.0) || !std::isfinite(noise_sigma_y) ||
        !std::isfinite(noise_sigma_x)) {
        throw ConfigError("synthetic: noise levels must be finite and non-negative");
    }
}

namespace synthetic {

Vec2 psi1(const Vec2& x) { return {2.0 * (x[0] - std::sin(x[1])), x[1] / 4.0}; }

Vec2 psi1_inverse(const Vec2& u) { return {u[0] / 2.0 + std::sin(4.0 * u[1]), 4.0 * u[1]}; }

Vec2 psi2(const Vec2& z) { return {2.0 * (z[0] - z[1] * z[1] - 3.0), 3.0 * z[1]}; }

Vec2 psi2_inverse(const Vec2& v) {
    const double z2 = v[1] / 3.0;
    return {v[0] / 2.0 + z2 * z2 + 3.0, z2};
}

Vec2 coupling(const Vec2& x) { return {x[0] * x[0] + x[1] * x[1], x[0] - x[1]}; }

double readout(const Vec2& z) { return softplus(-z[0] - 0.75 * z[1] + 1.5); }

namespace {

Vec2 rotate(const Vec2& v, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * v[0] - s * v[1], s * v[0] + c * v[1]};
}

Vec2 to_vec2(std::span<const double> v, const char* what) {
    if (v.size() != 2) {
        throw ShapeError(std::string(what) + ": expected a 2-vector, got length " + std::to_string(v.size()));
    }
    return {v[0], v[1]};
}

}  // namespace

std::vector<double> diffeo_forward(const Psi1&, std::span<const double> x) {
    const Vec2 u = psi1(to_vec2(x, "psi1"));
    return {u[0], u[1]};
}

std::vector<double> diffeo_inverse(const Psi1&, std::span<const double> u) {
    const Vec2 x = psi1_inverse(to_vec2(u, "psi1 inverse"));
    return {x[0], x[1]};
}

DdmdModel<double, Psi1> input_dynamics() {
    DdmdModel<double, Psi1> m;
    m.dynamics.omegas = {kOmegaInput};
    m.dynamics.mus = {0.0};
    m.dynamics.dt = 1.0;
    return m;
}

LddmdModel<double> ground_truth_model() {
    LddmdShape shape;
    shape.input_dim = 2;
    shape.latent_dim = 2;
    shape.output_dim = 1;
    shape.coupling_hidden_layers = 1;
    shape.coupling_hidden_dim = 3;
    shape.readout_hidden_dim = 1;
    shape.parity = CouplingParity::Even;
    shape.dt = 1.0;
    LddmdModel<double> m = make_model<double>(shape);

    m.phi.polys[0] = {-1.0 / 18.0, 0.0, 0.0};

    auto& hidden = m.f.layers[0];
    hidden.weights = {1.0, 0.0, 0.0, 1.0, 1.0, -1.0};
    hidden.activation = {{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
    auto& out = m.f.layers[1];
    out.weights = {1.0, 1.0, 0.0, 0.0, 0.0, 1.0};

    m.dynamics.omegas = {kOmegaLatent};
    m.dynamics.mus = {0.0};
    m.z0 = {1.0, 1.0};

    m.g.hidden.weights = {-0.5, -0.25};
    m.g.hidden.bias = {-1.5};
    m.g.output.weights = {1.0};
    m.g.output.bias = {0.0};
    return m;
}

Vec2 latent_from_model(const Vec2& w) { return {w[0] / 2.0 + 3.0, w[1] / 3.0}; }

}  // namespace synthetic

namespace {

double population_std(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticConfig& config) {
    using namespace synthetic;
    config.validate();
    const std::size_t n = config.n_steps;

    SyntheticData out;
    TimeSeriesDataset& clean = out.clean;
    clean.inputs = Matrix(n, 2);
    clean.targets = Matrix(n, 1);
    clean.dt = 1.0;
    clean.t0_index = 0;
    clean.feature_names = {"x_1", "x_2"};
    clean.target_names = {"y"};
    out.latent = Matrix(n, 2);

    Vec2 x = psi1_inverse({0.0, 1.0});
    const Vec2 fx0 = coupling(x);
    Vec2 z = psi2_inverse({1.0 - fx0[0], 1.0 - fx0[1]});

    for (std::size_t j = 0; j < n; ++j) {
        clean.inputs(j, 0) = x[0];
        clean.inputs(j, 1) = x[1];
        out.latent(j, 0) = z[0];
        out.latent(j, 1) = z[1];
        clean.targets(j, 0) = readout(z);

        const Vec2 fx = coupling(x);
        const Vec2 pz = psi2(z);
        const Vec2 v = rotate(psi1(x), kOmegaInput);
        const Vec2 u = rotate({fx[0] + pz[0], fx[1] + pz[1]}, kOmegaLatent);
        x = psi1_inverse(v);
        const Vec2 fx_next = coupling(x);
        z = psi2_inverse({u[0] - fx_next[0], u[1] - fx_next[1]});
    }

    out.sigma_y = config.noise_sigma_y * population_std(clean.targets.data);
    out.sigma_x = config.noise_sigma_x * population_std(clean.inputs.data);
    out.noisy = add_noise(clean, out.sigma_x, out.sigma_y, config.seed);
    return out;
}

}  // namespace lddmd
