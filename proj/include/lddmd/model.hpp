#pragma once

// LDDMD prediction map
//
//     y^j = g( phi^{-1}( K^j z0 - f(x^j) ) )
//
// where K is block-rotation dynamics, z0 a learned initial latent vector, f
// the coupling network, phi an additive coupling layer and g the readout.
// Because the latent recursion telescopes, the prediction at time j depends
// only on (j, x^j), so training samples are independent of each other.
//
// DDMD (no latent variables) conjugates the rotation by a diffeomorphism:
//
//     x^j = psi^{-1}( K psi(x^{j-1}) ) = psi^{-1}( K^j psi(x^0) )

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lddmd/ad.hpp"
#include "lddmd/data.hpp"
#include "lddmd/dynamics.hpp"
#include "lddmd/errors.hpp"
#include "lddmd/maps.hpp"

namespace lddmd {

/// Architecture of an LDDMD model; everything except parameter values.
struct LddmdShape {
    std::size_t input_dim = 0;               // d
    std::size_t latent_dim = 0;              // d_c, even
    std::size_t output_dim = 1;              // m
    std::size_t coupling_hidden_layers = 2;  // l_f
    std::size_t coupling_hidden_dim = 2;     // d_f
    std::size_t readout_hidden_dim = 4;      // d_g
    CouplingParity parity = CouplingParity::Odd;
    double dt = 1.0;

    void validate() const;
    bool operator==(const LddmdShape&) const = default;
};

template <class T>
struct LddmdModel {
    AdditiveCoupling<T> phi;
    PolyMlp<T> f;
    Readout<T> g;
    BlockRotationDynamics<T> dynamics;
    std::vector<T> z0;

    std::size_t input_dim() const { return f.input_dim(); }
    std::size_t latent_dim() const { return phi.dim; }
    std::size_t output_dim() const { return g.output_dim(); }
};

/// Parameter groups, in the order for_each_parameter visits them.
enum class ParamGroup { Phi, Coupling, Readout, Omega, Mu, Z0 };

std::string_view to_string(ParamGroup group);

/// Visits every parameter as fn(ParamGroup, T&) in a fixed order.
template <class Model, class Fn>
void for_each_parameter(Model& m, Fn&& fn) {
    m.phi.visit([&](auto& p) { fn(ParamGroup::Phi, p); });
    m.f.visit([&](auto& p) { fn(ParamGroup::Coupling, p); });
    m.g.visit([&](auto& p) { fn(ParamGroup::Readout, p); });
    for (auto& w : m.dynamics.omegas) fn(ParamGroup::Omega, w);
    for (auto& mu : m.dynamics.mus) fn(ParamGroup::Mu, mu);
    for (auto& z : m.z0) fn(ParamGroup::Z0, z);
}

/// A model of the given shape with every parameter value-initialized.
template <class T>
LddmdModel<T> make_model(const LddmdShape& shape) {
    shape.validate();
    LddmdModel<T> m;
    m.phi = make_coupling<T>(shape.latent_dim, shape.parity);
    m.f = make_polymlp<T>(shape.input_dim, shape.coupling_hidden_layers, shape.coupling_hidden_dim,
                          shape.latent_dim);
    m.g = make_readout<T>(shape.latent_dim, shape.readout_hidden_dim, shape.output_dim);
    m.dynamics.omegas.assign(shape.latent_dim / 2, T{});
    m.dynamics.mus.assign(shape.latent_dim / 2, T{});
    m.dynamics.dt = shape.dt;
    m.z0.assign(shape.latent_dim, T{});
    return m;
}

template <class T>
LddmdShape shape_of(const LddmdModel<T>& m) {
    LddmdShape s;
    s.input_dim = m.f.input_dim();
    s.latent_dim = m.phi.dim;
    s.output_dim = m.g.output_dim();
    s.coupling_hidden_layers = m.f.layers.size() - 1;
    s.coupling_hidden_dim = m.f.layers.size() > 1 ? m.f.layers.front().outputs : 0;
    s.readout_hidden_dim = m.g.hidden.outputs;
    s.parity = m.phi.parity;
    s.dt = m.dynamics.dt;
    return s;
}

/// Checks that all component dimensions agree with each other.
void validate(const LddmdModel<double>& m);

/// Total number of parameters for a shape (mu included, learnable or not):
///   phi      3 d_c/2
///   f        sum over hidden layers (in*d_f + d_f + 3 d_f) + d_f_last*d_c + d_c
///   g        d_c*d_g + d_g + d_g*m + m
///   omega    d_c/2
///   mu       d_c/2
///   z0       d_c
std::size_t parameter_count(const LddmdShape& shape);

/// Parameter values in for_each_parameter order.
std::vector<double> get_parameters(const LddmdModel<double>& m);
void set_parameters(LddmdModel<double>& m, std::span<const double> values);
/// Group of each parameter slot, same order.
std::vector<ParamGroup> parameter_groups(const LddmdModel<double>& m);

/// Copies the model onto a tape; every parameter becomes a tape variable, in
/// for_each_parameter order, so tape.gradient() lines up with get_parameters().
LddmdModel<ad::Var> lift(const LddmdModel<double>& m, ad::Tape& tape);

/// phi^{-1}(K^j z0 - f(x^j)). O(1) in j.
template <class T>
std::vector<T> latent_state(const LddmdModel<T>& m, std::uint64_t j, std::span<const double> x) {
    if (x.size() != m.input_dim()) {
        throw ShapeError("latent_state: input has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(m.input_dim()));
    }
    std::vector<T> u = apply_power(m.dynamics, j, std::span<const T>(m.z0));
    const std::vector<T> fx = polymlp_forward(m.f, x);
    for (std::size_t i = 0; i < u.size(); ++i) {
        u[i] = u[i] - fx[i];
    }
    return coupling_inverse(m.phi, std::span<const T>(u));
}

/// g(latent_state(j, x^j)).
template <class T>
std::vector<T> predict(const LddmdModel<T>& m, std::uint64_t j, std::span<const double> x) {
    const std::vector<T> z = latent_state(m, j, x);
    return readout_forward(m.g, std::span<const T>(z));
}

enum class LossMode {
    Norm,     // sum_j ||y^j - yhat^j||_2
    Squared,  // sum_j ||y^j - yhat^j||_2^2
};

namespace detail {
/// ||r||_2 or ||r||_2^2 of a residual vector. The norm's derivative at a zero
/// residual is taken as 0.
template <class T>
T residual_norm(const std::vector<T>& r, LossMode mode) {
    using std::sqrt;
    T acc = square(r[0]);
    for (std::size_t i = 1; i < r.size(); ++i) {
        acc = acc + square(r[i]);
    }
    return mode == LossMode::Norm ? sqrt(acc) : acc;
}
}  // namespace detail

/// Training loss summed over the given dataset rows.
template <class T>
T loss(const LddmdModel<T>& m, const TimeSeriesDataset& data, std::span<const std::size_t> rows,
       LossMode mode = LossMode::Norm) {
    if (rows.empty()) {
        throw ConfigError("loss: empty batch");
    }
    if (data.output_dim() != m.output_dim()) {
        throw ShapeError("loss: dataset has " + std::to_string(data.output_dim()) + " targets, model predicts " +
                         std::to_string(m.output_dim()));
    }
    T total{};
    for (std::size_t b = 0; b < rows.size(); ++b) {
        const std::size_t r = rows[b];
        if (r >= data.size()) {
            throw ShapeError("loss: row " + std::to_string(r) + " outside dataset of size " +
                             std::to_string(data.size()));
        }
        std::vector<T> yhat = predict(m, data.time_index(r), data.inputs.row(r));
        const auto y = data.targets.row(r);
        for (std::size_t k = 0; k < yhat.size(); ++k) {
            yhat[k] = y[k] - yhat[k];
        }
        const T term = detail::residual_norm(yhat, mode);
        total = b == 0 ? term : total + term;
    }
    return total;
}

/// The one-step recursion
///   z^r = phi^{-1}( K (f(x^{r-1}) + phi(z^{r-1})) - f(x^r) )
/// started from z^0 = z0_raw at the dataset's first row. Agrees with
/// latent_state when z0_raw = latent_state(t0, x^0).
std::vector<std::vector<double>> latent_recursive(const LddmdModel<double>& m, const TimeSeriesDataset& data,
                                                  std::span<const double> z0_raw);

/// Predictions for every row, evaluated column-wise with the SIMD kernels.
/// Bit-identical to calling predict<double> row by row.
Matrix predict_series(const LddmdModel<double>& m, const TimeSeriesDataset& data);

/// Latent states for every row (N x d_c), evaluated like predict_series.
Matrix latent_series(const LddmdModel<double>& m, const TimeSeriesDataset& data);

// ---------------------------------------------------------------------------
// DDMD

template <class T, class Diffeo = AdditiveCoupling<T>>
struct DdmdModel {
    Diffeo psi;
    BlockRotationDynamics<T> dynamics;
};

/// psi^{-1}(K psi(x)).
template <class T, class Diffeo>
std::vector<T> ddmd_step(const DdmdModel<T, Diffeo>& m, std::span<const T> x) {
    const std::vector<T> v = diffeo_forward(m.psi, x);
    const std::vector<T> kv = lddmd::apply(m.dynamics, std::span<const T>(v));
    return diffeo_inverse(m.psi, std::span<const T>(kv));
}

/// psi^{-1}(K^j psi(x0)).
template <class T, class Diffeo>
std::vector<T> ddmd_rollout(const DdmdModel<T, Diffeo>& m, std::uint64_t j, std::span<const T> x0) {
    const std::vector<T> v = diffeo_forward(m.psi, x0);
    const std::vector<T> kv = apply_power(m.dynamics, j, std::span<const T>(v));
    return diffeo_inverse(m.psi, std::span<const T>(kv));
}

template <class Model, class Fn>
void for_each_ddmd_parameter(Model& m, Fn&& fn) {
    m.psi.visit([&](auto& p) { fn(ParamGroup::Phi, p); });
    for (auto& w : m.dynamics.omegas) fn(ParamGroup::Omega, w);
    for (auto& mu : m.dynamics.mus) fn(ParamGroup::Mu, mu);
}

DdmdModel<ad::Var> lift(const DdmdModel<double>& m, ad::Tape& tape);

/// sum over rows r >= 1 of ||x^r - psi^{-1}(K^r psi(x^0))|| for a state
/// series whose first row is the initial condition. Rows are offsets from the
/// first row.
template <class T>
T ddmd_loss(const DdmdModel<T>& m, const Matrix& series, std::span<const std::size_t> rows,
            LossMode mode = LossMode::Norm);

}  // namespace lddmd
