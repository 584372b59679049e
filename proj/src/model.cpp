#include "lddmd/model.hpp"

#include <type_traits>

#include "lddmd/kernels.hpp"

namespace lddmd {

void LddmdShape::validate() const {
    if (input_dim == 0) {
        throw ConfigError("model: input dimension must be positive");
    }
    if (latent_dim == 0 || latent_dim % 2 != 0) {
        throw ConfigError("model: latent dimension must be even and positive, got " + std::to_string(latent_dim));
    }
    if (output_dim == 0) {
        throw ConfigError("model: output dimension must be positive");
    }
    if (coupling_hidden_layers > 0 && coupling_hidden_dim == 0) {
        throw ConfigError("model: coupling hidden dimension must be positive");
    }
    if (readout_hidden_dim == 0) {
        throw ConfigError("model: readout hidden dimension must be positive");
    }
    if (!(dt > 0.0)) {
        throw ConfigError("model: dt must be positive");
    }
}

std::string_view to_string(ParamGroup group) {
    switch (group) {
        case ParamGroup::Phi: return "phi";
        case ParamGroup::Coupling: return "f";
        case ParamGroup::Readout: return "g";
        case ParamGroup::Omega: return "omega";
        case ParamGroup::Mu: return "mu";
        case ParamGroup::Z0: return "z0";
    }
    return "?";
}

void validate(const LddmdModel<double>& m) {
    m.phi.validate();
    m.dynamics.validate();
    const std::size_t dc = m.phi.dim;
    if (m.f.layers.empty() || m.f.output_dim() != dc) {
        throw ShapeError("model: coupling network output must match latent dimension " + std::to_string(dc));
    }
    for (std::size_t l = 1; l < m.f.layers.size(); ++l) {
        if (m.f.layers[l].inputs != m.f.layers[l - 1].outputs) {
            throw ShapeError("model: coupling network layers do not chain");
        }
    }
    if (m.g.input_dim() != dc || m.g.output.inputs != m.g.hidden.outputs) {
        throw ShapeError("model: readout dimensions do not match latent dimension " + std::to_string(dc));
    }
    if (m.dynamics.dim() != dc || m.z0.size() != dc) {
        throw ShapeError("model: dynamics/z0 dimension does not match latent dimension " + std::to_string(dc));
    }
}

std::size_t parameter_count(const LddmdShape& s) {
    s.validate();
    const std::size_t dc = s.latent_dim;
    std::size_t count = 3 * dc / 2;
    std::size_t width = s.input_dim;
    for (std::size_t l = 0; l < s.coupling_hidden_layers; ++l) {
        count += width * s.coupling_hidden_dim + s.coupling_hidden_dim + 3 * s.coupling_hidden_dim;
        width = s.coupling_hidden_dim;
    }
    count += width * dc + dc;
    count += dc * s.readout_hidden_dim + s.readout_hidden_dim + s.readout_hidden_dim * s.output_dim + s.output_dim;
    count += dc / 2 + dc / 2 + dc;
    return count;
}

std::vector<double> get_parameters(const LddmdModel<double>& m) {
    std::vector<double> out;
    for_each_parameter(m, [&](ParamGroup, const double& p) { out.push_back(p); });
    return out;
}

void set_parameters(LddmdModel<double>& m, std::span<const double> values) {
    std::size_t i = 0;
    for_each_parameter(m, [&](ParamGroup, double& p) {
        if (i < values.size()) {
            p = values[i];
        }
        ++i;
    });
    if (i != values.size()) {
        throw ShapeError("set_parameters: model has " + std::to_string(i) + " parameters, got " +
                         std::to_string(values.size()));
    }
}

std::vector<ParamGroup> parameter_groups(const LddmdModel<double>& m) {
    std::vector<ParamGroup> out;
    for_each_parameter(m, [&](ParamGroup g, const double&) { out.push_back(g); });
    return out;
}

LddmdModel<ad::Var> lift(const LddmdModel<double>& m, ad::Tape& tape) {
    validate(m);
    LddmdModel<ad::Var> out = make_model<ad::Var>(shape_of(m));
    std::vector<ad::Var*> slots;
    for_each_parameter(out, [&](ParamGroup, ad::Var& v) { slots.push_back(&v); });
    std::size_t i = 0;
    for_each_parameter(m, [&](ParamGroup, const double& p) { *slots[i++] = tape.variable(p); });
    return out;
}

DdmdModel<ad::Var> lift(const DdmdModel<double>& m, ad::Tape& tape) {
    DdmdModel<ad::Var> out;
    out.psi = make_coupling<ad::Var>(m.psi.dim, m.psi.parity);
    out.dynamics.omegas.resize(m.dynamics.omegas.size());
    out.dynamics.mus.resize(m.dynamics.mus.size());
    out.dynamics.dt = m.dynamics.dt;
    std::vector<ad::Var*> slots;
    for_each_ddmd_parameter(out, [&](ParamGroup, ad::Var& v) { slots.push_back(&v); });
    std::size_t i = 0;
    for_each_ddmd_parameter(m, [&](ParamGroup, const double& p) { *slots[i++] = tape.variable(p); });
    return out;
}

std::vector<std::vector<double>> latent_recursive(const LddmdModel<double>& m, const TimeSeriesDataset& data,
                                                  std::span<const double> z0_raw) {
    if (data.size() == 0) {
        throw ConfigError("latent_recursive: empty dataset");
    }
    if (z0_raw.size() != m.latent_dim()) {
        throw ShapeError("latent_recursive: initial latent has length " + std::to_string(z0_raw.size()) +
                         ", expected " + std::to_string(m.latent_dim()));
    }
    std::vector<std::vector<double>> out;
    out.reserve(data.size());
    out.emplace_back(z0_raw.begin(), z0_raw.end());
    std::vector<double> f_prev = polymlp_forward(m.f, data.inputs.row(0));
    for (std::size_t r = 1; r < data.size(); ++r) {
        std::vector<double> u = coupling_forward(m.phi, std::span<const double>(out.back()));
        for (std::size_t i = 0; i < u.size(); ++i) {
            u[i] = f_prev[i] + u[i];
        }
        std::vector<double> ku = lddmd::apply(m.dynamics, std::span<const double>(u));
        std::vector<double> f_now = polymlp_forward(m.f, data.inputs.row(r));
        for (std::size_t i = 0; i < ku.size(); ++i) {
            ku[i] = ku[i] - f_now[i];
        }
        out.push_back(coupling_inverse(m.phi, std::span<const double>(ku)));
        f_prev = std::move(f_now);
    }
    return out;
}

namespace {

using Columns = std::vector<std::vector<double>>;

Columns dense_columns(const DenseLayer<double>& layer, const Columns& in, std::size_t n,
                      const kernels::KernelTable& kt) {
    Columns out(layer.outputs, std::vector<double>(n));
    for (std::size_t o = 0; o < layer.outputs; ++o) {
        auto& y = out[o];
        std::fill(y.begin(), y.end(), layer.bias[o]);
        for (std::size_t i = 0; i < layer.inputs; ++i) {
            kt.axpy(layer.weight(o, i), in[i].data(), y.data(), n);
        }
        if (!layer.activation.empty()) {
            const auto& p = layer.activation[o];
            kt.poly2(p.a, p.b, p.c, y.data(), y.data(), n);
        }
    }
    return out;
}

Columns latent_columns(const LddmdModel<double>& m, const TimeSeriesDataset& data,
                       const kernels::KernelTable& kt) {
    validate(m);
    if (data.input_dim() != m.input_dim()) {
        throw ShapeError("predict: dataset has " + std::to_string(data.input_dim()) + " features, model expects " +
                         std::to_string(m.input_dim()));
    }
    const std::size_t n = data.size();
    const std::size_t dc = m.latent_dim();

    // K^j z0, one block at a time.
    Columns u(dc, std::vector<double>(n));
    std::vector<double> cs(n), sn(n), sc(n);
    for (std::size_t b = 0; b < dc / 2; ++b) {
        const double omega = m.dynamics.omegas[b];
        const double mu = m.dynamics.mus[b];
        for (std::size_t r = 0; r < n; ++r) {
            const double steps = static_cast<double>(data.time_index(r));
            const double angle = wrap_angle(omega * m.dynamics.dt * steps);
            cs[r] = std::cos(angle);
            sn[r] = std::sin(angle);
            sc[r] = std::exp(-(mu * m.dynamics.dt * steps));
        }
        const std::vector<double> v0(n, m.z0[2 * b]);
        const std::vector<double> v1(n, m.z0[2 * b + 1]);
        kt.rotate(cs.data(), sn.data(), sc.data(), v0.data(), v1.data(), u[2 * b].data(), u[2 * b + 1].data(), n);
    }

    Columns h(data.input_dim());
    for (std::size_t c = 0; c < data.input_dim(); ++c) {
        h[c] = data.inputs.column(c);
    }
    for (const auto& layer : m.f.layers) {
        h = dense_columns(layer, h, n, kt);
    }
    for (std::size_t i = 0; i < dc; ++i) {
        kt.sub(u[i].data(), h[i].data(), u[i].data(), n);
    }

    // phi^{-1}: modified entries only read unmodified neighbours.
    std::vector<double> s(n);
    for (std::size_t k = 0; k < m.phi.polys.size(); ++k) {
        const std::size_t i = m.phi.modified_index(k);
        const auto& p = m.phi.polys[k];
        kt.add(u[m.phi.left_neighbour(i)].data(), u[m.phi.right_neighbour(i)].data(), s.data(), n);
        kt.poly2(p.a, p.b, p.c, s.data(), s.data(), n);
        kt.sub(u[i].data(), s.data(), u[i].data(), n);
    }
    return u;
}

Matrix to_matrix(const Columns& cols, std::size_t n) {
    Matrix out(n, cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        for (std::size_t r = 0; r < n; ++r) {
            out(r, c) = cols[c][r];
        }
    }
    return out;
}

}  // namespace

Matrix latent_series(const LddmdModel<double>& m, const TimeSeriesDataset& data) {
    const auto& kt = kernels::active();
    return to_matrix(latent_columns(m, data, kt), data.size());
}

Matrix predict_series(const LddmdModel<double>& m, const TimeSeriesDataset& data) {
    const auto& kt = kernels::active();
    const std::size_t n = data.size();
    Columns z = latent_columns(m, data, kt);
    Columns h = dense_columns(m.g.hidden, z, n, kt);
    for (auto& col : h) {
        kt.softplus(col.data(), col.data(), n);
    }
    return to_matrix(dense_columns(m.g.output, h, n, kt), n);
}

template <class T>
T ddmd_loss(const DdmdModel<T>& m, const Matrix& series, std::span<const std::size_t> rows, LossMode mode) {
    if (rows.empty()) {
        throw ConfigError("ddmd_loss: empty batch");
    }
    if (series.cols != m.psi.dim || series.rows == 0) {
        throw ShapeError("ddmd_loss: series has " + std::to_string(series.cols) + " columns, model dimension is " +
                         std::to_string(m.psi.dim));
    }
    std::vector<T> x0;
    x0.reserve(series.cols);
    for (double v : series.row(0)) {
        if constexpr (std::is_same_v<T, ad::Var>) {
            x0.push_back(m.dynamics.omegas.front().tape()->constant(v));
        } else {
            x0.push_back(v);
        }
    }
    T total{};
    for (std::size_t b = 0; b < rows.size(); ++b) {
        const std::size_t r = rows[b];
        if (r >= series.rows) {
            throw ShapeError("ddmd_loss: row " + std::to_string(r) + " outside series");
        }
        std::vector<T> pred = ddmd_rollout(m, r, std::span<const T>(x0));
        const auto x = series.row(r);
        for (std::size_t k = 0; k < pred.size(); ++k) {
            pred[k] = x[k] - pred[k];
        }
        const T term = detail::residual_norm(pred, mode);
        total = b == 0 ? term : total + term;
    }
    return total;
}

template double ddmd_loss<double>(const DdmdModel<double>&, const Matrix&, std::span<const std::size_t>, LossMode);
template ad::Var ddmd_loss<ad::Var>(const DdmdModel<ad::Var>&, const Matrix&, std::span<const std::size_t>,
                                    LossMode);

}  // namespace lddmd
