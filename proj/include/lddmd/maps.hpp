#pragma once

// The learnable maps of the model, templated on the scalar type so one
// definition serves plain evaluation (double) and differentiation (ad::Var).
//
//   AdditiveCoupling  invertible map: one parity passes through, each entry of
//                     the other parity is shifted by a quadratic of the sum of
//                     its two (circular) neighbours
//   PolyMlp           feedforward net with a learnable quadratic per hidden neuron
//   Readout           one softplus hidden layer, linear output

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lddmd/ad.hpp"
#include "lddmd/errors.hpp"
#include "lddmd/scalar_math.hpp"

namespace lddmd {

/// s -> a s^2 + b s + c
template <class T>
struct Poly2 {
    T a{};
    T b{};
    T c{};
};

template <class T, class S>
auto evaluate(const Poly2<T>& p, const S& s) {
    return (p.a * square(s) + p.b * s) + p.c;
}

/// Which coordinate parity the coupling layer modifies.
enum class CouplingParity { Odd, Even };

template <class T>
struct AdditiveCoupling {
    std::size_t dim = 0;
    CouplingParity parity = CouplingParity::Odd;
    std::vector<Poly2<T>> polys;  // one per modified index, ascending

    std::size_t modified_index(std::size_t k) const {
        return 2 * k + (parity == CouplingParity::Odd ? 1 : 0);
    }
    std::size_t left_neighbour(std::size_t i) const { return (i + dim - 1) % dim; }
    std::size_t right_neighbour(std::size_t i) const { return (i + 1) % dim; }

    void validate() const {
        if (dim == 0 || dim % 2 != 0) {
            throw ConfigError("coupling: dimension must be even and positive, got " + std::to_string(dim));
        }
        if (polys.size() != dim / 2) {
            throw ShapeError("coupling: expected " + std::to_string(dim / 2) + " polynomials, got " +
                             std::to_string(polys.size()));
        }
    }

    template <class Fn>
    void visit(Fn&& fn) {
        for (auto& p : polys) {
            fn(p.a);
            fn(p.b);
            fn(p.c);
        }
    }
    template <class Fn>
    void visit(Fn&& fn) const {
        for (const auto& p : polys) {
            fn(p.a);
            fn(p.b);
            fn(p.c);
        }
    }
};

/// Zero polynomials: the identity map.
template <class T>
AdditiveCoupling<T> make_coupling(std::size_t dim, CouplingParity parity = CouplingParity::Odd) {
    AdditiveCoupling<T> c;
    c.dim = dim;
    c.parity = parity;
    c.polys.assign(dim / 2, Poly2<T>{T{}, T{}, T{}});
    c.validate();
    return c;
}

namespace detail {
template <class T>
void check_length(std::size_t got, std::size_t want, const char* what) {
    if (got != want) {
        throw ShapeError(std::string(what) + ": input has length " + std::to_string(got) + ", expected " +
                         std::to_string(want));
    }
}
}  // namespace detail

template <class T>
std::vector<T> coupling_forward(const AdditiveCoupling<T>& phi, std::span<const T> x) {
    phi.validate();
    detail::check_length<T>(x.size(), phi.dim, "coupling_forward");
    std::vector<T> out(x.begin(), x.end());
    for (std::size_t k = 0; k < phi.polys.size(); ++k) {
        const std::size_t i = phi.modified_index(k);
        out[i] = x[i] + evaluate(phi.polys[k], x[phi.left_neighbour(i)] + x[phi.right_neighbour(i)]);
    }
    return out;
}

/// Exact inverse: the neighbours are unchanged by the forward map, so the
/// same shift can be recomputed from the output and subtracted.
template <class T>
std::vector<T> coupling_inverse(const AdditiveCoupling<T>& phi, std::span<const T> u) {
    phi.validate();
    detail::check_length<T>(u.size(), phi.dim, "coupling_inverse");
    std::vector<T> out(u.begin(), u.end());
    for (std::size_t k = 0; k < phi.polys.size(); ++k) {
        const std::size_t i = phi.modified_index(k);
        out[i] = u[i] - evaluate(phi.polys[k], u[phi.left_neighbour(i)] + u[phi.right_neighbour(i)]);
    }
    return out;
}

// Generic diffeomorphism interface used by DDMD.
template <class T>
std::vector<T> diffeo_forward(const AdditiveCoupling<T>& phi, std::span<const T> x) {
    return coupling_forward(phi, x);
}
template <class T>
std::vector<T> diffeo_inverse(const AdditiveCoupling<T>& phi, std::span<const T> u) {
    return coupling_inverse(phi, u);
}

/// Affine layer out = W in + b with W stored row-major (out x in) and an
/// optional per-neuron quadratic activation.
template <class T>
struct DenseLayer {
    std::size_t inputs = 0;
    std::size_t outputs = 0;
    std::vector<T> weights;
    std::vector<T> bias;
    std::vector<Poly2<T>> activation;  // empty: linear

    T& weight(std::size_t o, std::size_t i) { return weights[o * inputs + i]; }
    const T& weight(std::size_t o, std::size_t i) const { return weights[o * inputs + i]; }

    template <class Fn>
    void visit(Fn&& fn) {
        for (auto& w : weights) fn(w);
        for (auto& b : bias) fn(b);
        for (auto& p : activation) {
            fn(p.a);
            fn(p.b);
            fn(p.c);
        }
    }
    template <class Fn>
    void visit(Fn&& fn) const {
        for (const auto& w : weights) fn(w);
        for (const auto& b : bias) fn(b);
        for (const auto& p : activation) {
            fn(p.a);
            fn(p.b);
            fn(p.c);
        }
    }
};

template <class T>
DenseLayer<T> make_layer(std::size_t inputs, std::size_t outputs, bool poly_activation) {
    DenseLayer<T> l;
    l.inputs = inputs;
    l.outputs = outputs;
    l.weights.assign(inputs * outputs, T{});
    l.bias.assign(outputs, T{});
    if (poly_activation) {
        l.activation.assign(outputs, Poly2<T>{T{}, T{}, T{}});
    }
    return l;
}

/// Affine part of a layer; accumulates bias + sum_i w_i x_i left to right.
template <class T, class In>
std::vector<T> affine(const DenseLayer<T>& layer, std::span<const In> x) {
    detail::check_length<T>(x.size(), layer.inputs, "dense layer");
    std::vector<T> out;
    out.reserve(layer.outputs);
    for (std::size_t o = 0; o < layer.outputs; ++o) {
        T acc = layer.bias[o] + layer.weight(o, 0) * x[0];
        for (std::size_t i = 1; i < layer.inputs; ++i) {
            acc = acc + layer.weight(o, i) * x[i];
        }
        out.push_back(acc);
    }
    return out;
}

template <class T>
struct PolyMlp {
    std::vector<DenseLayer<T>> layers;  // hidden layers (quadratic activation), then linear output

    std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().inputs; }
    std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().outputs; }

    template <class Fn>
    void visit(Fn&& fn) {
        for (auto& l : layers) l.visit(fn);
    }
    template <class Fn>
    void visit(Fn&& fn) const {
        for (const auto& l : layers) l.visit(fn);
    }
};

template <class T>
PolyMlp<T> make_polymlp(std::size_t inputs, std::size_t hidden_layers, std::size_t hidden_dim,
                        std::size_t outputs) {
    if (inputs == 0 || outputs == 0 || (hidden_layers > 0 && hidden_dim == 0)) {
        throw ConfigError("polymlp: zero-width layer");
    }
    PolyMlp<T> net;
    std::size_t width = inputs;
    for (std::size_t l = 0; l < hidden_layers; ++l) {
        net.layers.push_back(make_layer<T>(width, hidden_dim, true));
        width = hidden_dim;
    }
    net.layers.push_back(make_layer<T>(width, outputs, false));
    return net;
}

template <class T, class In>
std::vector<T> polymlp_forward(const PolyMlp<T>& net, std::span<const In> x) {
    detail::check_length<T>(x.size(), net.input_dim(), "polymlp_forward");
    std::vector<T> h = affine(net.layers.front(), x);
    auto activate = [](const DenseLayer<T>& layer, std::vector<T>& v) {
        for (std::size_t o = 0; o < layer.activation.size(); ++o) {
            v[o] = evaluate(layer.activation[o], v[o]);
        }
    };
    activate(net.layers.front(), h);
    for (std::size_t l = 1; l < net.layers.size(); ++l) {
        h = affine(net.layers[l], std::span<const T>(h));
        activate(net.layers[l], h);
    }
    return h;
}

template <class T>
struct Readout {
    DenseLayer<T> hidden;  // softplus
    DenseLayer<T> output;  // linear

    std::size_t input_dim() const { return hidden.inputs; }
    std::size_t output_dim() const { return output.outputs; }

    template <class Fn>
    void visit(Fn&& fn) {
        hidden.visit(fn);
        output.visit(fn);
    }
    template <class Fn>
    void visit(Fn&& fn) const {
        hidden.visit(fn);
        output.visit(fn);
    }
};

template <class T>
Readout<T> make_readout(std::size_t inputs, std::size_t hidden_dim, std::size_t outputs) {
    if (inputs == 0 || hidden_dim == 0 || outputs == 0) {
        throw ConfigError("readout: zero-width layer");
    }
    return Readout<T>{make_layer<T>(inputs, hidden_dim, false), make_layer<T>(hidden_dim, outputs, false)};
}

template <class T>
std::vector<T> readout_forward(const Readout<T>& g, std::span<const T> z) {
    detail::check_length<T>(z.size(), g.input_dim(), "readout_forward");
    std::vector<T> h = affine(g.hidden, z);
    for (auto& v : h) {
        v = softplus(v);
    }
    return affine(g.output, std::span<const T>(h));
}

}  // namespace lddmd
