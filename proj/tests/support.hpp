#pragma once

// Helpers shared by the test programs: random models and datasets, scratch
// directories, and small independent oracles.

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "lddmd/data.hpp"
#include "lddmd/model.hpp"
#include "lddmd/rng.hpp"

namespace testing {

using namespace lddmd;

/// Every parameter drawn at a moderate scale so losses and gradients stay
/// well conditioned. mu stays 0.
inline LddmdModel<double> random_model(Rng& rng, const LddmdShape& shape) {
    LddmdModel<double> m = make_model<double>(shape);
    for (auto& p : m.phi.polys) {
        p = {rng.uniform(-0.2, 0.2), rng.uniform(-0.5, 0.5), rng.uniform(-0.2, 0.2)};
    }
    for (std::size_t l = 0; l < m.f.layers.size(); ++l) {
        auto& layer = m.f.layers[l];
        const double r = 1.0 / std::sqrt(static_cast<double>(layer.inputs));
        for (auto& w : layer.weights) w = rng.uniform(-r, r);
        for (auto& b : layer.bias) b = rng.uniform(-0.3, 0.3);
        for (auto& p : layer.activation) {
            p = {rng.uniform(-0.3, 0.3), rng.uniform(0.5, 1.5), rng.uniform(-0.2, 0.2)};
        }
    }
    for (auto* layer : {&m.g.hidden, &m.g.output}) {
        const double r = 1.0 / std::sqrt(static_cast<double>(layer->inputs));
        for (auto& w : layer->weights) w = rng.uniform(-r, r);
        for (auto& b : layer->bias) b = rng.uniform(-r, r);
    }
    for (auto& w : m.dynamics.omegas) w = rng.uniform(0.01, 0.8);
    for (auto& z : m.z0) z = rng.uniform(-1.0, 1.0);
    return m;
}

inline LddmdShape small_shape(std::size_t d, std::size_t dc, std::size_t layers = 2, std::size_t width = 3,
                              std::size_t dg = 4, std::size_t m = 1) {
    LddmdShape s;
    s.input_dim = d;
    s.latent_dim = dc;
    s.output_dim = m;
    s.coupling_hidden_layers = layers;
    s.coupling_hidden_dim = width;
    s.readout_hidden_dim = dg;
    return s;
}

inline TimeSeriesDataset random_dataset(Rng& rng, std::size_t n, std::size_t d, std::size_t m = 1,
                                        std::int64_t t0 = 0) {
    TimeSeriesDataset ds;
    ds.inputs = Matrix(n, d);
    ds.targets = Matrix(n, m);
    for (auto& v : ds.inputs.data) v = rng.uniform(-1.0, 1.0);
    for (auto& v : ds.targets.data) v = rng.uniform(0.0, 2.0);
    ds.t0_index = t0;
    for (std::size_t c = 0; c < d; ++c) ds.feature_names.push_back("x_" + std::to_string(c + 1));
    for (std::size_t c = 0; c < m; ++c) ds.target_names.push_back(m == 1 ? "y" : "y_" + std::to_string(c + 1));
    return ds;
}

/// Unique scratch directory, removed on destruction.
class TempDir {
public:
    TempDir() {
        static int counter = 0;
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("lddmd_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

/// |DFT_k|^2 evaluated directly with std::complex and std::polar.
inline double naive_dft_power(const std::vector<double>& x, std::size_t k) {
    std::complex<double> acc = 0.0;
    const double n = static_cast<double>(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) {
        acc += x[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) * static_cast<double>(t) / n);
    }
    return std::norm(acc);
}

/// Two-pass NSE with population variance, written independently of the
/// library.
inline double nse_oracle(const std::vector<double>& y, const std::vector<double>& yhat) {
    long double mean = 0.0L;
    for (double v : y) mean += v;
    mean /= static_cast<long double>(y.size());
    long double var = 0.0L;
    long double mse = 0.0L;
    for (std::size_t i = 0; i < y.size(); ++i) {
        var += (y[i] - mean) * (y[i] - mean);
        mse += (static_cast<long double>(y[i]) - yhat[i]) * (static_cast<long double>(y[i]) - yhat[i]);
    }
    return static_cast<double>(1.0L - mse / var);
}

}  // namespace testing
