#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "lddmd/gradient_check.hpp"
#include "lddmd/model.hpp"
#include "lddmd/synthetic.hpp"
#include "support.hpp"

using namespace lddmd;

namespace {

constexpr double kPi = std::numbers::pi;

template <class T>
LddmdModel<T> with_parameters(const LddmdShape& shape, std::span<const T> params) {
    LddmdModel<T> m = make_model<T>(shape);
    std::size_t i = 0;
    for_each_parameter(m, [&](ParamGroup, T& p) { p = params[i++]; });
    return m;
}

// A model whose latent state is K^j z0 (f and phi start at zero) and whose
// readout is softplus of the first latent coordinate.
LddmdModel<double> rotation_probe(double omega, std::vector<double> z0, std::size_t d = 2) {
    LddmdShape s = testing::small_shape(d, z0.size(), 1, 2, 1);
    auto m = make_model<double>(s);
    m.dynamics.omegas.assign(z0.size() / 2, omega);
    m.z0 = std::move(z0);
    m.g.hidden.weights.assign(m.g.hidden.weights.size(), 0.0);
    m.g.hidden.weight(0, 0) = 1.0;
    m.g.output.weights = {1.0};
    return m;
}

std::vector<std::size_t> all_rows(const TimeSeriesDataset& data) {
    std::vector<std::size_t> rows(data.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return rows;
}

double softplus_ref(double s) { return std::log1p(std::exp(s)); }

}  // namespace

TEST_CASE("latent_state: pure rotation when f and phi vanish") {
    testing::Rng rng(1);
    auto m = make_model<double>(testing::small_shape(3, 4));
    m.dynamics.omegas = {0.3, 1.1};
    m.z0 = {1.0, -2.0, 0.5, 0.25};
    const std::vector<double> x = {0.1, 0.2, 0.3};
    for (std::uint64_t j : {0u, 1u, 7u, 100u}) {
        const auto z = latent_state(m, j, x);
        const auto want = apply_power(m.dynamics, j, std::span<const double>(m.z0));
        CHECK(z == want);
    }
}

TEST_CASE("latent_state at j = 0 is z0 - f(x) through phi inverse") {
    testing::Rng rng(2);
    auto m = testing::random_model(rng, testing::small_shape(3, 4));
    m.phi.polys.assign(2, {});
    const std::vector<double> x = {0.4, -0.1, 0.9};
    const auto z = latent_state(m, 0, x);
    const auto fx = polymlp_forward(m.f, std::span<const double>(x));
    for (std::size_t i = 0; i < 4; ++i) CHECK(z[i] == doctest::Approx(m.z0[i] - fx[i]).epsilon(1e-15));
}

TEST_CASE("predict: constant readout") {
    testing::Rng rng(3);
    auto m = testing::random_model(rng, testing::small_shape(2, 2));
    m.g.output.weights.assign(m.g.output.weights.size(), 0.0);
    m.g.output.bias = {2.5};
    for (std::uint64_t j = 0; j < 20; ++j) {
        const std::vector<double> x = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        CHECK(predict(m, j, x)[0] == 2.5);
    }
}

TEST_CASE("predict: quarter turn walks the first coordinate through 1, 0, -1, 0") {
    const auto m = rotation_probe(kPi / 2, {1.0, 0.0});
    const std::vector<double> x = {0.0, 0.0};
    const double want[] = {1.0, 0.0, -1.0, 0.0, 1.0};
    for (std::uint64_t j = 0; j < 5; ++j) {
        const auto z = latent_state(m, j, x);
        CHECK(std::abs(z[0] - want[j]) < 1e-15);
        CHECK(predict(m, j, x)[0] == doctest::Approx(softplus_ref(z[0])).epsilon(1e-15));
    }
}

TEST_CASE("latent_state and predict reject wrong input length") {
    const auto m = make_model<double>(testing::small_shape(3, 2));
    const std::vector<double> x(2, 0.0);
    CHECK_THROWS_AS(latent_state(m, 0, x), ShapeError);
    CHECK_THROWS_AS(predict(m, 0, x), ShapeError);
}

TEST_CASE("telescoping: recursive and closed-form latent states agree over 200 steps") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        testing::Rng rng(100 + seed);
        const std::size_t d = seed % 2 == 0 ? 2 : 5;
        const std::size_t dc = seed % 3 == 0 ? 2 : (seed % 3 == 1 ? 4 : 10);
        const auto m = testing::random_model(rng, testing::small_shape(d, dc));
        const auto data = testing::random_dataset(rng, 200, d, 1, static_cast<std::int64_t>(seed * 13));
        const auto z0 = latent_state(m, data.time_index(0), data.inputs.row(0));
        const auto rec = latent_recursive(m, data, z0);
        REQUIRE(rec.size() == 200);
        double worst = 0.0;
        for (std::size_t r = 0; r < data.size(); ++r) {
            const auto closed = latent_state(m, data.time_index(r), data.inputs.row(r));
            for (std::size_t i = 0; i < dc; ++i) worst = std::max(worst, std::abs(closed[i] - rec[r][i]));
        }
        CHECK(worst <= 1e-8);
    }
}

TEST_CASE("latent_recursive: one hand-checked step with phi = id") {
    auto m = make_model<double>(testing::small_shape(2, 2, 0, 0));
    m.f.layers[0].weights = {1.0, 0.0, 0.0, 2.0};  // f(x) = (x1, 2 x2)
    m.dynamics.omegas = {kPi / 2};
    TimeSeriesDataset data;
    data.inputs = Matrix(2, 2);
    data.targets = Matrix(2, 1);
    data.inputs.data = {1.0, 2.0, 3.0, 5.0};
    const std::vector<double> z0 = {0.5, -1.0};
    const auto rec = latent_recursive(m, data, z0);
    // f(x0) + z0 = (1.5, 3); quarter turn -> (-3, 1.5); minus f(x1) = (3, 10)
    CHECK(rec[1][0] == doctest::Approx(-6.0).epsilon(1e-14));
    CHECK(rec[1][1] == doctest::Approx(-8.5).epsilon(1e-14));
}

TEST_CASE("latent_recursive: f = 0 reduces to conjugated rotation") {
    testing::Rng rng(5);
    auto m = testing::random_model(rng, testing::small_shape(2, 4));
    for (auto& w : m.f.layers.back().weights) w = 0.0;
    for (auto& b : m.f.layers.back().bias) b = 0.0;
    const auto data = testing::random_dataset(rng, 30, 2);
    const std::vector<double> z0 = {0.3, -0.2, 0.1, 0.4};
    const auto rec = latent_recursive(m, data, z0);
    const auto v0 = coupling_forward(m.phi, std::span<const double>(z0));
    for (std::uint64_t j = 0; j < 30; ++j) {
        const auto kv = apply_power(m.dynamics, j, std::span<const double>(v0));
        const auto want = coupling_inverse(m.phi, std::span<const double>(kv));
        for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(rec[j][i] - want[i]) < 1e-12);
    }
}

TEST_CASE("memory: identical inputs at different times give different predictions") {
    // Periodic input with period 200, latent rotation incommensurate with it.
    auto m = rotation_probe(kPi / (100.0 * std::sqrt(10.0)), {1.0, 1.0});
    m.f.layers.back().weights = {0.5, 0.0, 0.0, 0.5};
    for (auto& w : m.f.layers.front().weights) w = 0.3;
    for (auto& p : m.f.layers.front().activation) p = {0.0, 1.0, 0.0};
    const double xs[2] = {std::cos(0.0), std::sin(0.0)};
    const std::vector<double> x0(xs, xs + 2);
    // x^0 = x^200 = x^400 for a period-200 signal
    const double y0 = predict(m, 0, x0)[0];
    const double y200 = predict(m, 200, x0)[0];
    const double y400 = predict(m, 400, x0)[0];
    CHECK(std::abs(y0 - y200) > 1e-3);
    CHECK(std::abs(y200 - y400) > 1e-3);
}

TEST_CASE("loss: residuals 3 and 4 sum to 7") {
    auto m = make_model<double>(testing::small_shape(1, 2));
    m.g.output.bias = {0.0};
    TimeSeriesDataset data;
    data.inputs = Matrix(2, 1);
    data.targets = Matrix(2, 1);
    data.targets.data = {3.0, -4.0};
    const auto rows = all_rows(data);
    CHECK(loss(m, data, rows) == 7.0);
    CHECK(loss(m, data, rows, LossMode::Squared) == 25.0);
}

TEST_CASE("loss: multi-output residual uses the Euclidean norm") {
    auto m = make_model<double>(testing::small_shape(1, 2, 2, 2, 4, 2));
    TimeSeriesDataset data;
    data.inputs = Matrix(1, 1);
    data.targets = Matrix(1, 2);
    data.targets.data = {3.0, 4.0};
    const std::size_t row[] = {0};
    CHECK(loss(m, data, row) == 5.0);
}

TEST_CASE("loss: batch splitting is exact and empty batches are rejected") {
    testing::Rng rng(6);
    const auto m = testing::random_model(rng, testing::small_shape(3, 4));
    const auto data = testing::random_dataset(rng, 10, 3);
    const std::vector<std::size_t> a = {0, 1, 2, 3};
    const std::vector<std::size_t> b = {4, 5, 6, 7, 8, 9};
    double manual = 0.0;
    for (std::size_t r = 0; r < 10; ++r) {
        manual += std::abs(data.targets(r, 0) - predict(m, data.time_index(r), data.inputs.row(r))[0]);
    }
    const double full = loss(m, data, all_rows(data));
    CHECK(full == doctest::Approx(loss(m, data, a) + loss(m, data, b)).epsilon(1e-15));
    CHECK(full == doctest::Approx(manual).epsilon(1e-14));
    CHECK_THROWS_AS(loss(m, data, std::vector<std::size_t>{}), ConfigError);
    CHECK_THROWS_AS(loss(m, data, std::vector<std::size_t>{10}), ShapeError);
}

TEST_CASE("loss: a model on its own predictions is exactly zero") {
    testing::Rng rng(7);
    const auto m = testing::random_model(rng, testing::small_shape(2, 4));
    auto data = testing::random_dataset(rng, 25, 2);
    data.targets = predict_series(m, data);
    CHECK(loss(m, data, all_rows(data)) == 0.0);
}

TEST_CASE("loss gradient per parameter group matches finite differences") {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        testing::Rng rng(200 + seed);
        const auto shape = testing::small_shape(3, 4, 2, 3, 4, seed % 2 == 0 ? 1 : 2);
        const auto m = testing::random_model(rng, shape);
        const auto data = testing::random_dataset(rng, 15, 3, shape.output_dim, 3);
        const auto rows = all_rows(data);
        const auto groups = parameter_groups(m);
        const auto r = ad::check_gradient(
            [&](auto p) {
                using T = typename decltype(p)::value_type;
                return loss(with_parameters<T>(shape, p), data, rows);
            },
            get_parameters(m), 1e-6);
        for (ParamGroup g : {ParamGroup::Phi, ParamGroup::Coupling, ParamGroup::Readout, ParamGroup::Omega,
                             ParamGroup::Mu, ParamGroup::Z0}) {
            INFO(to_string(g));
            double worst = 0.0;
            for (std::size_t i = 0; i < groups.size(); ++i) {
                if (groups[i] != g) continue;
                worst = std::max(worst, std::abs(r.ad_gradient[i] - r.fd_gradient[i]) /
                                            std::max(1.0, std::abs(r.fd_gradient[i])));
            }
            CHECK(worst < 1e-4);
        }
    }
}

TEST_CASE("parameter_count matches the layer-by-layer formula") {
    for (std::size_t d : {1u, 2u, 14u}) {
        for (std::size_t dc : {2u, 4u, 10u}) {
            for (std::size_t layers : {0u, 1u, 3u}) {
                const std::size_t df = 5, dg = 4, m = 2;
                const auto shape = testing::small_shape(d, dc, layers, layers == 0 ? 0 : df, dg, m);
                std::size_t f = 0;
                std::size_t width = d;
                for (std::size_t l = 0; l < layers; ++l) {
                    f += width * df + df + 3 * df;
                    width = df;
                }
                f += width * dc + dc;
                const std::size_t want = 3 * dc / 2 + f + (dc * dg + dg + dg * m + m) + dc / 2 + dc / 2 + dc;
                CHECK(parameter_count(shape) == want);
                CHECK(get_parameters(make_model<double>(shape)).size() == want);
            }
        }
    }
}

TEST_CASE("parameters round-trip through get and set") {
    testing::Rng rng(8);
    const auto m = testing::random_model(rng, testing::small_shape(4, 6));
    auto other = make_model<double>(shape_of(m));
    set_parameters(other, get_parameters(m));
    CHECK(get_parameters(other) == get_parameters(m));
    std::vector<double> wrong(3, 0.0);
    CHECK_THROWS_AS(set_parameters(other, wrong), ShapeError);
}

TEST_CASE("boundedness: predictions stay finite and bounded over 10^5 steps") {
    testing::Rng rng(9);
    const auto m = testing::random_model(rng, testing::small_shape(2, 4));
    double lo = 1e300, hi = -1e300;
    for (std::uint64_t j = 0; j < 100000; ++j) {
        const double t = static_cast<double>(j);
        const std::vector<double> x = {std::sin(0.01 * t), std::cos(0.017 * t)};
        const double y = predict(m, j, x)[0];
        REQUIRE(std::isfinite(y));
        lo = std::min(lo, y);
        hi = std::max(hi, y);
    }
    // Envelope from the first 1000 steps, widened; later steps must stay inside.
    double lo0 = 1e300, hi0 = -1e300;
    for (std::uint64_t j = 0; j < 1000; ++j) {
        const double t = static_cast<double>(j);
        const std::vector<double> x = {std::sin(0.01 * t), std::cos(0.017 * t)};
        const double y = predict(m, j, x)[0];
        lo0 = std::min(lo0, y);
        hi0 = std::max(hi0, y);
    }
    const double span = hi0 - lo0;
    CHECK(lo >= lo0 - span);
    CHECK(hi <= hi0 + span);
}

TEST_CASE("ddmd: identity psi is a pure block rotation") {
    DdmdModel<double> m{make_coupling<double>(4), {{kPi / 2, 0.1}, {0.0, 0.0}, 1.0}};
    const std::vector<double> x = {1.0, 0.0, 0.0, 2.0};
    const auto out = ddmd_step(m, std::span<const double>(x));
    CHECK(std::abs(out[0]) < 1e-15);
    CHECK(out[1] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(out[2] == doctest::Approx(-2.0 * std::sin(0.1)).epsilon(1e-14));
    CHECK(out[3] == doctest::Approx(2.0 * std::cos(0.1)).epsilon(1e-14));
}

TEST_CASE("ddmd: iterating the step matches the rollout") {
    testing::Rng rng(10);
    for (int trial = 0; trial < 10; ++trial) {
        DdmdModel<double> m{make_coupling<double>(6), {{}, {}, 1.0}};
        for (auto& p : m.psi.polys) p = {rng.uniform(-0.2, 0.2), rng.uniform(-0.5, 0.5), rng.uniform(-0.2, 0.2)};
        for (int b = 0; b < 3; ++b) {
            m.dynamics.omegas.push_back(rng.uniform(0.01, 1.0));
            m.dynamics.mus.push_back(0.0);
        }
        std::vector<double> x(6);
        for (auto& v : x) v = rng.uniform(-1, 1);
        std::vector<double> it = x;
        for (std::uint64_t j = 1; j <= 200; ++j) {
            it = ddmd_step(m, std::span<const double>(it));
            const auto roll = ddmd_rollout(m, j, std::span<const double>(x));
            for (std::size_t i = 0; i < 6; ++i) CHECK(std::abs(it[i] - roll[i]) < 1e-9);
        }
    }
}

TEST_CASE("ddmd: the reference x-dynamics reproduces the generated inputs") {
    const auto gen = generate_synthetic(SyntheticConfig{});
    const auto m = synthetic::input_dynamics();
    const std::vector<double> x0 = {std::sin(4.0), 4.0};
    CHECK(x0[0] == doctest::Approx(-0.7568).epsilon(1e-4));
    CHECK(gen.clean.inputs(0, 0) == doctest::Approx(x0[0]).epsilon(1e-14));
    CHECK(gen.clean.inputs(0, 1) == doctest::Approx(x0[1]).epsilon(1e-14));
    std::vector<double> it = x0;
    for (std::size_t j = 1; j < 2000; ++j) {
        it = ddmd_step(m, std::span<const double>(it));
        const auto roll = ddmd_rollout(m, j, std::span<const double>(x0));
        for (std::size_t i = 0; i < 2; ++i) {
            CHECK(std::abs(it[i] - gen.clean.inputs(j, i)) < 1e-8);
            CHECK(std::abs(roll[i] - gen.clean.inputs(j, i)) < 1e-8);
        }
    }
}

TEST_CASE("ddmd loss: zero on its own rollout, gradient matches finite differences") {
    testing::Rng rng(11);
    DdmdModel<double> m{make_coupling<double>(4), {{0.2, 0.5}, {0.0, 0.0}, 1.0}};
    for (auto& p : m.psi.polys) p = {rng.uniform(-0.2, 0.2), rng.uniform(-0.5, 0.5), rng.uniform(-0.2, 0.2)};
    const std::vector<double> x0 = {0.3, -0.4, 0.8, 0.1};
    Matrix series(30, 4);
    for (std::size_t j = 0; j < 30; ++j) {
        const auto r = ddmd_rollout(m, j, std::span<const double>(x0));
        for (std::size_t i = 0; i < 4; ++i) series(j, i) = r[i];
    }
    std::vector<std::size_t> rows;
    for (std::size_t r = 1; r < 30; ++r) rows.push_back(r);
    CHECK(ddmd_loss(m, series, rows) == doctest::Approx(0.0));

    for (auto& v : series.data) v += rng.uniform(-0.05, 0.05);
    std::vector<double> params;
    for_each_ddmd_parameter(m, [&](ParamGroup, double& p) { params.push_back(p); });
    const auto r = ad::check_gradient(
        [&](auto p) {
            using T = typename decltype(p)::value_type;
            DdmdModel<T> mt{make_coupling<T>(4), {std::vector<T>(2), std::vector<T>(2), 1.0}};
            std::size_t i = 0;
            for_each_ddmd_parameter(mt, [&](ParamGroup, T& v) { v = p[i++]; });
            return ddmd_loss(mt, series, rows);
        },
        params, 1e-6);
    CHECK(r.max_relative_error < 1e-4);
}

TEST_CASE("ground truth: the wrapped reference system reproduces the generated latent states") {
    const auto gen = generate_synthetic(SyntheticConfig{});
    const auto m = synthetic::ground_truth_model();
    validate(m);
    double worst_z = 0.0;
    double worst_y = 0.0;
    for (std::size_t j = 0; j <= 200; ++j) {
        const auto w = latent_state(m, j, gen.clean.inputs.row(j));
        const auto z = synthetic::latent_from_model({w[0], w[1]});
        worst_z = std::max({worst_z, std::abs(z[0] - gen.latent(j, 0)), std::abs(z[1] - gen.latent(j, 1))});
        worst_y = std::max(worst_y, std::abs(predict(m, j, gen.clean.inputs.row(j))[0] - gen.clean.targets(j, 0)));
    }
    CHECK(worst_z <= 1e-8);
    CHECK(worst_y <= 1e-8);
}
