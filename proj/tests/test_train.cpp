#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "lddmd/checkpoint.hpp"
#include "lddmd/synthetic.hpp"
#include "lddmd/train.hpp"
#include "support.hpp"

using namespace lddmd;

namespace {

std::vector<std::size_t> all_rows(const TimeSeriesDataset& data) {
    std::vector<std::size_t> rows(data.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return rows;
}

TrainConfig small_config() {
    TrainConfig c;
    c.latent_dim = 4;
    c.batch_size = 16;
    c.epochs = 3;
    c.coupling_hidden_layers = 2;
    c.coupling_hidden_dim = 3;
    c.readout_hidden_dim = 4;
    c.learning_rate = 1e-2;
    return c;
}

TimeSeriesDataset wavy_dataset(std::size_t n, std::size_t d, std::uint64_t seed) {
    testing::Rng rng(seed);
    auto ds = testing::random_dataset(rng, n, d);
    for (std::size_t r = 0; r < n; ++r) {
        const double t = static_cast<double>(r);
        ds.targets(r, 0) = 1.0 + std::sin(0.21 * t) + 0.3 * ds.inputs(r, 0);
    }
    return ds;
}

Checkpoint make_checkpoint(std::uint64_t seed) {
    const auto data = wavy_dataset(60, 3, seed);
    auto cfg = small_config();
    cfg.seed = seed;
    const auto init = init_model(cfg, data, seed);
    const auto result = train(init, data, cfg);
    Checkpoint ck;
    ck.model = result.model;
    ck.config = cfg;
    ck.adam = result.adam;
    ck.loss_history = result.loss_history;
    ck.normalization = NormalizationStats{{0.1, 0.2, 0.3}, {1.0, 2.0, 3.0}};
    ck.train_count = 60;
    ck.feature_names = data.feature_names;
    ck.target_names = data.target_names;
    return ck;
}

}  // namespace

TEST_CASE("adam: zero gradient leaves parameters unchanged and advances the step") {
    std::vector<double> p = {1.0, -2.0, 3.0};
    const std::vector<double> g(3, 0.0);
    AdamState s;
    TrainConfig cfg;
    adam_step(p, g, s, cfg);
    adam_step(p, g, s, cfg);
    CHECK(p == std::vector<double>{1.0, -2.0, 3.0});
    CHECK(s.step == 2);
}

TEST_CASE("adam: first step on a unit gradient moves each coordinate by -lr") {
    std::vector<double> p = {0.0, 5.0};
    const std::vector<double> g = {1.0, 1.0};
    AdamState s;
    TrainConfig cfg;
    adam_step(p, g, s, cfg);
    // m_hat = 1, v_hat = 1, step = lr * 1 / (1 + eps)
    const double want = 1e-3 / (1.0 + 1e-8);
    CHECK(p[0] == doctest::Approx(-want).epsilon(1e-14));
    CHECK(p[1] == doctest::Approx(5.0 - want).epsilon(1e-14));
}

TEST_CASE("adam: matches a hand-written reference over several steps") {
    testing::Rng rng(1);
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    std::vector<double> p = {0.3, -0.7, 1.1};
    std::vector<double> ref = p;
    std::vector<double> m(3, 0.0), v(3, 0.0);
    AdamState s;
    for (int t = 1; t <= 20; ++t) {
        std::vector<double> g(3);
        for (auto& x : g) x = rng.uniform(-2, 2);
        adam_step(p, g, s, cfg);
        for (int i = 0; i < 3; ++i) {
            m[i] = 0.9 * m[i] + 0.1 * g[i];
            v[i] = 0.99 * v[i] + 0.01 * g[i] * g[i];
            const double mh = m[i] / (1.0 - std::pow(0.9, t));
            const double vh = v[i] / (1.0 - std::pow(0.99, t));
            ref[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
        }
    }
    for (int i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("adam: masked entries keep value and moments; non-finite gradients abort") {
    std::vector<double> p = {1.0, 1.0};
    const std::vector<double> g = {0.5, 0.5};
    const bool mask[] = {true, false};
    AdamState s;
    TrainConfig cfg;
    adam_step(p, g, s, cfg, mask);
    CHECK(p[0] != 1.0);
    CHECK(p[1] == 1.0);
    CHECK(s.m[1] == 0.0);
    CHECK(s.v[1] == 0.0);

    const std::vector<double> bad = {std::nan(""), 0.0};
    CHECK_THROWS_AS(adam_step(p, bad, s, cfg), NumericalAbort);
    // a masked non-finite gradient is ignored
    const std::vector<double> masked_bad = {0.0, std::nan("")};
    CHECK_NOTHROW(adam_step(p, masked_bad, s, cfg, mask));
}

TEST_CASE("init_model: predictions are constant in j and x") {
    const auto data = wavy_dataset(100, 3, 2);
    const auto m = init_model(small_config(), data, 7);
    const double y0 = predict(m, 0, data.inputs.row(0))[0];
    testing::Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const std::vector<double> x = {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
        CHECK(predict(m, static_cast<std::uint64_t>(rng.uniform(0, 1e6)), x)[0] == y0);
    }
    for (const auto& p : m.phi.polys) CHECK((p.a == 0.0 && p.b == 0.0 && p.c == 0.0));
    for (double z : m.z0) CHECK(z == 0.0);
    for (double mu : m.dynamics.mus) CHECK(mu == 0.0);
}

TEST_CASE("init_model: deterministic in the seed, parameter count checked") {
    const auto data = wavy_dataset(100, 3, 2);
    const auto cfg = small_config();
    const auto a = init_model(cfg, data, 11);
    const auto b = init_model(cfg, data, 11);
    const auto c = init_model(cfg, data, 12);
    CHECK(get_parameters(a) == get_parameters(b));
    CHECK(get_parameters(a) != get_parameters(c));
    CHECK(get_parameters(a).size() == parameter_count(cfg.shape(data)));
}

TEST_CASE("init_model: synthetic parameter count is 54") {
    const auto gen = generate_synthetic(SyntheticConfig{});
    TrainConfig cfg;
    const auto m = init_model(cfg, gen.noisy, 0);
    // phi 3, f (2*2+2+6) + (2*2+2+6) + (2*2+2), g 2*4+4+4+1, omega 1, mu 1, z0 2
    CHECK(get_parameters(m).size() == 54);
}

TEST_CASE("init_model: synthetic omega lies within one DFT bin of the true frequency") {
    const auto gen = generate_synthetic(SyntheticConfig{});
    const auto train_part = split(gen.noisy, 1000).first;
    TrainConfig cfg;
    for (const auto* data : {&gen.noisy, &train_part}) {
        const double n = static_cast<double>(data->size());
        const auto m = init_model(cfg, *data, 0);
        CHECK(std::abs(m.dynamics.omegas[0] - synthetic::kOmegaLatent) <= 1.0 / n);

        // independent oracle: strongest non-DC bin of the mean-removed target
        auto y = data->targets.column(0);
        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= n;
        for (auto& v : y) v -= mean;
        std::size_t best = 1;
        for (std::size_t k = 1; 2 * k < y.size(); ++k) {
            if (testing::naive_dft_power(y, k) > testing::naive_dft_power(y, best)) best = k;
        }
        CHECK(m.dynamics.omegas[0] == doctest::Approx(static_cast<double>(best) / n).epsilon(1e-12));
    }
}

TEST_CASE("train: a model fit to its own predictions stays put") {
    auto data = wavy_dataset(80, 3, 4);
    auto cfg = small_config();
    const auto m = init_model(cfg, data, 5);
    data.targets = predict_series(m, data);
    const auto result = train(m, data, cfg);
    REQUIRE(!result.abort_reason);
    for (double l : result.loss_history) CHECK(l == 0.0);
    CHECK(get_parameters(result.model) == get_parameters(m));
}

TEST_CASE("train: a tiny full-batch step does not increase the loss") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto data = wavy_dataset(50, 2, 100 + seed);
        testing::Rng rng(seed);
        const auto m = testing::random_model(rng, testing::small_shape(2, 4));
        auto cfg = small_config();
        cfg.batch_size = data.size();
        cfg.epochs = 1;
        cfg.learning_rate = 1e-7;
        const auto rows = all_rows(data);
        const double before = loss(m, data, rows);
        const auto result = train(m, data, cfg);
        const double after = loss(result.model, data, rows);
        CHECK(after <= before);
        CHECK(result.loss_history.size() == 1);
        CHECK(result.loss_history[0] == doctest::Approx(before / 50.0).epsilon(1e-12));
    }
}

TEST_CASE("train: loss decreases on a learnable problem") {
    const auto data = wavy_dataset(120, 3, 6);
    auto cfg = small_config();
    cfg.epochs = 60;
    const auto result = train(init_model(cfg, data, 1), data, cfg);
    REQUIRE(!result.abort_reason);
    CHECK(result.loss_history.back() < 0.7 * result.loss_history.front());
    CHECK(result.adam.step == 60 * 8);  // ceil(120 / 16) batches per epoch
}

TEST_CASE("train: frozen mu never moves, learnable mu does") {
    const auto data = wavy_dataset(60, 2, 7);
    auto cfg = small_config();
    cfg.epochs = 5;
    const auto m = init_model(cfg, data, 2);
    const auto frozen = train(m, data, cfg);
    for (double mu : frozen.model.dynamics.mus) CHECK(mu == 0.0);
    const auto groups = parameter_groups(m);
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i] == ParamGroup::Mu) {
            CHECK(frozen.adam.m[i] == 0.0);
            CHECK(frozen.adam.v[i] == 0.0);
        }
    }
    const auto mask = trainable_mask(m, cfg);
    for (std::size_t i = 0; i < groups.size(); ++i) CHECK(mask[i] == (groups[i] != ParamGroup::Mu));

    cfg.mu_learnable = true;
    const auto free = train(m, data, cfg);
    bool moved = false;
    for (double mu : free.model.dynamics.mus) moved = moved || mu != 0.0;
    CHECK(moved);
}

TEST_CASE("train: results do not depend on the thread count") {
    const auto data = wavy_dataset(300, 3, 8);
    auto cfg = small_config();
    cfg.batch_size = 256;
    cfg.epochs = 4;
    const auto m = init_model(cfg, data, 3);
    const auto one = train(m, data, cfg);
    cfg.threads = 4;
    const auto four = train(m, data, cfg);
    CHECK(get_parameters(one.model) == get_parameters(four.model));
    CHECK(one.loss_history == four.loss_history);
    CHECK(one.adam == four.adam);

    const auto rows = all_rows(data);
    const auto g1 = loss_and_gradient(m, data, rows, LossMode::Norm, 1);
    const auto g3 = loss_and_gradient(m, data, rows, LossMode::Norm, 3);
    CHECK(g1.loss == g3.loss);
    CHECK(g1.gradient == g3.gradient);
}

TEST_CASE("train: identical runs are bit-identical, different seeds differ") {
    const auto data = wavy_dataset(90, 3, 9);
    auto cfg = small_config();
    const auto m = init_model(cfg, data, 4);
    const auto a = train(m, data, cfg);
    const auto b = train(m, data, cfg);
    CHECK(get_parameters(a.model) == get_parameters(b.model));
    CHECK(a.loss_history == b.loss_history);
    cfg.seed = 99;
    const auto c = train(m, data, cfg);
    CHECK(get_parameters(a.model) != get_parameters(c.model));
}

TEST_CASE("train: resuming from a saved Adam state continues the trajectory") {
    const auto data = wavy_dataset(64, 2, 10);
    auto cfg = small_config();
    cfg.epochs = 2;
    const auto m = init_model(cfg, data, 5);
    const auto first = train(m, data, cfg);
    CHECK(first.adam.step == 8);
    const auto second = train(first.model, data, cfg, first.adam);
    CHECK(second.adam.step == 16);
}

TEST_CASE("train: a non-finite loss aborts with the last good model") {
    auto data = wavy_dataset(40, 2, 11);
    auto cfg = small_config();
    cfg.epochs = 3;
    auto m = init_model(cfg, data, 6);
    // huge readout weights overflow the output to infinity
    for (auto& w : m.g.output.weights) w = 1e300;
    for (auto& b : m.g.hidden.bias) b = 1e10;
    const auto result = train(m, data, cfg);
    REQUIRE(result.abort_reason.has_value());
    CHECK(get_parameters(result.model) == get_parameters(m));
}

TEST_CASE("train: configuration errors") {
    const auto data = wavy_dataset(20, 2, 12);
    auto cfg = small_config();
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.latent_dim = 3;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = small_config();
    cfg.latent_dim = 40;  // more frequencies than usable DFT bins of 20 rows
    CHECK_THROWS_AS(init_model(cfg, data, 0), ConfigError);
}

TEST_CASE("ddmd training reduces the loss on a conjugated rotation") {
    DdmdModel<double> truth{make_coupling<double>(2), {{0.15}, {0.0}, 1.0}};
    truth.psi.polys[0] = {0.2, 0.0, 0.0};
    Matrix series(120, 2);
    const std::vector<double> x0 = {1.0, 0.5};
    for (std::size_t j = 0; j < 120; ++j) {
        const auto r = ddmd_rollout(truth, j, std::span<const double>(x0));
        series(j, 0) = r[0];
        series(j, 1) = r[1];
    }
    TrainConfig cfg;
    cfg.latent_dim = 2;
    cfg.batch_size = 32;
    cfg.epochs = 100;
    cfg.learning_rate = 1e-2;
    const auto init = init_ddmd(cfg, series, 1.0);
    const auto result = train_ddmd(init, series, cfg);
    REQUIRE(!result.abort_reason);
    CHECK(result.loss_history.back() < 0.5 * result.loss_history.front());
}

TEST_CASE("checkpoint: save, load, save is byte-identical") {
    testing::TempDir dir;
    const auto ck = make_checkpoint(1);
    save_checkpoint(dir / "a.ckpt", ck);
    const auto loaded = load_checkpoint(dir / "a.ckpt");
    save_checkpoint(dir / "b.ckpt", loaded);
    CHECK(testing::read_file(dir / "a.ckpt") == testing::read_file(dir / "b.ckpt"));
    CHECK(get_parameters(loaded.model) == get_parameters(ck.model));
    CHECK(loaded.adam == ck.adam);
    CHECK(loaded.loss_history == ck.loss_history);
    CHECK(loaded.normalization == ck.normalization);
    CHECK(loaded.feature_names == ck.feature_names);
    CHECK(same_training_setup(loaded.config, ck.config));
}

TEST_CASE("checkpoint: predictions are bit-identical after a round trip") {
    testing::TempDir dir;
    const auto ck = make_checkpoint(2);
    save_checkpoint(dir / "m.ckpt", ck);
    const auto loaded = load_checkpoint(dir / "m.ckpt");
    testing::Rng rng(13);
    for (int i = 0; i < 100; ++i) {
        const std::vector<double> x = {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const auto j = static_cast<std::uint64_t>(rng.uniform(0, 1e5));
        CHECK(predict(loaded.model, j, x) == predict(ck.model, j, x));
    }
}

TEST_CASE("checkpoint: truncated or altered files are corrupt") {
    const std::string bytes = serialize_checkpoint(make_checkpoint(3));
    for (std::size_t cut : {std::size_t{0}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
        CHECK_THROWS_AS(parse_checkpoint(std::string_view(bytes).substr(0, cut)), CorruptCheckpoint);
    }
    std::string flipped = bytes;
    flipped[flipped.size() - 5] ^= 0x01;
    CHECK_THROWS_AS(parse_checkpoint(flipped), CorruptCheckpoint);
    CHECK_THROWS_AS(parse_checkpoint(bytes + "x"), CorruptCheckpoint);

    testing::TempDir dir;
    testing::write_file(dir / "t.ckpt", bytes.substr(0, bytes.size() / 3));
    CHECK_THROWS_AS(load_checkpoint(dir / "t.ckpt"), CorruptCheckpoint);
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), LoadError);
}

TEST_CASE("checkpoint: another format version is reported as such") {
    std::string bytes = serialize_checkpoint(make_checkpoint(4));
    const auto pos = bytes.find("v1");
    REQUIRE(pos != std::string::npos);
    bytes.replace(pos, 2, "v2");
    CHECK_THROWS_AS(parse_checkpoint(bytes), VersionMismatch);
}

TEST_CASE("checkpoint: dataset with the wrong dimension is rejected at use") {
    const auto ck = make_checkpoint(5);
    testing::Rng rng(14);
    CHECK_NOTHROW(check_compatible(ck, testing::random_dataset(rng, 10, 3)));
    CHECK_THROWS_AS(check_compatible(ck, testing::random_dataset(rng, 10, 4)), ShapeError);
    CHECK_THROWS_AS(check_compatible(ck, testing::random_dataset(rng, 10, 3, 2)), ShapeError);
}
