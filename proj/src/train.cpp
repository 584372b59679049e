#include "lddmd/train.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <memory>
#include <thread>

#include "lddmd/errors.hpp"
#include "lddmd/rng.hpp"

namespace lddmd {

void TrainConfig::validate() const {
    if (latent_dim == 0 || latent_dim % 2 != 0) {
        throw ConfigError("train: latent_dim must be even and positive, got " + std::to_string(latent_dim));
    }
    if (batch_size == 0) {
        throw ConfigError("train: batch_size must be at least 1");
    }
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw ConfigError("train: learning_rate must be positive");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
        throw ConfigError("train: Adam betas must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) {
        throw ConfigError("train: epsilon must be positive");
    }
    if (readout_hidden_dim == 0) {
        throw ConfigError("train: readout_hidden_dim must be positive");
    }
    if (coupling_hidden_layers > 0 && coupling_hidden_dim == 0) {
        throw ConfigError("train: coupling_hidden_dim must be positive");
    }
    if (!(clip_grad_norm >= 0.0)) {
        throw ConfigError("train: clip_grad_norm must be non-negative");
    }
    if (threads == 0) {
        throw ConfigError("train: threads must be at least 1");
    }
}

LddmdShape TrainConfig::shape(const TimeSeriesDataset& data) const {
    LddmdShape s;
    s.input_dim = data.input_dim();
    s.latent_dim = latent_dim;
    s.output_dim = data.output_dim();
    s.coupling_hidden_layers = coupling_hidden_layers;
    s.coupling_hidden_dim = coupling_hidden_dim;
    s.readout_hidden_dim = readout_hidden_dim;
    s.parity = parity;
    s.dt = data.dt;
    return s;
}

bool same_training_setup(const TrainConfig& a, const TrainConfig& b) {
    TrainConfig x = a;
    x.threads = b.threads;
    return x.latent_dim == b.latent_dim && x.batch_size == b.batch_size && x.learning_rate == b.learning_rate &&
           x.beta1 == b.beta1 && x.beta2 == b.beta2 && x.epsilon == b.epsilon && x.epochs == b.epochs &&
           x.seed == b.seed && x.coupling_hidden_layers == b.coupling_hidden_layers &&
           x.coupling_hidden_dim == b.coupling_hidden_dim && x.readout_hidden_dim == b.readout_hidden_dim &&
           x.loss_mode == b.loss_mode && x.mu_learnable == b.mu_learnable && x.parity == b.parity &&
           x.init_frequency_units == b.init_frequency_units && x.clip_grad_norm == b.clip_grad_norm;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const TrainConfig& config,
               std::span<const bool> trainable) {
    if (grads.size() != params.size()) {
        throw ShapeError("adam: " + std::to_string(grads.size()) + " gradients for " + std::to_string(params.size()) +
                         " parameters");
    }
    if (!trainable.empty() && trainable.size() != params.size()) {
        throw ShapeError("adam: mask length does not match parameter count");
    }
    if (state.m.empty() && state.v.empty()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
    }
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw ShapeError("adam: optimizer state does not match parameter count");
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if ((trainable.empty() || trainable[i]) && !std::isfinite(grads[i])) {
            throw NumericalAbort("adam: non-finite gradient at parameter " + std::to_string(i));
        }
    }

    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(config.beta1, t);
    const double c2 = 1.0 - std::pow(config.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!trainable.empty() && !trainable[i]) {
            continue;
        }
        const double g = grads[i];
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * (g * g);
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
}

LddmdModel<double> init_model(const TrainConfig& config, const TimeSeriesDataset& data, std::uint64_t rng_seed) {
    config.validate();
    data.validate();
    const LddmdShape shape = config.shape(data);
    LddmdModel<double> m = make_model<double>(shape);

    Rng rng(rng_seed);
    for (std::size_t l = 0; l + 1 < m.f.layers.size(); ++l) {
        auto& layer = m.f.layers[l];
        for (auto& w : layer.weights) {
            w = rng.uniform(-0.1, 0.1);
        }
        for (auto& p : layer.activation) {
            p = {0.0, 1.0, 0.0};
        }
    }
    auto init_uniform = [&](DenseLayer<double>& layer) {
        const double r = 1.0 / std::sqrt(static_cast<double>(layer.inputs));
        for (auto& w : layer.weights) {
            w = rng.uniform(-r, r);
        }
        for (auto& b : layer.bias) {
            b = rng.uniform(-r, r);
        }
    };
    init_uniform(m.g.hidden);
    init_uniform(m.g.output);

    const std::vector<double> y = data.targets.column(0);
    m.dynamics.omegas = spectral_init(y, config.latent_dim, data.dt, config.init_frequency_units);

    const std::size_t expected = parameter_count(shape);
    const std::size_t actual = get_parameters(m).size();
    if (actual != expected) {
        throw StateError("init_model: model has " + std::to_string(actual) + " parameters, formula gives " +
                         std::to_string(expected));
    }
    return m;
}

std::vector<bool> trainable_mask(const LddmdModel<double>& m, const TrainConfig& config) {
    std::vector<bool> mask;
    for (ParamGroup g : parameter_groups(m)) {
        mask.push_back(g != ParamGroup::Mu || config.mu_learnable);
    }
    return mask;
}

namespace {

// Splits rows into fixed chunks, evaluates them (possibly on several threads)
// and adds the partial results in chunk order.
template <class ChunkFn>
LossGradient chunked_sum(std::span<const std::size_t> rows, std::size_t n_params, std::size_t threads,
                         ChunkFn&& chunk_fn) {
    const std::size_t n_chunks = (rows.size() + kGradientChunk - 1) / kGradientChunk;
    std::vector<LossGradient> parts(n_chunks);
    auto work = [&](std::size_t c) {
        const std::size_t begin = c * kGradientChunk;
        const std::size_t end = std::min(rows.size(), begin + kGradientChunk);
        parts[c] = chunk_fn(rows.subspan(begin, end - begin));
    };
    const std::size_t n_workers = std::min(threads, n_chunks);
    if (n_workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            work(c);
        }
    } else {
        std::vector<std::exception_ptr> errors(n_workers);
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t c = w; c < n_chunks; c += n_workers) {
                        work(c);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
        for (auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }

    LossGradient total;
    total.gradient.assign(n_params, 0.0);
    for (const auto& p : parts) {
        total.loss += p.loss;
        for (std::size_t i = 0; i < n_params; ++i) {
            total.gradient[i] += p.gradient[i];
        }
    }
    return total;
}

bool all_finite(const LossGradient& lg) {
    return std::isfinite(lg.loss) &&
           std::all_of(lg.gradient.begin(), lg.gradient.end(), [](double g) { return std::isfinite(g); });
}

void clip(std::vector<double>& grad, double max_norm) {
    if (max_norm <= 0.0) {
        return;
    }
    double ss = 0.0;
    for (double g : grad) ss += g * g;
    const double norm = std::sqrt(ss);
    if (norm > max_norm) {
        const double scale = max_norm / norm;
        for (double& g : grad) g *= scale;
    }
}

struct LoopResult {
    std::vector<double> params;
    AdamState adam;
    std::vector<double> loss_history;
    std::optional<std::string> abort_reason;
};

// The shared optimizer loop. batch_fn(params, rows) returns the summed loss
// and gradient over the rows, which are offsets first_row .. first_row + n - 1.
template <class BatchFn>
LoopResult run_adam(std::vector<double> params, const std::vector<bool>& mask, std::size_t n_samples,
                    std::size_t first_row, const TrainConfig& config, AdamState state, BatchFn&& batch_fn,
                    const EpochCallback& on_epoch) {
    LoopResult out;
    std::unique_ptr<bool[]> mask_buf(new bool[mask.size()]);
    for (std::size_t i = 0; i < mask.size(); ++i) mask_buf[i] = mask[i];
    const std::span<const bool> mask_span(mask_buf.get(), mask.size());

    for (std::size_t epoch = 0; epoch < config.epochs && !out.abort_reason; ++epoch) {
        const std::vector<std::size_t> order = permutation(n_samples, config.seed, epoch);
        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < n_samples; begin += config.batch_size) {
            const std::size_t end = std::min(n_samples, begin + config.batch_size);
            std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                          order.begin() + static_cast<std::ptrdiff_t>(end));
            for (auto& r : rows) r += first_row;

            LossGradient lg;
            try {
                lg = batch_fn(params, std::span<const std::size_t>(rows));
            } catch (const DomainError& e) {
                out.abort_reason = "epoch " + std::to_string(epoch) + ": " + e.what();
                break;
            }
            if (!all_finite(lg)) {
                out.abort_reason = "epoch " + std::to_string(epoch) + ": non-finite loss or gradient";
                break;
            }
            for (std::size_t i = 0; i < lg.gradient.size(); ++i) {
                if (!mask_span[i]) lg.gradient[i] = 0.0;
            }
            clip(lg.gradient, config.clip_grad_norm);

            std::vector<double> next = params;
            AdamState next_state = state;
            adam_step(next, lg.gradient, next_state, config, mask_span);
            if (!std::all_of(next.begin(), next.end(), [](double p) { return std::isfinite(p); })) {
                out.abort_reason = "epoch " + std::to_string(epoch) + ": update produced non-finite parameters";
                break;
            }
            params = std::move(next);
            state = std::move(next_state);
            epoch_loss += lg.loss;
        }
        if (out.abort_reason) {
            break;
        }
        const double mean = epoch_loss / static_cast<double>(n_samples);
        out.loss_history.push_back(mean);
        if (on_epoch) {
            on_epoch(epoch, mean);
        }
    }
    out.params = std::move(params);
    out.adam = std::move(state);
    return out;
}

}  // namespace

LossGradient loss_and_gradient(const LddmdModel<double>& m, const TimeSeriesDataset& data,
                               std::span<const std::size_t> rows, LossMode mode, std::size_t threads) {
    validate(m);
    const std::size_t n_params = get_parameters(m).size();
    return chunked_sum(rows, n_params, threads, [&](std::span<const std::size_t> chunk) {
        // Reused per thread so the node buffer keeps its capacity across chunks.
        thread_local ad::Tape tape;
        tape.clear();
        const LddmdModel<ad::Var> mv = lift(m, tape);
        const ad::Var l = loss(mv, data, chunk, mode);
        tape.backward(l);
        return LossGradient{l.value(), tape.gradient()};
    });
}

TrainResult train(const LddmdModel<double>& model, const TimeSeriesDataset& data, const TrainConfig& config,
                  AdamState state, const EpochCallback& on_epoch) {
    config.validate();
    data.validate();
    validate(model);
    if (data.input_dim() != model.input_dim() || data.output_dim() != model.output_dim()) {
        throw ShapeError("train: dataset dimensions (" + std::to_string(data.input_dim()) + ", " +
                         std::to_string(data.output_dim()) + ") do not match the model (" +
                         std::to_string(model.input_dim()) + ", " + std::to_string(model.output_dim()) + ")");
    }
    const std::vector<bool> mask = trainable_mask(model, config);
    LddmdModel<double> work = model;
    auto batch_fn = [&](const std::vector<double>& params, std::span<const std::size_t> rows) {
        set_parameters(work, params);
        return loss_and_gradient(work, data, rows, config.loss_mode, config.threads);
    };
    LoopResult r = run_adam(get_parameters(model), mask, data.size(), 0, config, std::move(state), batch_fn, on_epoch);

    TrainResult out;
    out.model = model;
    set_parameters(out.model, r.params);
    out.adam = std::move(r.adam);
    out.loss_history = std::move(r.loss_history);
    out.abort_reason = std::move(r.abort_reason);
    return out;
}

DdmdModel<double> init_ddmd(const TrainConfig& config, const Matrix& series, double dt) {
    if (series.cols == 0 || series.cols % 2 != 0) {
        throw ConfigError("ddmd: state dimension must be even and positive, got " + std::to_string(series.cols));
    }
    DdmdModel<double> m;
    m.psi = make_coupling<double>(series.cols, config.parity);
    // The state itself rotates, so its spectral peak is the rotation rate in
    // radians; the target-spectrum unit choice of init_model does not apply.
    m.dynamics.omegas = spectral_init(series.column(0), series.cols, dt, FrequencyUnits::Angular);
    m.dynamics.mus.assign(series.cols / 2, 0.0);
    m.dynamics.dt = dt;
    return m;
}

DdmdTrainResult train_ddmd(const DdmdModel<double>& model, const Matrix& series, const TrainConfig& config) {
    config.validate();
    if (series.rows < 2) {
        throw ConfigError("ddmd: need at least two states");
    }
    std::vector<double> params;
    std::vector<bool> mask;
    for_each_ddmd_parameter(model, [&](ParamGroup g, const double& p) {
        params.push_back(p);
        mask.push_back(g != ParamGroup::Mu || config.mu_learnable);
    });
    auto assign = [](DdmdModel<double>& m, const std::vector<double>& values) {
        std::size_t i = 0;
        for_each_ddmd_parameter(m, [&](ParamGroup, double& p) { p = values[i++]; });
    };

    DdmdModel<double> work = model;
    auto batch_fn = [&](const std::vector<double>& values, std::span<const std::size_t> rows) {
        assign(work, values);
        return chunked_sum(rows, values.size(), config.threads, [&](std::span<const std::size_t> chunk) {
            thread_local ad::Tape tape;
            tape.clear();
            const DdmdModel<ad::Var> mv = lift(work, tape);
            const ad::Var l = ddmd_loss(mv, series, chunk, config.loss_mode);
            tape.backward(l);
            return LossGradient{l.value(), tape.gradient()};
        });
    };
    LoopResult r = run_adam(params, mask, series.rows - 1, 1, config, {}, batch_fn, {});

    DdmdTrainResult out;
    out.model = model;
    assign(out.model, r.params);
    out.adam = std::move(r.adam);
    out.loss_history = std::move(r.loss_history);
    out.abort_reason = std::move(r.abort_reason);
    return out;
}

}  // namespace lddmd
