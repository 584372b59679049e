#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lddmd/data.hpp"
#include "lddmd/dynamics.hpp"
#include "lddmd/model.hpp"

namespace lddmd {

struct TrainConfig {
    std::size_t latent_dim = 2;
    std::size_t batch_size = 256;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.99;
    double epsilon = 1e-8;
    std::size_t epochs = 1000;
    std::uint64_t seed = 0;
    std::size_t coupling_hidden_layers = 2;
    std::size_t coupling_hidden_dim = 2;
    std::size_t readout_hidden_dim = 4;
    LossMode loss_mode = LossMode::Norm;
    bool mu_learnable = false;
    CouplingParity parity = CouplingParity::Odd;
    // Units of the DFT frequencies used to initialize omega. Cycles per unit
    // time is what recovers the synthetic system's frequency.
    FrequencyUnits init_frequency_units = FrequencyUnits::Cycles;
    double clip_grad_norm = 0.0;  // 0 disables clipping

    // Execution only; never changes results and is not stored in checkpoints.
    std::size_t threads = 1;

    void validate() const;
    LddmdShape shape(const TimeSeriesDataset& data) const;
};

bool same_training_setup(const TrainConfig& a, const TrainConfig& b);

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t step = 0;

    bool operator==(const AdamState&) const = default;
};

/// One Adam update with bias correction. Entries with trainable[i] == false
/// (when the mask is given) keep their value and moments. Throws
/// NumericalAbort if any used gradient is non-finite.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, const TrainConfig& config,
               std::span<const bool> trainable = {});

/// phi = identity, f = 0 exactly (hidden weights U(-0.1, 0.1), poly (0, 1, 0),
/// zero output layer), g ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), omega from the
/// DFT of the first target column, mu = 0, z0 = 0.
LddmdModel<double> init_model(const TrainConfig& config, const TimeSeriesDataset& data, std::uint64_t rng_seed);

/// Which parameters the optimizer may change.
std::vector<bool> trainable_mask(const LddmdModel<double>& m, const TrainConfig& config);

/// Loss summed over the rows and its gradient in get_parameters order. Rows
/// are processed in fixed chunks whose partial sums are added in order, so the
/// result does not depend on the thread count.
struct LossGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};
LossGradient loss_and_gradient(const LddmdModel<double>& m, const TimeSeriesDataset& data,
                               std::span<const std::size_t> rows, LossMode mode, std::size_t threads = 1);

inline constexpr std::size_t kGradientChunk = 64;

struct TrainResult {
    LddmdModel<double> model;
    AdamState adam;
    std::vector<double> loss_history;  // per-epoch mean loss per sample
    std::optional<std::string> abort_reason;  // set when training stopped on a non-finite value
};

/// Called after every epoch with (epoch index, mean loss).
using EpochCallback = std::function<void(std::size_t, double)>;

/// Shuffled mini-batch Adam. The epoch permutation depends on (config.seed,
/// epoch) only. On a non-finite loss or gradient the run stops and the result
/// holds the last finite model.
TrainResult train(const LddmdModel<double>& model, const TimeSeriesDataset& data, const TrainConfig& config,
                  AdamState state = {}, const EpochCallback& on_epoch = {});

// DDMD on a state series (targets are the states themselves). omega starts at
// the angular DFT peak of the first state coordinate.

DdmdModel<double> init_ddmd(const TrainConfig& config, const Matrix& series, double dt);

struct DdmdTrainResult {
    DdmdModel<double> model;
    AdamState adam;
    std::vector<double> loss_history;
    std::optional<std::string> abort_reason;
};

DdmdTrainResult train_ddmd(const DdmdModel<double>& model, const Matrix& series, const TrainConfig& config);

}  // namespace lddmd
