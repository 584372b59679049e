#pragma once

// Run configuration read from a JSON file. Unknown keys anywhere are errors;
// relative paths are resolved against the directory holding the file.
//
// {
//   "seed": 0,
//   "synthetic": { "n_steps": 2000, "noise_sigma_y": 0.05, "noise_sigma_x": 0.0 },
//   "data": {
//     "path": "out/noisy.csv",
//     "time_column": "j", "feature_columns": ["x_1", "x_2"], "target_column": "y",
//     "nan_policy": "fail", "standardize": false, "train_count": 1000
//   },
//   "train": { "latent_dim": 2, "epochs": 1000, ... every TrainConfig field ... },
//   "output": { "dir": "out", "checkpoint": "out/model.ckpt", "loss_history": "out/loss_history.csv" }
// }

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "lddmd/data.hpp"
#include "lddmd/synthetic.hpp"
#include "lddmd/train.hpp"

namespace lddmd {

struct RunConfig {
    std::filesystem::path source;  // the config file, if read from disk
    std::uint64_t seed = 0;

    SyntheticConfig synthetic;

    std::filesystem::path data_path;
    CsvSchema schema;
    bool standardize = false;
    std::optional<std::size_t> train_count;  // default: first half of the rows

    TrainConfig train;

    std::filesystem::path output_dir;
    std::filesystem::path checkpoint_path;
    std::filesystem::path loss_history_path;
};

/// Parses JSON text; relative paths are taken against base_dir.
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace lddmd
