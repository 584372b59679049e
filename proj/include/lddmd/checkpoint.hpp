#pragma once

// Checkpoint file layout
//
//   LDDMD-CHECKPOINT v1\n
//   <key> <value>\n ...            plain text: dimensions, config, names, counts
//   payload_bytes <n>\n
//   checksum <16 hex digits>\n     FNV-1a 64 of the payload
//   end\n
//   <payload>                      little-endian IEEE-754 doubles, in order:
//                                  parameters, adam m, adam v, loss history,
//                                  normalization mean, normalization stddev
//
// Doubles in the header use shortest round-trip text, so save -> load -> save
// reproduces the file byte for byte.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lddmd/data.hpp"
#include "lddmd/model.hpp"
#include "lddmd/train.hpp"

namespace lddmd {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    LddmdModel<double> model;
    TrainConfig config;
    AdamState adam;
    std::vector<double> loss_history;
    std::optional<NormalizationStats> normalization;
    std::size_t train_count = 0;  // rows of the dataset used for training
    std::string time_column = "j";
    std::vector<std::string> feature_names;
    std::vector<std::string> target_names;
};

std::string serialize_checkpoint(const Checkpoint& ckpt);
/// Throws VersionMismatch for another format version, CorruptCheckpoint for
/// anything malformed or truncated.
Checkpoint parse_checkpoint(std::string_view bytes);

/// Writes through a temporary file and renames it into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Throws ShapeError if the dataset does not fit the checkpoint's model.
void check_compatible(const Checkpoint& ckpt, const TimeSeriesDataset& data);

}  // namespace lddmd
