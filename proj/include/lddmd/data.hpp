#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lddmd {

/// Dense row-major matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
    std::vector<double> column(std::size_t c) const;

    bool operator==(const Matrix&) const = default;
};

/// Per-feature z-score statistics (population standard deviation).
struct NormalizationStats {
    std::vector<double> mean;
    std::vector<double> stddev;

    bool operator==(const NormalizationStats&) const = default;
};

/// Paired input/target sequences. Row r holds time index j = t0_index + r.
struct TimeSeriesDataset {
    Matrix inputs;   // N x d
    Matrix targets;  // N x m
    double dt = 1.0;
    std::int64_t t0_index = 0;
    std::string time_column = "j";
    std::vector<std::string> feature_names;
    std::vector<std::string> target_names;
    std::optional<NormalizationStats> normalization;

    std::size_t size() const { return inputs.rows; }
    std::size_t input_dim() const { return inputs.cols; }
    std::size_t output_dim() const { return targets.cols; }
    std::uint64_t time_index(std::size_t row) const;

    /// Checks alignment, non-emptiness and finiteness.
    void validate() const;
};

enum class NanPolicy {
    Fail,  // any non-finite value aborts the load
    Drop,  // rows with non-finite values are removed before the stride check
};

struct CsvSchema {
    std::string time_column = "j";
    std::vector<std::string> feature_columns;
    std::string target_column = "y";
    NanPolicy nan_policy = NanPolicy::Fail;
};

/// Reads a comma-separated file with a header row. The time column holds
/// either integers or ISO dates (YYYY-MM-DD); its stride must be constant and
/// becomes dt (in index units or days).
TimeSeriesDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema);

/// Writes time, feature and target columns with round-trip exact formatting.
void write_csv(const TimeSeriesDataset& data, const std::filesystem::path& path);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Z-scores every feature column; targets are left in physical units.
std::pair<TimeSeriesDataset, NormalizationStats> standardize(const TimeSeriesDataset& data);

/// Applies previously computed statistics (e.g. from the training split).
TimeSeriesDataset apply_standardization(const TimeSeriesDataset& data, const NormalizationStats& stats);

/// Contiguous temporal split; validation keeps its absolute time indices.
std::pair<TimeSeriesDataset, TimeSeriesDataset> split(const TimeSeriesDataset& data, std::size_t train_count);

/// Adds i.i.d. N(0, sigma^2) noise to every input (sigma_x) and target
/// (sigma_y) entry. Deterministic in seed.
TimeSeriesDataset add_noise(const TimeSeriesDataset& data, double sigma_x, double sigma_y,
                            std::uint64_t seed);

}  // namespace lddmd
