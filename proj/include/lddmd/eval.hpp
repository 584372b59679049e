#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lddmd/data.hpp"
#include "lddmd/model.hpp"

namespace lddmd {

/// Nash-Sutcliffe efficiency 1 - sum (y - yhat)^2 / sum (y - mean(y))^2.
/// Throws ConfigError when y_true is constant or shorter than 2.
double nse(std::span<const double> y_true, std::span<const double> y_pred);

struct ResidualSummary {
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
    bool operator==(const ResidualSummary&) const = default;
};

struct NseReport {
    double nse_train = 0.0;
    double nse_validation = 0.0;
    std::size_t n_train = 0;
    std::size_t n_validation = 0;
    ResidualSummary train_residuals;       // y - yhat
    ResidualSummary validation_residuals;

    bool operator==(const NseReport&) const = default;
};

/// NSE of the first target column on each split, each against its own mean.
/// Predictions use the splits' absolute time indices.
NseReport evaluate(const LddmdModel<double>& model, const TimeSeriesDataset& train,
                   const TimeSeriesDataset& validation);

std::string format_report(const NseReport& report);

/// CSV j,t,y_true,y_hat,split with split "train" for the first train_count
/// rows and "validation" after.
void export_predictions(const LddmdModel<double>& model, const TimeSeriesDataset& data, std::size_t train_count,
                        const std::filesystem::path& path);

/// CSV j,z_1..z_dc of the latent state at every row.
void export_latent(const LddmdModel<double>& model, const TimeSeriesDataset& data, const std::filesystem::path& path);

struct InspectReport {
    std::vector<double> omegas;
    std::vector<double> mus;
    bool mu_learnable = false;
    std::vector<double> z0;
    std::size_t parameter_count = 0;
    std::vector<std::pair<std::string, double>> group_norms;  // Euclidean norm per parameter group
    std::vector<std::pair<std::string, std::size_t>> group_sizes;
};

InspectReport inspect(const LddmdModel<double>& model, bool mu_learnable);
std::string format_inspect(const InspectReport& report);
/// JSON object with omegas, mus, mu_learnable, z0, parameter_count, groups.
std::string inspect_json(const InspectReport& report);

}  // namespace lddmd
