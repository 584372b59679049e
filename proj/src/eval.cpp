#include "lddmd/eval.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "lddmd/errors.hpp"
#include "lddmd/kernels.hpp"

namespace lddmd {

double nse(std::span<const double> y_true, std::span<const double> y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw ShapeError("nse: " + std::to_string(y_true.size()) + " observations but " +
                         std::to_string(y_pred.size()) + " predictions");
    }
    if (y_true.size() < 2) {
        throw ConfigError("nse: need at least two observations");
    }
    const auto& kt = kernels::active();
    const std::size_t n = y_true.size();
    const double mean = kt.sum(y_true.data(), n) / static_cast<double>(n);
    const std::vector<double> ybar(n, mean);
    const double denom = kt.sum_sq_diff(y_true.data(), ybar.data(), n);
    if (!(denom > 0.0)) {
        throw ConfigError("nse: observations are constant, efficiency undefined");
    }
    return 1.0 - kt.sum_sq_diff(y_true.data(), y_pred.data(), n) / denom;
}

namespace {

ResidualSummary summarize(std::span<const double> y, std::span<const double> yhat) {
    ResidualSummary s{INFINITY, 0.0, -INFINITY};
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - yhat[i];
        s.min = std::min(s.min, r);
        s.max = std::max(s.max, r);
        s.mean += r;
    }
    s.mean /= static_cast<double>(y.size());
    return s;
}

void check_dims(const LddmdModel<double>& model, const TimeSeriesDataset& data, const char* what) {
    if (data.input_dim() != model.input_dim() || data.output_dim() != model.output_dim()) {
        throw ShapeError(std::string(what) + ": data has " + std::to_string(data.input_dim()) + " features and " +
                         std::to_string(data.output_dim()) + " targets, model expects " +
                         std::to_string(model.input_dim()) + " and " + std::to_string(model.output_dim()));
    }
}

}  // namespace

NseReport evaluate(const LddmdModel<double>& model, const TimeSeriesDataset& train,
                   const TimeSeriesDataset& validation) {
    check_dims(model, train, "evaluate");
    check_dims(model, validation, "evaluate");
    NseReport r;
    auto run = [&](const TimeSeriesDataset& d, double& score, std::size_t& count, ResidualSummary& res) {
        const std::vector<double> y = d.targets.column(0);
        const std::vector<double> yhat = predict_series(model, d).column(0);
        score = nse(y, yhat);
        count = d.size();
        res = summarize(y, yhat);
    };
    run(train, r.nse_train, r.n_train, r.train_residuals);
    run(validation, r.nse_validation, r.n_validation, r.validation_residuals);
    return r;
}

std::string format_report(const NseReport& r) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(4);
    os << std::left << std::setw(12) << "split" << std::right << std::setw(7) << "n" << std::setw(10) << "NSE"
       << std::setw(12) << "resid_min" << std::setw(12) << "resid_mean" << std::setw(12) << "resid_max" << '\n';
    auto row = [&](const char* name, std::size_t n, double score, const ResidualSummary& s) {
        os << std::left << std::setw(12) << name << std::right << std::setw(7) << n << std::setw(10) << score
           << std::setw(12) << s.min << std::setw(12) << s.mean << std::setw(12) << s.max << '\n';
    };
    row("train", r.n_train, r.nse_train, r.train_residuals);
    row("validation", r.n_validation, r.nse_validation, r.validation_residuals);
    return os.str();
}

void export_predictions(const LddmdModel<double>& model, const TimeSeriesDataset& data, std::size_t train_count,
                        const std::filesystem::path& path) {
    check_dims(model, data, "export_predictions");
    const Matrix yhat = predict_series(model, data);
    std::ofstream out(path);
    if (!out) {
        throw LoadError("export_predictions: cannot write " + path.string());
    }
    out << "j,t,y_true,y_hat,split\n";
    for (std::size_t r = 0; r < data.size(); ++r) {
        const std::uint64_t j = data.time_index(r);
        out << j << ',' << format_double(static_cast<double>(j) * data.dt) << ',' << format_double(data.targets(r, 0))
            << ',' << format_double(yhat(r, 0)) << ',' << (r < train_count ? "train" : "validation") << '\n';
    }
    if (!out) {
        throw LoadError("export_predictions: write to " + path.string() + " failed");
    }
}

void export_latent(const LddmdModel<double>& model, const TimeSeriesDataset& data, const std::filesystem::path& path) {
    check_dims(model, data, "export_latent");
    const Matrix z = latent_series(model, data);
    std::ofstream out(path);
    if (!out) {
        throw LoadError("export_latent: cannot write " + path.string());
    }
    out << 'j';
    for (std::size_t c = 0; c < z.cols; ++c) {
        out << ",z_" << (c + 1);
    }
    out << '\n';
    for (std::size_t r = 0; r < data.size(); ++r) {
        out << data.time_index(r);
        for (double v : z.row(r)) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
    if (!out) {
        throw LoadError("export_latent: write to " + path.string() + " failed");
    }
}

InspectReport inspect(const LddmdModel<double>& model, bool mu_learnable) {
    validate(model);
    InspectReport r;
    r.omegas = model.dynamics.omegas;
    r.mus = model.dynamics.mus;
    r.mu_learnable = mu_learnable;
    r.z0 = model.z0;
    const std::vector<double> params = get_parameters(model);
    const std::vector<ParamGroup> groups = parameter_groups(model);
    r.parameter_count = params.size();
    for (ParamGroup g : {ParamGroup::Phi, ParamGroup::Coupling, ParamGroup::Readout, ParamGroup::Omega,
                         ParamGroup::Mu, ParamGroup::Z0}) {
        double ss = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < params.size(); ++i) {
            if (groups[i] == g) {
                ss += params[i] * params[i];
                ++count;
            }
        }
        r.group_norms.emplace_back(std::string(to_string(g)), std::sqrt(ss));
        r.group_sizes.emplace_back(std::string(to_string(g)), count);
    }
    return r;
}

std::string format_inspect(const InspectReport& r) {
    std::ostringstream os;
    os.precision(6);
    for (std::size_t i = 0; i < r.omegas.size(); ++i) {
        os << "omega_" << (i + 1) << " = " << r.omegas[i] << '\n';
    }
    for (std::size_t i = 0; i < r.mus.size(); ++i) {
        os << "mu_" << (i + 1) << " = " << r.mus[i] << (r.mu_learnable ? "" : " (frozen)") << '\n';
    }
    os << "z0 =";
    for (double v : r.z0) {
        os << ' ' << v;
    }
    os << '\n' << "parameters = " << r.parameter_count << '\n';
    for (std::size_t i = 0; i < r.group_norms.size(); ++i) {
        os << "  " << r.group_norms[i].first << ": " << r.group_sizes[i].second << " values, norm "
           << r.group_norms[i].second << '\n';
    }
    return os.str();
}

std::string inspect_json(const InspectReport& r) {
    nlohmann::ordered_json j;
    j["omegas"] = r.omegas;
    j["mus"] = r.mus;
    j["mu_learnable"] = r.mu_learnable;
    j["z0"] = r.z0;
    j["parameter_count"] = r.parameter_count;
    nlohmann::ordered_json groups = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < r.group_norms.size(); ++i) {
        groups[r.group_norms[i].first] = {{"count", r.group_sizes[i].second}, {"norm", r.group_norms[i].second}};
    }
    j["groups"] = groups;
    return j.dump(2) + "\n";
}

}  // namespace lddmd
