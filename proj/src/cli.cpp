#include "lddmd/cli.hpp"

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lddmd/checkpoint.hpp"
#include "lddmd/config.hpp"
#include "lddmd/errors.hpp"
#include "lddmd/eval.hpp"
#include "lddmd/synthetic.hpp"
#include "lddmd/train.hpp"

namespace lddmd {

namespace {

namespace fs = std::filesystem;

void ensure_parent(const fs::path& p) {
    if (p.has_parent_path()) {
        fs::create_directories(p.parent_path());
    }
}

void write_matrix_csv(const fs::path& path, const Matrix& m, const std::string& prefix) {
    ensure_parent(path);
    std::ofstream out(path);
    if (!out) {
        throw LoadError("cannot write " + path.string());
    }
    out << 'j';
    for (std::size_t c = 0; c < m.cols; ++c) {
        out << ',' << prefix << (c + 1);
    }
    out << '\n';
    for (std::size_t r = 0; r < m.rows; ++r) {
        out << r;
        for (double v : m.row(r)) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
}

int cmd_generate(const fs::path& config_path, std::ostream& out) {
    const RunConfig rc = load_run_config(config_path);
    const SyntheticData syn = generate_synthetic(rc.synthetic);
    fs::create_directories(rc.output_dir);
    write_csv(syn.clean, rc.output_dir / "clean.csv");
    write_csv(syn.noisy, rc.output_dir / "noisy.csv");
    write_matrix_csv(rc.output_dir / "latent_truth.csv", syn.latent, "z_");
    out << "wrote " << syn.noisy.size() << " steps to " << rc.output_dir.string()
        << " (clean.csv, noisy.csv, latent_truth.csv); sigma_y = " << syn.sigma_y << '\n';
    return kExitOk;
}

struct PreparedData {
    TimeSeriesDataset full;
    TimeSeriesDataset train;
    TimeSeriesDataset validation;
    std::size_t train_count = 0;
    bool has_validation = false;
};

PreparedData prepare(TimeSeriesDataset full, std::size_t train_count) {
    PreparedData p;
    p.train_count = train_count;
    if (train_count >= 1 && train_count < full.size()) {
        auto [tr, va] = split(full, train_count);
        p.train = std::move(tr);
        p.validation = std::move(va);
        p.has_validation = true;
    } else if (train_count == full.size()) {
        p.train = full;
    } else {
        throw ConfigError("train_count " + std::to_string(train_count) + " outside [1, " +
                          std::to_string(full.size()) + "]");
    }
    p.full = std::move(full);
    return p;
}

void print_nse(std::ostream& out, const LddmdModel<double>& model, const PreparedData& d) {
    if (d.has_validation) {
        out << format_report(evaluate(model, d.train, d.validation));
    } else {
        const std::vector<double> y = d.train.targets.column(0);
        const std::vector<double> yhat = predict_series(model, d.train).column(0);
        out << "train NSE " << nse(y, yhat) << " (n = " << y.size() << ")\n";
    }
}

int cmd_train(const fs::path& config_path, std::size_t threads, std::ostream& out, std::ostream& err) {
    RunConfig rc = load_run_config(config_path);
    if (threads > 0) {
        rc.train.threads = threads;
    }
    TimeSeriesDataset full = load_csv(rc.data_path, rc.schema);
    const std::size_t train_count = rc.train_count.value_or(full.size() / 2);
    std::optional<NormalizationStats> stats;
    if (rc.standardize) {
        if (train_count < 1 || train_count > full.size()) {
            throw ConfigError("train_count " + std::to_string(train_count) + " outside [1, " +
                              std::to_string(full.size()) + "]");
        }
        TimeSeriesDataset head = full;
        if (train_count < full.size()) {
            head = split(full, train_count).first;
        }
        stats = standardize(head).second;
        full = apply_standardization(full, *stats);
    }
    const PreparedData d = prepare(std::move(full), train_count);

    const LddmdModel<double> init = init_model(rc.train, d.train, rc.seed);
    const std::size_t every = std::max<std::size_t>(1, rc.train.epochs / 10);
    const TrainResult result = train(init, d.train, rc.train, {}, [&](std::size_t epoch, double loss) {
        if ((epoch + 1) % every == 0 || epoch + 1 == rc.train.epochs) {
            out << "epoch " << (epoch + 1) << "/" << rc.train.epochs << "  mean loss " << loss << '\n';
        }
    });

    Checkpoint ck;
    ck.model = result.model;
    ck.config = rc.train;
    ck.adam = result.adam;
    ck.loss_history = result.loss_history;
    ck.normalization = stats;
    ck.train_count = train_count;
    ck.time_column = rc.schema.time_column;
    ck.feature_names = rc.schema.feature_columns;
    ck.target_names = {rc.schema.target_column};
    ensure_parent(rc.checkpoint_path);
    save_checkpoint(rc.checkpoint_path, ck);

    ensure_parent(rc.loss_history_path);
    std::ofstream loss_out(rc.loss_history_path);
    if (!loss_out) {
        throw LoadError("cannot write " + rc.loss_history_path.string());
    }
    loss_out << "epoch,mean_loss\n";
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
        loss_out << (e + 1) << ',' << format_double(result.loss_history[e]) << '\n';
    }

    if (result.abort_reason) {
        err << "training aborted: " << *result.abort_reason << "\nlast good checkpoint: "
            << rc.checkpoint_path.string() << '\n';
        return kExitNumerical;
    }
    out << "checkpoint: " << rc.checkpoint_path.string() << '\n';
    print_nse(out, result.model, d);
    return kExitOk;
}

fs::path sibling(const fs::path& ckpt, const std::string& suffix) {
    fs::path p = ckpt;
    p += suffix;
    return p;
}

int cmd_eval(const fs::path& ckpt_path, const fs::path& data_path, const std::string& which,
             std::optional<std::size_t> train_count_override, fs::path predictions, fs::path latent,
             std::ostream& out) {
    const Checkpoint ck = load_checkpoint(ckpt_path);
    CsvSchema schema;
    schema.time_column = ck.time_column;
    schema.feature_columns = ck.feature_names;
    if (ck.target_names.size() != 1) {
        throw ConfigError("checkpoint does not name exactly one target column");
    }
    schema.target_column = ck.target_names.front();
    TimeSeriesDataset full = load_csv(data_path, schema);
    check_compatible(ck, full);
    if (ck.normalization) {
        full = apply_standardization(full, *ck.normalization);
    }
    std::size_t train_count = train_count_override.value_or(ck.train_count);
    train_count = std::min(train_count, full.size());
    if (train_count == 0) {
        train_count = full.size();
    }
    const PreparedData d = prepare(full, train_count);
    print_nse(out, ck.model, d);

    const TimeSeriesDataset* subset = &d.full;
    std::size_t boundary = train_count;
    if (which == "train") {
        subset = &d.train;
        boundary = d.train.size();
    } else if (which == "validation") {
        if (!d.has_validation) {
            throw ConfigError("no validation rows after train_count " + std::to_string(train_count));
        }
        subset = &d.validation;
        boundary = 0;
    }
    if (predictions.empty()) predictions = sibling(ckpt_path, ".predictions.csv");
    if (latent.empty()) latent = sibling(ckpt_path, ".latent.csv");
    ensure_parent(predictions);
    ensure_parent(latent);
    export_predictions(ck.model, *subset, boundary, predictions);
    export_latent(ck.model, *subset, latent);
    out << "predictions: " << predictions.string() << "\nlatent: " << latent.string() << '\n';
    return kExitOk;
}

int cmd_inspect(const fs::path& ckpt_path, fs::path json_path, std::ostream& out) {
    const Checkpoint ck = load_checkpoint(ckpt_path);
    const InspectReport r = inspect(ck.model, ck.config.mu_learnable);
    out << format_inspect(r);
    if (json_path.empty()) json_path = sibling(ckpt_path, ".json");
    ensure_parent(json_path);
    std::ofstream js(json_path);
    if (!js) {
        throw LoadError("cannot write " + json_path.string());
    }
    js << inspect_json(r);
    out << "json: " << json_path.string() << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Latent diffeomorphic DMD: generate, train, evaluate and inspect models", "lddmd"};
    app.require_subcommand(1);

    std::string config_path;
    auto* generate = app.add_subcommand("generate", "Write clean.csv, noisy.csv and latent_truth.csv");
    generate->add_option("config", config_path, "Run configuration (JSON)")->required();

    std::size_t threads = 0;
    auto* train_cmd = app.add_subcommand("train", "Train a model; writes a checkpoint and the loss history");
    train_cmd->add_option("config", config_path, "Run configuration (JSON)")->required();
    train_cmd->add_option("--threads", threads, "Worker threads for gradient evaluation (results do not change)");

    std::string ckpt_path;
    std::string data_path;
    std::string which = "all";
    std::optional<std::size_t> train_count;
    std::string predictions;
    std::string latent;
    auto* eval_cmd = app.add_subcommand("eval", "Report NSE and export predictions and latent states");
    eval_cmd->add_option("checkpoint", ckpt_path, "Checkpoint file")->required();
    eval_cmd->add_option("data", data_path, "CSV with the checkpoint's columns")->required();
    eval_cmd->add_option("--split", which, "Rows to export")->check(CLI::IsMember({"all", "train", "validation"}));
    eval_cmd->add_option("--train-count", train_count, "Train/validation boundary (default: from checkpoint)");
    eval_cmd->add_option("--predictions", predictions, "Predictions CSV path");
    eval_cmd->add_option("--latent", latent, "Latent CSV path");

    std::string json_path;
    auto* inspect_cmd = app.add_subcommand("inspect", "Print learned frequencies, z0 and parameter norms");
    inspect_cmd->add_option("checkpoint", ckpt_path, "Checkpoint file")->required();
    inspect_cmd->add_option("--json", json_path, "JSON sidecar path (default: <checkpoint>.json)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitInput;
    }

    try {
        if (generate->parsed()) {
            return cmd_generate(config_path, out);
        }
        if (train_cmd->parsed()) {
            return cmd_train(config_path, threads, out, err);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(ckpt_path, data_path, which, train_count, predictions, latent, out);
        }
        if (inspect_cmd->parsed()) {
            return cmd_inspect(ckpt_path, json_path, out);
        }
    } catch (const NumericalAbort& e) {
        err << "error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const StateError& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return kExitInternal;
}

}  // namespace lddmd
