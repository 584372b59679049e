#include "lddmd/config.hpp"

#include <fstream>
#include <initializer_list>
#include <iterator>
#include <set>

#include <json.hpp>

#include "lddmd/errors.hpp"

namespace lddmd {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) {
        throw ConfigError("config: '" + where + "' must be an object");
    }
    const std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        if (!keys.contains(key)) {
            throw ConfigError("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
        }
    }
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
    if (!obj.contains(key)) {
        return;
    }
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: '" + where + "." + key + "' has the wrong type");
    }
}

std::size_t read_count(const json& obj, const char* key, std::size_t fallback, const std::string& where) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
        throw ConfigError("config: '" + where + "." + key + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() ? path : (base / path).lexically_normal();
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    reject_unknown(root, "", {"seed", "synthetic", "data", "train", "output"});

    RunConfig rc;
    if (root.contains("seed")) {
        const json& s = root.at("seed");
        if (!s.is_number_unsigned()) {
            throw ConfigError("config: 'seed' must be a non-negative integer");
        }
        rc.seed = s.get<std::uint64_t>();
    }

    const json empty = json::object();
    const json& syn = root.contains("synthetic") ? root.at("synthetic") : empty;
    reject_unknown(syn, "synthetic", {"n_steps", "noise_sigma_y", "noise_sigma_x"});
    rc.synthetic.n_steps = read_count(syn, "n_steps", rc.synthetic.n_steps, "synthetic");
    read(syn, "noise_sigma_y", rc.synthetic.noise_sigma_y, "synthetic");
    read(syn, "noise_sigma_x", rc.synthetic.noise_sigma_x, "synthetic");
    rc.synthetic.seed = rc.seed;

    const json& out = root.contains("output") ? root.at("output") : empty;
    reject_unknown(out, "output", {"dir", "checkpoint", "loss_history"});
    std::string dir = ".";
    read(out, "dir", dir, "output");
    rc.output_dir = resolve(base_dir, dir);
    std::string ckpt;
    std::string loss;
    read(out, "checkpoint", ckpt, "output");
    read(out, "loss_history", loss, "output");
    rc.checkpoint_path = ckpt.empty() ? rc.output_dir / "model.ckpt" : resolve(base_dir, ckpt);
    rc.loss_history_path = loss.empty() ? rc.output_dir / "loss_history.csv" : resolve(base_dir, loss);

    const json& data = root.contains("data") ? root.at("data") : empty;
    reject_unknown(data, "data", {"path", "time_column", "feature_columns", "target_column", "nan_policy",
                                  "standardize", "train_count"});
    std::string data_path;
    read(data, "path", data_path, "data");
    rc.data_path = data_path.empty() ? rc.output_dir / "noisy.csv" : resolve(base_dir, data_path);
    rc.schema.feature_columns = {"x_1", "x_2"};
    read(data, "time_column", rc.schema.time_column, "data");
    read(data, "feature_columns", rc.schema.feature_columns, "data");
    read(data, "target_column", rc.schema.target_column, "data");
    std::string nan_policy = "fail";
    read(data, "nan_policy", nan_policy, "data");
    if (nan_policy == "fail") {
        rc.schema.nan_policy = NanPolicy::Fail;
    } else if (nan_policy == "drop") {
        rc.schema.nan_policy = NanPolicy::Drop;
    } else {
        throw ConfigError("config: 'data.nan_policy' must be \"fail\" or \"drop\"");
    }
    read(data, "standardize", rc.standardize, "data");
    if (data.contains("train_count")) {
        rc.train_count = read_count(data, "train_count", 0, "data");
    }

    const json& tr = root.contains("train") ? root.at("train") : empty;
    reject_unknown(tr, "train", {"latent_dim", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "epochs",
                                 "coupling_hidden_layers", "coupling_hidden_dim", "readout_hidden_dim", "loss",
                                 "mu_learnable", "parity", "init_frequency_units", "clip_grad_norm"});
    TrainConfig& t = rc.train;
    t.latent_dim = read_count(tr, "latent_dim", t.latent_dim, "train");
    t.batch_size = read_count(tr, "batch_size", t.batch_size, "train");
    t.epochs = read_count(tr, "epochs", t.epochs, "train");
    t.coupling_hidden_layers = read_count(tr, "coupling_hidden_layers", t.coupling_hidden_layers, "train");
    t.coupling_hidden_dim = read_count(tr, "coupling_hidden_dim", t.coupling_hidden_dim, "train");
    t.readout_hidden_dim = read_count(tr, "readout_hidden_dim", t.readout_hidden_dim, "train");
    read(tr, "learning_rate", t.learning_rate, "train");
    read(tr, "beta1", t.beta1, "train");
    read(tr, "beta2", t.beta2, "train");
    read(tr, "epsilon", t.epsilon, "train");
    read(tr, "mu_learnable", t.mu_learnable, "train");
    read(tr, "clip_grad_norm", t.clip_grad_norm, "train");
    std::string loss_mode = "norm";
    std::string parity = "odd";
    std::string units = "cycles";
    read(tr, "loss", loss_mode, "train");
    read(tr, "parity", parity, "train");
    read(tr, "init_frequency_units", units, "train");
    if (loss_mode != "norm" && loss_mode != "squared") {
        throw ConfigError("config: 'train.loss' must be \"norm\" or \"squared\"");
    }
    if (parity != "odd" && parity != "even") {
        throw ConfigError("config: 'train.parity' must be \"odd\" or \"even\"");
    }
    if (units != "cycles" && units != "angular") {
        throw ConfigError("config: 'train.init_frequency_units' must be \"cycles\" or \"angular\"");
    }
    t.loss_mode = loss_mode == "norm" ? LossMode::Norm : LossMode::Squared;
    t.parity = parity == "odd" ? CouplingParity::Odd : CouplingParity::Even;
    t.init_frequency_units = units == "cycles" ? FrequencyUnits::Cycles : FrequencyUnits::Angular;
    t.seed = rc.seed;

    rc.synthetic.validate();
    t.validate();
    return rc;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw LoadError("config: cannot open " + path.string());
    }
    const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    RunConfig rc = parse_run_config(text, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
    rc.source = path;
    return rc;
}

}  // namespace lddmd
