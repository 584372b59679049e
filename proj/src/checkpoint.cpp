#include "lddmd/checkpoint.hpp"

#include <bit>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>

#include "lddmd/errors.hpp"

namespace lddmd {

namespace {

constexpr std::string_view kMagic = "LDDMD-CHECKPOINT";

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

void put_double(std::string& out, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>(bits & 0xffu));
        bits >>= 8;
    }
}

std::string_view loss_name(LossMode m) { return m == LossMode::Norm ? "norm" : "squared"; }
std::string_view parity_name(CouplingParity p) { return p == CouplingParity::Odd ? "odd" : "even"; }
std::string_view units_name(FrequencyUnits u) { return u == FrequencyUnits::Cycles ? "cycles" : "angular"; }

class Header {
public:
    void add(std::string_view key, const std::string& value) {
        text_ += key;
        text_ += ' ';
        text_ += value;
        text_ += '\n';
    }
    void add(std::string_view key, std::size_t v) { add(key, std::to_string(v)); }
    void add(std::string_view key, std::string_view v) { add(key, std::string(v)); }
    void add_double(std::string_view key, double v) { add(key, format_double(v)); }
    const std::string& text() const { return text_; }

private:
    std::string text_;
};

// Key/value lines of a parsed header. Repeated keys keep their order.
class Fields {
public:
    void insert(std::string key, std::string value) { map_[std::move(key)].push_back(std::move(value)); }

    const std::string& get(const std::string& key) const {
        const auto it = map_.find(key);
        if (it == map_.end() || it->second.size() != 1) {
            throw CorruptCheckpoint("checkpoint: header field '" + key + "' missing or repeated");
        }
        return it->second.front();
    }
    std::vector<std::string> all(const std::string& key) const {
        const auto it = map_.find(key);
        return it == map_.end() ? std::vector<std::string>{} : it->second;
    }
    std::uint64_t integer(const std::string& key) const {
        const std::string& s = get(key);
        std::uint64_t v = 0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
            throw CorruptCheckpoint("checkpoint: field '" + key + "' is not an integer: '" + s + "'");
        }
        return v;
    }
    double real(const std::string& key) const {
        const std::string& s = get(key);
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
            throw CorruptCheckpoint("checkpoint: field '" + key + "' is not a number: '" + s + "'");
        }
        return v;
    }
    template <class Enum>
    Enum choice(const std::string& key, std::string_view a, Enum ea, std::string_view b, Enum eb) const {
        const std::string& s = get(key);
        if (s == a) return ea;
        if (s == b) return eb;
        throw CorruptCheckpoint("checkpoint: field '" + key + "' has unknown value '" + s + "'");
    }

private:
    std::map<std::string, std::vector<std::string>> map_;
};

class PayloadReader {
public:
    explicit PayloadReader(std::string_view bytes) : bytes_(bytes) {}

    std::vector<double> doubles(std::size_t n, const char* what) {
        if (n > (bytes_.size() - pos_) / 8) {
            throw CorruptCheckpoint(std::string("checkpoint: payload too short for ") + what);
        }
        std::vector<double> out(n);
        for (auto& v : out) {
            std::uint64_t bits = 0;
            for (int i = 7; i >= 0; --i) {
                bits = (bits << 8) | static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)]);
            }
            v = std::bit_cast<double>(bits);
            pos_ += 8;
        }
        return out;
    }
    bool done() const { return pos_ == bytes_.size(); }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
    validate(ckpt.model);
    const LddmdShape shape = shape_of(ckpt.model);
    const TrainConfig& c = ckpt.config;
    const std::vector<double> params = get_parameters(ckpt.model);
    if (!ckpt.adam.m.empty() && (ckpt.adam.m.size() != params.size() || ckpt.adam.v.size() != params.size())) {
        throw ShapeError("checkpoint: optimizer state does not match parameter count");
    }
    if (ckpt.normalization && (ckpt.normalization->mean.size() != shape.input_dim ||
                               ckpt.normalization->stddev.size() != shape.input_dim)) {
        throw ShapeError("checkpoint: normalization statistics do not match input dimension");
    }

    std::string payload;
    for (double v : params) put_double(payload, v);
    for (double v : ckpt.adam.m) put_double(payload, v);
    for (double v : ckpt.adam.v) put_double(payload, v);
    for (double v : ckpt.loss_history) put_double(payload, v);
    if (ckpt.normalization) {
        for (double v : ckpt.normalization->mean) put_double(payload, v);
        for (double v : ckpt.normalization->stddev) put_double(payload, v);
    }

    Header h;
    h.add("input_dim", shape.input_dim);
    h.add("latent_dim", shape.latent_dim);
    h.add("output_dim", shape.output_dim);
    h.add("coupling_hidden_layers", shape.coupling_hidden_layers);
    h.add("coupling_hidden_dim", shape.coupling_hidden_dim);
    h.add("readout_hidden_dim", shape.readout_hidden_dim);
    h.add("parity", parity_name(shape.parity));
    h.add_double("dt", shape.dt);
    h.add("config.latent_dim", c.latent_dim);
    h.add("config.batch_size", c.batch_size);
    h.add_double("config.learning_rate", c.learning_rate);
    h.add_double("config.beta1", c.beta1);
    h.add_double("config.beta2", c.beta2);
    h.add_double("config.epsilon", c.epsilon);
    h.add("config.epochs", c.epochs);
    h.add("config.seed", std::to_string(c.seed));
    h.add("config.coupling_hidden_layers", c.coupling_hidden_layers);
    h.add("config.coupling_hidden_dim", c.coupling_hidden_dim);
    h.add("config.readout_hidden_dim", c.readout_hidden_dim);
    h.add("config.loss", loss_name(c.loss_mode));
    h.add("config.mu_learnable", std::string(c.mu_learnable ? "true" : "false"));
    h.add("config.parity", parity_name(c.parity));
    h.add("config.init_frequency_units", units_name(c.init_frequency_units));
    h.add_double("config.clip_grad_norm", c.clip_grad_norm);
    h.add("time_column", ckpt.time_column);
    for (const auto& n : ckpt.feature_names) h.add("feature_name", n);
    for (const auto& n : ckpt.target_names) h.add("target_name", n);
    h.add("train_count", ckpt.train_count);
    h.add("parameters", params.size());
    h.add("adam_step", std::to_string(ckpt.adam.step));
    h.add("adam_moments", ckpt.adam.m.size());
    h.add("loss_history", ckpt.loss_history.size());
    h.add("normalization", std::string(ckpt.normalization ? "true" : "false"));
    h.add("payload_bytes", payload.size());
    h.add("checksum", hex64(fnv1a(payload)));

    std::string out;
    out += kMagic;
    out += " v" + std::to_string(kCheckpointVersion) + "\n";
    out += h.text();
    out += "end\n";
    out += payload;
    return out;
}

Checkpoint parse_checkpoint(std::string_view bytes) {
    const auto first_nl = bytes.find('\n');
    if (first_nl == std::string_view::npos) {
        throw CorruptCheckpoint("checkpoint: missing header");
    }
    const std::string_view magic_line = bytes.substr(0, first_nl);
    if (magic_line.substr(0, kMagic.size()) != kMagic || magic_line.size() < kMagic.size() + 3 ||
        magic_line.substr(kMagic.size(), 2) != " v") {
        throw CorruptCheckpoint("checkpoint: not a checkpoint file");
    }
    const std::string_view version = magic_line.substr(kMagic.size() + 2);
    if (version != std::to_string(kCheckpointVersion)) {
        throw VersionMismatch("checkpoint: format version " + std::string(version) + ", this build reads version " +
                              std::to_string(kCheckpointVersion));
    }

    Fields f;
    std::size_t pos = first_nl + 1;
    bool ended = false;
    while (pos < bytes.size()) {
        const auto nl = bytes.find('\n', pos);
        if (nl == std::string_view::npos) {
            break;
        }
        const std::string_view line = bytes.substr(pos, nl - pos);
        pos = nl + 1;
        if (line == "end") {
            ended = true;
            break;
        }
        const auto space = line.find(' ');
        if (space == std::string_view::npos) {
            throw CorruptCheckpoint("checkpoint: malformed header line '" + std::string(line) + "'");
        }
        f.insert(std::string(line.substr(0, space)), std::string(line.substr(space + 1)));
    }
    if (!ended) {
        throw CorruptCheckpoint("checkpoint: header is truncated");
    }

    const std::string_view payload = bytes.substr(pos);
    if (payload.size() != f.integer("payload_bytes")) {
        throw CorruptCheckpoint("checkpoint: payload has " + std::to_string(payload.size()) + " bytes, header says " +
                                f.get("payload_bytes"));
    }
    if (hex64(fnv1a(payload)) != f.get("checksum")) {
        throw CorruptCheckpoint("checkpoint: checksum mismatch");
    }

    Checkpoint ck;
    LddmdShape shape;
    shape.input_dim = f.integer("input_dim");
    shape.latent_dim = f.integer("latent_dim");
    shape.output_dim = f.integer("output_dim");
    shape.coupling_hidden_layers = f.integer("coupling_hidden_layers");
    shape.coupling_hidden_dim = f.integer("coupling_hidden_dim");
    shape.readout_hidden_dim = f.integer("readout_hidden_dim");
    shape.parity = f.choice("parity", "odd", CouplingParity::Odd, "even", CouplingParity::Even);
    shape.dt = f.real("dt");
    try {
        shape.validate();
    } catch (const Error& e) {
        throw CorruptCheckpoint(std::string("checkpoint: invalid model shape: ") + e.what());
    }

    TrainConfig& c = ck.config;
    c.latent_dim = f.integer("config.latent_dim");
    c.batch_size = f.integer("config.batch_size");
    c.learning_rate = f.real("config.learning_rate");
    c.beta1 = f.real("config.beta1");
    c.beta2 = f.real("config.beta2");
    c.epsilon = f.real("config.epsilon");
    c.epochs = f.integer("config.epochs");
    c.seed = f.integer("config.seed");
    c.coupling_hidden_layers = f.integer("config.coupling_hidden_layers");
    c.coupling_hidden_dim = f.integer("config.coupling_hidden_dim");
    c.readout_hidden_dim = f.integer("config.readout_hidden_dim");
    c.loss_mode = f.choice("config.loss", "norm", LossMode::Norm, "squared", LossMode::Squared);
    c.mu_learnable = f.choice("config.mu_learnable", "true", true, "false", false);
    c.parity = f.choice("config.parity", "odd", CouplingParity::Odd, "even", CouplingParity::Even);
    c.init_frequency_units =
        f.choice("config.init_frequency_units", "cycles", FrequencyUnits::Cycles, "angular", FrequencyUnits::Angular);
    c.clip_grad_norm = f.real("config.clip_grad_norm");

    ck.time_column = f.get("time_column");
    ck.feature_names = f.all("feature_name");
    ck.target_names = f.all("target_name");
    ck.train_count = f.integer("train_count");

    const std::size_t n_params = f.integer("parameters");
    if (n_params != parameter_count(shape)) {
        throw CorruptCheckpoint("checkpoint: " + std::to_string(n_params) + " parameters recorded, shape needs " +
                                std::to_string(parameter_count(shape)));
    }
    const std::size_t n_moments = f.integer("adam_moments");
    if (n_moments != 0 && n_moments != n_params) {
        throw CorruptCheckpoint("checkpoint: optimizer moments do not match parameter count");
    }
    const std::size_t n_history = f.integer("loss_history");
    const bool has_norm = f.choice("normalization", "true", true, "false", false);

    PayloadReader in(payload);
    ck.model = make_model<double>(shape);
    set_parameters(ck.model, in.doubles(n_params, "parameters"));
    ck.adam.m = in.doubles(n_moments, "optimizer moments");
    ck.adam.v = in.doubles(n_moments, "optimizer moments");
    ck.adam.step = f.integer("adam_step");
    ck.loss_history = in.doubles(n_history, "loss history");
    if (has_norm) {
        NormalizationStats s;
        s.mean = in.doubles(shape.input_dim, "normalization");
        s.stddev = in.doubles(shape.input_dim, "normalization");
        ck.normalization = std::move(s);
    }
    if (!in.done()) {
        throw CorruptCheckpoint("checkpoint: trailing bytes after payload");
    }
    return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    const std::string bytes = serialize_checkpoint(ckpt);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw LoadError("checkpoint: cannot write " + tmp.string());
        }
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) {
            throw LoadError("checkpoint: write to " + tmp.string() + " failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        throw LoadError("checkpoint: cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw LoadError("checkpoint: cannot open " + path.string());
    }
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_checkpoint(bytes);
}

void check_compatible(const Checkpoint& ckpt, const TimeSeriesDataset& data) {
    if (data.input_dim() != ckpt.model.input_dim()) {
        throw ShapeError("checkpoint expects " + std::to_string(ckpt.model.input_dim()) + " input features, data has " +
                         std::to_string(data.input_dim()));
    }
    if (data.output_dim() != ckpt.model.output_dim()) {
        throw ShapeError("checkpoint expects " + std::to_string(ckpt.model.output_dim()) + " targets, data has " +
                         std::to_string(data.output_dim()));
    }
}

}  // namespace lddmd
