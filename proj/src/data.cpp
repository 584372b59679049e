#include "lddmd/data.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "lddmd/errors.hpp"
#include "lddmd/rng.hpp"

namespace lddmd {

std::vector<double> Matrix::column(std::size_t c) const {
    std::vector<double> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        out[r] = (*this)(r, c);
    }
    return out;
}

std::uint64_t TimeSeriesDataset::time_index(std::size_t row) const {
    return static_cast<std::uint64_t>(t0_index + static_cast<std::int64_t>(row));
}

void TimeSeriesDataset::validate() const {
    if (inputs.rows == 0) {
        throw ConfigError("dataset: no rows");
    }
    if (inputs.rows != targets.rows) {
        throw ShapeError("dataset: " + std::to_string(inputs.rows) + " input rows but " +
                         std::to_string(targets.rows) + " target rows");
    }
    if (inputs.cols == 0 || targets.cols == 0) {
        throw ShapeError("dataset: needs at least one feature and one target column");
    }
    if (!(dt > 0.0)) {
        throw ConfigError("dataset: dt must be positive");
    }
    if (t0_index < 0) {
        throw ConfigError("dataset: negative time index origin");
    }
    auto finite = [](const Matrix& m) {
        return std::all_of(m.data.begin(), m.data.end(), [](double v) { return std::isfinite(v); });
    };
    if (!finite(inputs) || !finite(targets)) {
        throw ConfigError("dataset: non-finite entries");
    }
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    std::string out(s.substr(first, last - first + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') {
        out = out.substr(1, out.size() - 2);
    }
    return out;
}

std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

// NaN for empty or "nan"-like fields; nullopt if the text is not a number.
std::optional<double> parse_number(const std::string& s) {
    if (s.empty() || s == "NA" || s == "NaN" || s == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    double v = 0.0;
    const char* begin = s.data();
    if (!s.empty() && s.front() == '+') {
        ++begin;
    }
    const auto res = std::from_chars(begin, s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

struct TimeValue {
    std::int64_t value;
    bool is_date;
};

std::optional<TimeValue> parse_time(const std::string& s) {
    if (s.size() == 10 && s[4] == '-' && s[7] == '-') {
        int y = 0;
        unsigned mo = 0;
        unsigned d = 0;
        const bool ok = std::from_chars(s.data(), s.data() + 4, y).ec == std::errc() &&
                        std::from_chars(s.data() + 5, s.data() + 7, mo).ec == std::errc() &&
                        std::from_chars(s.data() + 8, s.data() + 10, d).ec == std::errc();
        const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo}, std::chrono::day{d}};
        if (!ok || !ymd.ok()) {
            return std::nullopt;
        }
        return TimeValue{std::chrono::sys_days(ymd).time_since_epoch().count(), true};
    }
    std::int64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return TimeValue{v, false};
}

}  // namespace

TimeSeriesDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) {
        throw LoadError("csv: cannot open " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw LoadError("csv: " + path.string() + " is empty");
    }
    if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) {
        line.erase(0, 3);
    }
    const std::vector<std::string> header = split_fields(line);
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        col.emplace(header[i], i);
    }
    auto find_col = [&](const std::string& name) {
        const auto it = col.find(name);
        if (it == col.end()) {
            throw LoadError("csv: " + path.string() + " has no column '" + name + "'");
        }
        return it->second;
    };
    if (schema.feature_columns.empty()) {
        throw LoadError("csv: schema lists no feature columns");
    }
    const std::size_t time_col = find_col(schema.time_column);
    std::vector<std::size_t> feature_cols;
    for (const auto& f : schema.feature_columns) {
        feature_cols.push_back(find_col(f));
    }
    const std::size_t target_col = find_col(schema.target_column);

    struct Row {
        std::size_t line;
        TimeValue time;
        std::vector<double> x;
        double y;
    };
    std::vector<Row> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw LoadError("csv: line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                            " fields, header has " + std::to_string(header.size()));
        }
        Row row{line_no, {}, {}, 0.0};
        const auto t = parse_time(fields[time_col]);
        if (!t) {
            throw LoadError("csv: line " + std::to_string(line_no) + ": unparseable time '" + fields[time_col] + "'");
        }
        row.time = *t;
        auto number = [&](std::size_t c) {
            const auto v = parse_number(fields[c]);
            if (!v) {
                throw LoadError("csv: line " + std::to_string(line_no) + ", column '" + header[c] +
                                "': unparseable number '" + fields[c] + "'");
            }
            return *v;
        };
        for (auto c : feature_cols) {
            row.x.push_back(number(c));
        }
        row.y = number(target_col);

        const bool finite = std::isfinite(row.y) &&
                            std::all_of(row.x.begin(), row.x.end(), [](double v) { return std::isfinite(v); });
        if (!finite) {
            if (schema.nan_policy == NanPolicy::Fail) {
                throw LoadError("csv: line " + std::to_string(line_no) + " has missing or non-finite values");
            }
            continue;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw LoadError("csv: " + path.string() + " has no data rows");
    }

    std::int64_t stride = 1;
    if (rows.size() >= 2) {
        stride = rows[1].time.value - rows[0].time.value;
        if (stride <= 0) {
            throw LoadError("csv: line " + std::to_string(rows[1].line) + ": time column is not increasing");
        }
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].time.is_date != rows[0].time.is_date) {
            throw LoadError("csv: line " + std::to_string(rows[i].line) + ": mixed date and integer time values");
        }
        if (rows[i].time.value - rows[i - 1].time.value != stride) {
            throw LoadError("csv: line " + std::to_string(rows[i].line) + ": non-constant time stride (expected " +
                            std::to_string(stride) + ", got " +
                            std::to_string(rows[i].time.value - rows[i - 1].time.value) + ")");
        }
    }

    TimeSeriesDataset ds;
    ds.inputs = Matrix(rows.size(), feature_cols.size());
    ds.targets = Matrix(rows.size(), 1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy(rows[r].x.begin(), rows[r].x.end(), ds.inputs.row(r).begin());
        ds.targets(r, 0) = rows[r].y;
    }
    ds.dt = static_cast<double>(stride);
    const std::int64_t first = rows[0].time.value;
    ds.t0_index = (!rows[0].time.is_date && first >= 0 && first % stride == 0) ? first / stride : 0;
    ds.time_column = schema.time_column;
    ds.feature_names = schema.feature_columns;
    ds.target_names = {schema.target_column};
    return ds;
}

void write_csv(const TimeSeriesDataset& data, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw LoadError("csv: cannot write " + path.string());
    }
    out << data.time_column;
    for (std::size_t c = 0; c < data.input_dim(); ++c) {
        out << ',' << (c < data.feature_names.size() ? data.feature_names[c] : "x_" + std::to_string(c + 1));
    }
    for (std::size_t c = 0; c < data.output_dim(); ++c) {
        out << ',' << (c < data.target_names.size() ? data.target_names[c] : "y_" + std::to_string(c + 1));
    }
    out << '\n';
    const bool integral_dt = data.dt == std::floor(data.dt);
    for (std::size_t r = 0; r < data.size(); ++r) {
        const double t = static_cast<double>(data.time_index(r)) * data.dt;
        out << (integral_dt ? std::to_string(static_cast<std::int64_t>(t)) : format_double(t));
        for (double v : data.inputs.row(r)) {
            out << ',' << format_double(v);
        }
        for (double v : data.targets.row(r)) {
            out << ',' << format_double(v);
        }
        out << '\n';
    }
    if (!out) {
        throw LoadError("csv: write to " + path.string() + " failed");
    }
}

std::pair<TimeSeriesDataset, NormalizationStats> standardize(const TimeSeriesDataset& data) {
    if (data.size() < 2) {
        throw ConfigError("standardize: need at least two rows");
    }
    NormalizationStats stats;
    const double n = static_cast<double>(data.size());
    for (std::size_t c = 0; c < data.input_dim(); ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < data.size(); ++r) {
            mean += data.inputs(r, c);
        }
        mean /= n;
        double var = 0.0;
        for (std::size_t r = 0; r < data.size(); ++r) {
            const double d = data.inputs(r, c) - mean;
            var += d * d;
        }
        const double sd = std::sqrt(var / n);
        if (!(sd > 0.0)) {
            const std::string name = c < data.feature_names.size() ? data.feature_names[c] : std::to_string(c);
            throw ConfigError("standardize: feature column '" + name + "' has zero variance");
        }
        stats.mean.push_back(mean);
        stats.stddev.push_back(sd);
    }
    return {apply_standardization(data, stats), stats};
}

TimeSeriesDataset apply_standardization(const TimeSeriesDataset& data, const NormalizationStats& stats) {
    if (stats.mean.size() != data.input_dim() || stats.stddev.size() != data.input_dim()) {
        throw ShapeError("standardize: statistics cover " + std::to_string(stats.mean.size()) +
                         " features, dataset has " + std::to_string(data.input_dim()));
    }
    TimeSeriesDataset out = data;
    for (std::size_t r = 0; r < out.size(); ++r) {
        for (std::size_t c = 0; c < out.input_dim(); ++c) {
            out.inputs(r, c) = (data.inputs(r, c) - stats.mean[c]) / stats.stddev[c];
        }
    }
    out.normalization = stats;
    return out;
}

std::pair<TimeSeriesDataset, TimeSeriesDataset> split(const TimeSeriesDataset& data, std::size_t train_count) {
    if (train_count < 1 || train_count >= data.size()) {
        throw ConfigError("split: train_count " + std::to_string(train_count) + " outside [1, " +
                          std::to_string(data.size()) + ")");
    }
    auto slice = [&](std::size_t begin, std::size_t end) {
        TimeSeriesDataset out;
        out.dt = data.dt;
        out.t0_index = data.t0_index + static_cast<std::int64_t>(begin);
        out.time_column = data.time_column;
        out.feature_names = data.feature_names;
        out.target_names = data.target_names;
        out.normalization = data.normalization;
        out.inputs = Matrix(end - begin, data.input_dim());
        out.targets = Matrix(end - begin, data.output_dim());
        std::copy(data.inputs.data.begin() + static_cast<std::ptrdiff_t>(begin * data.input_dim()),
                  data.inputs.data.begin() + static_cast<std::ptrdiff_t>(end * data.input_dim()),
                  out.inputs.data.begin());
        std::copy(data.targets.data.begin() + static_cast<std::ptrdiff_t>(begin * data.output_dim()),
                  data.targets.data.begin() + static_cast<std::ptrdiff_t>(end * data.output_dim()),
                  out.targets.data.begin());
        return out;
    };
    return {slice(0, train_count), slice(train_count, data.size())};
}

TimeSeriesDataset add_noise(const TimeSeriesDataset& data, double sigma_x, double sigma_y, std::uint64_t seed) {
    if (!(sigma_x >= 0.0) || !(sigma_y >= 0.0)) {
        throw ConfigError("add_noise: noise levels must be non-negative");
    }
    TimeSeriesDataset out = data;
    if (sigma_x > 0.0) {
        Rng rng(splitmix64(seed) ^ 0x1);
        for (auto& v : out.inputs.data) {
            v += sigma_x * rng.normal();
        }
    }
    if (sigma_y > 0.0) {
        Rng rng(splitmix64(seed) ^ 0x2);
        for (auto& v : out.targets.data) {
            v += sigma_y * rng.normal();
        }
    }
    return out;
}

}  // namespace lddmd
