#include "dmidas/data.hpp"

#include "dmidas/errors.hpp"
#include "dmidas/eval.hpp"
#include "dmidas/model.hpp"
#include "dmidas/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace dmidas {

using nlohmann::json;

TimeSeriesDataset::TimeSeriesDataset(std::vector<Series> series) : series_(std::move(series)) {
    std::set<std::string> ids;
    for (const auto& s : series_) {
        if (!ids.insert(s.id).second) throw DataError("duplicate series id '" + s.id + "'");
        if (s.values.empty()) throw DataError("series '" + s.id + "' is empty");
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            if (!std::isfinite(s.values[i])) {
                throw DataError("series '" + s.id + "' has a non-finite value at index " + std::to_string(i));
            }
        }
    }
}

const Series& TimeSeriesDataset::find(std::string_view id) const {
    for (const auto& s : series_) {
        if (s.id == id) return s;
    }
    throw DataError("unknown series '" + std::string(id) + "'");
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    std::string out(s.substr(b, e - b + 1));
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> fields;
    std::string_view rest(line);
    while (true) {
        const auto pos = rest.find(delim);
        fields.push_back(trim(rest.substr(0, pos)));
        if (pos == std::string_view::npos) break;
        rest.remove_prefix(pos + 1);
    }
    return fields;
}

std::optional<double> parse_number(const std::string& text) {
    if (text.empty()) return std::nullopt;
    const char* first = text.data();
    if (*first == '+') ++first;
    double v = 0.0;
    const auto res = std::from_chars(first, text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name, std::string_view source) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError(std::string(source) + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

struct Row {
    std::string time;
    double value;
    std::size_t line;
};

}  // namespace

TimeSeriesDataset parse_csv(std::istream& in, const CsvSchema& schema, std::string_view source) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(std::string(source) + ": missing header row");
    const auto header = split_line(line, schema.delimiter);
    const bool has_id = !schema.id_column.empty();
    const bool has_time = schema.time_column.has_value() && !schema.time_column->empty();
    const std::size_t id_col = has_id ? column_index(header, schema.id_column, source) : 0;
    const std::size_t time_col = has_time ? column_index(header, *schema.time_column, source) : 0;
    const std::size_t value_col = column_index(header, schema.value_column, source);

    std::vector<std::string> order;
    std::map<std::string, std::vector<Row>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_line(line, schema.delimiter);
        if (fields.size() != header.size()) {
            throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
        }
        const auto value = parse_number(fields[value_col]);
        if (!value) {
            throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": invalid value '" +
                            fields[value_col] + "' on line " + std::to_string(line_no));
        }
        const std::string id = has_id ? fields[id_col] : "series";
        if (id.empty()) throw DataError(std::string(source) + ":" + std::to_string(line_no) + ": empty id");
        auto [it, inserted] = rows.try_emplace(id);
        if (inserted) order.push_back(id);
        it->second.push_back(Row{has_time ? fields[time_col] : std::string{}, *value, line_no});
    }

    std::vector<Series> out;
    for (const auto& id : order) {
        auto& r = rows[id];
        if (has_time) {
            const bool numeric = std::all_of(r.begin(), r.end(), [](const Row& x) { return parse_number(x.time).has_value(); });
            auto less = [numeric](const Row& a, const Row& b) {
                return numeric ? *parse_number(a.time) < *parse_number(b.time) : a.time < b.time;
            };
            std::stable_sort(r.begin(), r.end(), less);
            for (std::size_t i = 1; i < r.size(); ++i) {
                if (!less(r[i - 1], r[i])) {
                    throw DataError(std::string(source) + ":" + std::to_string(r[i].line) + ": duplicate (id, time) ('" +
                                    id + "', '" + r[i].time + "')");
                }
            }
        }
        Series s;
        s.id = id;
        s.values.reserve(r.size());
        for (const auto& x : r) s.values.push_back(x.value);
        if (has_time && !r.empty()) s.start_timestamp = r.front().time;
        out.push_back(std::move(s));
    }
    return TimeSeriesDataset(std::move(out));
}

TimeSeriesDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return parse_csv(in, schema, path.string());
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

}  // namespace

void write_dataset_csv(const TimeSeriesDataset& dataset, const std::filesystem::path& path) {
    auto out = open_output(path);
    out << "id,t,value\n";
    for (const auto& s : dataset.series()) {
        for (std::size_t t = 0; t < s.values.size(); ++t) out << s.id << ',' << t << ',' << format_double(s.values[t]) << '\n';
    }
    finish(out, path);
}

std::vector<std::string> synthetic_presets() { return {"multifreq-v1"}; }

SyntheticSpec synthetic_preset(std::string_view name) {
    if (name == "multifreq-v1") {
        SyntheticSpec spec;
        spec.id = "multifreq-v1";
        spec.length = 4000;
        spec.seed = 1;
        using K = SyntheticComponent::Kind;
        spec.components = {
            {K::sinusoid, 24.0, 10.0, 0.0, 0.0, 0.0},
            {K::sinusoid, 168.0, 5.0, 0.0, 0.0, 0.0},
            {K::linear_trend, 0.0, 0.0, 0.0, 0.001, 0.0},
            {K::noise, 0.0, 0.0, 0.0, 0.0, 0.5},
        };
        return spec;
    }
    std::string names;
    for (const auto& p : synthetic_presets()) names += (names.empty() ? "" : ", ") + p;
    throw ConfigError("unknown synthetic preset '" + std::string(name) + "' (available: " + names + ")");
}

void validate(const SyntheticSpec& spec) {
    if (spec.length < 1) throw ConfigError("synthetic length must be >= 1");
    for (const auto& c : spec.components) {
        if (c.kind == SyntheticComponent::Kind::sinusoid && !(c.period >= 2.0)) {
            throw ConfigError("sinusoid period must be >= 2");
        }
        if (c.kind == SyntheticComponent::Kind::noise && !(c.sigma >= 0.0)) {
            throw ConfigError("noise sigma must be >= 0");
        }
    }
}

SyntheticSpec parse_synthetic_spec(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("synthetic spec: ") + e.what());
    }
    SyntheticSpec spec;
    try {
        spec.id = j.value("id", std::string("synthetic"));
        spec.length = j.at("length").get<std::size_t>();
        spec.seed = j.value("seed", std::uint64_t{1});
        for (const auto& c : j.at("components")) {
            SyntheticComponent comp;
            const auto kind = c.at("kind").get<std::string>();
            if (kind == "sinusoid") {
                comp.kind = SyntheticComponent::Kind::sinusoid;
                comp.period = c.at("period").get<double>();
                comp.amplitude = c.value("amplitude", 1.0);
                comp.phase = c.value("phase", 0.0);
            } else if (kind == "linear_trend") {
                comp.kind = SyntheticComponent::Kind::linear_trend;
                comp.slope = c.at("slope").get<double>();
            } else if (kind == "noise") {
                comp.kind = SyntheticComponent::Kind::noise;
                comp.sigma = c.at("sigma").get<double>();
            } else {
                throw ConfigError("unknown synthetic component '" + kind + "'");
            }
            spec.components.push_back(comp);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("synthetic spec: ") + e.what());
    }
    validate(spec);
    return spec;
}

TimeSeriesDataset generate_synthetic(const SyntheticSpec& spec) {
    validate(spec);
    Series s;
    s.id = spec.id;
    s.frequency = "step";
    s.values.assign(spec.length, 0.0);
    for (std::size_t j = 0; j < spec.components.size(); ++j) {
        const auto& c = spec.components[j];
        const std::uint64_t noise_seed = derive_seed(spec.seed, "noise", j);
        for (std::size_t t = 0; t < spec.length; ++t) {
            const double td = static_cast<double>(t);
            switch (c.kind) {
                case SyntheticComponent::Kind::sinusoid:
                    s.values[t] += c.amplitude * std::sin(2.0 * std::numbers::pi * td / c.period + c.phase);
                    break;
                case SyntheticComponent::Kind::linear_trend: s.values[t] += c.slope * td; break;
                case SyntheticComponent::Kind::noise: s.values[t] += c.sigma * counter_normal(noise_seed, t); break;
            }
        }
    }
    return TimeSeriesDataset({std::move(s)});
}

void export_results(const ForecastBundle& bundle, const std::filesystem::path& path, ExportFormat format) {
    auto out = open_output(path);
    if (format == ExportFormat::csv) {
        out << "t,forecast";
        for (std::size_t k = 0; k < bundle.components.size(); ++k) out << ",component_" << (k + 1);
        out << '\n';
        for (std::size_t t = 0; t < bundle.forecast.size(); ++t) {
            out << t << ',' << format_double(bundle.forecast[t]);
            for (const auto& c : bundle.components) out << ',' << format_double(c[t]);
            out << '\n';
        }
    } else {
        json j;
        j["labels"] = bundle.block_labels;
        j["forecast"] = bundle.forecast;
        j["components"] = bundle.components;
        out << j.dump(2) << '\n';
    }
    finish(out, path);
}

void export_results(const MetricsReport& report, const std::filesystem::path& path, ExportFormat format) {
    auto out = open_output(path);
    if (format == ExportFormat::json) {
        json j = json::object();
        for (const auto& e : report.entries) {
            json cell;
            if (e.complete) {
                cell["mae"] = e.mae;
                cell["rmse"] = e.rmse;
            } else {
                cell["error"] = e.error;
            }
            j[e.dataset][std::to_string(e.horizon)][e.model] = std::move(cell);
        }
        out << j.dump(2) << '\n';
    } else {
        out << "dataset,horizon,model,mae,rmse\n";
        for (const auto& e : report.entries) {
            out << e.dataset << ',' << e.horizon << ',' << e.model << ',';
            if (e.complete) {
                out << format_double(e.mae) << ',' << format_double(e.rmse);
            } else {
                out << ",";
            }
            out << '\n';
        }
    }
    finish(out, path);
}

DecompositionTable read_decomposition_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) throw DataError(path.string() + ": missing header row");
    const auto header = split_line(line, ',');
    if (header.size() < 2 || header[0] != "t" || header[1] != "forecast") {
        throw DataError(path.string() + ": not a decomposition table");
    }
    DecompositionTable table;
    table.components.resize(header.size() - 2);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_line(line, ',');
        if (fields.size() != header.size()) throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad row");
        std::vector<double> v;
        for (const auto& f : fields) {
            const auto x = parse_number(f);
            if (!x) throw DataError(path.string() + ":" + std::to_string(line_no) + ": invalid number '" + f + "'");
            v.push_back(*x);
        }
        table.t.push_back(v[0]);
        table.forecast.push_back(v[1]);
        for (std::size_t k = 2; k < v.size(); ++k) table.components[k - 2].push_back(v[k]);
    }
    return table;
}

}  // namespace dmidas
