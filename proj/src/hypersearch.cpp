#include "dmidas/hypersearch.hpp"

#include "dmidas/data.hpp"
#include "dmidas/errors.hpp"
#include "dmidas/parallel.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <set>

namespace dmidas {

using nlohmann::json;

std::string to_string(const ParamValue& value) {
    if (const auto* d = std::get_if<double>(&value)) return format_double(*d);
    if (const auto* i = std::get_if<std::int64_t>(&value)) return std::to_string(*i);
    return std::get<std::string>(value);
}

SearchDimension SearchDimension::choice(std::string name, std::vector<ParamValue> values) {
    SearchDimension d;
    d.name = std::move(name);
    d.kind = Kind::choice;
    d.choices = std::move(values);
    return d;
}

SearchDimension SearchDimension::loguniform(std::string name, double lo, double hi, bool include_zero) {
    SearchDimension d;
    d.name = std::move(name);
    d.kind = Kind::loguniform;
    d.lo = lo;
    d.hi = hi;
    d.include_zero = include_zero;
    return d;
}

SearchDimension SearchDimension::int_range(std::string name, std::int64_t lo, std::int64_t hi) {
    SearchDimension d;
    d.name = std::move(name);
    d.kind = Kind::int_range;
    d.int_lo = lo;
    d.int_hi = hi;
    return d;
}

void validate(const SearchSpace& space) {
    std::set<std::string> names;
    for (const auto& d : space.dimensions) {
        if (d.name.empty()) throw ConfigError("search dimension without a name");
        if (!names.insert(d.name).second) throw ConfigError("duplicate search dimension '" + d.name + "'");
        switch (d.kind) {
            case SearchDimension::Kind::choice:
                if (d.choices.empty()) throw ConfigError("search dimension '" + d.name + "' has no choices");
                break;
            case SearchDimension::Kind::loguniform:
                if (!(d.lo > 0.0) || !(d.lo < d.hi) || !std::isfinite(d.hi)) {
                    throw ConfigError("search dimension '" + d.name + "' needs 0 < lo < hi");
                }
                break;
            case SearchDimension::Kind::int_range:
                if (!(d.int_lo < d.int_hi)) throw ConfigError("search dimension '" + d.name + "' needs lo < hi");
                break;
        }
    }
}

const ParamValue& lookup(const Assignment& config, const std::string& name) {
    for (const auto& [k, v] : config) {
        if (k == name) return v;
    }
    throw ConfigError("assignment has no value for '" + name + "'");
}

Assignment sample_config(const SearchSpace& space, Rng& rng) {
    validate(space);
    Assignment out;
    for (const auto& d : space.dimensions) {
        switch (d.kind) {
            case SearchDimension::Kind::choice:
                out.emplace_back(d.name, d.choices[rng.uniform_index(d.choices.size())]);
                break;
            case SearchDimension::Kind::loguniform:
                if (d.include_zero && rng.uniform() < 0.5) {
                    out.emplace_back(d.name, 0.0);
                } else {
                    out.emplace_back(d.name, std::exp(rng.uniform(std::log(d.lo), std::log(d.hi))));
                }
                break;
            case SearchDimension::Kind::int_range: {
                const auto span = static_cast<std::uint64_t>(d.int_hi - d.int_lo) + 1;
                out.emplace_back(d.name, d.int_lo + static_cast<std::int64_t>(rng.uniform_index(span)));
                break;
            }
        }
    }
    return out;
}

SearchResult random_search(const SearchSpace& space, std::size_t budget, const Objective& objective,
                           std::uint64_t seed, unsigned jobs) {
    validate(space);
    if (budget == 0) throw ConfigError("search budget must be >= 1");
    std::vector<Trial> trials(budget);
    Rng rng(derive_seed(seed, "search"));
    for (std::size_t i = 0; i < budget; ++i) {
        trials[i].index = i;
        trials[i].config = sample_config(space, rng);
        trials[i].seed = derive_seed(seed, "trial", i);
    }
    parallel_for(budget, jobs, [&](std::size_t i) {
        Trial& t = trials[i];
        const auto start = std::chrono::steady_clock::now();
        try {
            const double v = objective(t.config, t.seed);
            if (std::isfinite(v)) {
                t.validation_mae = v;
                t.completed = true;
            } else {
                t.error = "objective returned a non-finite value";
            }
        } catch (const std::exception& e) {
            t.error = e.what();
        }
        t.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    });

    const Trial* best = nullptr;
    for (const auto& t : trials) {
        if (t.completed && (best == nullptr || t.validation_mae < best->validation_mae)) best = &t;
    }
    if (best == nullptr) {
        throw TrainingError("all " + std::to_string(budget) + " search trials failed; first error: " +
                            trials.front().error);
    }
    SearchResult result;
    result.best = *best;
    result.trials = std::move(trials);
    return result;
}

namespace {

json value_to_json(const ParamValue& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    return std::get<std::string>(v);
}

}  // namespace

std::string trial_to_json(const Trial& trial) {
    json config = json::object();
    for (const auto& [k, v] : trial.config) config[k] = value_to_json(v);
    json j;
    j["index"] = trial.index;
    j["config"] = config;
    j["validation_mae"] = trial.completed ? json(trial.validation_mae) : json(nullptr);
    j["seed"] = trial.seed;
    j["status"] = trial.completed ? "completed" : "failed";
    j["wall_seconds"] = trial.wall_seconds;
    if (!trial.completed) j["error"] = trial.error;
    return j.dump();
}

void write_trial_log(const std::vector<Trial>& trials, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    for (const auto& t : trials) out << trial_to_json(t) << '\n';
    out.flush();
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

SearchSpace default_search_space() {
    SearchSpace s;
    s.dimensions.push_back(SearchDimension::loguniform("lr", 1e-4, 1e-2));
    s.dimensions.push_back(SearchDimension::choice("base_ratio", {0.25, 0.5, 0.75}));
    s.dimensions.push_back(
        SearchDimension::choice("mlp_width", {std::int64_t{128}, std::int64_t{256}, std::int64_t{512}}));
    s.dimensions.push_back(SearchDimension::int_range("blocks_per_stack", 1, 3));
    s.dimensions.push_back(SearchDimension::loguniform("l1_lambda", 1e-6, 1e-2, true));
    return s;
}

Assignment default_space_midpoint() {
    return {{"lr", 1e-3},
            {"base_ratio", 0.5},
            {"mlp_width", std::int64_t{256}},
            {"blocks_per_stack", std::int64_t{2}},
            {"l1_lambda", 1e-4}};
}

namespace {

double as_double(const std::string& name, const ParamValue& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    throw ConfigError("search value for '" + name + "' must be numeric");
}

std::size_t as_count(const std::string& name, const ParamValue& v) {
    const double d = as_double(name, v);
    if (!(d >= 1.0) || d != std::floor(d)) throw ConfigError("search value for '" + name + "' must be a positive integer");
    return static_cast<std::size_t>(d);
}

}  // namespace

void apply_assignment(const Assignment& config, ModelPreset& preset, TrainConfig& train) {
    for (const auto& [name, v] : config) {
        if (name == "lr") {
            train.lr = as_double(name, v);
        } else if (name == "l1_lambda") {
            train.l1_lambda = as_double(name, v);
        } else if (name == "batch_size") {
            train.batch_size = as_count(name, v);
        } else if (name == "base_ratio") {
            preset.base_ratio = as_double(name, v);
        } else if (name == "mlp_width") {
            preset.mlp_width = as_count(name, v);
        } else if (name == "mlp_layers") {
            preset.mlp_layers = as_count(name, v);
        } else if (name == "stacks") {
            preset.stacks = as_count(name, v);
        } else if (name == "blocks_per_stack") {
            preset.blocks_per_stack = as_count(name, v);
        } else {
            throw ConfigError("search dimension '" + name + "' is not a tunable setting");
        }
    }
}

}  // namespace dmidas
