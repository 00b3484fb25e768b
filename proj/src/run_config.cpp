#include "dmidas/run_config.hpp"

#include "dmidas/errors.hpp"
#include "dmidas/eval.hpp"

#include <boost/algorithm/string.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace dmidas {

namespace pt = boost::property_tree;

std::size_t RunConfig::resolved_input_size() const {
    return input_size != 0 ? input_size : evaluation.input_multiplier * horizon;
}

std::vector<std::size_t> RunConfig::resolved_horizons() const {
    return evaluation.horizons.empty() ? std::vector<std::size_t>{horizon} : evaluation.horizons;
}

namespace {

std::size_t largest_horizon(const RunConfig& c) {
    std::size_t h = c.horizon;
    for (auto x : c.evaluation.horizons) h = std::max(h, x);
    return h;
}

}  // namespace

std::size_t RunConfig::resolved_val_len() const { return data.val_len != 0 ? data.val_len : 2 * largest_horizon(*this); }

std::size_t RunConfig::resolved_test_len() const {
    return data.test_len != 0 ? data.test_len : 2 * largest_horizon(*this);
}

ModelConfig RunConfig::model_config() const { return make_model_config(model, resolved_input_size(), horizon); }

namespace {

std::string trim(std::string s) {
    boost::algorithm::trim(s);
    return s;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> parts;
    if (trim(text).empty()) return parts;
    boost::algorithm::split(parts, text, boost::is_any_of(","));
    for (auto& p : parts) p = trim(p);
    return parts;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    T v{};
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
        throw ConfigError(key + ": invalid number '" + text + "'");
    }
    return v;
}

double parse_real(const std::string& key, const std::string& text) { return parse_number<double>(key, text); }
std::size_t parse_count(const std::string& key, const std::string& text) {
    return parse_number<std::size_t>(key, text);
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string t = boost::algorithm::to_lower_copy(trim(text));
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& key, const std::string& text, F&& parse_one) {
    std::vector<T> out;
    for (const auto& p : split_list(text)) out.push_back(parse_one(key, p));
    return out;
}

char parse_delimiter(const std::string& key, const std::string& text) {
    const std::string t = text == "\\t" || text == "tab" ? std::string("\t") : text;
    if (t.size() != 1) throw ConfigError(key + ": delimiter must be one character");
    return t.front();
}

template <typename T>
std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& fmt) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
    return out;
}

std::string count_text(const std::size_t& v) { return std::to_string(v); }
std::string real_text(const double& v) { return format_double(v); }

ParamValue parse_choice_value(const std::string& text) {
    std::int64_t i = 0;
    const auto ri = std::from_chars(text.data(), text.data() + text.size(), i);
    if (!text.empty() && ri.ec == std::errc{} && ri.ptr == text.data() + text.size()) return i;
    double d = 0.0;
    const auto rd = std::from_chars(text.data(), text.data() + text.size(), d);
    if (!text.empty() && rd.ec == std::errc{} && rd.ptr == text.data() + text.size()) return d;
    return text;
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
    static const std::map<std::string, std::map<std::string, Setter>> table = {
        {"data",
         {
             {"path", [](RunConfig& c, const std::string&, const std::string& v) { c.data.path = v; }},
             {"synthetic", [](RunConfig& c, const std::string&, const std::string& v) { c.data.synthetic = v; }},
             {"name", [](RunConfig& c, const std::string&, const std::string& v) { c.data.name = v; }},
             {"id_column", [](RunConfig& c, const std::string&, const std::string& v) { c.data.schema.id_column = v; }},
             {"time_column",
              [](RunConfig& c, const std::string&, const std::string& v) {
                  c.data.schema.time_column = v.empty() ? std::nullopt : std::optional<std::string>(v);
              }},
             {"value_column",
              [](RunConfig& c, const std::string&, const std::string& v) { c.data.schema.value_column = v; }},
             {"delimiter",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  c.data.schema.delimiter = parse_delimiter(k, v);
              }},
             {"val_len",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.data.val_len = parse_count(k, v); }},
             {"test_len",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.data.test_len = parse_count(k, v); }},
         }},
        {"model",
         {
             {"kind", [](RunConfig& c, const std::string&, const std::string& v) { c.model.kind = v; }},
             {"horizon",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.horizon = parse_count(k, v); }},
             {"input_size",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.input_size = parse_count(k, v); }},
             {"stacks",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.model.stacks = parse_count(k, v); }},
             {"blocks_per_stack",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  c.model.blocks_per_stack = parse_count(k, v);
              }},
             {"mlp_width",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.model.mlp_width = parse_count(k, v); }},
             {"mlp_layers",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.model.mlp_layers = parse_count(k, v); }},
             {"base_ratio",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.model.base_ratio = parse_real(k, v); }},
             {"ratio_schedule",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  if (v == "exponential") {
                      c.model.ratio_schedule = RatioSchedule::exponential;
                  } else if (v == "per-block") {
                      c.model.ratio_schedule = RatioSchedule::per_block_list;
                  } else {
                      throw ConfigError(k + ": expected exponential or per-block");
                  }
              }},
             {"ratios",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  c.model.ratios = parse_list<double>(k, v, parse_real);
              }},
             {"pooling_kernels",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  c.model.pooling_kernels = parse_list<std::size_t>(k, v, parse_count);
              }},
             {"pooling_mode",
              [](RunConfig& c, const std::string&, const std::string& v) { c.model.pooling_mode = parse_pool_mode(v); }},
             {"shared_weights",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  c.model.shared_weights = parse_bool(k, v);
              }},
             {"poly_degree",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.model.poly_degree = parse_count(k, v); }},
             {"n_harmonics",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.model.n_harmonics = parse_count(k, v); }},
         }},
        {"training",
         {
             {"lr", [](RunConfig& c, const std::string& k, const std::string& v) { c.training.lr = parse_real(k, v); }},
             {"iterations",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  c.training.iterations = parse_count(k, v);
              }},
             {"batch_size",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  c.training.batch_size = parse_count(k, v);
              }},
             {"l1_lambda",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.training.l1_lambda = parse_real(k, v); }},
             {"early_stop_patience",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  c.training.early_stop_patience = parse_count(k, v);
              }},
             {"eval_every",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  c.training.eval_every = parse_count(k, v);
              }},
             {"seed",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  c.training.seed = parse_number<std::uint64_t>(k, v);
              }},
             {"loss",
              [](RunConfig& c, const std::string&, const std::string& v) { c.training.loss_kind = parse_loss_kind(v); }},
             {"normalization",
              [](RunConfig& c, const std::string&, const std::string& v) {
                  c.training.normalization = parse_normalization_mode(v);
              }},
             {"beta1",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.training.beta1 = parse_real(k, v); }},
             {"beta2",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.training.beta2 = parse_real(k, v); }},
             {"eps", [](RunConfig& c, const std::string& k, const std::string& v) { c.training.eps = parse_real(k, v); }},
             {"stride",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.train_stride = parse_count(k, v); }},
         }},
        {"ensemble",
         {
             {"members",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  c.ensemble.n_members = parse_count(k, v);
              }},
             {"seeds",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  c.ensemble.member_seeds = parse_list<std::uint64_t>(k, v, parse_number<std::uint64_t>);
              }},
         }},
        {"evaluation",
         {
             {"horizons",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  c.evaluation.horizons = parse_list<std::size_t>(k, v, parse_count);
              }},
             {"input_multiplier",
              [](RunConfig& c, const std::string& k, const std::string& v) {
                  c.evaluation.input_multiplier = parse_count(k, v);
              }},
             {"models",
              [](RunConfig& c, const std::string&, const std::string& v) { c.evaluation.models = split_list(v); }},
             {"baseline", [](RunConfig& c, const std::string&, const std::string& v) { c.evaluation.baseline = v; }},
             {"global",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.evaluation.global = parse_bool(k, v); }},
         }},
        {"search",
         {
             {"budget",
              [](RunConfig& c, const std::string& k, const std::string& v) { c.search.budget = parse_count(k, v); }},
         }},
    };
    return table;
}

void set_dimension(SearchSpace& space, SearchDimension dim) {
    for (auto& d : space.dimensions) {
        if (d.name == dim.name) {
            d = std::move(dim);
            return;
        }
    }
    space.dimensions.push_back(std::move(dim));
}

void validate_config(const RunConfig& c) {
    if (c.horizon == 0) throw ConfigError("model.horizon must be >= 1");
    if (c.evaluation.input_multiplier == 0) throw ConfigError("evaluation.input_multiplier must be >= 1");
    if (c.train_stride == 0) throw ConfigError("training.stride must be >= 1");
    for (auto h : c.evaluation.horizons) {
        if (h == 0) throw ConfigError("evaluation.horizons entries must be >= 1");
    }
    validate(c.training);
    (void)resolve_member_seeds(c.ensemble, c.training.seed);
    validate(c.search.space);
    ModelPreset probe_preset = c.model;
    TrainConfig probe_train = c.training;
    for (const auto& d : c.search.space.dimensions) {
        // Reject dimensions that map onto no setting.
        Assignment a;
        switch (d.kind) {
            case SearchDimension::Kind::choice: a.emplace_back(d.name, d.choices.front()); break;
            case SearchDimension::Kind::loguniform: a.emplace_back(d.name, d.lo); break;
            case SearchDimension::Kind::int_range: a.emplace_back(d.name, std::max<std::int64_t>(d.int_lo, 1)); break;
        }
        apply_assignment(a, probe_preset, probe_train);
    }
    (void)c.model_config();
    for (const auto& name : c.evaluation.models) (void)parse_model_spec(name, c.model);
    if (!c.evaluation.baseline.empty() &&
        std::find(c.evaluation.models.begin(), c.evaluation.models.end(), c.evaluation.baseline) ==
            c.evaluation.models.end()) {
        throw ConfigError("evaluation.baseline '" + c.evaluation.baseline + "' is not among evaluation.models");
    }
}

}  // namespace

SearchDimension parse_dimension(const std::string& name, const std::string& text) {
    const std::string key = "search.dim." + name;
    std::string t = trim(text);
    bool include_zero = false;
    const auto plus = t.rfind('+');
    if (plus != std::string::npos && t.find(')') < plus) {
        if (trim(t.substr(plus + 1)) != "zero") throw ConfigError(key + ": only '+ zero' may follow a dimension");
        include_zero = true;
        t = trim(t.substr(0, plus));
    }
    const auto open = t.find('(');
    if (open == std::string::npos || t.back() != ')') {
        throw ConfigError(key + ": expected choice(...), loguniform(lo, hi) or int_range(lo, hi)");
    }
    const std::string kind = trim(t.substr(0, open));
    const auto args = split_list(t.substr(open + 1, t.size() - open - 2));
    if (kind == "choice") {
        if (include_zero) throw ConfigError(key + ": '+ zero' applies to loguniform only");
        std::vector<ParamValue> values;
        for (const auto& a : args) values.push_back(parse_choice_value(a));
        return SearchDimension::choice(name, std::move(values));
    }
    if (args.size() != 2) throw ConfigError(key + ": expected two bounds");
    if (kind == "loguniform") {
        return SearchDimension::loguniform(name, parse_real(key, args[0]), parse_real(key, args[1]), include_zero);
    }
    if (kind == "int_range") {
        if (include_zero) throw ConfigError(key + ": '+ zero' applies to loguniform only");
        return SearchDimension::int_range(name, parse_number<std::int64_t>(key, args[0]),
                                          parse_number<std::int64_t>(key, args[1]));
    }
    throw ConfigError(key + ": unknown dimension kind '" + kind + "'");
}

std::string render_dimension(const SearchDimension& dim) {
    switch (dim.kind) {
        case SearchDimension::Kind::choice: {
            std::string out = "choice(";
            for (std::size_t i = 0; i < dim.choices.size(); ++i) out += (i ? ", " : "") + to_string(dim.choices[i]);
            return out + ")";
        }
        case SearchDimension::Kind::loguniform:
            return "loguniform(" + format_double(dim.lo) + ", " + format_double(dim.hi) + ")" +
                   (dim.include_zero ? " + zero" : "");
        case SearchDimension::Kind::int_range:
            return "int_range(" + std::to_string(dim.int_lo) + ", " + std::to_string(dim.int_hi) + ")";
    }
    return {};
}

RunConfig parse_run_config(std::istream& in, const std::string& source) {
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
    }
    RunConfig config;
    const auto& table = setters();
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError(source + ": key '" + section + "' outside a section");
        const auto sec = table.find(section);
        if (sec == table.end()) throw ConfigError(source + ": unknown section [" + section + "]");
        for (const auto& [key, node] : body) {
            const std::string full = section + "." + key;
            const std::string value = trim(node.data());
            if (section == "search" && key.rfind("dim.", 0) == 0) {
                set_dimension(config.search.space, parse_dimension(key.substr(4), value));
                continue;
            }
            const auto setter = sec->second.find(key);
            if (setter == sec->second.end()) throw ConfigError(source + ": unknown key '" + full + "'");
            try {
                setter->second(config, full, value);
            } catch (const ConfigError& e) {
                const std::string what = e.what();
                throw ConfigError(what.rfind(full, 0) == 0 ? what : full + ": " + what);
            }
        }
    }
    validate_config(config);
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    return parse_run_config(in, path.string());
}

std::string render_run_config(const RunConfig& c) {
    std::ostringstream out;
    const auto& s = c.data.schema;
    out << "[data]\n";
    if (!c.data.path.empty()) out << "path = " << c.data.path << '\n';
    if (!c.data.synthetic.empty()) out << "synthetic = " << c.data.synthetic << '\n';
    if (!c.data.name.empty()) out << "name = " << c.data.name << '\n';
    out << "id_column = " << s.id_column << '\n'
        << "time_column = " << s.time_column.value_or("") << '\n'
        << "value_column = " << s.value_column << '\n'
        << "delimiter = " << (s.delimiter == '\t' ? std::string("tab") : std::string(1, s.delimiter)) << '\n'
        << "val_len = " << c.resolved_val_len() << '\n'
        << "test_len = " << c.resolved_test_len() << "\n\n";

    const auto& m = c.model;
    out << "[model]\n"
        << "kind = " << m.kind << '\n'
        << "horizon = " << c.horizon << '\n'
        << "input_size = " << c.resolved_input_size() << '\n'
        << "stacks = " << m.stacks << '\n'
        << "blocks_per_stack = " << m.blocks_per_stack << '\n'
        << "mlp_width = " << m.mlp_width << '\n'
        << "mlp_layers = " << m.mlp_layers << '\n'
        << "base_ratio = " << format_double(m.base_ratio) << '\n'
        << "ratio_schedule = " << (m.ratio_schedule == RatioSchedule::exponential ? "exponential" : "per-block") << '\n'
        << "ratios = " << join<double>(m.ratios, real_text) << '\n'
        << "pooling_kernels = " << join<std::size_t>(m.pooling_kernels, count_text) << '\n'
        << "pooling_mode = " << to_string(m.pooling_mode) << '\n'
        << "shared_weights = " << (m.shared_weights ? "true" : "false") << '\n'
        << "poly_degree = " << m.poly_degree << '\n'
        << "n_harmonics = " << m.n_harmonics << "\n\n";

    const auto& t = c.training;
    out << "[training]\n"
        << "lr = " << format_double(t.lr) << '\n'
        << "iterations = " << t.iterations << '\n'
        << "batch_size = " << t.batch_size << '\n'
        << "l1_lambda = " << format_double(t.l1_lambda) << '\n'
        << "early_stop_patience = " << t.early_stop_patience << '\n'
        << "eval_every = " << t.eval_every << '\n'
        << "seed = " << t.seed << '\n'
        << "loss = " << to_string(t.loss_kind) << '\n'
        << "normalization = " << to_string(t.normalization) << '\n'
        << "beta1 = " << format_double(t.beta1) << '\n'
        << "beta2 = " << format_double(t.beta2) << '\n'
        << "eps = " << format_double(t.eps) << '\n'
        << "stride = " << c.train_stride << "\n\n";

    out << "[ensemble]\n"
        << "members = " << c.ensemble.n_members << '\n'
        << "seeds = "
        << join<std::uint64_t>(c.ensemble.member_seeds, [](const std::uint64_t& v) { return std::to_string(v); })
        << "\n\n";

    out << "[evaluation]\n"
        << "horizons = " << join<std::size_t>(c.resolved_horizons(), count_text) << '\n'
        << "input_multiplier = " << c.evaluation.input_multiplier << '\n'
        << "models = " << join<std::string>(c.evaluation.models, [](const std::string& v) { return v; }) << '\n'
        << "baseline = " << c.evaluation.baseline << '\n'
        << "global = " << (c.evaluation.global ? "true" : "false") << "\n\n";

    out << "[search]\n"
        << "budget = " << c.search.budget << '\n';
    for (const auto& d : c.search.space.dimensions) out << "dim." << d.name << " = " << render_dimension(d) << '\n';
    return out.str();
}

}  // namespace dmidas
