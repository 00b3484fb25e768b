#include "dmidas/model.hpp"

#include "dmidas/errors.hpp"
#include "dmidas/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace dmidas {

std::vector<double> expressivity_schedule(double r, std::size_t total_blocks) {
    if (!(r > 0.0 && r <= 1.0)) {
        throw ConfigError("base expressivity ratio must lie in (0, 1], got " + std::to_string(r));
    }
    std::vector<double> out(total_blocks);
    double value = 1.0;
    for (std::size_t l = 0; l < total_blocks; ++l) {
        value *= r;
        out[l] = value;
    }
    return out;
}

std::size_t default_pooling_kernel(double ratio, std::size_t input_size) {
    const double inv = std::floor(1.0 / ratio + 1e-9);
    std::size_t k = inv < 1.0 ? 1 : static_cast<std::size_t>(inv);
    return std::max<std::size_t>(1, std::min(k, input_size));
}

namespace {

std::size_t total_blocks(const ModelConfig& config) {
    std::size_t n = 0;
    for (const auto& s : config.stacks) n += s.n_blocks;
    return n;
}

std::vector<double> resolve_ratios(const ModelConfig& config, std::size_t blocks) {
    if (config.ratio_schedule == RatioSchedule::exponential) {
        return expressivity_schedule(config.base_ratio, blocks);
    }
    if (config.block_ratios.size() != blocks) {
        throw ConfigError("per-block ratio list has " + std::to_string(config.block_ratios.size()) +
                          " entries for " + std::to_string(blocks) + " blocks");
    }
    for (double r : config.block_ratios) {
        if (!(r > 0.0 && r <= 1.0)) throw ConfigError("block ratio outside (0, 1]: " + std::to_string(r));
    }
    return config.block_ratios;
}

std::string format_ratio(double r) {
    std::ostringstream os;
    os << r;
    return os.str();
}

std::vector<double> row_of(const Matrix& m) {
    const auto r = m.row(0);
    return {r.begin(), r.end()};
}

void register_affine_layer(ParameterStore& params, const std::string& name, const std::string& group,
                           std::size_t in, std::size_t out) {
    params.add(name + ".weight", group, ParamRole::weight, in, out);
    params.add(name + ".bias", group, ParamRole::bias, 1, out);
    params.set_fan_in(name + ".weight", in);
    params.set_fan_in(name + ".bias", in);
}

}  // namespace

Model::Model(ModelConfig config) : config_(std::move(config)) {
    if (config_.input_size < 1 || config_.horizon < 1) {
        throw ConfigError("model input size and horizon must be >= 1");
    }
    if (config_.architecture == Architecture::mlp) {
        if (config_.mlp_widths.empty()) throw ConfigError("mlp baseline needs at least one hidden width");
        for (std::size_t w : config_.mlp_widths) {
            if (w == 0) throw ConfigError("hidden layer width must be >= 1");
        }
        return;
    }
    if (config_.stacks.empty()) throw ConfigError("model needs at least one stack");
    const std::size_t n_blocks = total_blocks(config_);
    const std::vector<double> ratios = resolve_ratios(config_, n_blocks);
    if (config_.pooling_kernels.size() > 1 && config_.pooling_kernels.size() != n_blocks) {
        throw ConfigError("pooling kernel list has " + std::to_string(config_.pooling_kernels.size()) +
                          " entries for " + std::to_string(n_blocks) + " blocks");
    }

    std::size_t l = 0;
    for (std::size_t s = 0; s < config_.stacks.size(); ++s) {
        const StackConfig& stack = config_.stacks[s];
        if (stack.n_blocks < 1) throw ConfigError("stack " + std::to_string(s) + " has no blocks");
        const BlockConfig& tmpl = stack.block_template;
        if (tmpl.input_size != config_.input_size || tmpl.horizon != config_.horizon) {
            throw ConfigError("stack " + std::to_string(s) + " has L=" + std::to_string(tmpl.input_size) +
                              ", H=" + std::to_string(tmpl.horizon) + " but the model has L=" +
                              std::to_string(config_.input_size) + ", H=" + std::to_string(config_.horizon));
        }
        for (std::size_t b = 0; b < stack.n_blocks; ++b, ++l) {
            ResolvedBlock rb;
            rb.config = tmpl;
            rb.stack = s;
            rb.index = l + 1;
            if (tmpl.basis == BasisKind::midas) {
                rb.config.expressivity_ratio = ratios[l];
                std::size_t kernel = 0;
                if (config_.pooling_kernels.empty()) {
                    kernel = default_pooling_kernel(ratios[l], config_.input_size);
                } else {
                    kernel = config_.pooling_kernels.size() == 1 ? config_.pooling_kernels[0]
                                                                 : config_.pooling_kernels[l];
                }
                rb.config.pooling.kernel = kernel;
                rb.config.pooling.stride = kernel;
            }
            validate(rb.config);
            rb.prefix = stack.shared_weights ? "stack" + std::to_string(s) + ".shared"
                                             : "stack" + std::to_string(s) + ".block" + std::to_string(b);
            rb.group = rb.prefix;
            if (stack.shared_weights && b > 0 && !(rb.config == blocks_.back().config)) {
                throw ConfigError("stack " + std::to_string(s) +
                                  " shares weights but its blocks resolve to different shapes");
            }
            blocks_.push_back(std::move(rb));
        }
    }
}

void Model::register_parameters(ParameterStore& params) const {
    if (config_.architecture == Architecture::mlp) {
        std::size_t in = config_.input_size;
        for (std::size_t i = 0; i < config_.mlp_widths.size(); ++i) {
            register_affine_layer(params, "mlp.fc" + std::to_string(i), "mlp", in, config_.mlp_widths[i]);
            in = config_.mlp_widths[i];
        }
        register_affine_layer(params, "mlp.out", "mlp", in, config_.horizon);
        return;
    }
    for (const auto& block : blocks_) {
        if (params.contains(block.prefix + ".theta_f.weight")) continue;  // shared group
        register_block_parameters(params, block.config, block.prefix, block.group);
    }
}

ModelTrace Model::trace(Tape& tape, const ParameterStore& params, Var x) const {
    const Matrix& xv = tape.value(x);
    if (xv.cols() != config_.input_size) {
        throw DimensionError("model expects input width " + std::to_string(config_.input_size) + ", got " +
                             xv.shape_string());
    }
    ModelTrace tr;
    tr.residuals.push_back(x);
    if (config_.architecture == Architecture::mlp) {
        Var h = x;
        for (std::size_t i = 0; i < config_.mlp_widths.size(); ++i) {
            const std::string name = "mlp.fc" + std::to_string(i);
            h = relu(tape, affine(tape, h, tape.parameter(params, name + ".weight"),
                                  tape.parameter(params, name + ".bias")));
        }
        tr.forecast = affine(tape, h, tape.parameter(params, "mlp.out.weight"),
                             tape.parameter(params, "mlp.out.bias"));
        tr.components.push_back(tr.forecast);
        return tr;
    }
    Var residual = x;
    for (const auto& block : blocks_) {
        const BlockVars out = block_forward(tape, block.config, params, block.prefix, residual);
        residual = sub(tape, residual, out.backcast);
        tr.forecast = tr.forecast.valid() ? add(tape, tr.forecast, out.forecast) : out.forecast;
        tr.components.push_back(out.forecast);
        tr.backcasts.push_back(out.backcast);
        tr.residuals.push_back(residual);
    }
    return tr;
}

Var Model::forward(Tape& tape, const ParameterStore& params, Var x) const {
    return trace(tape, params, x).forecast;
}

ForecastBundle Model::forward(const ParameterStore& params, std::span<const double> y_in) const {
    Tape tape;
    const ModelTrace tr = trace(tape, params, tape.constant(Matrix::row_vector(y_in)));
    ForecastBundle bundle;
    bundle.forecast = row_of(tape.value(tr.forecast));
    for (Var v : tr.components) bundle.components.push_back(row_of(tape.value(v)));
    for (Var v : tr.backcasts) bundle.backcasts.push_back(row_of(tape.value(v)));
    for (Var v : tr.residuals) bundle.residual_trace.push_back(row_of(tape.value(v)));
    if (config_.architecture == Architecture::mlp) {
        bundle.block_labels.emplace_back("mlp");
    } else {
        for (const auto& b : blocks_) {
            std::string label(to_string(b.config.basis));
            if (b.config.basis == BasisKind::midas) label += " r=" + format_ratio(b.config.expressivity_ratio);
            bundle.block_labels.push_back(std::move(label));
        }
    }
    return bundle;
}

ForecastBundle Model::decompose(const ParameterStore& params, std::span<const double> y_in) const {
    return forward(params, y_in);
}

Matrix Model::predict(const ParameterStore& params, const Matrix& inputs) const {
    Tape tape;
    return tape.value(forward(tape, params, tape.constant(inputs)));
}

BuiltModel build_model(const ModelConfig& config, std::uint64_t seed) {
    BuiltModel built{Model(config), ParameterStore{}};
    built.model.register_parameters(built.params);
    Rng rng(derive_seed(seed, "init"));
    built.params.initialize_uniform_fan_in(rng);
    return built;
}

ModelConfig mlp_baseline_config(std::size_t input_size, std::size_t horizon, std::vector<std::size_t> widths) {
    ModelConfig config;
    config.architecture = Architecture::mlp;
    config.input_size = input_size;
    config.horizon = horizon;
    config.mlp_widths = std::move(widths);
    return config;
}

BuiltModel build_mlp_baseline(std::size_t input_size, std::size_t horizon, std::vector<std::size_t> widths,
                              std::uint64_t seed) {
    return build_model(mlp_baseline_config(input_size, horizon, std::move(widths)), seed);
}

ParameterCount count_parameters(const Model& model) {
    ParameterCount count;
    const ModelConfig& config = model.config();
    auto layer = [&count](const std::string& name, std::size_t in, std::size_t out) {
        count.per_layer.emplace_back(name + ".weight", in * out);
        count.per_layer.emplace_back(name + ".bias", out);
        count.total += in * out + out;
    };
    if (config.architecture == Architecture::mlp) {
        std::size_t in = config.input_size;
        for (std::size_t i = 0; i < config.mlp_widths.size(); ++i) {
            layer("mlp.fc" + std::to_string(i), in, config.mlp_widths[i]);
            in = config.mlp_widths[i];
        }
        layer("mlp.out", in, config.horizon);
        count.forecast_knots = config.horizon;
        count.theta_parameters = in * config.horizon + config.horizon;
        count.geometric_closed_form = static_cast<double>(config.horizon);
        return count;
    }
    std::set<std::string> seen;
    for (const auto& block : model.blocks()) {
        const BlockConfig& bc = block.config;
        const std::size_t kf = forecast_coefficients(bc);
        const std::size_t kb = backcast_coefficients(bc);
        count.forecast_knots += kf;
        count.backcast_knots += kb;
        ++count.total_blocks;
        if (!seen.insert(block.prefix).second) continue;
        std::size_t in = mlp_input_size(bc);
        for (std::size_t i = 0; i < bc.mlp_widths.size(); ++i) {
            layer(block.prefix + ".fc" + std::to_string(i), in, bc.mlp_widths[i]);
            in = bc.mlp_widths[i];
        }
        layer(block.prefix + ".theta_f", in, kf);
        layer(block.prefix + ".theta_b", in, kb);
        count.theta_parameters += in * kf + kf + in * kb + kb;
    }
    const double h = static_cast<double>(config.horizon);
    const double b = static_cast<double>(count.total_blocks);
    const double r = config.base_ratio;
    count.geometric_closed_form = r == 1.0 ? h * b : h * r * (1.0 - std::pow(r, b)) / (1.0 - r);
    return count;
}

ModelConfig generic_twin(const ModelConfig& config) {
    ModelConfig twin = config;
    for (auto& stack : twin.stacks) {
        if (stack.block_template.basis == BasisKind::midas) {
            stack.block_template.basis = BasisKind::generic;
            stack.block_template.expressivity_ratio = 1.0;
            stack.block_template.pooling = PoolSpec{};
        }
    }
    twin.pooling_kernels.clear();
    return twin;
}

ModelConfig make_model_config(const ModelPreset& preset, std::size_t input_size, std::size_t horizon) {
    if (preset.mlp_layers < 1 || preset.mlp_width < 1) throw ConfigError("mlp_layers and mlp_width must be >= 1");
    const std::vector<std::size_t> widths(preset.mlp_layers, preset.mlp_width);
    if (preset.kind == "mlp") return mlp_baseline_config(input_size, horizon, widths);

    ModelConfig config;
    config.input_size = input_size;
    config.horizon = horizon;
    config.base_ratio = preset.base_ratio;
    config.ratio_schedule = preset.ratio_schedule;
    config.block_ratios = preset.ratios;
    config.pooling_kernels = preset.pooling_kernels;

    BlockConfig tmpl;
    tmpl.input_size = input_size;
    tmpl.horizon = horizon;
    tmpl.mlp_widths = widths;
    tmpl.pooling.mode = preset.pooling_mode;
    tmpl.poly_degree = preset.poly_degree;
    tmpl.n_harmonics = preset.n_harmonics;

    if (preset.stacks < 1 || preset.blocks_per_stack < 1) {
        throw ConfigError("stacks and blocks_per_stack must be >= 1");
    }
    if (preset.kind == "dmidas" || preset.kind == "nbeats-g") {
        tmpl.basis = preset.kind == "dmidas" ? BasisKind::midas : BasisKind::generic;
        for (std::size_t s = 0; s < preset.stacks; ++s) {
            config.stacks.push_back(StackConfig{preset.blocks_per_stack, tmpl, preset.shared_weights});
        }
        if (preset.kind == "nbeats-g") {
            config.pooling_kernels.clear();
            config.ratio_schedule = RatioSchedule::exponential;
            config.block_ratios.clear();
        }
    } else if (preset.kind == "nbeats-i") {
        BlockConfig trend = tmpl;
        trend.basis = BasisKind::polynomial;
        BlockConfig season = tmpl;
        season.basis = BasisKind::harmonic;
        config.stacks.push_back(StackConfig{preset.blocks_per_stack, trend, preset.shared_weights});
        config.stacks.push_back(StackConfig{preset.blocks_per_stack, season, preset.shared_weights});
        config.pooling_kernels.clear();
        config.ratio_schedule = RatioSchedule::exponential;
        config.block_ratios.clear();
    } else {
        throw ConfigError("unknown model kind '" + preset.kind + "' (expected dmidas|nbeats-g|nbeats-i|mlp)");
    }
    return config;
}

}  // namespace dmidas
