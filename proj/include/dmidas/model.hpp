#pragma once

#include "dmidas/blocks.hpp"
#include "dmidas/parameters.hpp"
#include "dmidas/tape.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dmidas {

/// Anything that maps a batch of input windows [N x L] to forecasts [N x H] on a tape.
class Network {
public:
    virtual ~Network() = default;
    [[nodiscard]] virtual std::size_t input_size() const = 0;
    [[nodiscard]] virtual std::size_t horizon() const = 0;
    virtual Var forward(Tape& tape, const ParameterStore& params, Var x) const = 0;
};

struct StackConfig {
    std::size_t n_blocks = 1;
    BlockConfig block_template;
    bool shared_weights = false;

    friend bool operator==(const StackConfig&, const StackConfig&) = default;
};

enum class Architecture { stacked, mlp };
enum class RatioSchedule { exponential, per_block_list };

struct ModelConfig {
    Architecture architecture = Architecture::stacked;
    std::vector<StackConfig> stacks;
    std::size_t input_size = 1;
    std::size_t horizon = 1;
    double base_ratio = 1.0;
    RatioSchedule ratio_schedule = RatioSchedule::exponential;
    std::vector<double> block_ratios;          ///< per_block_list schedule
    std::vector<std::size_t> pooling_kernels;  ///< empty: default schedule; one entry: constant
    std::vector<std::size_t> mlp_widths;       ///< mlp architecture hidden widths

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// One block with its schedule-resolved config and parameter naming.
struct ResolvedBlock {
    BlockConfig config;
    std::string prefix;
    std::string group;
    std::size_t stack = 0;
    std::size_t index = 0;  ///< global, 1-based, in forward order
};

/// Additive decomposition of one forecast.
struct ForecastBundle {
    std::vector<double> forecast;
    std::vector<std::vector<double>> components;      ///< one per block, stacking order
    std::vector<std::vector<double>> backcasts;       ///< one per block
    std::vector<std::vector<double>> residual_trace;  ///< residual_0 = input, then after each block
    std::vector<std::string> block_labels;
};

/// Tape handles of a batched forward pass.
struct ModelTrace {
    Var forecast;
    std::vector<Var> components;
    std::vector<Var> backcasts;
    std::vector<Var> residuals;
};

/// r_l = r^l for l = 1..total_blocks. ConfigError unless 0 < r <= 1.
[[nodiscard]] std::vector<double> expressivity_schedule(double r, std::size_t total_blocks);

/// Default pooling kernel for a block of ratio r_l: max(1, floor(1/r_l)), clamped to the input size.
[[nodiscard]] std::size_t default_pooling_kernel(double ratio, std::size_t input_size);

class Model final : public Network {
public:
    /// Validates and resolves the config; ConfigError on inconsistency.
    explicit Model(ModelConfig config);

    [[nodiscard]] const ModelConfig& config() const noexcept { return config_; }
    [[nodiscard]] const std::vector<ResolvedBlock>& blocks() const noexcept { return blocks_; }
    [[nodiscard]] std::size_t input_size() const override { return config_.input_size; }
    [[nodiscard]] std::size_t horizon() const override { return config_.horizon; }

    void register_parameters(ParameterStore& params) const;

    Var forward(Tape& tape, const ParameterStore& params, Var x) const override;
    ModelTrace trace(Tape& tape, const ParameterStore& params, Var x) const;

    /// Single-window forward with the full decomposition.
    [[nodiscard]] ForecastBundle forward(const ParameterStore& params, std::span<const double> y_in) const;
    /// forward() with plot labels "<basis> r=<r_l>" per block.
    [[nodiscard]] ForecastBundle decompose(const ParameterStore& params, std::span<const double> y_in) const;
    /// Batched point forecasts, one row per input row.
    [[nodiscard]] Matrix predict(const ParameterStore& params, const Matrix& inputs) const;

private:
    ModelConfig config_;
    std::vector<ResolvedBlock> blocks_;
};

struct BuiltModel {
    Model model;
    ParameterStore params;
};

/// Allocates every layer and draws uniform fan-in scaled initial values from `seed`.
[[nodiscard]] BuiltModel build_model(const ModelConfig& config, std::uint64_t seed);

/// Plain MLP mapping L inputs directly to H outputs.
[[nodiscard]] ModelConfig mlp_baseline_config(std::size_t input_size, std::size_t horizon,
                                              std::vector<std::size_t> widths);
[[nodiscard]] BuiltModel build_mlp_baseline(std::size_t input_size, std::size_t horizon,
                                            std::vector<std::size_t> widths, std::uint64_t seed);

struct ParameterCount {
    std::vector<std::pair<std::string, std::size_t>> per_layer;  ///< tensor name -> scalars
    std::size_t forecast_knots = 0;        ///< sum of forecast coefficient widths
    std::size_t backcast_knots = 0;        ///< sum of backcast coefficient widths
    std::size_t theta_parameters = 0;      ///< scalars in all coefficient heads
    std::size_t total = 0;
    std::size_t total_blocks = 0;
    double geometric_closed_form = 0.0;    ///< H r (1 - r^B) / (1 - r); H B when r = 1
};

/// Exact counts derived from the layer shapes of the resolved config.
[[nodiscard]] ParameterCount count_parameters(const Model& model);

/// Same architecture with every midas block turned generic (r = 1, kernel 1).
[[nodiscard]] ModelConfig generic_twin(const ModelConfig& config);

// Presets used by the command line and the benchmark harness.

/// Flat hyperparameters from which full model configs are built per horizon.
struct ModelPreset {
    std::string kind = "dmidas";  ///< dmidas | nbeats-g | nbeats-i | mlp
    std::size_t stacks = 3;
    std::size_t blocks_per_stack = 1;
    std::size_t mlp_width = 512;
    std::size_t mlp_layers = 2;
    double base_ratio = 0.5;
    RatioSchedule ratio_schedule = RatioSchedule::exponential;
    std::vector<double> ratios;
    std::vector<std::size_t> pooling_kernels;
    PoolMode pooling_mode = PoolMode::avg;
    bool shared_weights = false;
    std::size_t poly_degree = 2;
    std::size_t n_harmonics = 8;

    friend bool operator==(const ModelPreset&, const ModelPreset&) = default;
};

[[nodiscard]] ModelConfig make_model_config(const ModelPreset& preset, std::size_t input_size,
                                            std::size_t horizon);

}  // namespace dmidas
