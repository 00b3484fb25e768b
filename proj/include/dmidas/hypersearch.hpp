#pragma once

#include "dmidas/model.hpp"
#include "dmidas/rng.hpp"
#include "dmidas/training.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dmidas {

using ParamValue = std::variant<double, std::int64_t, std::string>;

[[nodiscard]] std::string to_string(const ParamValue& value);

struct SearchDimension {
    enum class Kind { choice, loguniform, int_range };
    std::string name;
    Kind kind = Kind::choice;
    std::vector<ParamValue> choices;  ///< choice
    double lo = 0.0;                  ///< loguniform
    double hi = 0.0;
    bool include_zero = false;        ///< loguniform: zero with probability 1/2
    std::int64_t int_lo = 0;          ///< int_range, inclusive
    std::int64_t int_hi = 0;

    [[nodiscard]] static SearchDimension choice(std::string name, std::vector<ParamValue> values);
    [[nodiscard]] static SearchDimension loguniform(std::string name, double lo, double hi, bool include_zero = false);
    [[nodiscard]] static SearchDimension int_range(std::string name, std::int64_t lo, std::int64_t hi);
};

struct SearchSpace {
    std::vector<SearchDimension> dimensions;
};

/// ConfigError unless names are unique, choice lists non-empty and lo < hi (0 < lo for loguniform).
void validate(const SearchSpace& space);

/// Name/value pairs in dimension order.
using Assignment = std::vector<std::pair<std::string, ParamValue>>;

[[nodiscard]] const ParamValue& lookup(const Assignment& config, const std::string& name);

/// One independent draw per dimension, in order. Loguniform: exp(uniform(ln lo, ln hi)).
[[nodiscard]] Assignment sample_config(const SearchSpace& space, Rng& rng);

struct Trial {
    std::size_t index = 0;
    Assignment config;
    double validation_mae = 0.0;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    bool completed = false;
    std::string error;
};

struct SearchResult {
    Trial best;
    std::vector<Trial> trials;
};

/// Validation MAE of a configuration trained with `seed`.
using Objective = std::function<double(const Assignment& config, std::uint64_t seed)>;

/**
 * Samples `budget` configs from Rng(derive_seed(seed, "search")) and evaluates each with
 * seed derive_seed(seed, "trial", i), on up to `jobs` threads. A throwing or non-finite
 * objective marks the trial failed. Returns the completed trial with the lowest validation
 * MAE (ties: earliest). ConfigError for budget 0; TrainingError when every trial fails.
 */
[[nodiscard]] SearchResult random_search(const SearchSpace& space, std::size_t budget, const Objective& objective,
                                         std::uint64_t seed, unsigned jobs = 1);

/// One JSON object per trial: index, config, validation_mae, seed, status, wall_seconds[, error].
[[nodiscard]] std::string trial_to_json(const Trial& trial);
void write_trial_log(const std::vector<Trial>& trials, const std::filesystem::path& path);

/// lr loguniform(1e-4, 1e-2); base_ratio {0.25, 0.5, 0.75}; mlp_width {128, 256, 512};
/// blocks_per_stack 1..3; l1_lambda loguniform(1e-6, 1e-2) or 0.
[[nodiscard]] SearchSpace default_search_space();

/// The centre of the default space: lr 1e-3, base_ratio 0.5, mlp_width 256,
/// blocks_per_stack 2, l1_lambda 1e-4.
[[nodiscard]] Assignment default_space_midpoint();

/// Writes searched values into the model preset and training config. Recognized names:
/// lr, l1_lambda, batch_size, base_ratio, mlp_width, mlp_layers, stacks, blocks_per_stack.
void apply_assignment(const Assignment& config, ModelPreset& preset, TrainConfig& train);

}  // namespace dmidas
