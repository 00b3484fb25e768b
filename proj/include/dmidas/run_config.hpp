#pragma once

#include "dmidas/data.hpp"
#include "dmidas/hypersearch.hpp"
#include "dmidas/model.hpp"
#include "dmidas/training.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace dmidas {

struct DataSection {
    std::string path;       ///< CSV file; overridden by --data
    std::string synthetic;  ///< preset name used when no path is given
    std::string name;       ///< dataset label in reports; defaults to the file stem or preset
    CsvSchema schema;
    std::size_t val_len = 0;   ///< 0: twice the largest horizon
    std::size_t test_len = 0;  ///< 0: twice the largest horizon
};

struct EvaluationSection {
    std::vector<std::size_t> horizons;  ///< empty: the model horizon
    std::size_t input_multiplier = 3;
    std::vector<std::string> models{"dmidas", "naive"};
    std::string baseline;  ///< relative improvements against this column when set
    bool global = true;
};

struct SearchSection {
    std::size_t budget = 10;
    SearchSpace space = default_search_space();
};

/**
 * A run configuration file: INI sections [data], [model], [training], [ensemble],
 * [evaluation] and [search]. Unknown sections and keys are rejected. Lists are
 * comma-separated; search dimensions are written as
 *   dim.lr = loguniform(1e-4, 1e-2)
 *   dim.l1_lambda = loguniform(1e-6, 1e-2) + zero
 *   dim.base_ratio = choice(0.25, 0.5, 0.75)
 *   dim.blocks_per_stack = int_range(1, 3)
 */
struct RunConfig {
    DataSection data;
    ModelPreset model;
    std::size_t horizon = 24;
    std::size_t input_size = 0;  ///< 0: input_multiplier * horizon
    TrainConfig training;
    std::size_t train_stride = 1;
    EnsembleConfig ensemble;
    EvaluationSection evaluation;
    SearchSection search;

    [[nodiscard]] std::size_t resolved_input_size() const;
    [[nodiscard]] std::vector<std::size_t> resolved_horizons() const;
    [[nodiscard]] std::size_t resolved_val_len() const;
    [[nodiscard]] std::size_t resolved_test_len() const;
    [[nodiscard]] ModelConfig model_config() const;
};

/// ConfigError (with the offending section.key) on unknown keys or bad values.
[[nodiscard]] RunConfig parse_run_config(std::istream& in, const std::string& source = "<config>");
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path);

/// Every key with its effective value; parse_run_config(render) reproduces the config.
[[nodiscard]] std::string render_run_config(const RunConfig& config);

[[nodiscard]] std::string render_dimension(const SearchDimension& dim);
[[nodiscard]] SearchDimension parse_dimension(const std::string& name, const std::string& text);

}  // namespace dmidas
