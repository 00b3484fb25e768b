#pragma once

#include "dmidas/model.hpp"
#include "dmidas/training.hpp"

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

namespace dmidas {

class TimeSeriesDataset;

/// (1/H) sum |y - yhat|. DimensionError on length mismatch or empty input.
[[nodiscard]] double mae(std::span<const double> y, std::span<const double> yhat);
/// sqrt((1/H) sum (y - yhat)^2).
[[nodiscard]] double rmse(std::span<const double> y, std::span<const double> yhat);

/// out[t] = y_in[L - period + (t mod period)]. ConfigError when period is 0 or exceeds L.
[[nodiscard]] std::vector<double> seasonal_naive_forecast(std::span<const double> y_in, std::size_t horizon,
                                                          std::size_t period);

struct MetricsEntry {
    std::string dataset;
    std::size_t horizon = 0;
    std::string model;
    double mae = 0.0;
    double rmse = 0.0;
    bool complete = true;
    std::string error;  ///< why the cell is incomplete
};

/// Table-shaped accuracy report keyed by (dataset, horizon, model).
struct MetricsReport {
    std::vector<MetricsEntry> entries;

    /// Appends; DataError when the key already exists.
    void add(MetricsEntry entry);
    [[nodiscard]] const MetricsEntry* find(const std::string& dataset, std::size_t horizon,
                                           const std::string& model) const;
    [[nodiscard]] bool complete() const;
};

using CellKey = std::tuple<std::string, std::size_t, std::string>;

struct Improvement {
    double mae_percent = 0.0;
    double rmse_percent = 0.0;
};

/// 100 (baseline - model) / baseline per metric for every complete cell.
/// DataError naming the (dataset, horizon) group that lacks the baseline.
[[nodiscard]] std::map<CellKey, Improvement> relative_improvement(const MetricsReport& report,
                                                                  const std::string& baseline_model);

/// Aligned plain-text table: (dataset, horizon, metric) rows, one column per model;
/// the row minimum is marked with '*'.
[[nodiscard]] std::string render_table(const MetricsReport& report);

/// What a benchmark column runs.
struct ModelSpec {
    enum class Kind { neural, seasonal_naive, naive_last };
    std::string name;
    Kind kind = Kind::neural;
    ModelPreset preset;
    std::size_t period = 1;
};

/// "dmidas" | "nbeats-g" | "nbeats-i" | "mlp" (neural, hyperparameters from `base`),
/// "seasonal-naive:<period>", "naive".
[[nodiscard]] ModelSpec parse_model_spec(const std::string& text, const ModelPreset& base);

struct Protocol {
    std::size_t val_len = 0;
    std::size_t test_len = 0;
    std::size_t input_multiplier = 3;  ///< L = multiplier * H
    TrainConfig train;
    EnsembleConfig ensemble;
    bool global = true;  ///< false: one ensemble per series
    std::size_t train_stride = 1;
    unsigned jobs = 1;
};

/// Forecasts of every test window for one trained (or naive) column, aligned with test_windows().
using WindowForecasts = std::vector<std::vector<double>>;

/// Per-window metrics averaged over windows, then over series.
struct Aggregate {
    double mae = 0.0;
    double rmse = 0.0;
};
[[nodiscard]] Aggregate aggregate_metrics(const std::vector<Window>& windows, const WindowForecasts& forecasts);

/**
 * Trains every (model, horizon) cell per the protocol, forecasts the non-overlapping
 * test windows and records MAE/RMSE in original units. A failing cell is recorded as
 * incomplete and the run continues. Deterministic for a fixed protocol seed.
 */
[[nodiscard]] MetricsReport run_benchmark(const TimeSeriesDataset& dataset, const std::string& dataset_name,
                                          const std::vector<ModelSpec>& models,
                                          const std::vector<std::size_t>& horizons, const Protocol& protocol);

}  // namespace dmidas
