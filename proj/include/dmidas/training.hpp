#pragma once

#include "dmidas/adam.hpp"
#include "dmidas/model.hpp"
#include "dmidas/ops.hpp"
#include "dmidas/parameters.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dmidas {

class TimeSeriesDataset;

/// L input lags followed immediately by the H-step target, both cut from one series.
struct Window {
    std::string series_id;
    std::vector<double> input;
    std::vector<double> target;
    std::size_t t_start = 0;  ///< index of input[0] in the source series

    [[nodiscard]] std::size_t target_begin() const noexcept { return t_start + input.size(); }
    [[nodiscard]] std::size_t target_end() const noexcept { return target_begin() + target.size(); }
};

/// Windows starting at 0, stride, 2 stride, ... while t + L + H <= T.
/// DataError naming the series when T < L + H.
[[nodiscard]] std::vector<Window> make_windows(std::span<const double> series, std::size_t input_size,
                                               std::size_t horizon, std::size_t stride,
                                               std::string_view series_id = "series");

/// Target regions of one series: train [0, train_end), validation [train_end, val_end),
/// test [val_end, values.size()).
struct SeriesSplit {
    std::string id;
    std::vector<double> values;
    std::size_t train_end = 0;
    std::size_t val_end = 0;
};

struct DatasetSplit {
    std::vector<SeriesSplit> series;
    std::size_t val_len = 0;
    std::size_t test_len = 0;
};

/// Tail holdout per series. DataError naming the first series not longer than
/// val_len + test_len + L + H.
[[nodiscard]] DatasetSplit split_tail(const TimeSeriesDataset& dataset, std::size_t val_len,
                                      std::size_t test_len, std::size_t input_size, std::size_t horizon);

/// Only the series with the given id (per-series training).
[[nodiscard]] DatasetSplit select_series(const DatasetSplit& split, std::string_view id);

/// Windows whose targets lie entirely in the training region.
[[nodiscard]] std::vector<Window> training_windows(const DatasetSplit& split, std::size_t input_size,
                                                   std::size_t horizon, std::size_t stride = 1);
/// Non-overlapping windows (stride H) whose targets tile the validation region.
[[nodiscard]] std::vector<Window> validation_windows(const DatasetSplit& split, std::size_t input_size,
                                                     std::size_t horizon);
/// Non-overlapping windows (stride H) whose targets tile the test region.
[[nodiscard]] std::vector<Window> test_windows(const DatasetSplit& split, std::size_t input_size,
                                               std::size_t horizon);

enum class NormalizationMode { per_series_median, per_window_last, none };

[[nodiscard]] std::string_view to_string(NormalizationMode mode) noexcept;
[[nodiscard]] NormalizationMode parse_normalization_mode(std::string_view text);

/// normalized = (y - shift) / scale
struct Scaling {
    double shift = 0.0;
    double scale = 1.0;

    [[nodiscard]] double apply(double y) const noexcept { return (y - shift) / scale; }
    [[nodiscard]] double invert(double z) const noexcept { return z * scale + shift; }
};

/// Fitted normalization: per-series scales come from the training region only.
struct Normalizer {
    NormalizationMode mode = NormalizationMode::none;
    std::map<std::string, double> scales;  ///< per_series_median only

    /// Median |y| over each series' training region; 1 when that median is 0.
    [[nodiscard]] static Normalizer fit(const DatasetSplit& split, NormalizationMode mode);

    /// Transform for one window. DataError for a series without a fitted scale.
    [[nodiscard]] Scaling scaling_for(const std::string& series_id, std::span<const double> input) const;
};

struct NormalizedWindows {
    std::vector<Window> windows;
    std::vector<Scaling> inverse;  ///< one per window
};

[[nodiscard]] NormalizedWindows normalize(const std::vector<Window>& windows, const Normalizer& normalizer);
/// Restores original units.
[[nodiscard]] std::vector<Window> denormalize(const NormalizedWindows& normalized);

struct TrainConfig {
    double lr = 1e-3;
    std::size_t iterations = 1000;
    std::size_t batch_size = 32;
    double l1_lambda = 0.0;
    std::size_t early_stop_patience = 10;  ///< evaluations without improvement; 0 disables
    std::size_t eval_every = 100;
    std::uint64_t seed = 1;
    LossKind loss_kind = LossKind::mae;
    NormalizationMode normalization = NormalizationMode::per_series_median;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

/// ConfigError when iterations, batch_size or eval_every is 0, lr is not positive,
/// or l1_lambda is negative.
void validate(const TrainConfig& config);

struct HistoryRow {
    std::size_t iteration = 0;
    double train_loss = 0.0;  ///< mean objective over the steps since the previous evaluation
    double val_mae = 0.0;     ///< original units
};

struct TrainResult {
    ParameterStore params;  ///< best checkpoint
    std::vector<HistoryRow> history;
    double best_val_mae = 0.0;
    std::size_t best_iteration = 0;
    std::size_t iterations_run = 0;
};

/// Mean per-window MAE in original units.
[[nodiscard]] double validation_mae(const Network& network, const ParameterStore& params,
                                    const NormalizedWindows& validation);

/**
 * Minimizes loss + l1 penalty with Adam over shuffled mini-batches of the
 * normalized training windows. Validation MAE is evaluated every eval_every
 * iterations and after the last one; the parameters with the lowest value are
 * returned. Stops early after early_stop_patience evaluations without improvement.
 * A non-finite loss or gradient raises TrainingError with the iteration and batch.
 */
[[nodiscard]] TrainResult train(const Network& network, ParameterStore params, const std::vector<Window>& train_windows,
                                const std::vector<Window>& val_windows, const TrainConfig& config,
                                const Normalizer& normalizer);

void write_history_csv(const std::vector<HistoryRow>& history, const std::filesystem::path& path);

struct EnsembleConfig {
    std::size_t n_members = 4;
    std::vector<std::uint64_t> member_seeds;  ///< empty: derived from the training seed

    friend bool operator==(const EnsembleConfig&, const EnsembleConfig&) = default;
};

/// Explicit seeds when given (must number n_members and be distinct), else
/// derive_seed(root, "member", k). ConfigError otherwise.
[[nodiscard]] std::vector<std::uint64_t> resolve_member_seeds(const EnsembleConfig& config, std::uint64_t root);

/// Everything a member needs besides its config and seed.
struct TrainingData {
    std::vector<Window> train;
    std::vector<Window> validation;
    Normalizer normalizer;
};

[[nodiscard]] TrainingData prepare_training_data(const DatasetSplit& split, std::size_t input_size,
                                                 std::size_t horizon, std::size_t stride, NormalizationMode mode);

struct TrainedMember {
    std::uint64_t seed = 0;
    Model model;
    ParameterStore params;
    Normalizer normalizer;
    std::vector<HistoryRow> history;
    double best_val_mae = 0.0;
    std::size_t best_iteration = 0;
};

/// build_model(config, seed) then train() with the shuffle seed set to `seed`.
[[nodiscard]] TrainedMember train_member(const ModelConfig& config, const TrainingData& data,
                                         const TrainConfig& train_config, std::uint64_t seed);

/// Independent members on up to `jobs` threads; results do not depend on `jobs`.
/// A failing member aborts the ensemble with TrainingError naming its seed.
[[nodiscard]] std::vector<TrainedMember> train_ensemble(const ModelConfig& config, const TrainingData& data,
                                                        const TrainConfig& train_config,
                                                        const EnsembleConfig& ensemble, unsigned jobs = 1);

/// Elementwise mean, summed in member order. DimensionError on shape disagreement.
[[nodiscard]] std::vector<double> mean_forecast(const std::vector<std::vector<double>>& forecasts);

/// One member's forecast for a raw input window, in original units.
[[nodiscard]] std::vector<double> member_forecast(const TrainedMember& member, std::span<const double> y_in,
                                                  const std::string& series_id);

/// Mean of the members' denormalized forecasts.
[[nodiscard]] std::vector<double> ensemble_forecast(const std::vector<TrainedMember>& members,
                                                    std::span<const double> y_in, const std::string& series_id);

/// Batched ensemble_forecast over many windows.
[[nodiscard]] std::vector<std::vector<double>> ensemble_forecast(const std::vector<TrainedMember>& members,
                                                                 const std::vector<Window>& windows);

}  // namespace dmidas
