#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dmidas {

struct ForecastBundle;
struct MetricsReport;

struct Series {
    std::string id;
    std::vector<double> values;
    std::optional<std::string> start_timestamp;
    std::string frequency;
};

/// Named univariate series. Ids are unique, values finite, every series non-empty;
/// the constructor enforces all three.
class TimeSeriesDataset {
public:
    TimeSeriesDataset() = default;
    explicit TimeSeriesDataset(std::vector<Series> series);

    [[nodiscard]] const std::vector<Series>& series() const noexcept { return series_; }
    [[nodiscard]] std::size_t size() const noexcept { return series_.size(); }
    /// DataError when `id` is unknown.
    [[nodiscard]] const Series& find(std::string_view id) const;

private:
    std::vector<Series> series_;
};

struct CsvSchema {
    std::string id_column = "id";  ///< empty: the whole file is one series named "series"
    std::optional<std::string> time_column = "t";
    std::string value_column = "value";
    char delimiter = ',';
};

/// Reads a headed CSV. One series per distinct id, ordered by the time column when
/// present (numerically if every time value is numeric, else lexically), otherwise
/// by row order. Empty, non-numeric or non-finite values and duplicate (id, time)
/// pairs raise DataError citing the line number.
[[nodiscard]] TimeSeriesDataset load_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
[[nodiscard]] TimeSeriesDataset parse_csv(std::istream& in, const CsvSchema& schema,
                                          std::string_view source = "<stream>");

/// Writes "id,t,value" rows with shortest round-trip number formatting.
void write_dataset_csv(const TimeSeriesDataset& dataset, const std::filesystem::path& path);

/// Shortest decimal representation that parses back to the same double.
[[nodiscard]] std::string format_double(double value);

struct SyntheticComponent {
    enum class Kind { sinusoid, linear_trend, noise };
    Kind kind = Kind::sinusoid;
    double period = 24.0;
    double amplitude = 1.0;
    double phase = 0.0;
    double slope = 0.0;
    double sigma = 0.0;
};

struct SyntheticSpec {
    std::string id = "synthetic";
    std::size_t length = 1;
    std::vector<SyntheticComponent> components;
    std::uint64_t seed = 1;
};

/// Names accepted by synthetic_preset().
[[nodiscard]] std::vector<std::string> synthetic_presets();
/// "multifreq-v1": T=4000, periods 24 and 168 (amplitudes 10 and 5), slope 0.001, sigma 0.5, seed 1.
[[nodiscard]] SyntheticSpec synthetic_preset(std::string_view name);
/// Parses a JSON synthetic spec: {"id", "length", "seed", "components": [{"kind": ..., ...}]}.
[[nodiscard]] SyntheticSpec parse_synthetic_spec(std::string_view json_text);
void validate(const SyntheticSpec& spec);

/**
 * values[t] = sum of components at t:
 *   sinusoid:     amplitude * sin(2 pi t / period + phase)
 *   linear_trend: slope * t
 *   noise:        sigma * counter_normal(derive_seed(seed, "noise", j), t), j = component index
 */
[[nodiscard]] TimeSeriesDataset generate_synthetic(const SyntheticSpec& spec);

enum class ExportFormat { csv, json };

/// Decomposition: CSV columns t, forecast, component_1..component_K (one row per step);
/// JSON object with labels, forecast and components.
void export_results(const ForecastBundle& bundle, const std::filesystem::path& path, ExportFormat format);
/// Metrics: JSON nests dataset -> horizon -> model -> {mae, rmse}; CSV rows dataset,horizon,model,mae,rmse.
void export_results(const MetricsReport& report, const std::filesystem::path& path, ExportFormat format);

/// Columns of a decomposition CSV as written by export_results.
struct DecompositionTable {
    std::vector<double> t;
    std::vector<double> forecast;
    std::vector<std::vector<double>> components;
};
[[nodiscard]] DecompositionTable read_decomposition_csv(const std::filesystem::path& path);

}  // namespace dmidas
