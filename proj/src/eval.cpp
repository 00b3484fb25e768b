#include "dmidas/eval.hpp"

#include "dmidas/data.hpp"
#include "dmidas/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <limits>
#include <sstream>

namespace dmidas {

namespace {

void check_pair(std::span<const double> y, std::span<const double> yhat, const char* what) {
    if (y.size() != yhat.size()) {
        throw DimensionError(std::string(what) + ": length mismatch " + std::to_string(y.size()) + " vs " +
                             std::to_string(yhat.size()));
    }
    if (y.empty()) throw DimensionError(std::string(what) + ": empty input");
}

}  // namespace

double mae(std::span<const double> y, std::span<const double> yhat) {
    check_pair(y, yhat, "mae");
    double s = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) s += std::abs(y[t] - yhat[t]);
    return s / static_cast<double>(y.size());
}

double rmse(std::span<const double> y, std::span<const double> yhat) {
    check_pair(y, yhat, "rmse");
    double s = 0.0;
    for (std::size_t t = 0; t < y.size(); ++t) {
        const double e = y[t] - yhat[t];
        s += e * e;
    }
    return std::sqrt(s / static_cast<double>(y.size()));
}

std::vector<double> seasonal_naive_forecast(std::span<const double> y_in, std::size_t horizon, std::size_t period) {
    if (period == 0) throw ConfigError("seasonal period must be >= 1");
    if (period > y_in.size()) {
        throw ConfigError("seasonal period " + std::to_string(period) + " exceeds the input length " +
                          std::to_string(y_in.size()));
    }
    std::vector<double> out(horizon);
    const std::size_t base = y_in.size() - period;
    for (std::size_t t = 0; t < horizon; ++t) out[t] = y_in[base + t % period];
    return out;
}

void MetricsReport::add(MetricsEntry entry) {
    if (find(entry.dataset, entry.horizon, entry.model) != nullptr) {
        throw DataError("duplicate metrics cell (" + entry.dataset + ", " + std::to_string(entry.horizon) + ", " +
                        entry.model + ")");
    }
    entries.push_back(std::move(entry));
}

const MetricsEntry* MetricsReport::find(const std::string& dataset, std::size_t horizon,
                                        const std::string& model) const {
    for (const auto& e : entries) {
        if (e.dataset == dataset && e.horizon == horizon && e.model == model) return &e;
    }
    return nullptr;
}

bool MetricsReport::complete() const {
    return std::all_of(entries.begin(), entries.end(), [](const MetricsEntry& e) { return e.complete; });
}

std::map<CellKey, Improvement> relative_improvement(const MetricsReport& report, const std::string& baseline_model) {
    std::map<CellKey, Improvement> out;
    for (const auto& e : report.entries) {
        const MetricsEntry* base = report.find(e.dataset, e.horizon, baseline_model);
        if (base == nullptr || !base->complete) {
            throw DataError("baseline '" + baseline_model + "' missing for group (" + e.dataset + ", H=" +
                            std::to_string(e.horizon) + ")");
        }
        if (!e.complete) continue;
        out[{e.dataset, e.horizon, e.model}] = {100.0 * (base->mae - e.mae) / base->mae,
                                                100.0 * (base->rmse - e.rmse) / base->rmse};
    }
    return out;
}

namespace {

template <typename T>
void push_unique(std::vector<T>& v, const T& x) {
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

std::string fixed(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

}  // namespace

std::string render_table(const MetricsReport& report) {
    std::vector<std::pair<std::string, std::size_t>> groups;
    std::vector<std::string> models;
    for (const auto& e : report.entries) {
        push_unique(groups, {e.dataset, e.horizon});
        push_unique(models, e.model);
    }

    std::vector<std::vector<std::string>> rows;
    rows.push_back({"dataset", "horizon", "metric"});
    for (const auto& m : models) rows.front().push_back(m);
    for (const auto& [dataset, horizon] : groups) {
        for (const bool is_mae : {true, false}) {
            std::vector<std::string> row{dataset, std::to_string(horizon), is_mae ? "MAE" : "RMSE"};
            double best = std::numeric_limits<double>::infinity();
            for (const auto& m : models) {
                const auto* e = report.find(dataset, horizon, m);
                if (e != nullptr && e->complete) best = std::min(best, is_mae ? e->mae : e->rmse);
            }
            for (const auto& m : models) {
                const auto* e = report.find(dataset, horizon, m);
                if (e == nullptr) {
                    row.emplace_back("-");
                } else if (!e->complete) {
                    row.emplace_back("n/a");
                } else {
                    const double v = is_mae ? e->mae : e->rmse;
                    row.push_back(fixed(v) + (v == best ? "*" : " "));
                }
            }
            rows.push_back(std::move(row));
        }
    }

    std::vector<std::size_t> widths(rows.front().size(), 0);
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) widths[c] = std::max(widths[c], r[c].size());
    }
    std::ostringstream out;
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c > 0) out << "  ";
            if (c < 3) {
                out << std::left << std::setw(static_cast<int>(widths[c])) << r[c];
            } else {
                out << std::right << std::setw(static_cast<int>(widths[c])) << r[c];
            }
        }
        out << '\n';
    }
    out << "* smallest error in the row\n";
    return out.str();
}

ModelSpec parse_model_spec(const std::string& text, const ModelPreset& base) {
    ModelSpec spec;
    spec.name = text;
    if (text == "naive") {
        spec.kind = ModelSpec::Kind::naive_last;
        spec.period = 1;
        return spec;
    }
    const std::string prefix = "seasonal-naive:";
    if (text.rfind(prefix, 0) == 0) {
        const std::string digits = text.substr(prefix.size());
        std::size_t period = 0;
        const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), period);
        if (digits.empty() || res.ec != std::errc{} || res.ptr != digits.data() + digits.size() || period == 0) {
            throw ConfigError("invalid seasonal period in '" + text + "'");
        }
        spec.kind = ModelSpec::Kind::seasonal_naive;
        spec.period = period;
        return spec;
    }
    if (text == "dmidas" || text == "nbeats-g" || text == "nbeats-i" || text == "mlp") {
        spec.kind = ModelSpec::Kind::neural;
        spec.preset = base;
        spec.preset.kind = text;
        return spec;
    }
    throw ConfigError("unknown model '" + text +
                      "' (expected dmidas, nbeats-g, nbeats-i, mlp, naive or seasonal-naive:<period>)");
}

Aggregate aggregate_metrics(const std::vector<Window>& windows, const WindowForecasts& forecasts) {
    if (windows.size() != forecasts.size()) throw DimensionError("one forecast per test window is required");
    if (windows.empty()) throw DataError("no test windows");
    // Mean over windows within each series, then over series (in order of appearance).
    std::vector<std::string> ids;
    std::vector<Aggregate> sums;
    std::vector<std::size_t> counts;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const auto pos = std::find(ids.begin(), ids.end(), windows[i].series_id);
        const std::size_t k = static_cast<std::size_t>(pos - ids.begin());
        if (pos == ids.end()) {
            ids.push_back(windows[i].series_id);
            sums.push_back({});
            counts.push_back(0);
        }
        sums[k].mae += mae(windows[i].target, forecasts[i]);
        sums[k].rmse += rmse(windows[i].target, forecasts[i]);
        ++counts[k];
    }
    Aggregate out;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        out.mae += sums[k].mae / static_cast<double>(counts[k]);
        out.rmse += sums[k].rmse / static_cast<double>(counts[k]);
    }
    out.mae /= static_cast<double>(ids.size());
    out.rmse /= static_cast<double>(ids.size());
    return out;
}

namespace {

WindowForecasts naive_forecasts(const std::vector<Window>& windows, std::size_t horizon, std::size_t period) {
    WindowForecasts out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back(seasonal_naive_forecast(w.input, horizon, period));
    return out;
}

WindowForecasts neural_forecasts(const DatasetSplit& split, const std::vector<Window>& tests, const ModelSpec& spec,
                                 std::size_t input_size, std::size_t horizon, const Protocol& protocol) {
    const ModelConfig config = make_model_config(spec.preset, input_size, horizon);
    if (protocol.global) {
        const TrainingData data = prepare_training_data(split, input_size, horizon, protocol.train_stride,
                                                        protocol.train.normalization);
        const auto members = train_ensemble(config, data, protocol.train, protocol.ensemble, protocol.jobs);
        return ensemble_forecast(members, tests);
    }
    WindowForecasts out(tests.size());
    for (const auto& s : split.series) {
        const DatasetSplit own = select_series(split, s.id);
        const TrainingData data = prepare_training_data(own, input_size, horizon, protocol.train_stride,
                                                        protocol.train.normalization);
        const auto members = train_ensemble(config, data, protocol.train, protocol.ensemble, protocol.jobs);
        std::vector<Window> mine;
        std::vector<std::size_t> slots;
        for (std::size_t i = 0; i < tests.size(); ++i) {
            if (tests[i].series_id == s.id) {
                mine.push_back(tests[i]);
                slots.push_back(i);
            }
        }
        auto f = ensemble_forecast(members, mine);
        for (std::size_t j = 0; j < slots.size(); ++j) out[slots[j]] = std::move(f[j]);
    }
    return out;
}

}  // namespace

MetricsReport run_benchmark(const TimeSeriesDataset& dataset, const std::string& dataset_name,
                            const std::vector<ModelSpec>& models, const std::vector<std::size_t>& horizons,
                            const Protocol& protocol) {
    if (protocol.input_multiplier == 0) throw ConfigError("input_multiplier must be >= 1");
    MetricsReport report;
    for (const std::size_t horizon : horizons) {
        const std::size_t input_size = protocol.input_multiplier * horizon;
        for (const auto& spec : models) {
            MetricsEntry entry;
            entry.dataset = dataset_name;
            entry.horizon = horizon;
            entry.model = spec.name;
            try {
                const DatasetSplit split = split_tail(dataset, protocol.val_len, protocol.test_len, input_size, horizon);
                const auto tests = test_windows(split, input_size, horizon);
                const WindowForecasts forecasts =
                    spec.kind == ModelSpec::Kind::neural
                        ? neural_forecasts(split, tests, spec, input_size, horizon, protocol)
                        : naive_forecasts(tests, horizon, spec.period);
                const Aggregate agg = aggregate_metrics(tests, forecasts);
                entry.mae = agg.mae;
                entry.rmse = agg.rmse;
            } catch (const std::exception& e) {
                entry.complete = false;
                entry.error = e.what();
            }
            report.add(std::move(entry));
        }
    }
    return report;
}

}  // namespace dmidas
