#include "dmidas/training.hpp"

#include "dmidas/data.hpp"
#include "dmidas/errors.hpp"
#include "dmidas/parallel.hpp"
#include "dmidas/rng.hpp"
#include "dmidas/tape.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <set>

namespace dmidas {

std::vector<Window> make_windows(std::span<const double> series, std::size_t input_size, std::size_t horizon,
                                 std::size_t stride, std::string_view series_id) {
    if (input_size == 0 || horizon == 0) throw ConfigError("make_windows: L and H must be >= 1");
    if (stride == 0) throw ConfigError("make_windows: stride must be >= 1");
    const std::size_t span = input_size + horizon;
    if (series.size() < span) {
        throw DataError("series '" + std::string(series_id) + "' has " + std::to_string(series.size()) +
                        " points, fewer than L + H = " + std::to_string(span) + "; no windows");
    }
    std::vector<Window> out;
    out.reserve((series.size() - span) / stride + 1);
    for (std::size_t t = 0; t + span <= series.size(); t += stride) {
        Window w;
        w.series_id = std::string(series_id);
        w.t_start = t;
        w.input.assign(series.begin() + static_cast<std::ptrdiff_t>(t),
                       series.begin() + static_cast<std::ptrdiff_t>(t + input_size));
        w.target.assign(series.begin() + static_cast<std::ptrdiff_t>(t + input_size),
                        series.begin() + static_cast<std::ptrdiff_t>(t + span));
        out.push_back(std::move(w));
    }
    return out;
}

DatasetSplit split_tail(const TimeSeriesDataset& dataset, std::size_t val_len, std::size_t test_len,
                        std::size_t input_size, std::size_t horizon) {
    DatasetSplit split;
    split.val_len = val_len;
    split.test_len = test_len;
    const std::size_t needed = val_len + test_len + input_size + horizon;
    for (const auto& s : dataset.series()) {
        if (s.values.size() <= needed) {
            throw DataError("series '" + s.id + "' has " + std::to_string(s.values.size()) +
                            " points; the split needs more than val + test + L + H = " + std::to_string(needed));
        }
        SeriesSplit ss;
        ss.id = s.id;
        ss.values = s.values;
        ss.val_end = s.values.size() - test_len;
        ss.train_end = ss.val_end - val_len;
        split.series.push_back(std::move(ss));
    }
    return split;
}

DatasetSplit select_series(const DatasetSplit& split, std::string_view id) {
    DatasetSplit out;
    out.val_len = split.val_len;
    out.test_len = split.test_len;
    for (const auto& s : split.series) {
        if (s.id == id) out.series.push_back(s);
    }
    if (out.series.empty()) throw DataError("unknown series '" + std::string(id) + "'");
    return out;
}

std::vector<Window> training_windows(const DatasetSplit& split, std::size_t input_size, std::size_t horizon,
                                     std::size_t stride) {
    std::vector<Window> out;
    for (const auto& s : split.series) {
        auto w = make_windows(std::span<const double>(s.values).first(s.train_end), input_size, horizon, stride, s.id);
        std::move(w.begin(), w.end(), std::back_inserter(out));
    }
    return out;
}

namespace {

// Targets starting at begin, begin + H, ... and ending at or before end.
std::vector<Window> tiling_windows(const DatasetSplit& split, std::size_t input_size, std::size_t horizon,
                                   bool test) {
    if (horizon == 0) throw ConfigError("horizon must be >= 1");
    std::vector<Window> out;
    for (const auto& s : split.series) {
        const std::size_t begin = test ? s.val_end : s.train_end;
        const std::size_t end = test ? s.values.size() : s.val_end;
        for (std::size_t t0 = begin; t0 + horizon <= end; t0 += horizon) {
            if (t0 < input_size) continue;
            Window w;
            w.series_id = s.id;
            w.t_start = t0 - input_size;
            w.input.assign(s.values.begin() + static_cast<std::ptrdiff_t>(t0 - input_size),
                           s.values.begin() + static_cast<std::ptrdiff_t>(t0));
            w.target.assign(s.values.begin() + static_cast<std::ptrdiff_t>(t0),
                            s.values.begin() + static_cast<std::ptrdiff_t>(t0 + horizon));
            out.push_back(std::move(w));
        }
    }
    return out;
}

}  // namespace

std::vector<Window> validation_windows(const DatasetSplit& split, std::size_t input_size, std::size_t horizon) {
    return tiling_windows(split, input_size, horizon, false);
}

std::vector<Window> test_windows(const DatasetSplit& split, std::size_t input_size, std::size_t horizon) {
    return tiling_windows(split, input_size, horizon, true);
}

std::string_view to_string(NormalizationMode mode) noexcept {
    switch (mode) {
        case NormalizationMode::per_series_median: return "per-series-median";
        case NormalizationMode::per_window_last: return "per-window-last";
        case NormalizationMode::none: return "none";
    }
    return "none";
}

NormalizationMode parse_normalization_mode(std::string_view text) {
    if (text == "per-series-median") return NormalizationMode::per_series_median;
    if (text == "per-window-last") return NormalizationMode::per_window_last;
    if (text == "none") return NormalizationMode::none;
    throw ConfigError("unknown normalization '" + std::string(text) +
                      "' (expected per-series-median, per-window-last or none)");
}

Normalizer Normalizer::fit(const DatasetSplit& split, NormalizationMode mode) {
    Normalizer n;
    n.mode = mode;
    if (mode != NormalizationMode::per_series_median) return n;
    for (const auto& s : split.series) {
        std::vector<double> mags(s.values.begin(), s.values.begin() + static_cast<std::ptrdiff_t>(s.train_end));
        for (auto& v : mags) v = std::abs(v);
        double median = 0.0;
        if (!mags.empty()) {
            std::sort(mags.begin(), mags.end());
            const std::size_t m = mags.size() / 2;
            median = mags.size() % 2 == 1 ? mags[m] : 0.5 * (mags[m - 1] + mags[m]);
        }
        n.scales[s.id] = median > 0.0 ? median : 1.0;
    }
    return n;
}

Scaling Normalizer::scaling_for(const std::string& series_id, std::span<const double> input) const {
    switch (mode) {
        case NormalizationMode::none: return {};
        case NormalizationMode::per_window_last:
            if (input.empty()) throw DimensionError("per-window-last normalization of an empty input");
            return {input.back(), 1.0};
        case NormalizationMode::per_series_median: {
            const auto it = scales.find(series_id);
            if (it == scales.end()) throw DataError("no fitted scale for series '" + series_id + "'");
            return {0.0, it->second};
        }
    }
    return {};
}

NormalizedWindows normalize(const std::vector<Window>& windows, const Normalizer& normalizer) {
    NormalizedWindows out;
    out.windows.reserve(windows.size());
    out.inverse.reserve(windows.size());
    for (const auto& w : windows) {
        const Scaling s = normalizer.scaling_for(w.series_id, w.input);
        Window n = w;
        for (auto& v : n.input) v = s.apply(v);
        for (auto& v : n.target) v = s.apply(v);
        out.windows.push_back(std::move(n));
        out.inverse.push_back(s);
    }
    return out;
}

std::vector<Window> denormalize(const NormalizedWindows& normalized) {
    std::vector<Window> out = normalized.windows;
    for (std::size_t i = 0; i < out.size(); ++i) {
        const Scaling s = normalized.inverse.at(i);
        for (auto& v : out[i].input) v = s.invert(v);
        for (auto& v : out[i].target) v = s.invert(v);
    }
    return out;
}

void validate(const TrainConfig& config) {
    if (config.iterations == 0) throw ConfigError("iterations must be >= 1");
    if (config.batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (config.eval_every == 0) throw ConfigError("eval_every must be >= 1");
    if (!(config.lr > 0.0) || !std::isfinite(config.lr)) throw ConfigError("lr must be positive");
    if (!(config.l1_lambda >= 0.0) || !std::isfinite(config.l1_lambda)) throw ConfigError("l1_lambda must be >= 0");
    if (!(config.beta1 >= 0.0 && config.beta1 < 1.0) || !(config.beta2 >= 0.0 && config.beta2 < 1.0)) {
        throw ConfigError("Adam betas must lie in [0, 1)");
    }
    if (!(config.eps > 0.0)) throw ConfigError("Adam eps must be positive");
}

namespace {

Matrix stack_rows(const std::vector<Window>& windows, const std::vector<std::size_t>& rows, bool targets) {
    const auto& first = windows.at(rows.front());
    const std::size_t width = targets ? first.target.size() : first.input.size();
    Matrix m(rows.size(), width);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& src = targets ? windows[rows[r]].target : windows[rows[r]].input;
        if (src.size() != width) throw DimensionError("windows of unequal length in one batch");
        std::copy(src.begin(), src.end(), m.row(r).begin());
    }
    return m;
}

void check_shapes(const Network& network, const std::vector<Window>& windows, const char* what) {
    for (const auto& w : windows) {
        if (w.input.size() != network.input_size() || w.target.size() != network.horizon()) {
            throw DimensionError(std::string(what) + " window of series '" + w.series_id + "' has shape (" +
                                 std::to_string(w.input.size()) + ", " + std::to_string(w.target.size()) +
                                 "), model expects (" + std::to_string(network.input_size()) + ", " +
                                 std::to_string(network.horizon()) + ")");
        }
    }
}

// Validation forecasts are made in chunks to bound tape memory.
constexpr std::size_t kEvalChunk = 256;

Matrix forecast_rows(const Network& network, const ParameterStore& params, const std::vector<Window>& windows) {
    Matrix out(windows.size(), network.horizon());
    for (std::size_t begin = 0; begin < windows.size(); begin += kEvalChunk) {
        const std::size_t end = std::min(windows.size(), begin + kEvalChunk);
        std::vector<std::size_t> rows(end - begin);
        std::iota(rows.begin(), rows.end(), begin);
        Tape tape;
        const Matrix& f = tape.value(network.forward(tape, params, tape.constant(stack_rows(windows, rows, false))));
        std::copy(f.values().begin(), f.values().end(), out.row(begin).begin());
    }
    return out;
}

}  // namespace

double validation_mae(const Network& network, const ParameterStore& params, const NormalizedWindows& validation) {
    const auto& windows = validation.windows;
    if (windows.empty()) throw DataError("no validation windows");
    const Matrix f = forecast_rows(network, params, windows);
    double total = 0.0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const Scaling s = validation.inverse[i];
        double err = 0.0;
        const auto row = f.row(i);
        for (std::size_t t = 0; t < row.size(); ++t) err += std::abs(s.invert(windows[i].target[t]) - s.invert(row[t]));
        total += err / static_cast<double>(row.size());
    }
    return total / static_cast<double>(windows.size());
}

TrainResult train(const Network& network, ParameterStore params, const std::vector<Window>& train_windows,
                  const std::vector<Window>& val_windows, const TrainConfig& config, const Normalizer& normalizer) {
    validate(config);
    if (train_windows.empty()) throw DataError("no training windows");
    if (val_windows.empty()) throw DataError("no validation windows");
    check_shapes(network, train_windows, "training");
    check_shapes(network, val_windows, "validation");

    const NormalizedWindows train_set = normalize(train_windows, normalizer);
    const NormalizedWindows val_set = normalize(val_windows, normalizer);
    const AdamConfig adam{config.lr, config.beta1, config.beta2, config.eps};
    OptimizerState state;

    TrainResult result;
    result.best_val_mae = std::numeric_limits<double>::infinity();
    const std::size_t n = train_set.windows.size();
    const std::size_t batch = std::min(config.batch_size, n);
    std::vector<std::size_t> order(n);
    std::size_t cursor = n;  // forces a shuffle before the first batch
    std::size_t epoch = 0;
    std::size_t batch_in_epoch = 0;
    std::size_t stale = 0;
    double loss_sum = 0.0;
    std::size_t loss_count = 0;

    for (std::size_t it = 1; it <= config.iterations; ++it) {
        if (cursor >= n) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            Rng rng(derive_seed(config.seed, "shuffle", epoch));
            for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.uniform_index(i)]);
            cursor = 0;
            ++epoch;
            batch_in_epoch = 0;
        }
        const std::size_t take = std::min(batch, n - cursor);
        const std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                                            order.begin() + static_cast<std::ptrdiff_t>(cursor + take));
        cursor += take;
        ++batch_in_epoch;

        try {
            params.zero_grad();
            Tape tape;
            const Var x = tape.constant(stack_rows(train_set.windows, rows, false));
            const Var y = tape.constant(stack_rows(train_set.windows, rows, true));
            Var objective = loss(tape, y, network.forward(tape, params, x), config.loss_kind);
            if (config.l1_lambda > 0.0) objective = add(tape, objective, l1_penalty(tape, params, config.l1_lambda));
            const double value = tape.value(objective)(0, 0);
            if (!std::isfinite(value)) throw NumericError("non-finite loss");
            tape.backward(objective);
            tape.accumulate_gradients(params);
            adam_step(params, state, adam);
            loss_sum += value;
            ++loss_count;
        } catch (const TrainingError& e) {
            throw TrainingError("iteration " + std::to_string(it) + ", batch " + std::to_string(batch_in_epoch) +
                                " of epoch " + std::to_string(epoch) + ": " + e.what());
        }
        result.iterations_run = it;

        if (it % config.eval_every == 0 || it == config.iterations) {
            const double val = validation_mae(network, params, val_set);
            result.history.push_back({it, loss_sum / static_cast<double>(loss_count), val});
            loss_sum = 0.0;
            loss_count = 0;
            if (val < result.best_val_mae) {
                result.best_val_mae = val;
                result.best_iteration = it;
                result.params = params;
                stale = 0;
            } else if (config.early_stop_patience > 0 && ++stale >= config.early_stop_patience) {
                break;
            }
        }
    }
    if (!std::isfinite(result.best_val_mae)) throw TrainingError("validation MAE never finite");
    return result;
}

void write_history_csv(const std::vector<HistoryRow>& history, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << "iteration,train_loss,val_mae\n";
    for (const auto& row : history) {
        out << row.iteration << ',' << format_double(row.train_loss) << ',' << format_double(row.val_mae) << '\n';
    }
    out.flush();
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

std::vector<std::uint64_t> resolve_member_seeds(const EnsembleConfig& config, std::uint64_t root) {
    if (config.n_members == 0) throw ConfigError("ensemble needs at least one member");
    if (!config.member_seeds.empty()) {
        if (config.member_seeds.size() != config.n_members) {
            throw ConfigError("ensemble lists " + std::to_string(config.member_seeds.size()) + " seeds for " +
                              std::to_string(config.n_members) + " members");
        }
        const std::set<std::uint64_t> unique(config.member_seeds.begin(), config.member_seeds.end());
        if (unique.size() != config.member_seeds.size()) throw ConfigError("ensemble member seeds must be distinct");
        return config.member_seeds;
    }
    std::vector<std::uint64_t> seeds;
    for (std::size_t k = 0; k < config.n_members; ++k) seeds.push_back(derive_seed(root, "member", k));
    return seeds;
}

TrainingData prepare_training_data(const DatasetSplit& split, std::size_t input_size, std::size_t horizon,
                                   std::size_t stride, NormalizationMode mode) {
    TrainingData data;
    data.train = training_windows(split, input_size, horizon, stride);
    data.validation = validation_windows(split, input_size, horizon);
    data.normalizer = Normalizer::fit(split, mode);
    return data;
}

TrainedMember train_member(const ModelConfig& config, const TrainingData& data, const TrainConfig& train_config,
                           std::uint64_t seed) {
    BuiltModel built = build_model(config, seed);
    TrainConfig cfg = train_config;
    cfg.seed = seed;
    TrainResult r = train(built.model, std::move(built.params), data.train, data.validation, cfg, data.normalizer);
    return TrainedMember{seed,         std::move(built.model), std::move(r.params), data.normalizer,
                         std::move(r.history), r.best_val_mae, r.best_iteration};
}

std::vector<TrainedMember> train_ensemble(const ModelConfig& config, const TrainingData& data,
                                          const TrainConfig& train_config, const EnsembleConfig& ensemble,
                                          unsigned jobs) {
    const auto seeds = resolve_member_seeds(ensemble, train_config.seed);
    std::vector<std::optional<TrainedMember>> slots(seeds.size());
    parallel_for(seeds.size(), jobs, [&](std::size_t k) {
        try {
            slots[k].emplace(train_member(config, data, train_config, seeds[k]));
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw TrainingError("ensemble member " + std::to_string(k) + " (seed " + std::to_string(seeds[k]) +
                                ") failed: " + e.what());
        }
    });
    std::vector<TrainedMember> members;
    members.reserve(slots.size());
    for (auto& s : slots) members.push_back(std::move(*s));
    return members;
}

std::vector<double> mean_forecast(const std::vector<std::vector<double>>& forecasts) {
    if (forecasts.empty()) throw DimensionError("mean of zero forecasts");
    std::vector<double> out(forecasts.front().size(), 0.0);
    for (const auto& f : forecasts) {
        if (f.size() != out.size()) {
            throw DimensionError("member forecasts disagree in length: " + std::to_string(f.size()) + " vs " +
                                 std::to_string(out.size()));
        }
        for (std::size_t t = 0; t < f.size(); ++t) out[t] += f[t];
    }
    for (auto& v : out) v /= static_cast<double>(forecasts.size());
    return out;
}

std::vector<double> member_forecast(const TrainedMember& member, std::span<const double> y_in,
                                    const std::string& series_id) {
    if (y_in.size() != member.model.input_size()) {
        throw DimensionError("forecast input has length " + std::to_string(y_in.size()) + ", model expects " +
                             std::to_string(member.model.input_size()));
    }
    const Scaling s = member.normalizer.scaling_for(series_id, y_in);
    std::vector<double> z(y_in.begin(), y_in.end());
    for (auto& v : z) v = s.apply(v);
    const Matrix f = member.model.predict(member.params, Matrix::row_vector(z));
    std::vector<double> out(f.values().begin(), f.values().end());
    for (auto& v : out) v = s.invert(v);
    return out;
}

namespace {

void check_members(const std::vector<TrainedMember>& members) {
    if (members.empty()) throw DimensionError("ensemble has no members");
    for (const auto& m : members) {
        if (m.model.input_size() != members.front().model.input_size() ||
            m.model.horizon() != members.front().model.horizon()) {
            throw DimensionError("ensemble members disagree on (L, H)");
        }
    }
}

}  // namespace

std::vector<double> ensemble_forecast(const std::vector<TrainedMember>& members, std::span<const double> y_in,
                                      const std::string& series_id) {
    check_members(members);
    std::vector<std::vector<double>> forecasts;
    for (const auto& m : members) forecasts.push_back(member_forecast(m, y_in, series_id));
    return mean_forecast(forecasts);
}

std::vector<std::vector<double>> ensemble_forecast(const std::vector<TrainedMember>& members,
                                                   const std::vector<Window>& windows) {
    check_members(members);
    if (windows.empty()) return {};
    std::vector<Matrix> per_member;
    for (const auto& m : members) {
        check_shapes(m.model, windows, "forecast");
        const NormalizedWindows n = normalize(windows, m.normalizer);
        Matrix f = forecast_rows(m.model, m.params, n.windows);
        for (std::size_t i = 0; i < windows.size(); ++i) {
            for (auto& v : f.row(i)) v = n.inverse[i].invert(v);
        }
        per_member.push_back(std::move(f));
    }
    std::vector<std::vector<double>> out;
    out.reserve(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
        std::vector<std::vector<double>> rows;
        for (const auto& f : per_member) rows.emplace_back(f.row(i).begin(), f.row(i).end());
        out.push_back(mean_forecast(rows));
    }
    return out;
}

}  // namespace dmidas
