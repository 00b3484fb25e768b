#include "dmidas/cli.hpp"

#include "dmidas/checkpoint.hpp"
#include "dmidas/data.hpp"
#include "dmidas/errors.hpp"
#include "dmidas/eval.hpp"
#include "dmidas/hypersearch.hpp"
#include "dmidas/run_config.hpp"
#include "dmidas/training.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <regex>

namespace dmidas {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
    std::string config;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
    std::string out;
    std::string data;
    std::string preset = "multifreq-v1";
    std::string spec;
    std::string checkpoints;
    std::string checkpoint;
    std::string series;
    std::optional<std::size_t> end;
    std::optional<std::size_t> budget;
};

RunConfig load_config(const Options& o) {
    RunConfig c = o.config.empty() ? RunConfig{} : load_run_config(o.config);
    if (o.seed) c.training.seed = *o.seed;
    if (!o.data.empty()) c.data.path = o.data;
    return c;
}

struct LoadedData {
    TimeSeriesDataset dataset;
    std::string name;
};

LoadedData load_data(const RunConfig& c) {
    if (!c.data.path.empty()) {
        const fs::path p(c.data.path);
        if (!fs::exists(p)) throw DataError("data file '" + c.data.path + "' does not exist");
        return {load_csv(p, c.data.schema), c.data.name.empty() ? p.stem().string() : c.data.name};
    }
    if (!c.data.synthetic.empty()) {
        return {generate_synthetic(synthetic_preset(c.data.synthetic)),
                c.data.name.empty() ? c.data.synthetic : c.data.name};
    }
    throw ConfigError("no data source: pass --data or set data.path / data.synthetic");
}

fs::path out_dir(const Options& o, const char* fallback) { return fs::path(o.out.empty() ? fallback : o.out); }

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write '" + path.string() + "'");
    f << text;
    f.flush();
    if (!f) throw DataError("write failed for '" + path.string() + "'");
}

DatasetSplit make_split(const RunConfig& c, const TimeSeriesDataset& ds, const std::string& series) {
    DatasetSplit split =
        split_tail(ds, c.resolved_val_len(), c.resolved_test_len(), c.resolved_input_size(), c.horizon);
    return series.empty() ? split : select_series(split, series);
}

double ensemble_validation_mae(const std::vector<TrainedMember>& members, const std::vector<Window>& validation) {
    return aggregate_metrics(validation, ensemble_forecast(members, validation)).mae;
}

std::vector<TrainedMember> load_members(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw DataError("checkpoint directory '" + dir.string() + "' does not exist");
    const std::regex pattern(R"(member_(\d+)\.ckpt)");
    std::vector<std::pair<std::size_t, fs::path>> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::smatch m;
        const std::string name = entry.path().filename().string();
        if (std::regex_match(name, m, pattern)) files.emplace_back(std::stoul(m[1].str()), entry.path());
    }
    if (files.empty()) throw DataError("no member_<k>.ckpt files in '" + dir.string() + "'");
    std::sort(files.begin(), files.end());
    std::vector<TrainedMember> members;
    for (const auto& [k, p] : files) members.push_back(load_checkpoint(p));
    return members;
}

const Series& pick_series(const TimeSeriesDataset& ds, const std::string& id) {
    if (id.empty()) return ds.series().front();
    return ds.find(id);
}

std::span<const double> select_input(const Series& s, std::size_t input_size, std::optional<std::size_t> end,
                                     std::size_t& window_end) {
    window_end = end.value_or(s.values.size());
    if (window_end < input_size || window_end > s.values.size()) {
        throw ConfigError("window selector out of range: --end must lie in [" + std::to_string(input_size) + ", " +
                          std::to_string(s.values.size()) + "] for series '" + s.id + "'");
    }
    return std::span<const double>(s.values).subspan(window_end - input_size, input_size);
}

int cmd_generate(const Options& o, std::ostream& out) {
    SyntheticSpec spec;
    if (!o.spec.empty()) {
        std::ifstream f(o.spec);
        if (!f) throw ConfigError("cannot open synthetic spec '" + o.spec + "'");
        std::ostringstream text;
        text << f.rdbuf();
        spec = parse_synthetic_spec(text.str());
    } else {
        spec = synthetic_preset(o.preset);
    }
    if (o.seed) spec.seed = *o.seed;
    const fs::path path = o.out.empty() ? fs::path(spec.id + ".csv") : fs::path(o.out);
    const auto ds = generate_synthetic(spec);
    write_dataset_csv(ds, path);
    out << "wrote " << spec.length << " rows of '" << spec.id << "' to " << path.string() << '\n';
    return kExitOk;
}

int cmd_train(const Options& o, std::ostream& out) {
    RunConfig c = load_config(o);
    const auto loaded = load_data(c);
    const fs::path dir = out_dir(o, "run");
    write_text(dir / "config.resolved", render_run_config(c));

    const std::size_t L = c.resolved_input_size(), H = c.horizon;
    const DatasetSplit split = make_split(c, loaded.dataset, o.series);
    const TrainingData data = prepare_training_data(split, L, H, c.train_stride, c.training.normalization);
    const auto members = train_ensemble(c.model_config(), data, c.training, c.ensemble, o.jobs);

    json summary;
    summary["ensemble_val_mae"] = ensemble_validation_mae(members, data.validation);
    summary["members"] = json::array();
    for (std::size_t k = 0; k < members.size(); ++k) {
        const auto& m = members[k];
        save_checkpoint(m, dir / "checkpoints" / ("member_" + std::to_string(k) + ".ckpt"));
        write_history_csv(m.history, dir / "history" / ("member_" + std::to_string(k) + ".csv"));
        summary["members"].push_back(
            {{"seed", m.seed}, {"best_val_mae", m.best_val_mae}, {"best_iteration", m.best_iteration}});
        out << "member " << k << " seed " << m.seed << ": best validation MAE " << format_double(m.best_val_mae)
            << " at iteration " << m.best_iteration << '\n';
    }
    write_text(dir / "validation.json", summary.dump(2) + "\n");
    out << "ensemble validation MAE " << format_double(summary["ensemble_val_mae"].get<double>()) << '\n';
    out << "wrote " << members.size() << " checkpoints to " << (dir / "checkpoints").string() << '\n';
    return kExitOk;
}

std::string improvement_text(const MetricsReport& report, const std::string& baseline) {
    std::ostringstream text;
    text << "\nrelative improvement over " << baseline << " (percent)\n";
    for (const auto& [key, imp] : relative_improvement(report, baseline)) {
        const auto& [dataset, horizon, model] = key;
        if (model == baseline) continue;
        char line[256];
        std::snprintf(line, sizeof(line), "%s H=%zu %s: MAE %+.2f, RMSE %+.2f\n", dataset.c_str(), horizon,
                      model.c_str(), imp.mae_percent, imp.rmse_percent);
        text << line;
    }
    return text.str();
}

int cmd_evaluate(const Options& o, std::ostream& out, std::ostream& err) {
    RunConfig c = load_config(o);
    const auto loaded = load_data(c);
    const fs::path dir = out_dir(o, "run");
    write_text(dir / "config.resolved", render_run_config(c));

    MetricsReport report;
    std::vector<ModelSpec> specs;
    for (const auto& name : c.evaluation.models) specs.push_back(parse_model_spec(name, c.model));

    if (!o.checkpoints.empty()) {
        const auto members = load_members(o.checkpoints);
        const std::size_t L = members.front().model.input_size(), H = members.front().model.horizon();
        const auto split = split_tail(loaded.dataset, c.resolved_val_len(), c.resolved_test_len(), L, H);
        const auto tests = test_windows(split, L, H);
        const Aggregate agg = aggregate_metrics(tests, ensemble_forecast(members, tests));
        report.add({loaded.name, H, c.model.kind, agg.mae, agg.rmse, true, {}});
        for (const auto& spec : specs) {
            if (spec.kind == ModelSpec::Kind::neural) continue;
            MetricsEntry e{loaded.name, H, spec.name, 0.0, 0.0, true, {}};
            try {
                WindowForecasts f;
                for (const auto& w : tests) f.push_back(seasonal_naive_forecast(w.input, H, spec.period));
                const Aggregate a = aggregate_metrics(tests, f);
                e.mae = a.mae;
                e.rmse = a.rmse;
            } catch (const std::exception& ex) {
                e.complete = false;
                e.error = ex.what();
            }
            report.add(std::move(e));
        }
    } else {
        Protocol p;
        p.val_len = c.resolved_val_len();
        p.test_len = c.resolved_test_len();
        p.input_multiplier = c.evaluation.input_multiplier;
        p.train = c.training;
        p.ensemble = c.ensemble;
        p.global = c.evaluation.global;
        p.train_stride = c.train_stride;
        p.jobs = o.jobs;
        report = run_benchmark(loaded.dataset, loaded.name, specs, c.resolved_horizons(), p);
    }

    export_results(report, dir / "metrics.json", ExportFormat::json);
    std::string table = render_table(report);
    if (!c.evaluation.baseline.empty()) {
        try {
            table += improvement_text(report, c.evaluation.baseline);
        } catch (const DataError& e) {
            table += std::string("\nrelative improvement unavailable: ") + e.what() + "\n";
        }
    }
    write_text(dir / "metrics.txt", table);
    out << table;
    if (!report.complete()) {
        for (const auto& e : report.entries) {
            if (!e.complete) err << "incomplete cell (" << e.dataset << ", " << e.horizon << ", " << e.model
                                 << "): " << e.error << '\n';
        }
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_forecast(const Options& o, std::ostream& out) {
    if (o.checkpoints.empty()) throw ConfigError("forecast needs --checkpoints <dir>");
    RunConfig c = load_config(o);
    const auto loaded = load_data(c);
    const auto members = load_members(o.checkpoints);
    const Series& s = pick_series(loaded.dataset, o.series);
    std::size_t end = 0;
    const auto y_in = select_input(s, members.front().model.input_size(), o.end, end);
    const auto f = ensemble_forecast(members, y_in, s.id);
    std::ostringstream csv;
    csv << "t,forecast\n";
    for (std::size_t h = 0; h < f.size(); ++h) csv << (end + h) << ',' << format_double(f[h]) << '\n';
    if (o.out.empty()) {
        out << csv.str();
    } else {
        write_text(o.out, csv.str());
        out << "wrote " << f.size() << "-step forecast for '" << s.id << "' to " << o.out << '\n';
    }
    return kExitOk;
}

int cmd_decompose(const Options& o, std::ostream& out) {
    if (o.checkpoint.empty()) throw ConfigError("decompose needs --checkpoint <file>");
    RunConfig c = load_config(o);
    const auto loaded = load_data(c);
    const TrainedMember member = load_checkpoint(o.checkpoint);
    const Series& s = pick_series(loaded.dataset, o.series);
    std::size_t end = 0;
    const auto y_in = select_input(s, member.model.input_size(), o.end, end);
    const Scaling sc = member.normalizer.scaling_for(s.id, y_in);
    std::vector<double> z(y_in.begin(), y_in.end());
    for (auto& v : z) v = sc.apply(v);
    ForecastBundle bundle = member.model.decompose(member.params, z);
    // Components scale linearly; the window level (if any) is carried by the first one.
    for (auto& comp : bundle.components) {
        for (auto& v : comp) v *= sc.scale;
    }
    if (!bundle.components.empty()) {
        for (auto& v : bundle.components.front()) v += sc.shift;
    }
    for (auto& v : bundle.forecast) v = sc.invert(v);
    const fs::path path = o.out.empty() ? fs::path("decomposition.csv") : fs::path(o.out);
    export_results(bundle, path, ExportFormat::csv);
    out << "wrote " << bundle.components.size() << " components (";
    for (std::size_t k = 0; k < bundle.block_labels.size(); ++k) out << (k ? ", " : "") << bundle.block_labels[k];
    out << ") to " << path.string() << '\n';
    return kExitOk;
}

int cmd_search(const Options& o, std::ostream& out) {
    RunConfig c = load_config(o);
    const std::size_t budget = o.budget.value_or(c.search.budget);
    if (budget == 0) throw ConfigError("search budget must be >= 1");
    const auto loaded = load_data(c);
    const fs::path dir = out_dir(o, "search");
    write_text(dir / "config.resolved", render_run_config(c));

    const std::size_t L = c.resolved_input_size(), H = c.horizon;
    const DatasetSplit split = make_split(c, loaded.dataset, o.series);
    const TrainingData data = prepare_training_data(split, L, H, c.train_stride, c.training.normalization);

    auto configure = [&c](const Assignment& a, std::uint64_t seed) {
        RunConfig r = c;
        apply_assignment(a, r.model, r.training);
        r.training.seed = seed;
        return r;
    };
    const Objective objective = [&](const Assignment& a, std::uint64_t seed) {
        const RunConfig r = configure(a, seed);
        const auto members = train_ensemble(r.model_config(), data, r.training, r.ensemble, 1);
        return ensemble_validation_mae(members, data.validation);
    };
    const SearchResult result = random_search(c.search.space, budget, objective, c.training.seed, o.jobs);
    write_trial_log(result.trials, dir / "trials.jsonl");
    write_text(dir / "best.ini", render_run_config(configure(result.best.config, result.best.seed)));

    std::size_t failed = 0;
    for (const auto& t : result.trials) failed += t.completed ? 0 : 1;
    out << result.trials.size() << " trials (" << failed << " failed); best trial " << result.best.index
        << " validation MAE " << format_double(result.best.validation_mae) << '\n';
    for (const auto& [k, v] : result.best.config) out << "  " << k << " = " << to_string(v) << '\n';
    out << "wrote " << (dir / "best.ini").string() << '\n';
    return kExitOk;
}

int cmd_param_count(const Options& o, std::ostream& out) {
    const RunConfig c = load_config(o);
    const ModelConfig config = c.model_config();
    const Model model(config);
    const Model twin(generic_twin(config));
    const ParameterCount counts = count_parameters(model);
    const ParameterCount twin_counts = count_parameters(twin);

    auto percent = [](std::size_t ours, std::size_t theirs) {
        return theirs == 0 ? 0.0 : 100.0 * (static_cast<double>(theirs) - static_cast<double>(ours)) /
                                       static_cast<double>(theirs);
    };
    char line[256];
    out << "model " << c.model.kind << ": L=" << config.input_size << " H=" << config.horizon
        << " blocks=" << counts.total_blocks << '\n';
    for (const auto& [name, n] : counts.per_layer) {
        std::snprintf(line, sizeof(line), "  %-40s %zu\n", name.c_str(), n);
        out << line;
    }
    out << "forecast knots: " << counts.forecast_knots << " (generic twin " << twin_counts.forecast_knots << ")\n";
    out << "backcast knots: " << counts.backcast_knots << " (generic twin " << twin_counts.backcast_knots << ")\n";
    out << "coefficient head parameters: " << counts.theta_parameters << " (generic twin "
        << twin_counts.theta_parameters << ")\n";
    out << "total parameters: " << counts.total << " (generic twin " << twin_counts.total << ")\n";
    std::snprintf(line, sizeof(line), "forecast knot reduction: %.1f%%\n",
                  percent(counts.forecast_knots, twin_counts.forecast_knots));
    out << line;
    std::snprintf(line, sizeof(line), "total parameter reduction: %.1f%%\n", percent(counts.total, twin_counts.total));
    out << line;
    out << "geometric closed form H r (1 - r^B) / (1 - r): " << format_double(counts.geometric_closed_form) << '\n';
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Long-horizon forecasting with pooled, interpolated basis-expansion networks", "dmidas"};
    app.require_subcommand(1);
    app.fallthrough();
    Options o;
    app.add_option("--config", o.config, "run configuration file (INI)");
    app.add_option("--seed", o.seed, "root seed override");
    app.add_option("--jobs", o.jobs, "parallel workers (results do not depend on it)")->check(CLI::PositiveNumber);
    app.add_option("--out", o.out, "output directory (file for generate, forecast and decompose)");

    auto* gen = app.add_subcommand("generate", "write a synthetic dataset as CSV");
    gen->add_option("--preset", o.preset, "synthetic preset name");
    gen->add_option("--spec", o.spec, "JSON synthetic spec file");
    auto* train = app.add_subcommand("train", "train an ensemble and write checkpoints");
    auto* eval = app.add_subcommand("evaluate", "benchmark models and write metrics");
    eval->add_option("--checkpoints", o.checkpoints, "evaluate a trained ensemble instead of training");
    auto* fc = app.add_subcommand("forecast", "forecast with a trained ensemble");
    fc->add_option("--checkpoints", o.checkpoints, "directory with member_<k>.ckpt files");
    auto* dec = app.add_subcommand("decompose", "export the per-block forecast decomposition");
    dec->add_option("--checkpoint", o.checkpoint, "one member checkpoint");
    auto* search = app.add_subcommand("search", "random hyperparameter search");
    search->add_option("--budget", o.budget, "number of trials");
    auto* pc = app.add_subcommand("param-count", "parameter accounting against the generic twin");
    for (auto* sub : {train, eval, fc, dec, search}) {
        sub->add_option("--data", o.data, "CSV dataset (overrides data.path)");
        sub->add_option("--series", o.series, "restrict to one series id");
    }
    for (auto* sub : {fc, dec}) sub->add_option("--end", o.end, "forecast origin: the input window ends here");
    (void)pc;

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n' << "run with --help for usage\n";
        return kExitConfig;
    }

    try {
        if (gen->parsed()) return cmd_generate(o, out);
        if (train->parsed()) return cmd_train(o, out);
        if (eval->parsed()) return cmd_evaluate(o, out, err);
        if (fc->parsed()) return cmd_forecast(o, out);
        if (dec->parsed()) return cmd_decompose(o, out);
        if (search->parsed()) return cmd_search(o, out);
        return cmd_param_count(o, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}

}  // namespace dmidas
