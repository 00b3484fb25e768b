// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include "dmidas/blocks.hpp"
#include "dmidas/cli.hpp"
#include "dmidas/data.hpp"
#include "dmidas/eval.hpp"
#include "dmidas/grad_check.hpp"
#include "dmidas/hypersearch.hpp"
#include "dmidas/model.hpp"
#include "dmidas/ops.hpp"
#include "dmidas/training.hpp"
#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace dmidas;
using dmidas::testing::random_matrix;
using dmidas::testing::random_vector;
using dmidas::testing::read_file;
using dmidas::testing::scratch_dir;
using dmidas::testing::slope_changes;
using dmidas::testing::write_file;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c, d);
    return buf;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) return INFINITY;
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// ---------------------------------------------------------------- 1

// Matrix with every entry at least `margin` away from zero.
Matrix away_from_zero(Rng& rng, std::size_t rows, std::size_t cols, double margin) {
    Matrix m = random_matrix(rng, rows, cols);
    for (double& v : m.data()) v = (v < 0 ? -1.0 : 1.0) * (margin + std::abs(v));
    return m;
}

double relative_error(double a, double n) {
    return std::abs(a - n) / std::max({std::abs(a), std::abs(n), kGradCheckFloor});
}

// Central differences over every tensor of a parameter store.
double store_grad_error(ParameterStore& store, const std::function<double(const ParameterStore&)>& value,
                        const std::function<void(ParameterStore&)>& analytic, double eps = 1e-6) {
    store.zero_grad();
    analytic(store);
    double worst = 0.0;
    for (auto& e : store.entries()) {
        auto vals = e.value.data();
        const auto grads = e.grad.data();
        for (std::size_t i = 0; i < vals.size(); ++i) {
            const double orig = vals[i];
            vals[i] = orig + eps;
            const double up = value(store);
            vals[i] = orig - eps;
            const double down = value(store);
            vals[i] = orig;
            worst = std::max(worst, relative_error(grads[i], (up - down) / (2.0 * eps)));
        }
    }
    return worst;
}

// Smallest |pre-activation| in the block MLP for every row of x.
double min_preactivation(const BlockConfig& c, const ParameterStore& p, const Matrix& x) {
    double smallest = INFINITY;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        std::vector<double> h = pool1d(x.row(r), c.pooling);
        for (std::size_t i = 0; i < c.mlp_widths.size(); ++i) {
            const Matrix& w = p.value("block.fc" + std::to_string(i) + ".weight");
            const Matrix& b = p.value("block.fc" + std::to_string(i) + ".bias");
            std::vector<double> next(w.cols());
            for (std::size_t j = 0; j < w.cols(); ++j) {
                double s = b(0, j);
                for (std::size_t k = 0; k < h.size(); ++k) s += h[k] * w(k, j);
                smallest = std::min(smallest, std::abs(s));
                next[j] = std::max(0.0, s);
            }
            h = std::move(next);
        }
    }
    return smallest;
}

Outcome criterion_gradients() {
    const auto start = Clock::now();
    Rng rng(101);
    constexpr int kPoints = 20;
    double worst = 0.0;
    std::string worst_name;
    std::size_t checks = 0;

    auto run = [&](const std::string& name, const std::function<std::vector<Matrix>()>& draw,
                   const TracedScalarFn& f) {
        for (int i = 0; i < kPoints; ++i) {
            const auto report = grad_check(f, draw(), 1e-6, 1e-4);
            ++checks;
            if (report.max_relative_error > worst || !report.passed) {
                worst = std::max(worst, report.max_relative_error);
                worst_name = name;
            }
        }
    };
    // Each primitive is wrapped in an MSE against a fixed random target so the scalar is nonlinear.
    auto against = [](const Matrix& target) {
        return [target](Tape& t, Var v) { return loss(t, t.constant(target), v, LossKind::mse); };
    };
    const Matrix t35 = random_matrix(rng, 3, 5), t34 = random_matrix(rng, 3, 4), t312 = random_matrix(rng, 3, 12);
    const Matrix t313 = random_matrix(rng, 3, 13), t36 = random_matrix(rng, 3, 6), t33 = random_matrix(rng, 3, 3);

    run("affine", [&] { return std::vector<Matrix>{random_matrix(rng, 3, 4), random_matrix(rng, 4, 5), random_matrix(rng, 1, 5)}; },
        [&](Tape& t, std::span<const Var> in) { return against(t35)(t, affine(t, in[0], in[1], in[2])); });
    run("matmul", [&] { return std::vector<Matrix>{random_matrix(rng, 3, 4), random_matrix(rng, 4, 5)}; },
        [&](Tape& t, std::span<const Var> in) { return against(t35)(t, matmul(t, in[0], in[1])); });
    run("relu", [&] { return std::vector<Matrix>{away_from_zero(rng, 3, 4, 0.05)}; },
        [&](Tape& t, std::span<const Var> in) { return against(t34)(t, relu(t, in[0])); });
    run("add", [&] { return std::vector<Matrix>{random_matrix(rng, 3, 4), random_matrix(rng, 3, 4)}; },
        [&](Tape& t, std::span<const Var> in) { return against(t34)(t, add(t, in[0], in[1])); });
    run("sub", [&] { return std::vector<Matrix>{random_matrix(rng, 3, 4), random_matrix(rng, 3, 4)}; },
        [&](Tape& t, std::span<const Var> in) { return against(t34)(t, sub(t, in[0], in[1])); });
    run("sum", [&] { return std::vector<Matrix>{random_matrix(rng, 3, 4)}; },
        [&](Tape& t, std::span<const Var> in) {
            const Var s = sum(t, in[0]);
            return loss(t, t.constant(Matrix(1, 1, 0.3)), s, LossKind::mse);
        });
    for (PoolMode mode : {PoolMode::avg, PoolMode::max, PoolMode::stride}) {
        const PoolSpec spec{2, 2, mode};
        run(std::string("pool1d/") + std::string(to_string(mode)),
            [&] { return std::vector<Matrix>{random_matrix(rng, 3, 12)}; },
            [&, spec](Tape& t, std::span<const Var> in) { return against(t36)(t, pool1d(t, in[0], spec)); });
    }
    run("interp_upsample", [&] { return std::vector<Matrix>{random_matrix(rng, 3, 5)}; },
        [&](Tape& t, std::span<const Var> in) { return against(t312)(t, interp_upsample(t, in[0], 12)); });
    run("interp_upsample/fractional", [&] { return std::vector<Matrix>{random_matrix(rng, 3, 5)}; },
        [&](Tape& t, std::span<const Var> in) { return against(t313)(t, interp_upsample(t, in[0], 13)); });
    run("loss/mse", [&] { return std::vector<Matrix>{random_matrix(rng, 3, 3)}; },
        [&](Tape& t, std::span<const Var> in) { return loss(t, t.constant(t33), in[0], LossKind::mse); });
    run("loss/mae",
        [&] {
            Matrix yhat = away_from_zero(rng, 3, 3, 0.1);
            yhat.add_in_place(t33);  // errors stay at least 0.1 from the kink
            return std::vector<Matrix>{yhat};
        },
        [&](Tape& t, std::span<const Var> in) { return loss(t, t.constant(t33), in[0], LossKind::mae); });

    // l1_penalty acts on store tensors: differentiate through the store.
    for (int i = 0; i < kPoints; ++i) {
        ParameterStore p;
        p.add("a.weight", "a", ParamRole::weight, 3, 4) = away_from_zero(rng, 3, 4, 0.05);
        p.add("a.bias", "a", ParamRole::bias, 1, 4) = random_matrix(rng, 1, 4);
        const double err = store_grad_error(
            p, [](const ParameterStore& s) { return l1_penalty(s, 0.7); },
            [](ParameterStore& s) {
                Tape t;
                t.backward(l1_penalty(t, s, 0.7));
                t.accumulate_gradients(s);
            });
        ++checks;
        if (err > worst) {
            worst = err;
            worst_name = "l1_penalty";
        }
    }

    // Full midas block: pooled input, ReLU MLP, both heads, interpolation, loss on forecast and backcast.
    BlockConfig c;
    c.basis = BasisKind::midas;
    c.input_size = 12;
    c.horizon = 8;
    c.mlp_widths = {10, 10};
    c.expressivity_ratio = 0.5;
    c.pooling = {2, 2, PoolMode::avg};
    for (int i = 0; i < kPoints; ++i) {
        ParameterStore p;
        register_block_parameters(p, c, "block", "block");
        Matrix x, y;
        do {
            Rng init(rng.next_u64());
            p.initialize_uniform_fan_in(init);
            x = random_matrix(rng, 3, 12);
            y = random_matrix(rng, 3, 8);
        } while (min_preactivation(c, p, x) < 1e-4);
        auto objective = [&c, x, y](Tape& t, const ParameterStore& s) {
            const BlockVars v = block_forward(t, c, s, "block", t.constant(x));
            return add(t, loss(t, t.constant(y), v.forecast, LossKind::mse),
                       loss(t, t.constant(x), v.backcast, LossKind::mse));
        };
        const double err = store_grad_error(
            p,
            [&](const ParameterStore& s) {
                Tape t;
                return t.value(objective(t, s))(0, 0);
            },
            [&](ParameterStore& s) {
                Tape t;
                t.backward(objective(t, s));
                t.accumulate_gradients(s);
            });
        ++checks;
        if (err > worst) {
            worst = err;
            worst_name = "midas block";
        }
    }

    const double elapsed = seconds_since(start);
    Outcome o;
    o.pass = worst < 1e-4 && elapsed < 30.0;
    o.detail = std::to_string(checks) + " checks, max relative error " + fmt("%.2e", worst) + " (" + worst_name +
               "), " + fmt("%.1f s", elapsed);
    return o;
}

// ---------------------------------------------------------------- 2

Outcome criterion_interpolation() {
    Outcome o;
    const auto fixture = interp_upsample(std::vector<double>{0.0, 6.0}, 4);
    const bool fixture_ok = fixture == std::vector<double>{0.0, 3.0, 6.0, 9.0};

    Rng rng(202);
    bool identity_ok = true;
    for (int i = 0; i < 50; ++i) {
        const std::size_t h = 1 + rng.uniform_index(64);
        const auto theta = random_vector(rng, h, -10.0, 10.0);
        identity_ok = identity_ok && interp_upsample(theta, h) == theta;
    }

    // Ratios are powers of 1/2 on horizons divisible by every knot count, so knots sit on integer steps.
    struct Setup {
        std::size_t horizon, stacks;
    };
    const Setup setups[] = {{96, 3}, {32, 3}, {48, 4}, {64, 2}};
    std::size_t blocks_checked = 0, violations = 0;
    for (int draw = 0; draw < 100; ++draw) {
        const Setup s = setups[draw % 4];
        ModelPreset p;
        p.mlp_width = 16;
        p.stacks = s.stacks;
        p.blocks_per_stack = 1 + rng.uniform_index(2);
        const ModelConfig config = make_model_config(p, 2 * s.horizon, s.horizon);
        BuiltModel m = build_model(config, rng.next_u64());
        // Widen the draw so heads produce visibly curved knot sequences.
        for (auto& e : m.params.entries()) {
            for (double& v : e.value.data()) v *= 3.0;
        }
        const auto bundle = m.model.forward(m.params, random_vector(rng, 2 * s.horizon, -5.0, 5.0));
        for (std::size_t b = 0; b < m.model.blocks().size(); ++b) {
            const auto& block = m.model.blocks()[b].config;
            const std::size_t bound = knot_count(block.expressivity_ratio, s.horizon) - 1;
            ++blocks_checked;
            if (slope_changes(bundle.components[b], 1e-9) > bound) ++violations;
        }
    }
    o.pass = fixture_ok && identity_ok && violations == 0;
    o.detail = std::string("fixture ") + (fixture_ok ? "exact" : "WRONG") + ", identity " +
               (identity_ok ? "exact" : "WRONG") + ", " + std::to_string(blocks_checked) +
               " midas block forecasts over 100 draws, " + std::to_string(violations) + " above ceil(r H) - 1";
    return o;
}

// ---------------------------------------------------------------- 3

Outcome criterion_additivity() {
    Rng rng(303);
    const BasisKind kinds[] = {BasisKind::generic, BasisKind::polynomial, BasisKind::harmonic, BasisKind::midas};
    double worst_sum = 0.0, worst_resid = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t l = 8 + rng.uniform_index(40), h = 2 + rng.uniform_index(30);
        ModelConfig c;
        c.input_size = l;
        c.horizon = h;
        c.base_ratio = 0.2 + 0.8 * rng.uniform();
        const std::size_t stacks = 1 + rng.uniform_index(4);
        for (std::size_t s = 0; s < stacks; ++s) {
            BlockConfig b;
            b.basis = kinds[rng.uniform_index(4)];
            b.input_size = l;
            b.horizon = h;
            b.mlp_widths = {4 + rng.uniform_index(12), 4 + rng.uniform_index(12)};
            b.poly_degree = 1 + rng.uniform_index(3);
            b.n_harmonics = 1 + rng.uniform_index(4);
            c.stacks.push_back(StackConfig{1 + rng.uniform_index(2), b, false});
        }
        const BuiltModel m = build_model(c, rng.next_u64());
        const auto x = random_vector(rng, l, -10.0, 10.0);
        const ForecastBundle b = m.model.forward(m.params, x);
        std::vector<double> total(h, 0.0), resid = x;
        for (const auto& comp : b.components) {
            for (std::size_t t = 0; t < h; ++t) total[t] += comp[t];
        }
        worst_sum = std::max(worst_sum, max_abs_diff(total, b.forecast));
        for (std::size_t k = 0; k < b.backcasts.size(); ++k) {
            for (std::size_t t = 0; t < l; ++t) resid[t] -= b.backcasts[k][t];
            worst_resid = std::max(worst_resid, max_abs_diff(resid, b.residual_trace[k + 1]));
        }
        worst_resid = std::max(worst_resid, max_abs_diff(x, b.residual_trace.front()));
    }
    Outcome o;
    o.pass = worst_sum < 1e-9 && worst_resid < 1e-9;
    o.detail = "100 random mixed-basis models, max |sum - forecast| " + fmt("%.2e", worst_sum) +
               ", max telescoping error " + fmt("%.2e", worst_resid);
    return o;
}

// ---------------------------------------------------------------- 4

Outcome criterion_parameter_scaling() {
    ModelPreset p;
    p.kind = "dmidas";
    p.stacks = 3;
    p.base_ratio = 0.5;
    const ModelConfig config = make_model_config(p, 288, 96);
    const ParameterCount ours = count_parameters(Model(config));
    const ParameterCount twin = count_parameters(Model(generic_twin(config)));

    std::size_t ceiling_sum = 0;
    for (int l = 1; l <= 3; ++l) ceiling_sum += static_cast<std::size_t>(std::ceil(96.0 * std::pow(0.5, l)));
    const double closed = 96.0 * 0.5 * (1.0 - std::pow(0.5, 3)) / (1.0 - 0.5);
    const double knot_reduction =
        100.0 * (static_cast<double>(twin.forecast_knots) - static_cast<double>(ours.forecast_knots)) /
        static_cast<double>(twin.forecast_knots);
    const double total_reduction = 100.0 * (static_cast<double>(twin.total) - static_cast<double>(ours.total)) /
                                   static_cast<double>(twin.total);

    Outcome o;
    o.pass = ours.forecast_knots == 84 && twin.forecast_knots == 288 && ceiling_sum == ours.forecast_knots &&
             std::abs(ours.geometric_closed_form - 84.0) < 1e-9 && std::abs(closed - 84.0) < 1e-9 &&
             fmt("%.1f", knot_reduction) == "70.8";
    o.detail = "forecast knots " + std::to_string(ours.forecast_knots) + " vs " + std::to_string(twin.forecast_knots) +
               fmt(" (%.1f%% reduction), ceiling sum %.0f, closed form %.0f; whole model %.0f", knot_reduction,
                   static_cast<double>(ceiling_sum), ours.geometric_closed_form, static_cast<double>(ours.total)) +
               " vs " + std::to_string(twin.total) + fmt(" parameters (%.1f%% reduction, reported only)", total_reduction);
    return o;
}

// ---------------------------------------------------------------- 5

Outcome criterion_degenerate() {
    ModelPreset p;
    p.kind = "dmidas";
    p.base_ratio = 1.0;
    p.pooling_kernels = {1};
    p.mlp_width = 64;
    p.blocks_per_stack = 2;
    const ModelConfig config = make_model_config(p, 72, 24);
    const BuiltModel dm = build_model(config, 505);
    ModelPreset g = p;
    g.kind = "nbeats-g";
    const Model generic(make_model_config(g, 72, 24));
    Rng rng(506);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const auto x = random_vector(rng, 72, -20.0, 20.0);
        worst = std::max(worst, max_abs_diff(dm.model.forward(dm.params, x).forecast,
                                             generic.forward(dm.params, x).forecast));
    }
    Outcome o;
    o.pass = worst < 1e-12;
    o.detail = "50 inputs, max |dmidas(r=1, kernel 1) - nbeats-g| = " + fmt("%.2e", worst);
    return o;
}

// ---------------------------------------------------------------- 6

Outcome criterion_synthetic_skill() {
    const auto start = Clock::now();
    const std::size_t H = 96, L = 288;
    const TimeSeriesDataset ds = generate_synthetic(synthetic_preset("multifreq-v1"));
    const DatasetSplit split = split_tail(ds, 5 * H, 10 * H, L, H);
    const auto tests = test_windows(split, L, H);

    ModelPreset preset;
    preset.kind = "dmidas";
    preset.stacks = 3;
    TrainConfig train;
    train.iterations = 2000;
    train.batch_size = 32;
    train.eval_every = 100;
    train.early_stop_patience = 10;
    train.seed = 6;
    apply_assignment(default_space_midpoint(), preset, train);
    const ModelConfig config = make_model_config(preset, L, H);
    const TrainingData data = prepare_training_data(split, L, H, 1, train.normalization);
    const EnsembleConfig ensemble{4, {}};

    // The untrained reference: the same members at initialization.
    std::vector<TrainedMember> untrained;
    for (const auto seed : resolve_member_seeds(ensemble, train.seed)) {
        BuiltModel b = build_model(config, seed);
        untrained.push_back(TrainedMember{seed, std::move(b.model), std::move(b.params), data.normalizer, {}, 0.0, 0});
    }
    const auto members = train_ensemble(config, data, train, ensemble, 1);

    WindowForecasts naive;
    for (const auto& w : tests) naive.push_back(seasonal_naive_forecast(w.input, H, 168));
    const double model_mae = aggregate_metrics(tests, ensemble_forecast(members, tests)).mae;
    const double naive_mae = aggregate_metrics(tests, naive).mae;
    const double untrained_mae = aggregate_metrics(tests, ensemble_forecast(untrained, tests)).mae;
    const double improvement = 100.0 * (naive_mae - model_mae) / naive_mae;
    std::size_t iterations = 0;
    for (const auto& m : members) iterations = std::max(iterations, m.history.back().iteration);
    const double elapsed = seconds_since(start);

    Outcome o;
    o.pass = model_mae < naive_mae && model_mae < untrained_mae && improvement >= 25.0 && elapsed < 600.0 &&
             iterations <= 2000;
    o.detail = fmt("test MAE %.4f vs seasonal-naive(168) %.4f and untrained %.4f; improvement %.1f%% (target 25%%)",
                   model_mae, naive_mae, untrained_mae, improvement) +
               ", " + std::to_string(members.size()) + " members, <= " + std::to_string(iterations) +
               " iterations, " + fmt("%.0f s", elapsed);
    return o;
}

// ---------------------------------------------------------------- 7

Outcome criterion_ensemble() {
    SyntheticSpec spec;
    spec.length = 400;
    spec.components = {{SyntheticComponent::Kind::sinusoid, 12.0, 2.0, 0.0, 0.0, 0.0},
                       {SyntheticComponent::Kind::noise, 0.0, 0.0, 0.0, 0.0, 0.3}};
    const auto split = split_tail(generate_synthetic(spec), 48, 48, 36, 12);
    const auto data = prepare_training_data(split, 36, 12, 1, NormalizationMode::per_series_median);
    ModelPreset p;
    p.mlp_width = 16;
    const ModelConfig config = make_model_config(p, 36, 12);
    TrainConfig t;
    t.iterations = 60;
    t.eval_every = 20;
    const auto members = train_ensemble(config, data, t, {4, {}});
    const auto single = train_ensemble(config, data, t, {1, {}});
    const auto tests = test_windows(split, 36, 12);

    bool exact = true, single_ok = true;
    for (const auto& w : tests) {
        std::vector<double> brute(12, 0.0);
        for (const auto& m : members) {
            const auto f = member_forecast(m, w.input, w.series_id);
            for (std::size_t h = 0; h < 12; ++h) brute[h] += f[h];
        }
        for (auto& v : brute) v /= static_cast<double>(members.size());
        exact = exact && ensemble_forecast(members, w.input, w.series_id) == brute;
        single_ok = single_ok && ensemble_forecast(single, w.input, w.series_id) ==
                                     member_forecast(single.front(), w.input, w.series_id);
    }
    const auto batched = ensemble_forecast(members, tests);
    for (std::size_t i = 0; i < tests.size(); ++i) {
        exact = exact && batched[i] == ensemble_forecast(members, tests[i].input, tests[i].series_id);
    }
    Outcome o;
    o.pass = exact && single_ok;
    o.detail = std::to_string(tests.size()) + " windows: 4-member mean " + (exact ? "bit-identical" : "DIFFERS") +
               " to brute force, n=1 ensemble " + (single_ok ? "equals" : "DIFFERS from") + " its member";
    return o;
}

// ---------------------------------------------------------------- 8

Outcome criterion_reproducibility() {
    const auto dir = scratch_dir("acceptance_reproducibility");
    write_file(dir / "run.ini",
               "[data]\nval_len = 96\ntest_len = 192\n"
               "[model]\nkind = dmidas\nhorizon = 24\nmlp_width = 32\nstacks = 3\n"
               "[training]\niterations = 150\neval_every = 50\nseed = 8\n"
               "[ensemble]\nmembers = 2\n"
               "[evaluation]\nmodels = dmidas, nbeats-g, seasonal-naive:24\n");
    auto cli = [](std::vector<std::string> args) {
        std::ostringstream out, err;
        return run_cli(args, out, err);
    };
    auto pipeline = [&](const std::string& name, const std::string& jobs) {
        const auto run = dir / name;
        const std::string data = (run / "data.csv").string();
        const std::string config = (dir / "run.ini").string();
        int code = cli({"generate", "--seed", "8", "--out", data});
        code |= cli({"train", "--config", config, "--data", data, "--out", (run / "train").string(), "--jobs", jobs});
        code |= cli({"evaluate", "--config", config, "--data", data, "--checkpoints", (run / "train/checkpoints").string(),
                     "--out", (run / "ckpt_eval").string(), "--jobs", jobs});
        code |= cli({"evaluate", "--config", config, "--data", data, "--out", (run / "full_eval").string(), "--jobs", jobs});
        return code;
    };
    const int codes = pipeline("a", "1") | pipeline("b", "1") | pipeline("c", "2");
    bool same = codes == 0;
    for (const char* file : {"data.csv", "train/checkpoints/member_0.ckpt", "train/checkpoints/member_1.ckpt",
                             "train/validation.json", "ckpt_eval/metrics.json", "full_eval/metrics.json"}) {
        const std::string a = read_file(dir / "a" / file);
        same = same && !a.empty() && a == read_file(dir / "b" / file) && a == read_file(dir / "c" / file);
    }
    Outcome o;
    o.pass = same;
    o.detail = std::string("generate -> train -> evaluate three times (jobs 1, 1, 2): metrics JSON, checkpoints and "
                           "validation summary ") +
               (same ? "byte-identical" : "DIFFER");
    return o;
}

// ---------------------------------------------------------------- 9

Outcome criterion_metrics() {
    Rng rng(909);
    double worst = 0.0;
    bool ordered = true;
    for (int i = 0; i < 1000; ++i) {
        const std::size_t n = 1 + rng.uniform_index(200);
        const auto y = random_vector(rng, n, -100.0, 100.0);
        const auto yhat = random_vector(rng, n, -100.0, 100.0);
        long double abs_sum = 0.0L, sq_sum = 0.0L;
        for (std::size_t t = 0; t < n; ++t) {
            const long double e = static_cast<long double>(y[t]) - static_cast<long double>(yhat[t]);
            abs_sum += e < 0 ? -e : e;
            sq_sum += e * e;
        }
        const double ref_mae = static_cast<double>(abs_sum / n);
        const double ref_rmse = static_cast<double>(std::sqrt(sq_sum / n));
        const double m = mae(y, yhat), r = rmse(y, yhat);
        worst = std::max({worst, std::abs(m - ref_mae) / std::max(1.0, ref_mae),
                          std::abs(r - ref_rmse) / std::max(1.0, ref_rmse)});
        ordered = ordered && r >= m;
    }
    Outcome o;
    o.pass = worst < 1e-12 && ordered;
    o.detail = "1000 random pairs, max deviation from brute force " + fmt("%.2e", worst) + ", rmse >= mae " +
               (ordered ? "on all" : "VIOLATED");
    return o;
}

// ---------------------------------------------------------------- 10

Outcome criterion_leakage() {
    Rng rng(1010);
    std::size_t configs = 0, windows = 0, leaks = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t h = 1 + rng.uniform_index(24), l = 1 + rng.uniform_index(72);
        const std::size_t val = h + rng.uniform_index(60), test = rng.uniform_index(80);
        const std::size_t stride = 1 + rng.uniform_index(6);
        std::vector<Series> all;
        const std::size_t n_series = 1 + rng.uniform_index(3);
        for (std::size_t s = 0; s < n_series; ++s) {
            const std::size_t n = val + test + l + h + 1 + rng.uniform_index(100);
            all.push_back(Series{"s" + std::to_string(s), random_vector(rng, n), {}, ""});
        }
        const auto split = split_tail(TimeSeriesDataset(all), val, test, l, h);
        ++configs;
        for (const auto& s : split.series) {
            const auto own = select_series(split, s.id);
            std::size_t max_train = 0, min_val = SIZE_MAX, min_test = SIZE_MAX;
            for (const auto& w : training_windows(own, l, h, stride)) {
                ++windows;
                max_train = std::max(max_train, w.target_end() - 1);
                if (w.target_end() > s.train_end) ++leaks;
            }
            for (const auto& w : validation_windows(own, l, h)) {
                min_val = std::min(min_val, w.target_begin());
                if (w.target_begin() < s.train_end || w.target_end() > s.val_end) ++leaks;
            }
            for (const auto& w : test_windows(own, l, h)) {
                min_test = std::min(min_test, w.target_begin());
                if (w.target_begin() < s.val_end) ++leaks;
            }
            if (!(max_train < min_val)) ++leaks;
            if (min_test != SIZE_MAX && !(min_val < min_test)) ++leaks;
        }
    }
    Outcome o;
    o.pass = leaks == 0;
    o.detail = std::to_string(configs) + " randomized splits, " + std::to_string(windows) + " training windows, " +
               std::to_string(leaks) + " leaks";
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        Outcome (*run)();
    };
    const Criterion criteria[] = {
        {1, "gradient fidelity", criterion_gradients},
        {2, "interpolation oracle", criterion_interpolation},
        {3, "decomposition additivity", criterion_additivity},
        {4, "parameter scaling", criterion_parameter_scaling},
        {5, "degenerate equivalence", criterion_degenerate},
        {6, "synthetic forecasting skill", criterion_synthetic_skill},
        {7, "ensemble protocol", criterion_ensemble},
        {8, "reproducibility", criterion_reproducibility},
        {9, "metric oracles", criterion_metrics},
        {10, "leakage guard", criterion_leakage},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << ": " << o.detail << std::endl;
    }
    std::cout << (10 - failed) << "/10 criteria passed" << std::endl;
    return failed == 0 ? 0 : 1;
}
