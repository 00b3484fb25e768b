#include "doctest.h"

#include "dmidas/blocks.hpp"
#include "dmidas/errors.hpp"
#include "dmidas/grad_check.hpp"
#include "dmidas/parameters.hpp"
#include "support.hpp"

#include <cmath>
#include <numbers>

using namespace dmidas;
using dmidas::testing::numeric_gradient;
using dmidas::testing::random_vector;
using dmidas::testing::slope_changes;

namespace {

BlockConfig small_block(BasisKind basis, std::size_t l = 12, std::size_t h = 8) {
    BlockConfig c;
    c.basis = basis;
    c.input_size = l;
    c.horizon = h;
    c.mlp_widths = {6, 5};
    c.poly_degree = 2;
    c.n_harmonics = 2;
    return c;
}

ParameterStore init_block(const BlockConfig& c, std::uint64_t seed, const std::string& prefix = "block") {
    ParameterStore p;
    register_block_parameters(p, c, prefix, prefix);
    Rng rng(seed);
    p.initialize_uniform_fan_in(rng);
    return p;
}

}  // namespace

TEST_CASE("zero network gives zero outputs for every basis") {
    Rng rng(1);
    for (BasisKind k : {BasisKind::generic, BasisKind::polynomial, BasisKind::harmonic, BasisKind::midas}) {
        BlockConfig c = small_block(k);
        c.expressivity_ratio = 0.5;
        c.pooling = {2, 2, PoolMode::avg};
        ParameterStore p;
        register_block_parameters(p, c, "block", "block");
        const auto out = block_forward(c, p, random_vector(rng, c.input_size));
        CHECK(out.forecast == std::vector<double>(c.horizon, 0.0));
        CHECK(out.backcast == std::vector<double>(c.input_size, 0.0));
    }
}

TEST_CASE("degenerate midas block equals a generic block with the same parameters") {
    Rng rng(2);
    BlockConfig generic = small_block(BasisKind::generic);
    BlockConfig midas = generic;
    midas.basis = BasisKind::midas;
    midas.expressivity_ratio = 1.0;
    midas.pooling = {1, 1, PoolMode::avg};
    const ParameterStore p = init_block(generic, 3);
    for (int i = 0; i < 20; ++i) {
        const auto x = random_vector(rng, generic.input_size, -3, 3);
        const auto a = block_forward(generic, p, x);
        const auto b = block_forward(midas, p, x);
        CHECK(a.forecast == b.forecast);
        CHECK(a.backcast == b.backcast);
    }
}

TEST_CASE("midas forecast has at most ceil(r H) - 1 interior slope changes") {
    Rng rng(4);
    for (double r : {0.5, 0.25, 0.125}) {
        BlockConfig c = small_block(BasisKind::midas, 48, 32);
        c.expressivity_ratio = r;
        c.pooling = {2, 2, PoolMode::max};
        const std::size_t bound = knot_count(r, c.horizon) - 1;
        for (int draw = 0; draw < 25; ++draw) {
            const ParameterStore p = init_block(c, 100 + draw);
            const auto out = block_forward(c, p, random_vector(rng, c.input_size, -2, 2));
            CHECK(out.theta_f.size() == bound + 1);
            CHECK(slope_changes(out.forecast) <= bound);
        }
    }
}

TEST_CASE("generic basis is the identity") {
    const std::vector<double> tf{1, 2, 3}, tb{4, 5};
    const auto [f, b] = generic_basis(tf, tb);
    CHECK(f == tf);
    CHECK(b == tb);
    const auto [zf, zb] = generic_basis(std::vector<double>(3, 0.0), std::vector<double>(2, 0.0));
    CHECK(zf == std::vector<double>(3, 0.0));

    // Jacobian of forecast wrt theta_f is I: check each output coordinate by finite differences.
    for (std::size_t out = 0; out < 3; ++out) {
        auto f_out = [out](const std::vector<double>& th) { return generic_basis(th, {}).first[out]; };
        const auto g = numeric_gradient(f_out, tf);
        for (std::size_t i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(i == out ? 1.0 : 0.0));
    }
}

TEST_CASE("polynomial basis uses normalized time t/n") {
    CHECK(polynomial_basis(std::vector<double>{2.5}, 5) == std::vector<double>(5, 2.5));
    CHECK(polynomial_basis(std::vector<double>{0, 1}, 4) == std::vector<double>{0, 0.25, 0.5, 0.75});
    CHECK(polynomial_basis(std::vector<double>{1, 0, 0}, 6) == polynomial_basis(std::vector<double>{1}, 6));
}

TEST_CASE("harmonic basis") {
    const std::size_t n = 10;
    const auto y = harmonic_basis(std::vector<double>{1, 0}, n);
    for (std::size_t t = 0; t < n; ++t) {
        CHECK(y[t] == doctest::Approx(std::cos(2 * std::numbers::pi * t / n)).epsilon(1e-14));
    }
    CHECK(harmonic_basis(std::vector<double>{0, 0, 0, 0}, n) == std::vector<double>(n, 0.0));
    for (std::size_t k = 0; k < 3; ++k) {
        std::vector<double> theta(6, 0.0);
        theta[2 * k] = 0.7;
        theta[2 * k + 1] = -1.3;
        const auto s = harmonic_basis(theta, 24);
        double mean = 0.0;
        for (double v : s) mean += v / 24.0;
        CHECK(std::abs(mean) < 1e-9);
    }
}

TEST_CASE("midas basis") {
    Rng rng(5);
    const auto tf = random_vector(rng, 7);
    const auto tb = random_vector(rng, 9);
    const auto [f, b] = midas_basis(tf, tb, 7, 9);
    CHECK(f == tf);
    CHECK(b == tb);
    CHECK(midas_basis(std::vector<double>{0, 6}, std::vector<double>{1}, 4, 3).first ==
          std::vector<double>{0, 3, 6, 9});
    CHECK(knot_count(0.5, 96) == 48);
    BlockConfig c = small_block(BasisKind::midas, 288, 96);
    c.expressivity_ratio = 0.5;
    CHECK(forecast_coefficients(c) == 48);
    CHECK(backcast_coefficients(c) == 144);
}

TEST_CASE("knot count is a ceiling, never a floor") {
    CHECK(knot_count(0.3, 10) == 3);  // 0.3*10 rounds to 3.0000000000000004
    CHECK(knot_count(0.31, 10) == 4);
    CHECK(knot_count(0.01, 10) == 1);
    CHECK(knot_count(1.0, 10) == 10);
    Rng rng(6);
    for (int i = 0; i < 500; ++i) {
        const std::size_t n = 1 + rng.uniform_index(500);
        const double r = 0.001 + 0.999 * rng.uniform();
        const std::size_t k = knot_count(r, n);
        CHECK(k >= 1);
        CHECK(static_cast<double>(k) >= r * static_cast<double>(n) - 1e-9);
        CHECK(static_cast<double>(k) < r * static_cast<double>(n) + 1.0);
    }
}

TEST_CASE("property: output lengths and determinism over random configs") {
    Rng rng(7);
    const BasisKind kinds[] = {BasisKind::generic, BasisKind::polynomial, BasisKind::harmonic, BasisKind::midas};
    for (int trial = 0; trial < 60; ++trial) {
        BlockConfig c;
        c.basis = kinds[rng.uniform_index(4)];
        c.input_size = 1 + rng.uniform_index(40);
        c.horizon = 1 + rng.uniform_index(30);
        c.mlp_widths = std::vector<std::size_t>(1 + rng.uniform_index(2), 1 + rng.uniform_index(8));
        c.expressivity_ratio = 0.05 + 0.95 * rng.uniform();
        const std::size_t kernel = 1 + rng.uniform_index(c.input_size);
        c.pooling = {kernel, 1 + rng.uniform_index(kernel), static_cast<PoolMode>(rng.uniform_index(3))};
        c.poly_degree = rng.uniform_index(4);
        c.n_harmonics = 1 + rng.uniform_index(3);

        const ParameterStore p = init_block(c, trial);
        const auto x = random_vector(rng, c.input_size);
        const auto out = block_forward(c, p, x);
        CHECK(out.forecast.size() == c.horizon);
        CHECK(out.backcast.size() == c.input_size);
        if (c.basis == BasisKind::midas) {
            CHECK(out.theta_f.size() ==
                  static_cast<std::size_t>(std::ceil(c.expressivity_ratio * c.horizon - 1e-9)));
        }
        const auto again = block_forward(c, p, x);
        CHECK(again.forecast == out.forecast);
        CHECK(again.backcast == out.backcast);
    }
}

TEST_CASE("full midas block passes a gradient check") {
    BlockConfig c = small_block(BasisKind::midas, 12, 8);
    c.expressivity_ratio = 0.5;
    c.pooling = {2, 2, PoolMode::avg};
    const ParameterStore base = init_block(c, 21);
    Rng rng(22);
    const Matrix x = dmidas::testing::random_matrix(rng, 3, 12);
    const Matrix y = dmidas::testing::random_matrix(rng, 3, 8);

    // Every parameter tensor and the input are checked jointly.
    std::vector<Matrix> points{x};
    for (const auto& e : base.entries()) points.push_back(e.value);
    auto f = [&](Tape& t, std::span<const Var> in) {
        // The block rebuilt with leaves standing in for the store's tensors (fc0, fc1, theta_f, theta_b).
        Var h = pool1d(t, in[0], c.pooling);
        std::size_t k = 1;
        for (std::size_t i = 0; i < c.mlp_widths.size(); ++i, k += 2) h = relu(t, affine(t, h, in[k], in[k + 1]));
        const Var tf = affine(t, h, in[k], in[k + 1]);
        const Var tb = affine(t, h, in[k + 2], in[k + 3]);
        const Var fc = interp_upsample(t, tf, c.horizon);
        const Var bc = interp_upsample(t, tb, c.input_size);
        return add(t, loss(t, t.constant(y), fc, LossKind::mse), loss(t, t.constant(x), bc, LossKind::mse));
    };
    const auto report = grad_check(f, points, 1e-6, 1e-4);
    CHECK(report.passed);
    MESSAGE("max relative error " << report.max_relative_error);
}

TEST_CASE("block_forward through the parameter store matches the leaf rebuild") {
    BlockConfig c = small_block(BasisKind::midas, 12, 8);
    c.expressivity_ratio = 0.5;
    c.pooling = {3, 3, PoolMode::max};
    ParameterStore p = init_block(c, 31);
    Rng rng(32);
    const Matrix x = dmidas::testing::random_matrix(rng, 2, 12);
    Tape t;
    const BlockVars v = block_forward(t, c, p, "block", t.constant(x));
    t.backward(sum(t, v.forecast));
    t.accumulate_gradients(p);
    // d sum(forecast) / d theta_f.bias = column sums of the interpolation weights, times batch size.
    const auto plan = interp_plan(forecast_coefficients(c), c.horizon);
    std::vector<double> expected(forecast_coefficients(c), 0.0);
    for (const auto& s : plan) {
        expected[s.anchor] += 2.0;
        expected[s.plus] += 2.0 * s.weight;
        expected[s.minus] -= 2.0 * s.weight;
    }
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(p.grad("block.theta_f.bias")(0, i) == doctest::Approx(expected[i]).epsilon(1e-12));
    }
}

TEST_CASE("block configuration errors") {
    BlockConfig c = small_block(BasisKind::midas);
    c.expressivity_ratio = 0.0;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.expressivity_ratio = 1.5;
    CHECK_THROWS_AS(validate(c), ConfigError);
    c.expressivity_ratio = 0.5;
    c.pooling = {13, 1, PoolMode::avg};
    CHECK_THROWS_AS(validate(c), ConfigError);
    BlockConfig no_layers = small_block(BasisKind::generic);
    no_layers.mlp_widths.clear();
    CHECK_THROWS_AS(validate(no_layers), ConfigError);

    ParameterStore empty;
    CHECK_THROWS_AS(block_forward(small_block(BasisKind::generic), empty, std::vector<double>(12, 0.0)),
                    ConfigError);
}
