#include "doctest.h"

#include "dmidas/errors.hpp"
#include "dmidas/hypersearch.hpp"
#include "support.hpp"

#include <json.hpp>

#include <cmath>
#include <map>
#include <set>

using namespace dmidas;
using dmidas::testing::read_file;
using dmidas::testing::scratch_dir;

TEST_CASE("single choice always yields its value") {
    SearchSpace s{{SearchDimension::choice("kind", {std::string("a")})}};
    dmidas::Rng rng(1);
    for (int i = 0; i < 50; ++i) CHECK(std::get<std::string>(lookup(sample_config(s, rng), "kind")) == "a");
}

TEST_CASE("int_range covers its bounds") {
    SearchSpace s{{SearchDimension::int_range("n", 1, 4)}};
    dmidas::Rng rng(7);
    std::map<std::int64_t, int> counts;
    for (int i = 0; i < 10000; ++i) ++counts[std::get<std::int64_t>(lookup(sample_config(s, rng), "n"))];
    REQUIRE(counts.size() == 4);
    for (std::int64_t v = 1; v <= 4; ++v) CHECK(counts[v] > 2300);
}

TEST_CASE("loguniform draws stay in range and are uniform in log space") {
    SearchSpace s{{SearchDimension::loguniform("lr", 1e-4, 1e-2)}};
    dmidas::Rng rng(3);
    int low_decade = 0;
    for (int i = 0; i < 10000; ++i) {
        const double v = std::get<double>(lookup(sample_config(s, rng), "lr"));
        CHECK(v >= 1e-4);
        CHECK(v <= 1e-2);
        if (v < 1e-3) ++low_decade;
    }
    CHECK(std::abs(low_decade - 5000) < 250);
}

TEST_CASE("loguniform with zero option draws zero about half the time") {
    SearchSpace s{{SearchDimension::loguniform("l1", 1e-6, 1e-2, true)}};
    dmidas::Rng rng(4);
    int zeros = 0;
    for (int i = 0; i < 10000; ++i) zeros += std::get<double>(lookup(sample_config(s, rng), "l1")) == 0.0 ? 1 : 0;
    CHECK(std::abs(zeros - 5000) < 250);
}

TEST_CASE("sampling is deterministic under a seed") {
    const SearchSpace s = default_search_space();
    dmidas::Rng a(11), b(11);
    for (int i = 0; i < 20; ++i) CHECK(sample_config(s, a) == sample_config(s, b));
}

TEST_CASE("space validation") {
    CHECK_THROWS_AS(validate(SearchSpace{{SearchDimension::choice("x", {})}}), ConfigError);
    CHECK_THROWS_AS(validate(SearchSpace{{SearchDimension::loguniform("x", 1.0, 1.0)}}), ConfigError);
    CHECK_THROWS_AS(validate(SearchSpace{{SearchDimension::loguniform("x", 0.0, 1.0)}}), ConfigError);
    CHECK_THROWS_AS(validate(SearchSpace{{SearchDimension::int_range("x", 3, 3)}}), ConfigError);
    CHECK_THROWS_AS(validate(SearchSpace{{SearchDimension::int_range("x", 1, 3), SearchDimension::int_range("x", 1, 3)}}),
                    ConfigError);
    CHECK_NOTHROW(validate(default_search_space()));
}

TEST_CASE("budget 1 returns the only trial; budget 0 is rejected") {
    const SearchSpace s = default_search_space();
    const Objective f = [](const Assignment&, std::uint64_t) { return 1.0; };
    const auto r = random_search(s, 1, f, 5);
    REQUIRE(r.trials.size() == 1);
    CHECK(r.best.index == 0);
    CHECK_THROWS_AS(random_search(s, 0, f, 5), ConfigError);
}

TEST_CASE("convex objective in log lr finds the minimizer's decade") {
    SearchSpace s{{SearchDimension::loguniform("lr", 1e-5, 1e-1)}};
    const Objective f = [](const Assignment& a, std::uint64_t) {
        const double x = std::log10(std::get<double>(lookup(a, "lr"))) + 3.0;
        return x * x;
    };
    const auto r = random_search(s, 50, f, 21);
    const double best = std::get<double>(lookup(r.best.config, "lr"));
    CHECK(best >= 1e-3 / std::sqrt(10.0));
    CHECK(best <= 1e-3 * std::sqrt(10.0));
}

TEST_CASE("best is the brute-force minimum with earliest tie, failures continue") {
    SearchSpace s{{SearchDimension::int_range("n", 0, 5)}};
    const Objective f = [](const Assignment& a, std::uint64_t) -> double {
        const auto n = std::get<std::int64_t>(lookup(a, "n"));
        if (n == 0) throw std::runtime_error("diverged");
        if (n == 5) return std::nan("");
        return static_cast<double>(n % 2);
    };
    const auto r = random_search(s, 40, f, 9, 3);
    CHECK(r.trials.size() == 40);
    std::size_t failed = 0;
    const Trial* brute = nullptr;
    for (const auto& t : r.trials) {
        if (!t.completed) {
            ++failed;
            continue;
        }
        if (brute == nullptr || t.validation_mae < brute->validation_mae) brute = &t;
    }
    CHECK(failed > 0);
    REQUIRE(brute != nullptr);
    CHECK(r.best.index == brute->index);
    CHECK(r.best.validation_mae == 0.0);

    const auto serial = random_search(s, 40, f, 9, 1);
    for (std::size_t i = 0; i < 40; ++i) {
        CHECK(serial.trials[i].config == r.trials[i].config);
        CHECK(serial.trials[i].completed == r.trials[i].completed);
        CHECK(serial.trials[i].seed == r.trials[i].seed);
    }
}

TEST_CASE("all-failed search is an error") {
    const Objective f = [](const Assignment&, std::uint64_t) -> double { throw std::runtime_error("no"); };
    CHECK_THROWS_AS(random_search(default_search_space(), 3, f, 1), TrainingError);
}

TEST_CASE("trial log has one JSON object per line") {
    const Objective f = [](const Assignment& a, std::uint64_t) {
        return std::get<double>(lookup(a, "lr"));
    };
    const auto r = random_search(default_search_space(), 3, f, 2);
    const auto dir = scratch_dir("trials");
    write_trial_log(r.trials, dir / "t.jsonl");
    const std::string text = read_file(dir / "t.jsonl");
    std::size_t lines = 0, start = 0;
    for (std::size_t pos; (pos = text.find('\n', start)) != std::string::npos; start = pos + 1) {
        const auto j = nlohmann::json::parse(text.substr(start, pos - start));
        CHECK(j.contains("config"));
        CHECK(j.contains("validation_mae"));
        CHECK(j.contains("seed"));
        CHECK(j.contains("wall_seconds"));
        CHECK(j["status"] == "completed");
        CHECK(j["config"].size() == 5);
        ++lines;
    }
    CHECK(lines == 3);
}

TEST_CASE("assignments map onto model and training settings") {
    ModelPreset p;
    TrainConfig t;
    apply_assignment(default_space_midpoint(), p, t);
    CHECK(t.lr == 1e-3);
    CHECK(t.l1_lambda == 1e-4);
    CHECK(p.base_ratio == 0.5);
    CHECK(p.mlp_width == 256);
    CHECK(p.blocks_per_stack == 2);
    CHECK_THROWS_AS(apply_assignment({{"dropout", 0.1}}, p, t), ConfigError);
    CHECK_THROWS_AS(apply_assignment({{"mlp_width", 0.5}}, p, t), ConfigError);
}
