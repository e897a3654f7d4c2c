#include <doctest.h>

#include "inspector/error.hpp"
#include "inspector/metrics.hpp"
#include "oracles/oracles.hpp"

#include <random>

using namespace inspector;

TEST_CASE("hand-counted confusion matrix") {
    const auto m = compute_metrics(std::vector<int>{1, 1, 0}, std::vector<int>{1, 0, 0});
    CHECK(m.accuracy == doctest::Approx(2.0 / 3.0));
    CHECK(m.macro_f1 == doctest::Approx(2.0 / 3.0));
    CHECK(m.weighted_f1 == doctest::Approx(2.0 / 3.0));
    const auto perfect = compute_metrics(std::vector<int>{1, 2, 3}, std::vector<int>{1, 2, 3});
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.macro_f1 == 1.0);
    CHECK(perfect.weighted_f1 == 1.0);
}

TEST_CASE("class missing from predictions scores zero but counts") {
    const auto m = compute_metrics(std::vector<int>{0, 0, 1, 1}, std::vector<int>{0, 0, 0, 0});
    CHECK(m.macro_f1 == doctest::Approx(0.5 * (2.0 * (0.5 * 1.0) / 1.5)));
}

TEST_CASE("metrics agree with brute force on random vectors") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        std::uniform_int_distribution<int> len(1, 60), cls(0, 1 + trial % 5);
        std::vector<int> t(len(rng)), p(t.size());
        for (auto& v : t) v = cls(rng);
        for (auto& v : p) v = cls(rng);
        const auto mine = compute_metrics(t, p);
        const auto ref = oracle::brute_metrics(t, p);
        CHECK(std::abs(mine.accuracy - ref.accuracy) <= 1e-12);
        CHECK(std::abs(mine.macro_f1 - ref.macro_f1) <= 1e-12);
        CHECK(std::abs(mine.weighted_f1 - ref.weighted_f1) <= 1e-12);
    }
}

TEST_CASE("metric identities") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> cls(0, 2);
    std::vector<int> t, p;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < 10; ++i) t.push_back(c);
    for (std::size_t i = 0; i < t.size(); ++i) p.push_back(cls(rng));
    const auto m = compute_metrics(t, p);
    CHECK(std::abs(m.macro_f1 - m.weighted_f1) < 1e-12);
}

TEST_CASE("metric errors and majority baseline") {
    CHECK_THROWS_AS(compute_metrics(std::vector<int>{}, std::vector<int>{}), Error);
    CHECK_THROWS_AS(compute_metrics(std::vector<int>{1}, std::vector<int>{1, 2}), Error);
    CHECK(majority_baseline(std::vector<int>{1, 1, 1, 0}) == 0.75);
}
