#include <doctest.h>

#include "inspector/error.hpp"
#include "inspector/probes.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <set>

using namespace inspector;
using inspector::testing::iota_rows;
using inspector::testing::TempDir;

namespace {

SyntheticData small_synth(std::uint64_t seed, double scale = 1.0) {
    SynthSpec spec;
    spec.num_layers = 4;
    spec.hidden_dim = 8;
    spec.num_heads = 2;
    spec.num_samples = 120;
    spec.signal_layer = 3;
    spec.signal_scale = scale;
    spec.seed = seed;
    return generate_synthetic_dump(spec);
}

SweepOptions fast_sweep() {
    SweepOptions o;
    o.variants = {FeatureOptions{true, 4, true, true}};
    return o;
}

}  // namespace

TEST_CASE("cross-validation on the planted layer") {
    const auto data = small_synth(1);
    const auto task = make_probe_task(iota_rows(120), data.scores, 4, 5, 1);
    const auto cv = cross_validate(ProbeConfig{3, PoolMode::mean, FeatureOptions{}}, data.dump, task, Target::bin);
    CHECK(cv.accuracy.mean >= 0.95);
    CHECK(cv.fold_accuracy.size() == 5);
    CHECK(cv.accuracy.std >= 0);
}

TEST_CASE("sweep cardinality, ordering and determinism") {
    const auto data = small_synth(2);
    const auto task = make_probe_task(iota_rows(120), data.scores, 4, 5, 2);
    const auto ranking = sweep_and_rank(data.dump, task, fast_sweep());
    CHECK(ranking.entries.size() == 4 * 5);
    CHECK(ranking.entries.front().config.layer == 3);
    for (std::size_t i = 1; i < ranking.entries.size(); ++i) {
        const auto& a = ranking.entries[i - 1].perf;
        const auto& b = ranking.entries[i].perf;
        CHECK((a.a_bin_mean > b.a_bin_mean || (a.a_bin_mean == b.a_bin_mean && a.a_bin_std <= b.a_bin_std)));
    }
    std::set<std::string> keys;
    for (const auto& e : ranking.entries) keys.insert(e.config.key());
    CHECK(keys.size() == 20);

    auto serial = fast_sweep();
    serial.exec = Execution::serial;
    const auto again = sweep_and_rank(data.dump, task, serial);
    REQUIRE(again.entries.size() == ranking.entries.size());
    for (std::size_t i = 0; i < again.entries.size(); ++i) {
        CHECK(again.entries[i].config.key() == ranking.entries[i].config.key());
        CHECK(again.entries[i].perf.a_bin_mean == ranking.entries[i].perf.a_bin_mean);
        CHECK(again.entries[i].perf.a_multi_std == ranking.entries[i].perf.a_multi_std);
    }
}

TEST_CASE("ranking tie rule: mean, then std, then layer") {
    ProbeRanking r;
    auto entry = [](int layer, double mean, double std) {
        RankedEntry e;
        e.config.layer = layer;
        e.perf.a_bin_mean = mean;
        e.perf.a_bin_std = std;
        e.perf.a_multi_mean = 1 - mean;
        return e;
    };
    r.entries = {entry(4, 0.8, 0.05), entry(2, 0.8, 0.01), entry(1, 0.8, 0.05), entry(6, 0.9, 0.2)};
    r.sort_by(Target::bin);
    std::vector<int> order;
    for (const auto& e : r.entries) order.push_back(e.config.layer);
    CHECK(order == std::vector<int>{6, 2, 1, 4});
    r.sort_by(Target::multi);
    order.clear();
    for (const auto& e : r.entries) order.push_back(e.config.layer);
    CHECK(order == std::vector<int>{1, 2, 4, 6});
}

TEST_CASE("gamma multi ranks by the multiclass mean") {
    const auto data = small_synth(3);
    const auto task = make_probe_task(iota_rows(120), data.scores, 4, 5, 3);
    auto o = fast_sweep();
    o.criterion = Target::multi;
    const auto r = sweep_and_rank(data.dump, task, o);
    CHECK(r.criterion == Target::multi);
    for (std::size_t i = 1; i < r.entries.size(); ++i)
        CHECK(r.entries[i - 1].perf.a_multi_mean >= r.entries[i].perf.a_multi_mean);
}

TEST_CASE("progression, CSV and JSON round trip") {
    const auto data = small_synth(4);
    const auto task = make_probe_task(iota_rows(120), data.scores, 4, 5, 4);
    const auto r = sweep_and_rank(data.dump, task, fast_sweep());
    const auto prog = r.progression();
    REQUIRE(prog.size() == 4);
    for (int l = 0; l < 4; ++l) CHECK(prog[l].layer == l + 1);
    CHECK(prog[2].best_mean == r.entries.front().perf.a_bin_mean);

    const auto back = ProbeRanking::from_json(r.to_json());
    CHECK(back.to_json() == r.to_json());
    CHECK(r.majority_bin > 0);

    TempDir dir;
    r.write_csv(dir / "r.csv");
    r.write_progression_csv(dir / "p.csv");
    CHECK(std::filesystem::file_size(dir / "r.csv") > 0);
}

TEST_CASE("every sample is scored once across folds") {
    std::vector<int> y(33);
    for (int i = 0; i < 33; ++i) y[i] = i % 3 == 0;
    const auto folds = stratified_kfold(y, 5, 8, true);
    std::vector<int> seen(33, 0);
    for (int f = 0; f < folds.k; ++f)
        for (int r : folds.test_rows(f)) ++seen[r];
    CHECK(std::count(seen.begin(), seen.end(), 1) == 33);
}

TEST_CASE("noise-only dump stays near chance") {
    double total = 0;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const auto data = small_synth(seed, 0.0);
        const auto task = make_probe_task(iota_rows(120), data.scores, 4, 5, seed);
        total += cross_validate(ProbeConfig{3, PoolMode::mean, FeatureOptions{true, 4, true, true}}, data.dump, task,
                                Target::bin)
                     .accuracy.mean;
    }
    CHECK(total / 4 > 0.3);
    CHECK(total / 4 < 0.7);
}

TEST_CASE("single-class training fold is an error") {
    const auto data = small_synth(5);
    auto task = make_probe_task(iota_rows(120), data.scores, 4, 5, 5);
    std::fill(task.y_bin.begin(), task.y_bin.end(), 1);
    task.y_bin[0] = 0;
    CHECK_THROWS_AS(cross_validate(ProbeConfig{1, PoolMode::mean, FeatureOptions{}}, data.dump, task, Target::bin),
                    Error);
}

TEST_CASE("mean_std is the population convention") {
    const auto ms = mean_std(std::vector<double>{1, 2, 3, 4});
    CHECK(ms.mean == 2.5);
    CHECK(ms.std == doctest::Approx(std::sqrt(1.25)));
}
