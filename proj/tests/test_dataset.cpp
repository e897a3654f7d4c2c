#include <doctest.h>

#include "inspector/dataset.hpp"
#include "inspector/error.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <set>

using namespace inspector;
using inspector::testing::TempDir;

namespace {

// Ids and scores with the given per-level counts, interleaved by level.
void corpus(const std::vector<int>& counts, std::vector<std::string>& ids, std::vector<int>& scores) {
    ids.clear();
    scores.clear();
    for (int level = 1; level <= 5; ++level)
        for (int i = 0; i < counts[level - 1]; ++i) {
            ids.push_back("L" + std::to_string(level) + "_" + std::to_string(i));
            scores.push_back(level);
        }
}

}  // namespace

TEST_CASE("binarize at tau") {
    CHECK(binarize_labels(std::vector<int>{1, 3, 4, 5}, 4) == std::vector<int>{0, 0, 1, 1});
    CHECK(binarize_labels(std::vector<int>{5, 5}, 5) == std::vector<int>{1, 1});
    CHECK(binarize_labels(std::vector<int>{1, 2}, 2) == std::vector<int>{0, 1});
    CHECK_THROWS_AS(binarize_labels(std::vector<int>{0}, 4), Error);
    CHECK_THROWS_AS(binarize_labels(std::vector<int>{3}, 1), Error);
    CHECK_THROWS_AS(binarize_labels(std::vector<int>{3}, 6), Error);
}

TEST_CASE("binarization is monotone in the score") {
    const std::vector<int> s{1, 2, 3, 4, 5};
    for (int tau = 2; tau <= 5; ++tau) {
        const auto b = binarize_labels(s, tau);
        CHECK(std::is_sorted(b.begin(), b.end()));
    }
}

TEST_CASE("balanced downsample keeps the minimum level count") {
    std::vector<std::string> ids;
    std::vector<int> scores;
    corpus({17, 23, 70, 86, 7317}, ids, scores);
    const auto kept = balanced_downsample(ids, scores, 42);
    CHECK(kept.size() == 85);
    std::map<char, int> per_level;
    for (const auto& id : kept) ++per_level[id[1]];
    for (auto [level, n] : per_level) CHECK(n == 17);
    // Order follows the input.
    std::vector<std::size_t> pos;
    for (const auto& id : kept) pos.push_back(std::find(ids.begin(), ids.end(), id) - ids.begin());
    CHECK(std::is_sorted(pos.begin(), pos.end()));
    // Level 1 has exactly n members, so all of them survive.
    for (int i = 0; i < 17; ++i) CHECK(std::count(kept.begin(), kept.end(), "L1_" + std::to_string(i)) == 1);

    corpus({75, 180, 748, 2062, 4418}, ids, scores);
    CHECK(balanced_downsample(ids, scores, 1).size() == 375);

    corpus({5, 5, 5, 5, 5}, ids, scores);
    CHECK(balanced_downsample(ids, scores, 1) == ids);
}

TEST_CASE("balanced downsample is seeded") {
    std::vector<std::string> ids;
    std::vector<int> scores;
    corpus({10, 20, 30, 40, 50}, ids, scores);
    CHECK(balanced_downsample(ids, scores, 3) == balanced_downsample(ids, scores, 3));
    CHECK(balanced_downsample(ids, scores, 3) != balanced_downsample(ids, scores, 4));
}

TEST_CASE("balanced downsample reports an empty level") {
    std::vector<std::string> ids;
    std::vector<int> scores;
    corpus({3, 0, 3, 3, 3}, ids, scores);
    try {
        balanced_downsample(ids, scores, 1);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("2") != std::string::npos);
    }
}

TEST_CASE("stratified 80:20 split") {
    std::vector<std::string> ids;
    std::vector<int> scores;
    corpus({17, 17, 17, 17, 17}, ids, scores);
    const auto split = split_train_test(ids, scores, 0.8, 42);
    CHECK(split.train_ids.size() == 68);
    CHECK(split.test_ids.size() == 17);
    std::set<std::string> train(split.train_ids.begin(), split.train_ids.end());
    for (const auto& id : split.test_ids) CHECK(train.count(id) == 0);
    std::map<char, int> test_levels;
    for (const auto& id : split.test_ids) ++test_levels[id[1]];
    for (auto [level, n] : test_levels) CHECK((n == 3 || n == 4));

    const auto other = split_train_test(ids, scores, 0.8, 43);
    CHECK(other.test_ids.size() == 17);
    CHECK(other.test_ids != split.test_ids);

    std::vector<std::string> one(10);
    for (int i = 0; i < 10; ++i) one[i] = std::to_string(i);
    const auto s10 = split_train_test(one, std::vector<int>(10, 1), 0.8, 1);
    CHECK(s10.train_ids.size() == 8);
    CHECK(s10.test_ids.size() == 2);

    CHECK_THROWS_AS(split_train_test(one, std::vector<int>{1, 1, 1, 1, 1, 1, 1, 1, 1, 2}, 0.8, 1), Error);
    CHECK(split.to_json()["train_ids"].size() == 68);
}

TEST_CASE("largest remainder allocation hits the global total") {
    // round(13 * 0.2) = 3 over classes of 5, 4, 4: quotas 1.0, 0.8, 0.8.
    std::vector<std::string> ids;
    std::vector<int> labels;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < (c == 0 ? 5 : 4); ++i) {
            ids.push_back(std::to_string(c) + "_" + std::to_string(i));
            labels.push_back(c);
        }
    const auto split = split_train_test(ids, labels, 0.8, 9);
    CHECK(split.test_ids.size() == 3);
    std::map<char, int> per;
    for (const auto& id : split.test_ids) ++per[id[0]];
    CHECK(per['0'] == 1);
    CHECK(per['1'] == 1);
    CHECK(per['2'] == 1);
}

TEST_CASE("stratified k-fold balance") {
    std::vector<int> y(50);
    for (int i = 0; i < 50; ++i) y[i] = i % 2;
    const auto folds = stratified_kfold(y, 5, 1);
    for (int f = 0; f < 5; ++f) {
        const auto test = folds.test_rows(f);
        int ones = 0;
        for (int r : test) ones += y[r];
        CHECK(test.size() == 10);
        CHECK(ones == 5);
    }

    std::vector<int> y7(14);
    for (int i = 0; i < 14; ++i) y7[i] = i < 7 ? 0 : 1;
    const auto f7 = stratified_kfold(y7, 5, 2);
    for (int cls = 0; cls < 2; ++cls) {
        std::vector<int> sizes(5, 0);
        for (int i = 0; i < 14; ++i)
            if (y7[i] == cls) ++sizes[f7.fold_of[i]];
        std::sort(sizes.rbegin(), sizes.rend());
        CHECK(sizes == std::vector<int>{2, 2, 1, 1, 1});
    }
}

TEST_CASE("k-fold partitions every row exactly once") {
    std::vector<int> y{0, 0, 0, 1, 1, 1, 2, 2, 2, 2, 2, 0};
    const auto folds = stratified_kfold(y, 3, 5);
    std::vector<int> seen(y.size(), 0);
    for (int f = 0; f < 3; ++f) {
        for (int r : folds.test_rows(f)) ++seen[r];
        CHECK(folds.train_rows(f).size() + folds.test_rows(f).size() == y.size());
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
}

TEST_CASE("k-fold shrink and errors") {
    std::vector<int> y{0, 0, 0, 1, 1, 1, 1, 1, 1};
    CHECK(stratified_kfold(y, 5, 1, true).k == 3);
    CHECK_THROWS_AS(stratified_kfold(y, 5, 1, false), Error);
    CHECK_THROWS_AS(stratified_kfold(std::vector<int>{0, 1, 1}, 2, 1, true), Error);
}

TEST_CASE("label file round trip and errors") {
    TempDir dir;
    LabelTable t;
    t.set("a", "fluency", 5);
    t.set("a", "logicality", 2);
    t.set("b", "fluency", 1);
    write_labels_jsonl(t, dir / "labels.jsonl");
    const auto back = read_labels_jsonl(dir / "labels.jsonl");
    CHECK(back.entries() == t.entries());
    CHECK(back.aspects() == std::vector<std::string>{"fluency", "logicality"});
    CHECK_THROWS_AS(t.set("c", "fluency", 6), Error);
    try {
        read_labels_jsonl(dir / "nope.jsonl");
        FAIL("expected labels_not_found");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::labels_not_found);
    }
}
