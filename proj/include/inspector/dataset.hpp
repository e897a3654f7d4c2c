#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace inspector {

inline constexpr int kMinScore = 1;
inline constexpr int kMaxScore = 5;
inline constexpr int kDefaultTau = 4;

// Judge scores per (sample id, aspect). Scores are integers in [1, 5].
class LabelTable {
public:
    void set(const std::string& id, const std::string& aspect, int score);
    std::optional<int> get(const std::string& id, const std::string& aspect) const;

    std::vector<std::string> aspects() const;
    std::size_t size() const { return entries_.size(); }
    const std::map<std::pair<std::string, std::string>, int>& entries() const { return entries_; }

private:
    std::map<std::pair<std::string, std::string>, int> entries_;
};

// JSON-lines, one {"id", "aspect", "score"} record per line.
LabelTable read_labels_jsonl(const std::string& path);
void write_labels_jsonl(const LabelTable& table, const std::string& path);

std::vector<int> binarize_labels(std::span<const int> scores, int tau = kDefaultTau);

// Keeps exactly n = min level count samples per score level, chosen uniformly
// without replacement. Output preserves the input order of `ids`.
std::vector<std::string> balanced_downsample(std::span<const std::string> ids,
                                             std::span<const int> scores, std::uint64_t seed);

struct SplitIndex {
    std::vector<std::string> train_ids;
    std::vector<std::string> test_ids;
    std::uint64_t seed = 0;

    nlohmann::json to_json() const;
};

// Stratified by label; per-class test counts come from largest-remainder
// allocation of round(N * (1 - ratio)).
SplitIndex split_train_test(std::span<const std::string> ids, std::span<const int> labels,
                            double ratio, std::uint64_t seed);

struct FoldAssignment {
    int k = 0;
    std::vector<int> fold_of;  // aligned with the label vector it was built from

    std::vector<int> train_rows(int fold) const;
    std::vector<int> test_rows(int fold) const;
    nlohmann::json to_json(std::span<const std::string> ids) const;
};

FoldAssignment stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed,
                                bool shrink = false);

// Class count table, ascending by class id.
std::map<int, int> class_counts(std::span<const int> labels);

}  // namespace inspector
