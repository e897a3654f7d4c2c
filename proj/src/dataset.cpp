#include "inspector/dataset.hpp"

#include "inspector/error.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

using nlohmann::json;

namespace inspector {

void LabelTable::set(const std::string& id, const std::string& aspect, int score) {
    if (score < kMinScore || score > kMaxScore)
        throw Error(ErrorKind::invalid_argument,
                    "score " + std::to_string(score) + " for '" + id + "' outside [1, 5]");
    entries_[{id, aspect}] = score;
}

std::optional<int> LabelTable::get(const std::string& id, const std::string& aspect) const {
    auto it = entries_.find({id, aspect});
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> LabelTable::aspects() const {
    std::set<std::string> names;
    for (const auto& [key, _] : entries_) names.insert(key.second);
    return {names.begin(), names.end()};
}

LabelTable read_labels_jsonl(const std::string& path) {
    if (!std::filesystem::exists(path)) throw Error(ErrorKind::labels_not_found, "label file not found: " + path);
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::labels_not_found, "cannot open label file " + path);
    LabelTable table;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            table.set(j.at("id").get<std::string>(), j.at("aspect").get<std::string>(), j.at("score").get<int>());
        } catch (const json::exception& e) {
            throw Error(ErrorKind::format, path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return table;
}

void write_labels_jsonl(const LabelTable& table, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path);
    for (const auto& [key, score] : table.entries())
        out << json{{"id", key.first}, {"aspect", key.second}, {"score", score}}.dump() << '\n';
}

std::vector<int> binarize_labels(std::span<const int> scores, int tau) {
    if (tau < 2 || tau > kMaxScore) throw Error(ErrorKind::invalid_argument, "tau must lie in [2, 5]");
    std::vector<int> out;
    out.reserve(scores.size());
    for (int s : scores) {
        if (s < kMinScore || s > kMaxScore)
            throw Error(ErrorKind::invalid_argument, "score " + std::to_string(s) + " outside [1, 5]");
        out.push_back(s >= tau ? 1 : 0);
    }
    return out;
}

std::map<int, int> class_counts(std::span<const int> labels) {
    std::map<int, int> counts;
    for (int y : labels) ++counts[y];
    return counts;
}

std::vector<std::string> balanced_downsample(std::span<const std::string> ids, std::span<const int> scores,
                                             std::uint64_t seed) {
    if (ids.size() != scores.size()) throw Error(ErrorKind::dimension_mismatch, "ids and scores differ in length");
    std::vector<std::vector<std::size_t>> members(kMaxScore + 1);
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] < kMinScore || scores[i] > kMaxScore)
            throw Error(ErrorKind::invalid_argument, "score " + std::to_string(scores[i]) + " outside [1, 5]");
        members[scores[i]].push_back(i);
    }
    std::size_t n = ids.size();
    for (int level = kMinScore; level <= kMaxScore; ++level) {
        if (members[level].empty())
            throw Error(ErrorKind::degenerate_labels,
                        "score level " + std::to_string(level) + " has no samples; cannot balance");
        n = std::min(n, members[level].size());
    }

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> keep;
    for (int level = kMinScore; level <= kMaxScore; ++level) {
        auto& pool = members[level];
        if (pool.size() > n) std::shuffle(pool.begin(), pool.end(), rng);
        keep.insert(keep.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n));
    }
    std::sort(keep.begin(), keep.end());
    std::vector<std::string> out;
    out.reserve(keep.size());
    for (auto i : keep) out.push_back(ids[i]);
    return out;
}

json SplitIndex::to_json() const {
    return json{{"seed", seed}, {"train_ids", train_ids}, {"test_ids", test_ids}};
}

SplitIndex split_train_test(std::span<const std::string> ids, std::span<const int> labels, double ratio,
                            std::uint64_t seed) {
    if (!(ratio > 0 && ratio < 1)) throw Error(ErrorKind::invalid_argument, "split ratio must lie in (0, 1)");
    if (ids.size() != labels.size()) throw Error(ErrorKind::dimension_mismatch, "ids and labels differ in length");

    const auto counts = class_counts(labels);
    for (const auto& [cls, count] : counts)
        if (count < 2)
            throw Error(ErrorKind::degenerate_labels,
                        "class " + std::to_string(cls) + " has " + std::to_string(count) + " sample(s); need >= 2");

    // Largest-remainder allocation of the global test size across classes.
    const double test_share = 1.0 - ratio;
    const int total_test = static_cast<int>(std::lround(static_cast<double>(ids.size()) * test_share));
    struct Quota {
        int cls;
        int count;
        double remainder;
    };
    std::vector<Quota> quotas;
    int allocated = 0;
    for (const auto& [cls, count] : counts) {
        const double exact = count * test_share;
        const int base = static_cast<int>(std::floor(exact + 1e-9));
        quotas.push_back({cls, base, exact - base});
        allocated += base;
    }
    std::vector<std::size_t> order(quotas.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return quotas[a].remainder > quotas[b].remainder + 1e-12;
    });
    for (std::size_t k = 0; allocated < total_test && k < order.size(); ++k, ++allocated) ++quotas[order[k]].count;

    std::mt19937_64 rng(seed);
    std::vector<bool> is_test(ids.size(), false);
    for (const auto& q : quotas) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == q.cls) rows.push_back(i);
        std::shuffle(rows.begin(), rows.end(), rng);
        for (int k = 0; k < q.count; ++k) is_test[rows[k]] = true;
    }

    SplitIndex split;
    split.seed = seed;
    for (std::size_t i = 0; i < ids.size(); ++i) (is_test[i] ? split.test_ids : split.train_ids).push_back(ids[i]);
    return split;
}

std::vector<int> FoldAssignment::train_rows(int fold) const {
    std::vector<int> rows;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] != fold) rows.push_back(static_cast<int>(i));
    return rows;
}

std::vector<int> FoldAssignment::test_rows(int fold) const {
    std::vector<int> rows;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
        if (fold_of[i] == fold) rows.push_back(static_cast<int>(i));
    return rows;
}

json FoldAssignment::to_json(std::span<const std::string> ids) const {
    json folds = json::object();
    for (std::size_t i = 0; i < fold_of.size() && i < ids.size(); ++i) folds[ids[i]] = fold_of[i];
    return json{{"k", k}, {"fold_of", folds}};
}

FoldAssignment stratified_kfold(std::span<const int> labels, int k, std::uint64_t seed, bool shrink) {
    if (k < 2) throw Error(ErrorKind::invalid_argument, "fold count must be >= 2");
    const auto counts = class_counts(labels);
    if (counts.empty()) throw Error(ErrorKind::invalid_argument, "no labels to fold");
    int smallest = labels.size();
    for (const auto& [cls, count] : counts) {
        if (count < 2)
            throw Error(ErrorKind::degenerate_labels,
                        "class " + std::to_string(cls) + " has " + std::to_string(count) + " sample(s); need >= 2");
        smallest = std::min(smallest, count);
    }
    if (smallest < k) {
        if (!shrink)
            throw Error(ErrorKind::degenerate_labels, "smallest class has " + std::to_string(smallest) +
                                                          " samples, fewer than " + std::to_string(k) + " folds");
        k = smallest;
    }

    FoldAssignment folds;
    folds.k = k;
    folds.fold_of.assign(labels.size(), -1);
    std::mt19937_64 rng(seed);
    // Round-robin continues across classes so total fold sizes also stay even.
    int next = 0;
    for (const auto& [cls, count] : counts) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == cls) rows.push_back(i);
        std::shuffle(rows.begin(), rows.end(), rng);
        for (auto r : rows) {
            folds.fold_of[r] = next;
            next = (next + 1) % k;
        }
    }
    return folds;
}

}  // namespace inspector
