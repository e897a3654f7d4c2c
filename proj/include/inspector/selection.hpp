#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "inspector/classifiers.hpp"
#include "inspector/dumpio.hpp"
#include "inspector/features.hpp"
#include "inspector/probes.hpp"

namespace inspector {

inline constexpr int kDefaultTopK = 5;
inline constexpr double kImprovementThreshold = 1e-12;

using LayerSet = std::vector<int>;

std::string layers_to_string(const LayerSet& layers);  // "5|2|7"

// First K distinct layers walking the ranking from the top.
LayerSet topk_unique_layers(const ProbeRanking& ranking, int k);

// Per sample: [r(l1); ...; r(lS)] for pool p, then (mu, sigma, max) per layer
// in the same order when attention summaries are included.
FeatureMatrix concat_multilayer(const Dump& dump, std::span<const int> rows, const LayerSet& layers, PoolMode pool,
                                bool include_attention);
FeatureMatrix concat_multilayer(const Dump& dump, const LayerSet& layers, PoolMode pool, bool include_attention);

struct GreedyStep {
    LayerSet layers;  // the set that was evaluated
    double score = 0;
    bool accepted = false;
};

struct GreedyResult {
    LayerSet layers;
    double score = 0;
    std::vector<GreedyStep> trace;
};

// Starts from the first layer and keeps each next layer only when the score
// rises by more than kImprovementThreshold.
GreedyResult greedy_layer_selection(std::span<const int> layers, const std::function<double(const LayerSet&)>& eval);

struct CandidateResult {
    LayerSet layers;
    PoolMode pool = PoolMode::mean;
    Family family = Family::LR;
    ClassifierSpec spec;
    double mean = 0;  // cross-validated accuracy of the grid winner for the target
    double std = 0;
    double macro_f1_mean = 0;
    bool include_attention = true;
    bool selected = false;
};

// True when `a` should be preferred over `b`: mean desc, std asc, fewer
// layers, lexicographically smaller layer set, family order.
bool candidate_better(const CandidateResult& a, const CandidateResult& b);

std::size_t pick_candidate(std::span<const CandidateResult> candidates);

void write_candidate_csv(std::span<const CandidateResult> candidates, const std::string& path);

struct SelectionOptions {
    int top_k = kDefaultTopK;
    Target target = Target::bin;
    std::vector<PoolMode> pools{kAllPools.begin(), kAllPools.end()};
    std::vector<Family> families{std::begin(kAllFamilies), std::end(kAllFamilies)};
    bool include_attention = true;
    std::optional<int> pca_dim;  // off by default for multi-layer features
    std::uint64_t seed = 42;
    Execution exec = Execution::parallel;
};

struct SelectionResult {
    std::vector<CandidateResult> candidates;
    std::size_t selected = 0;
    std::vector<GreedyResult> growth;  // one per pool, in options.pools order
    PipelineModel pipeline;
    TrainedClassifier classifier;

    const CandidateResult& best() const { return candidates.at(selected); }
};

SelectionResult select_final(const Dump& dump, const ProbeTask& task, const ProbeRanking& ranking,
                             const SelectionOptions& options);

}  // namespace inspector
