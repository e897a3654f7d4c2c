#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "inspector/dataset.hpp"
#include "inspector/dumpio.hpp"
#include "inspector/features.hpp"
#include "inspector/logistic.hpp"
#include "inspector/parallel.hpp"

namespace inspector {

enum class Target { bin, multi };

const char* to_string(Target target);
Target parse_target(std::string_view text);

struct ProbeConfig {
    int layer = 1;
    PoolMode pool = PoolMode::mean;
    FeatureOptions opts;

    std::string key() const;  // "layer=5;pool=mean;opts=pca50+stats+attn"
};

struct MeanStd {
    double mean = 0;
    double std = 0;  // population, across folds
};

MeanStd mean_std(std::span<const double> values);

struct CvResult {
    MeanStd accuracy;
    MeanStd macro_f1;
    MeanStd weighted_f1;
    std::vector<double> fold_accuracy;
};

struct PerfTuple {
    double a_bin_mean = 0;
    double a_bin_std = 0;
    double a_multi_mean = 0;
    double a_multi_std = 0;

    double mean(Target t) const { return t == Target::bin ? a_bin_mean : a_multi_mean; }
    double std(Target t) const { return t == Target::bin ? a_bin_std : a_multi_std; }
};

// The sample subset and labels a probe run operates on. `rows` index into the
// dump; labels and folds are aligned with `rows`.
struct ProbeTask {
    std::vector<int> rows;
    std::vector<int> y_bin;
    std::vector<int> y_multi;
    FoldAssignment folds_bin;
    FoldAssignment folds_multi;

    const std::vector<int>& labels(Target t) const { return t == Target::bin ? y_bin : y_multi; }
    const FoldAssignment& folds(Target t) const { return t == Target::bin ? folds_bin : folds_multi; }
};

// Builds stratified folds for both targets from 1..5 scores.
ProbeTask make_probe_task(std::vector<int> rows, std::span<const int> scores, int tau, int k, std::uint64_t seed);

// Fixed probe hyperparameters used at the sweep stage.
inline LogisticOptions sweep_probe_options() { return LogisticOptions{1.0, false, 1e-6, 1000}; }

// Per fold: fit the pooled-block reducer and the column scaler on the training
// rows only, fit the probe, and score the held-out rows.
CvResult cross_validate(const LayerFeatures& features, std::span<const int> labels, const FoldAssignment& folds,
                        const FeatureOptions& opts, const LogisticOptions& probe = sweep_probe_options());

CvResult cross_validate(const ProbeConfig& config, const Dump& dump, const ProbeTask& task, Target target);

struct RankedEntry {
    ProbeConfig config;
    PerfTuple perf;
    double bin_weighted_f1 = 0;
    double multi_weighted_f1 = 0;
};

struct LayerProgression {
    int layer = 0;
    PoolMode best_pool = PoolMode::mean;
    std::string best_opts;
    double best_mean = 0;
    double best_std = 0;
};

struct ProbeRanking {
    Target criterion = Target::bin;
    std::vector<RankedEntry> entries;
    double majority_bin = 0;
    double majority_multi = 0;

    // Best criterion score per layer, ascending layer order.
    std::vector<LayerProgression> progression() const;
    // Reorders entries by `criterion`: mean desc, std asc, layer asc, then evaluation order.
    void sort_by(Target criterion);

    nlohmann::json to_json() const;
    static ProbeRanking from_json(const nlohmann::json& j);
    void write_csv(const std::string& path) const;
    void write_progression_csv(const std::string& path) const;
};

struct SweepOptions {
    std::vector<PoolMode> pools{kAllPools.begin(), kAllPools.end()};
    std::vector<FeatureOptions> variants{FeatureOptions{}};
    Target criterion = Target::bin;
    bool evaluate_multi = true;
    Execution exec = Execution::parallel;
};

// Evaluates every layer x pool x variant and returns the full ranking.
ProbeRanking sweep_and_rank(const Dump& dump, const ProbeTask& task, const SweepOptions& options);

}  // namespace inspector
