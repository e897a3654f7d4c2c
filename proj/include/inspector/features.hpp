#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "inspector/dumpio.hpp"
#include "inspector/parallel.hpp"
#include "inspector/pool.hpp"
#include "inspector/preprocess.hpp"

namespace inspector {

inline constexpr double kEntropyEpsilon = 1e-10;
inline constexpr int kDefaultPcaDim = 50;

struct FeatureOptions {
    bool use_pca = true;
    int pca_dim = kDefaultPcaDim;
    bool include_stats = true;
    bool include_attention = true;

    std::string key() const;  // e.g. "pca50+stats+attn"
    bool operator==(const FeatureOptions&) const = default;
};

FeatureOptions parse_feature_options(const std::string& key);

struct FeatureMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> column_labels;

    int rows() const { return static_cast<int>(values.rows()); }
    int cols() const { return static_cast<int>(values.cols()); }
    void write_csv(const std::string& path) const;
};

Eigen::VectorXd pool_hidden(const Eigen::MatrixXd& hidden, PoolMode mode, int last_index);

// Mean over query rows of the Shannon entropy (nats) of each attention row.
double attention_entropy(const Eigen::MatrixXd& attention, double epsilon = kEntropyEpsilon);

struct HeadSummary {
    double mean = 0;
    double std = 0;  // population
    double max = 0;
};
HeadSummary attention_summary(std::span<const double> entropies);

struct PooledStats {
    double norm = 0;
    double var = 0;      // population
    double entropy = 0;  // of softmax(r), nats
};
PooledStats pooled_stats(std::span<const double> r);

std::vector<double> pooled_vector(const SampleRepresentation& sample, int layer, PoolMode mode);

// Per-row ingredients of one (layer, pool) configuration, computed once and
// reused across folds.
struct LayerFeatures {
    Eigen::MatrixXd pooled;     // N x d_p
    Eigen::MatrixXd stats;      // N x 3: norm, var, entropy of the raw pooled vector
    Eigen::MatrixXd attention;  // N x 3: mu, sigma, max over heads
    PoolMode pool = PoolMode::mean;
};

LayerFeatures compute_layer_features(const Dump& dump, std::span<const int> rows, int layer, PoolMode mode,
                                     Execution exec = Execution::serial);

// Columns: [pca:* from the fitted reducer, or pool:* raw | stat:* | attn:*].
// The reducer must already be fitted (on training rows); it is never fitted here.
FeatureMatrix assemble_rows(const LayerFeatures& features, std::span<const int> rows, const FeatureOptions& opts,
                            const PipelineModel* reducer);

FeatureMatrix assemble_features(const Dump& dump, int layer, PoolMode mode, const FeatureOptions& opts,
                                const PipelineModel* reducer = nullptr);

// Fits the pooled-block reducer (standardize + PCA) on the given rows,
// with pca_dim clamped to what the rows support.
PipelineModel fit_block_reducer(const LayerFeatures& features, std::span<const int> train_rows,
                                const FeatureOptions& opts);

}  // namespace inspector
