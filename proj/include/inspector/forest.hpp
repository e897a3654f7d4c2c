#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "inspector/parallel.hpp"

namespace inspector {

struct ForestOptions {
    int n_estimators = 100;
    int max_depth = 0;  // 0: grow until pure or min_samples_leaf binds
    int min_samples_leaf = 1;
    bool balanced = true;
    std::uint64_t seed = 42;
};

// CART tree in flat arrays; leaves have feature == -1 and hold a class index.
struct DecisionTree {
    std::vector<int> feature;
    std::vector<double> threshold;
    std::vector<int> left;
    std::vector<int> right;
    std::vector<int> leaf_class;

    int predict_index(const double* row) const;
    int node_count() const { return static_cast<int>(feature.size()); }
    int depth() const;
    bool operator==(const DecisionTree&) const = default;
};

// Bagged Gini trees with sqrt(F) candidate features per split. Prediction is a
// majority vote; probabilities are vote fractions.
struct RandomForest {
    std::vector<DecisionTree> trees;
    std::vector<int> classes;
    int num_features = 0;

    Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const;
    std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

// Trees are seeded from (opts.seed, tree index), so serial and parallel
// builds produce identical forests.
RandomForest fit_random_forest(const Eigen::MatrixXd& x, std::span<const int> y, const ForestOptions& opts = {},
                               Execution exec = Execution::serial);

}  // namespace inspector
