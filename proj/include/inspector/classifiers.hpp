#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "inspector/dataset.hpp"
#include "inspector/forest.hpp"
#include "inspector/logistic.hpp"
#include "inspector/mlp.hpp"
#include "inspector/parallel.hpp"
#include "inspector/preprocess.hpp"
#include "inspector/svm.hpp"

namespace inspector {

// Declaration order is the tie-break order for final selection.
enum class Family { LR, LSVM, RF, MLP };

inline constexpr Family kAllFamilies[] = {Family::LR, Family::LSVM, Family::RF, Family::MLP};

const char* to_string(Family family);
Family parse_family(std::string_view text);

struct ClassifierSpec {
    Family family = Family::LR;
    // LR, LSVM
    double C = 1.0;
    // RF
    int n_estimators = 100;
    int max_depth = 0;  // 0 = unlimited
    int min_samples_leaf = 1;
    // MLP
    double alpha = 1e-4;
    double learning_rate = 1e-3;
    std::vector<int> hidden{256, 128};

    std::uint64_t seed = 42;

    // Only the hyperparameters meaningful for `family`.
    nlohmann::json params() const;
    std::string describe() const;
    static ClassifierSpec from_json(Family family, const nlohmann::json& params, std::uint64_t seed);
    void validate() const;
};

// Fixed per-family defaults outside grid search.
ClassifierSpec default_spec(Family family, std::uint64_t seed = 42);

// Grid order is the final tie-break inside a family.
std::vector<ClassifierSpec> classifier_grid(Family family, std::uint64_t seed = 42);

struct TrainedClassifier {
    ClassifierSpec spec;
    std::vector<int> classes;
    std::variant<LogisticProbe, LinearSvm, RandomForest, Mlp> model;

    Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const;
    std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

TrainedClassifier train_classifier(const ClassifierSpec& spec, const Eigen::MatrixXd& x, std::span<const int> y,
                                   Execution exec = Execution::serial);

struct GridPoint {
    ClassifierSpec spec;
    std::vector<double> fold_macro_f1;
    std::vector<double> fold_accuracy;
    double macro_f1_mean = 0;
    double macro_f1_std = 0;
    double accuracy_mean = 0;
    double accuracy_std = 0;
};

struct GridResult {
    Family family = Family::LR;
    std::vector<GridPoint> points;
    std::size_t best = 0;
    int fits = 0;
    PipelineModel pipeline;  // refit on all rows
    TrainedClassifier refit;

    const GridPoint& best_point() const { return points.at(best); }
    void write_csv(const std::string& path) const;
};

// Index of the best point: macro-F1 mean desc, std asc, grid order.
std::size_t pick_best(std::span<const GridPoint> points);

// Scores every grid point on every fold with macro F1, refitting the
// preprocessing pipeline inside each fold, then refits the winner on all rows.
GridResult grid_search(Family family, const Eigen::MatrixXd& x, std::span<const int> y, const FoldAssignment& folds,
                       const PipelineOptions& pipeline, std::uint64_t seed, Execution exec = Execution::parallel);

GridResult grid_search(std::span<const ClassifierSpec> grid, const Eigen::MatrixXd& x, std::span<const int> y,
                       const FoldAssignment& folds, const PipelineOptions& pipeline,
                       Execution exec = Execution::parallel);

}  // namespace inspector
