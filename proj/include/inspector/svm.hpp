#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace inspector {

struct SvmOptions {
    double C = 1.0;
    bool balanced = true;
    double tol = 1e-4;
    int max_epochs = 1000;
    std::uint64_t seed = 42;
};

// Linear hinge-loss SVM (one-vs-rest beyond two classes) with Platt-calibrated
// probabilities. Decision value per row: w.x + b; calibrated p = 1 / (1 + exp(A f + B)).
struct LinearSvm {
    Eigen::MatrixXd weights;  // rows x F
    Eigen::VectorXd bias;
    Eigen::VectorXd platt_a;
    Eigen::VectorXd platt_b;
    std::vector<int> classes;
    bool one_vs_rest = false;

    Eigen::MatrixXd decision_function(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const;
    std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

LinearSvm fit_linear_svm(const Eigen::MatrixXd& x, std::span<const int> y, const SvmOptions& opts = {});

struct PlattParams {
    double a = 0;
    double b = 0;
};

// Sigmoid fit on decision values against {0,1} targets, with Platt's smoothed
// targets. Constrained to a <= 0 so probability is nondecreasing in the score.
PlattParams fit_platt(std::span<const double> scores, std::span<const int> targets);

double platt_probability(const PlattParams& p, double score);

}  // namespace inspector
