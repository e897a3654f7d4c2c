#pragma once

#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace inspector {

struct LogisticOptions {
    double C = 1.0;
    bool balanced = false;
    double tol = 1e-6;
    int max_iter = 1000;
};

// Linear logistic regression. Two classes use a single weight row (for the
// larger class id); more classes are fitted one-vs-rest.
struct LogisticProbe {
    Eigen::MatrixXd weights;  // rows x F
    Eigen::VectorXd bias;
    std::vector<int> classes;  // ascending
    double C = 1.0;
    bool one_vs_rest = false;
    bool converged = false;
    int iterations = 0;

    int num_features() const { return static_cast<int>(weights.cols()); }
    Eigen::MatrixXd decision_function(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const;
    std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

// w_c = N / (K * N_c)
std::map<int, double> balanced_class_weights(std::span<const int> y);

// Weighted binary objective
//   sum_i s_i [log(1 + exp(z_i)) - t_i z_i] + ||w||^2 / (2C),   z = X w + b,
// with the bias unpenalized. `params` is [w; b]; fills `grad` when non-null.
double logistic_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& targets,
                          const Eigen::VectorXd& sample_weights, double C, const Eigen::VectorXd& params,
                          Eigen::VectorXd* grad);

LogisticProbe fit_logistic_probe(const Eigen::MatrixXd& x, std::span<const int> y, const LogisticOptions& opts = {});

// Row-wise argmax, ties to the lower column (class) index.
std::vector<int> argmax_labels(const Eigen::MatrixXd& scores, std::span<const int> classes);

// Numerically stable logistic function.
double sigmoid(double z);

}  // namespace inspector
