#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace inspector {

struct MlpOptions {
    std::vector<int> hidden{256, 128};
    double alpha = 1e-4;
    double learning_rate = 1e-3;
    int max_epochs = 1000;
    bool early_stopping = true;
    double validation_fraction = 0.1;
    int n_iter_no_change = 10;
    double tol = 1e-4;
    int batch_size = 200;
    std::uint64_t seed = 42;
};

// Fully connected ReLU network with a softmax output layer.
struct Mlp {
    std::vector<Eigen::MatrixXd> weights;  // in x out per layer
    std::vector<Eigen::VectorXd> biases;
    std::vector<int> classes;
    int epochs_run = 0;

    int num_features() const { return weights.empty() ? 0 : static_cast<int>(weights.front().rows()); }
    Eigen::MatrixXd predict_proba(const Eigen::MatrixXd& x) const;
    std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

// Mean cross-entropy over the batch plus alpha / (2 n) * sum ||W||^2.
// `grad` receives per-parameter gradients with the same shapes as `net`.
double mlp_loss_and_gradient(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& onehot, double alpha,
                             Mlp* grad);

// Glorot-uniform initialization for the given layer sizes.
Mlp init_mlp(int inputs, const std::vector<int>& hidden, int outputs, std::uint64_t seed);

// Adam on shuffled minibatches; with early stopping, 10% of the rows
// (stratified) are held out and the best validation-accuracy weights are kept.
Mlp fit_mlp(const Eigen::MatrixXd& x, std::span<const int> y, const MlpOptions& opts = {});

}  // namespace inspector
