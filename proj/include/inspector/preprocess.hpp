#pragma once

#include <optional>

#include <Eigen/Dense>
#include <json.hpp>

namespace inspector {

struct PcaModel {
    Eigen::VectorXd mean;
    Eigen::MatrixXd components;  // k x F, orthonormal rows
    Eigen::VectorXd explained;   // k, nonincreasing

    int input_dim() const { return static_cast<int>(mean.size()); }
    int output_dim() const { return static_cast<int>(components.rows()); }

    Eigen::MatrixXd project(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& z) const;
};

// Principal components of the rows of `x`, sorted by explained variance
// (n - 1 denominator). Each component is sign-fixed so that its
// largest-magnitude entry is positive.
PcaModel fit_pca(const Eigen::MatrixXd& x, int dim);

struct PipelineOptions {
    bool standardize = true;
    std::optional<int> pca_dim;  // clamped to min(rows - 1, cols)
};

// Impute -> standardize -> optional PCA, fitted on training rows only.
struct PipelineModel {
    Eigen::VectorXd impute_means;
    Eigen::VectorXd scale_means;
    Eigen::VectorXd scale_stds;  // zero-variance columns hold 1
    bool standardize = true;
    std::optional<PcaModel> pca;
    int fitted_on = 0;

    int input_dim() const { return static_cast<int>(impute_means.size()); }
    int output_dim() const { return pca ? pca->output_dim() : input_dim(); }

    // Imputation and standardization only.
    Eigen::MatrixXd prepare(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd transform(const Eigen::MatrixXd& x) const;

    nlohmann::json to_json() const;
};

PipelineModel fit_pipeline(const Eigen::MatrixXd& x_train, const PipelineOptions& options = {});

}  // namespace inspector
