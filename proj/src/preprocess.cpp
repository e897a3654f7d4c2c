#include "inspector/preprocess.hpp"

#include "inspector/error.hpp"
#include "inspector/log.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

using nlohmann::json;

namespace inspector {

namespace {

void fix_sign(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> component) {
    Eigen::Index arg = 0;
    component.cwiseAbs().maxCoeff(&arg);
    if (component(arg) < 0) component = -component;
}

// Eigenpairs of a symmetric matrix, descending.
void sorted_eigen(const Eigen::MatrixXd& sym, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw Error(ErrorKind::non_finite, "eigendecomposition failed");
    values = solver.eigenvalues().reverse();
    vectors = solver.eigenvectors().rowwise().reverse();
}

}  // namespace

Eigen::MatrixXd PcaModel::project(const Eigen::MatrixXd& x) const {
    return (x.rowwise() - mean.transpose()) * components.transpose();
}

Eigen::MatrixXd PcaModel::reconstruct(const Eigen::MatrixXd& z) const {
    return (z * components).rowwise() + mean.transpose();
}

PcaModel fit_pca(const Eigen::MatrixXd& x, int dim) {
    const Eigen::Index n = x.rows(), f = x.cols();
    if (n < 2) throw Error(ErrorKind::invalid_argument, "PCA needs at least 2 rows");
    if (dim < 1 || dim > f) throw Error(ErrorKind::invalid_argument, "PCA dimension outside 1..cols");

    PcaModel model;
    model.mean = x.colwise().mean().transpose();
    const Eigen::MatrixXd centered = x.rowwise() - model.mean.transpose();
    const double denom = static_cast<double>(n - 1);

    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    bool done = false;
    if (f > n && f > 256) {
        // Wide data: eigenvectors of the n x n Gram matrix map to components.
        sorted_eigen(centered * centered.transpose() / denom, values, vectors);
        if (dim <= n && values(dim - 1) > 1e-12 * std::max(1.0, values(0))) {
            model.components.resize(dim, f);
            for (int k = 0; k < dim; ++k) {
                Eigen::VectorXd c = centered.transpose() * vectors.col(k);
                model.components.row(k) = (c / c.norm()).transpose();
            }
            model.explained = values.head(dim);
            done = true;
        }
    }
    if (!done) {
        sorted_eigen(centered.transpose() * centered / denom, values, vectors);
        model.components = vectors.leftCols(dim).transpose();
        model.explained = values.head(dim);
    }
    model.explained = model.explained.cwiseMax(0.0);
    for (int k = 0; k < dim; ++k) fix_sign(model.components.row(k));
    return model;
}

Eigen::MatrixXd PipelineModel::prepare(const Eigen::MatrixXd& x) const {
    if (x.cols() != input_dim())
        throw Error(ErrorKind::dimension_mismatch, "pipeline fitted on " + std::to_string(input_dim()) +
                                                       " columns, got " + std::to_string(x.cols()));
    Eigen::MatrixXd out = x;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            double& v = out(i, j);
            if (!std::isfinite(v)) v = impute_means(j);
            if (standardize) v = (v - scale_means(j)) / scale_stds(j);
        }
    }
    return out;
}

Eigen::MatrixXd PipelineModel::transform(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd prepared = prepare(x);
    return pca ? pca->project(prepared) : prepared;
}

json PipelineModel::to_json() const {
    auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
    json j{{"impute_means", vec(impute_means)},
           {"scale_means", vec(scale_means)},
           {"scale_stds", vec(scale_stds)},
           {"standardize", standardize},
           {"fitted_on", fitted_on}};
    if (pca) {
        json rows = json::array();
        for (Eigen::Index k = 0; k < pca->components.rows(); ++k) {
            Eigen::VectorXd row = pca->components.row(k).transpose();
            rows.push_back(vec(row));
        }
        j["pca"] = {{"mean", vec(pca->mean)}, {"components", rows}, {"explained", vec(pca->explained)}};
    }
    return j;
}

PipelineModel fit_pipeline(const Eigen::MatrixXd& x, const PipelineOptions& options) {
    const Eigen::Index n = x.rows(), f = x.cols();
    if (n < 2) throw Error(ErrorKind::invalid_argument, "pipeline fit needs at least 2 rows");

    PipelineModel model;
    model.standardize = options.standardize;
    model.fitted_on = static_cast<int>(n);
    model.impute_means.resize(f);
    for (Eigen::Index j = 0; j < f; ++j) {
        double sum = 0;
        int count = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (std::isfinite(x(i, j))) {
                sum += x(i, j);
                ++count;
            }
        if (count == 0)
            throw Error(ErrorKind::non_finite, "column " + std::to_string(j) + " has no finite training values");
        model.impute_means(j) = sum / count;
    }

    Eigen::MatrixXd filled = x;
    for (Eigen::Index j = 0; j < f; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            if (!std::isfinite(filled(i, j))) filled(i, j) = model.impute_means(j);

    model.scale_means = filled.colwise().mean().transpose();
    model.scale_stds.resize(f);
    for (Eigen::Index j = 0; j < f; ++j) {
        const double var = (filled.col(j).array() - model.scale_means(j)).square().mean();
        const double sd = std::sqrt(var);
        model.scale_stds(j) = sd > 1e-12 * std::max(1.0, std::abs(model.scale_means(j))) ? sd : 1.0;
    }

    if (options.pca_dim) {
        int dim = *options.pca_dim;
        if (dim < 1) throw Error(ErrorKind::invalid_argument, "pca_dim must be positive");
        const int limit = static_cast<int>(std::min<Eigen::Index>(n - 1, f));
        if (dim > limit) {
            warn_once("pca_dim " + std::to_string(dim) + " clamped to " + std::to_string(limit) + " (rows=" +
                      std::to_string(n) + ", cols=" + std::to_string(f) + ")");
            dim = limit;
        }
        model.pca = fit_pca(model.prepare(x), dim);
    }
    return model;
}

}  // namespace inspector
