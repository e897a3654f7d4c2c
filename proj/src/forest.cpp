#include "inspector/forest.hpp"

#include "inspector/error.hpp"
#include "inspector/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace inspector {

int DecisionTree::predict_index(const double* row) const {
    int node = 0;
    while (feature[node] >= 0) node = row[feature[node]] <= threshold[node] ? left[node] : right[node];
    return leaf_class[node];
}

int DecisionTree::depth() const {
    std::vector<int> level(feature.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < feature.size(); ++i) {
        deepest = std::max(deepest, level[i]);
        if (feature[i] >= 0) {
            level[left[i]] = level[i] + 1;
            level[right[i]] = level[i] + 1;
        }
    }
    return deepest;
}

namespace {

class TreeBuilder {
public:
    TreeBuilder(const Eigen::MatrixXd& x, const std::vector<int>& cls, int num_classes, const ForestOptions& opts,
                std::mt19937_64& rng)
        : x_(x), cls_(cls), k_(num_classes), opts_(opts), rng_(rng) {
        max_features_ = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(x.cols()))));
        features_.resize(x.cols());
        std::iota(features_.begin(), features_.end(), 0);
    }

    DecisionTree build(std::vector<int> rows, std::vector<double> weights) {
        weight_ = std::move(weights);
        grow(rows, 0);
        return std::move(tree_);
    }

private:
    struct Split {
        int feature = -1;
        double threshold = 0;
        double impurity = INFINITY;
    };

    static double gini_mass(const std::vector<double>& counts, double total) {
        if (total <= 0) return 0;
        double sq = 0;
        for (double c : counts) sq += c * c;
        return total - sq / total;  // total * gini
    }

    int new_node() {
        tree_.feature.push_back(-1);
        tree_.threshold.push_back(0);
        tree_.left.push_back(-1);
        tree_.right.push_back(-1);
        tree_.leaf_class.push_back(0);
        return static_cast<int>(tree_.feature.size()) - 1;
    }

    int grow(std::vector<int>& rows, int depth) {
        const int node = new_node();
        std::vector<double> counts(k_, 0.0);
        double total = 0;
        for (int r : rows) {
            counts[cls_[r]] += weight_[r];
            total += weight_[r];
        }
        tree_.leaf_class[node] =
            static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());

        const int n = static_cast<int>(rows.size());
        const bool pure = std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0; }) <= 1;
        if (pure || n < 2 * opts_.min_samples_leaf || (opts_.max_depth > 0 && depth >= opts_.max_depth)) return node;

        const double parent = gini_mass(counts, total);
        Split best;
        std::shuffle(features_.begin(), features_.end(), rng_);
        auto& order = order_;
        order.resize(rows.size());
        left_.assign(k_, 0.0);
        for (std::size_t fi = 0; fi < features_.size(); ++fi) {
            if (static_cast<int>(fi) >= max_features_ && best.feature >= 0) break;
            const int f = features_[fi];
            const double* col = x_.col(f).data();
            for (int i = 0; i < n; ++i) order[i] = {col[rows[i]], rows[i]};
            std::sort(order.begin(), order.end());
            std::fill(left_.begin(), left_.end(), 0.0);
            double left_total = 0;
            for (int i = 0; i + 1 < n; ++i) {
                const int r = order[i].second;
                left_[cls_[r]] += weight_[r];
                left_total += weight_[r];
                const double lo = order[i].first, hi = order[i + 1].first;
                if (!(hi > lo)) continue;
                if (i + 1 < opts_.min_samples_leaf || n - i - 1 < opts_.min_samples_leaf) continue;
                const double right_total = total - left_total;
                double lsq = 0, rsq = 0;
                for (int c = 0; c < k_; ++c) {
                    lsq += left_[c] * left_[c];
                    const double rc = counts[c] - left_[c];
                    rsq += rc * rc;
                }
                const double impurity = (left_total > 0 ? left_total - lsq / left_total : 0) +
                                        (right_total > 0 ? right_total - rsq / right_total : 0);
                if (impurity < best.impurity) {
                    double mid = lo + (hi - lo) / 2;
                    if (!(mid < hi)) mid = lo;
                    best = {f, mid, impurity};
                }
            }
            if (best.feature >= 0 && !(best.impurity < parent - 1e-12 * total)) best = Split{};
        }
        if (best.feature < 0) return node;

        std::vector<int> left_rows, right_rows;
        for (int r : rows) (x_(r, best.feature) <= best.threshold ? left_rows : right_rows).push_back(r);
        rows.clear();
        rows.shrink_to_fit();
        tree_.feature[node] = best.feature;
        tree_.threshold[node] = best.threshold;
        const int l = grow(left_rows, depth + 1);
        tree_.left[node] = l;
        const int rr = grow(right_rows, depth + 1);
        tree_.right[node] = rr;
        return node;
    }

    const Eigen::MatrixXd& x_;
    const std::vector<int>& cls_;
    int k_;
    const ForestOptions& opts_;
    std::mt19937_64& rng_;
    int max_features_;
    std::vector<int> features_;
    std::vector<double> weight_;
    std::vector<std::pair<double, int>> order_;
    std::vector<double> left_;
    DecisionTree tree_;
};

}  // namespace

RandomForest fit_random_forest(const Eigen::MatrixXd& x, std::span<const int> y, const ForestOptions& opts,
                               Execution exec) {
    if (x.rows() != static_cast<Eigen::Index>(y.size()))
        throw Error(ErrorKind::dimension_mismatch, "feature rows and labels differ in length");
    if (!x.allFinite()) throw Error(ErrorKind::non_finite, "random forest input has non-finite values");
    if (opts.n_estimators < 1 || opts.min_samples_leaf < 1 || opts.max_depth < 0)
        throw Error(ErrorKind::invalid_argument, "invalid random forest options");

    RandomForest forest;
    forest.classes.assign(y.begin(), y.end());
    std::sort(forest.classes.begin(), forest.classes.end());
    forest.classes.erase(std::unique(forest.classes.begin(), forest.classes.end()), forest.classes.end());
    if (forest.classes.size() < 2) throw Error(ErrorKind::degenerate_labels, "random forest needs at least two classes");
    forest.num_features = static_cast<int>(x.cols());

    const int n = static_cast<int>(x.rows());
    std::vector<int> cls(n);
    for (int i = 0; i < n; ++i)
        cls[i] = static_cast<int>(std::lower_bound(forest.classes.begin(), forest.classes.end(), y[i]) -
                                  forest.classes.begin());
    const auto cw = balanced_class_weights(y);
    const int k = static_cast<int>(forest.classes.size());

    forest.trees.resize(opts.n_estimators);
    auto build_tree = [&](int t) {
        std::seed_seq seq{static_cast<std::uint64_t>(opts.seed), static_cast<std::uint64_t>(t)};
        std::mt19937_64 rng(seq);
        std::uniform_int_distribution<int> pick(0, n - 1);
        std::vector<double> weight(n, 0.0);
        for (int i = 0; i < n; ++i) weight[pick(rng)] += 1.0;
        std::vector<int> rows;
        for (int i = 0; i < n; ++i)
            if (weight[i] > 0) {
                if (opts.balanced) weight[i] *= cw.at(y[i]);
                rows.push_back(i);
            }
        TreeBuilder builder(x, cls, k, opts, rng);
        forest.trees[t] = builder.build(std::move(rows), std::move(weight));
    };

    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(dynamic, 4)
        for (int t = 0; t < opts.n_estimators; ++t) build_tree(t);
    } else {
        for (int t = 0; t < opts.n_estimators; ++t) build_tree(t);
    }
    return forest;
}

Eigen::MatrixXd RandomForest::predict_proba(const Eigen::MatrixXd& x) const {
    if (x.cols() != num_features) throw Error(ErrorKind::dimension_mismatch, "random forest column count mismatch");
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = x;
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(x.rows(), static_cast<Eigen::Index>(classes.size()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (const auto& tree : trees) p(i, tree.predict_index(rows.row(i).data())) += 1.0;
        p.row(i) /= static_cast<double>(trees.size());
    }
    return p;
}

std::vector<int> RandomForest::predict(const Eigen::MatrixXd& x) const { return argmax_labels(predict_proba(x), classes); }

}  // namespace inspector
