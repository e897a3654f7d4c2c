#include "inspector/logistic.hpp"

#include "inspector/error.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

namespace inspector {

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

struct LbfgsResult {
    Eigen::VectorXd params;
    bool converged = false;
    int iterations = 0;
};

// Limited-memory BFGS with backtracking (Armijo) line search. Stops when the
// gradient infinity-norm drops to `tol`.
template <typename Objective>
LbfgsResult minimize_lbfgs(Objective&& f, Eigen::VectorXd x, double tol, int max_iter) {
    constexpr int kMemory = 10;
    constexpr double kArmijo = 1e-4;
    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    Eigen::VectorXd g;
    double fx = f(x, &g);
    LbfgsResult result;
    for (int iter = 0; iter < max_iter; ++iter) {
        if (g.lpNorm<Eigen::Infinity>() <= tol) {
            result.converged = true;
            break;
        }
        // Two-loop recursion for d = -H g.
        Eigen::VectorXd q = g;
        std::vector<double> alpha(s_hist.size());
        for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
            alpha[k] = rho_hist[k] * s_hist[k].dot(q);
            q -= alpha[k] * y_hist[k];
        }
        if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
        else q /= std::max(1.0, g.lpNorm<Eigen::Infinity>());
        for (std::size_t k = 0; k < s_hist.size(); ++k) {
            const double beta = rho_hist[k] * y_hist[k].dot(q);
            q += (alpha[k] - beta) * s_hist[k];
        }
        Eigen::VectorXd dir = -q;
        double slope = g.dot(dir);
        if (slope >= 0) {
            // Lost descent; restart from steepest descent.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = -g / std::max(1.0, g.lpNorm<Eigen::Infinity>());
            slope = g.dot(dir);
        }

        double step = 1.0;
        Eigen::VectorXd x_new, g_new;
        double f_new = 0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * dir;
            f_new = f(x_new, &g_new);
            if (std::isfinite(f_new) && f_new <= fx + kArmijo * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        result.iterations = iter + 1;
        if (!accepted) break;  // no representable decrease left

        Eigen::VectorXd s = x_new - x, y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-12 * y.squaredNorm()) {
            if (static_cast<int>(s_hist.size()) == kMemory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
        }
        x = std::move(x_new);
        g = std::move(g_new);
        fx = f_new;
    }
    if (!result.converged && g.lpNorm<Eigen::Infinity>() <= tol) result.converged = true;
    result.params = std::move(x);
    return result;
}

std::vector<int> sorted_classes(std::span<const int> y) {
    std::vector<int> classes(y.begin(), y.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    return classes;
}

}  // namespace

double logistic_objective(const Eigen::MatrixXd& x, const Eigen::VectorXd& targets,
                          const Eigen::VectorXd& sample_weights, double C, const Eigen::VectorXd& params,
                          Eigen::VectorXd* grad) {
    const Eigen::Index f = x.cols();
    const auto w = params.head(f);
    const double b = params(f);
    const Eigen::VectorXd z = (x * w).array() + b;
    double value = 0.5 * w.squaredNorm() / C;
    Eigen::VectorXd residual(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) {
        value += sample_weights(i) * (softplus(z(i)) - targets(i) * z(i));
        residual(i) = sample_weights(i) * (sigmoid(z(i)) - targets(i));
    }
    if (grad != nullptr) {
        grad->resize(f + 1);
        grad->head(f) = x.transpose() * residual + w / C;
        (*grad)(f) = residual.sum();
    }
    return value;
}

std::map<int, double> balanced_class_weights(std::span<const int> y) {
    std::map<int, int> counts;
    for (int v : y) ++counts[v];
    std::map<int, double> weights;
    const double n = static_cast<double>(y.size()), k = static_cast<double>(counts.size());
    for (const auto& [cls, c] : counts) weights[cls] = n / (k * c);
    return weights;
}

LogisticProbe fit_logistic_probe(const Eigen::MatrixXd& x, std::span<const int> y, const LogisticOptions& opts) {
    if (x.rows() != static_cast<Eigen::Index>(y.size()))
        throw Error(ErrorKind::dimension_mismatch, "feature rows and labels differ in length");
    if (!x.allFinite()) throw Error(ErrorKind::non_finite, "logistic probe input has non-finite values");
    if (!(opts.C > 0)) throw Error(ErrorKind::invalid_argument, "C must be positive");

    LogisticProbe probe;
    probe.classes = sorted_classes(y);
    if (probe.classes.size() < 2) throw Error(ErrorKind::degenerate_labels, "logistic probe needs at least two classes");
    probe.C = opts.C;
    probe.one_vs_rest = probe.classes.size() > 2;

    const Eigen::Index n = x.rows(), f = x.cols();
    Eigen::VectorXd sample_weights = Eigen::VectorXd::Ones(n);
    if (opts.balanced) {
        const auto cw = balanced_class_weights(y);
        for (Eigen::Index i = 0; i < n; ++i) sample_weights(i) = cw.at(y[i]);
    }

    const std::size_t rows = probe.one_vs_rest ? probe.classes.size() : 1;
    probe.weights.resize(static_cast<Eigen::Index>(rows), f);
    probe.bias.resize(static_cast<Eigen::Index>(rows));
    probe.converged = true;
    for (std::size_t r = 0; r < rows; ++r) {
        const int positive = probe.one_vs_rest ? probe.classes[r] : probe.classes.back();
        Eigen::VectorXd targets(n);
        for (Eigen::Index i = 0; i < n; ++i) targets(i) = y[i] == positive ? 1.0 : 0.0;
        auto objective = [&](const Eigen::VectorXd& p, Eigen::VectorXd* g) {
            return logistic_objective(x, targets, sample_weights, opts.C, p, g);
        };
        auto res = minimize_lbfgs(objective, Eigen::VectorXd::Zero(f + 1), opts.tol, opts.max_iter);
        probe.weights.row(static_cast<Eigen::Index>(r)) = res.params.head(f).transpose();
        probe.bias(static_cast<Eigen::Index>(r)) = res.params(f);
        probe.converged = probe.converged && res.converged;
        probe.iterations = std::max(probe.iterations, res.iterations);
    }
    return probe;
}

Eigen::MatrixXd LogisticProbe::decision_function(const Eigen::MatrixXd& x) const {
    if (x.cols() != weights.cols())
        throw Error(ErrorKind::dimension_mismatch, "probe expects " + std::to_string(weights.cols()) + " columns, got " +
                                                       std::to_string(x.cols()));
    return (x * weights.transpose()).rowwise() + bias.transpose();
}

Eigen::MatrixXd LogisticProbe::predict_proba(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd z = decision_function(x);
    Eigen::MatrixXd p(x.rows(), static_cast<Eigen::Index>(classes.size()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (!one_vs_rest) {
            const double q = sigmoid(z(i, 0));
            p(i, 0) = 1.0 - q;
            p(i, 1) = q;
        } else {
            for (Eigen::Index k = 0; k < z.cols(); ++k) p(i, k) = sigmoid(z(i, k));
            p.row(i) /= p.row(i).sum();
        }
    }
    return p;
}

std::vector<int> LogisticProbe::predict(const Eigen::MatrixXd& x) const {
    return argmax_labels(predict_proba(x), classes);
}

std::vector<int> argmax_labels(const Eigen::MatrixXd& scores, std::span<const int> classes) {
    std::vector<int> out(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < scores.cols(); ++k)
            if (scores(i, k) > scores(i, best)) best = k;
        out[static_cast<std::size_t>(i)] = classes[static_cast<std::size_t>(best)];
    }
    return out;
}

}  // namespace inspector
