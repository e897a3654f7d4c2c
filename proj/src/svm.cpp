#include "inspector/svm.hpp"

#include "inspector/error.hpp"
#include "inspector/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace inspector {

double platt_probability(const PlattParams& p, double score) { return sigmoid(-(p.a * score + p.b)); }

PlattParams fit_platt(std::span<const double> scores, std::span<const int> targets) {
    const std::size_t n = scores.size();
    double prior1 = 0, prior0 = 0;
    for (int t : targets) (t == 1 ? prior1 : prior0) += 1;
    const double hi = (prior1 + 1.0) / (prior1 + 2.0);
    const double lo = 1.0 / (prior0 + 2.0);
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i) t[i] = targets[i] == 1 ? hi : lo;

    auto objective = [&](double a, double b) {
        double f = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double z = a * scores[i] + b;
            // -[t log p + (1-t) log(1-p)] with p = 1/(1+e^z)
            f += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1) * z + std::log1p(std::exp(z));
        }
        return f;
    };

    PlattParams p{0.0, std::log((prior0 + 1.0) / (prior1 + 1.0))};
    double fval = objective(p.a, p.b);
    constexpr double kSigma = 1e-12;
    for (int iter = 0; iter < 100; ++iter) {
        double h11 = kSigma, h22 = kSigma, h21 = 0, g1 = 0, g2 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double prob = platt_probability(p, scores[i]);
            const double d2 = prob * (1 - prob);
            h11 += scores[i] * scores[i] * d2;
            h22 += d2;
            h21 += scores[i] * d2;
            const double d1 = t[i] - prob;
            g1 += scores[i] * d1;
            g2 += d1;
        }
        if (std::abs(g1) < 1e-5 && std::abs(g2) < 1e-5) break;
        const double det = h11 * h22 - h21 * h21;
        const double da = -(h22 * g1 - h21 * g2) / det;
        const double db = -(-h21 * g1 + h11 * g2) / det;
        const double gd = g1 * da + g2 * db;
        double step = 1.0;
        bool moved = false;
        while (step >= 1e-10) {
            const double na = p.a + step * da, nb = p.b + step * db;
            const double nf = objective(na, nb);
            if (nf < fval + 1e-4 * step * gd) {
                p = {na, nb};
                fval = nf;
                moved = true;
                break;
            }
            step /= 2;
        }
        if (!moved) break;
    }
    if (p.a > 0) {
        // Inverted fit on degenerate scores: fall back to the constant prior.
        double mean_t = std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(n);
        p = {0.0, std::log((1 - mean_t) / mean_t)};
    }
    return p;
}

namespace {

// Dual coordinate descent for the L1-loss SVM, bias as an extra unit feature.
void solve_binary(const Eigen::MatrixXd& x, const std::vector<double>& sign, const std::vector<double>& upper,
                  const SvmOptions& opts, std::mt19937_64& rng, Eigen::VectorXd& w, double& b) {
    const Eigen::Index n = x.rows(), f = x.cols();
    w = Eigen::VectorXd::Zero(f);
    b = 0;
    std::vector<double> alpha(n, 0.0), qii(n);
    for (Eigen::Index i = 0; i < n; ++i) qii[i] = x.row(i).squaredNorm() + 1.0;
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double pg_max = -INFINITY, pg_min = INFINITY;
        for (auto i : order) {
            const double g = sign[i] * (x.row(i).dot(w) + b) - 1.0;
            double pg = g;
            if (alpha[i] == 0) pg = std::min(g, 0.0);
            else if (alpha[i] == upper[i]) pg = std::max(g, 0.0);
            pg_max = std::max(pg_max, pg);
            pg_min = std::min(pg_min, pg);
            if (std::abs(pg) > 1e-12) {
                const double old = alpha[i];
                alpha[i] = std::clamp(old - g / qii[i], 0.0, upper[i]);
                const double delta = (alpha[i] - old) * sign[i];
                w += delta * x.row(i).transpose();
                b += delta;
            }
        }
        if (pg_max - pg_min <= opts.tol) break;
    }
}

}  // namespace

LinearSvm fit_linear_svm(const Eigen::MatrixXd& x, std::span<const int> y, const SvmOptions& opts) {
    if (x.rows() != static_cast<Eigen::Index>(y.size()))
        throw Error(ErrorKind::dimension_mismatch, "feature rows and labels differ in length");
    if (!x.allFinite()) throw Error(ErrorKind::non_finite, "SVM input has non-finite values");
    if (!(opts.C > 0)) throw Error(ErrorKind::invalid_argument, "C must be positive");

    LinearSvm svm;
    svm.classes.assign(y.begin(), y.end());
    std::sort(svm.classes.begin(), svm.classes.end());
    svm.classes.erase(std::unique(svm.classes.begin(), svm.classes.end()), svm.classes.end());
    if (svm.classes.size() < 2) throw Error(ErrorKind::degenerate_labels, "SVM needs at least two classes");
    svm.one_vs_rest = svm.classes.size() > 2;

    const auto cw = opts.balanced ? balanced_class_weights(y) : std::map<int, double>{};
    const Eigen::Index n = x.rows();
    std::vector<double> upper(n);
    for (Eigen::Index i = 0; i < n; ++i) upper[i] = opts.C * (opts.balanced ? cw.at(y[i]) : 1.0);

    const Eigen::Index rows = svm.one_vs_rest ? static_cast<Eigen::Index>(svm.classes.size()) : 1;
    svm.weights.resize(rows, x.cols());
    svm.bias.resize(rows);
    svm.platt_a.resize(rows);
    svm.platt_b.resize(rows);
    std::mt19937_64 rng(opts.seed);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const int positive = svm.one_vs_rest ? svm.classes[r] : svm.classes.back();
        std::vector<double> sign(n);
        std::vector<int> targets(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            targets[i] = y[i] == positive ? 1 : 0;
            sign[i] = targets[i] ? 1.0 : -1.0;
        }
        Eigen::VectorXd w;
        double b = 0;
        solve_binary(x, sign, upper, opts, rng, w, b);
        svm.weights.row(r) = w.transpose();
        svm.bias(r) = b;
        const Eigen::VectorXd scores = (x * w).array() + b;
        const auto platt = fit_platt({scores.data(), static_cast<std::size_t>(n)}, targets);
        svm.platt_a(r) = platt.a;
        svm.platt_b(r) = platt.b;
    }
    return svm;
}

Eigen::MatrixXd LinearSvm::decision_function(const Eigen::MatrixXd& x) const {
    if (x.cols() != weights.cols()) throw Error(ErrorKind::dimension_mismatch, "SVM column count mismatch");
    return (x * weights.transpose()).rowwise() + bias.transpose();
}

Eigen::MatrixXd LinearSvm::predict_proba(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd f = decision_function(x);
    Eigen::MatrixXd p(x.rows(), static_cast<Eigen::Index>(classes.size()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        if (!one_vs_rest) {
            const double q = platt_probability({platt_a(0), platt_b(0)}, f(i, 0));
            p(i, 0) = 1 - q;
            p(i, 1) = q;
        } else {
            for (Eigen::Index k = 0; k < f.cols(); ++k) p(i, k) = platt_probability({platt_a(k), platt_b(k)}, f(i, k));
            const double total = p.row(i).sum();
            if (total > 0) p.row(i) /= total;
            else p.row(i).setConstant(1.0 / static_cast<double>(f.cols()));
        }
    }
    return p;
}

std::vector<int> LinearSvm::predict(const Eigen::MatrixXd& x) const {
    const Eigen::MatrixXd f = decision_function(x);
    if (one_vs_rest) return argmax_labels(f, classes);
    std::vector<int> out(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) out[i] = f(i, 0) > 0 ? classes[1] : classes[0];
    return out;
}

}  // namespace inspector
