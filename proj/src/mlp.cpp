#include "inspector/mlp.hpp"

#include "inspector/error.hpp"
#include "inspector/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace inspector {

namespace {

void forward(const Mlp& net, const Eigen::MatrixXd& x, std::vector<Eigen::MatrixXd>& acts) {
    acts.resize(net.weights.size() + 1);
    acts[0] = x;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        acts[l + 1] = (acts[l] * net.weights[l]).rowwise() + net.biases[l].transpose();
        if (l + 1 < net.weights.size()) {
            acts[l + 1] = acts[l + 1].cwiseMax(0.0);
        } else {
            auto& z = acts[l + 1];
            for (Eigen::Index i = 0; i < z.rows(); ++i) {
                z.row(i).array() -= z.row(i).maxCoeff();
                z.row(i) = z.row(i).array().exp();
                z.row(i) /= z.row(i).sum();
            }
        }
    }
}

double accuracy(const Mlp& net, const Eigen::MatrixXd& x, const std::vector<int>& y) {
    const auto pred = net.predict(x);
    int hit = 0;
    for (std::size_t i = 0; i < y.size(); ++i) hit += pred[i] == y[i];
    return static_cast<double>(hit) / static_cast<double>(y.size());
}

}  // namespace

Mlp init_mlp(int inputs, const std::vector<int>& hidden, int outputs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Mlp net;
    std::vector<int> sizes{inputs};
    sizes.insert(sizes.end(), hidden.begin(), hidden.end());
    sizes.push_back(outputs);
    for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
        const double bound = std::sqrt(6.0 / (sizes[l] + sizes[l + 1]));
        std::uniform_real_distribution<double> u(-bound, bound);
        Eigen::MatrixXd w(sizes[l], sizes[l + 1]);
        for (Eigen::Index j = 0; j < w.cols(); ++j)
            for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = u(rng);
        Eigen::VectorXd b(sizes[l + 1]);
        for (auto& v : b) v = u(rng);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

double mlp_loss_and_gradient(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& onehot, double alpha,
                             Mlp* grad) {
    std::vector<Eigen::MatrixXd> acts;
    forward(net, x, acts);
    const double n = static_cast<double>(x.rows());
    const auto& probs = acts.back();
    double loss = -(onehot.array() * probs.array().max(1e-300).log()).sum() / n;
    double reg = 0;
    for (const auto& w : net.weights) reg += w.squaredNorm();
    loss += alpha / (2 * n) * reg;
    if (grad == nullptr) return loss;

    const std::size_t layers = net.weights.size();
    grad->weights.resize(layers);
    grad->biases.resize(layers);
    Eigen::MatrixXd delta = (probs - onehot) / n;
    for (std::size_t l = layers; l-- > 0;) {
        grad->weights[l] = acts[l].transpose() * delta + (alpha / n) * net.weights[l];
        grad->biases[l] = delta.colwise().sum().transpose();
        if (l > 0) {
            delta = (delta * net.weights[l].transpose()).cwiseProduct(
                (acts[l].array() > 0).cast<double>().matrix());
        }
    }
    return loss;
}

Mlp fit_mlp(const Eigen::MatrixXd& x, std::span<const int> y, const MlpOptions& opts) {
    if (x.rows() != static_cast<Eigen::Index>(y.size()))
        throw Error(ErrorKind::dimension_mismatch, "feature rows and labels differ in length");
    if (!x.allFinite()) throw Error(ErrorKind::non_finite, "MLP input has non-finite values");
    for (int h : opts.hidden)
        if (h < 1) throw Error(ErrorKind::invalid_argument, "hidden layer sizes must be positive");
    if (!(opts.learning_rate > 0) || opts.alpha < 0)
        throw Error(ErrorKind::invalid_argument, "invalid MLP learning rate or alpha");

    std::vector<int> classes(y.begin(), y.end());
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() < 2) throw Error(ErrorKind::degenerate_labels, "MLP needs at least two classes");
    const int k = static_cast<int>(classes.size());

    std::mt19937_64 rng(opts.seed);
    const int n = static_cast<int>(x.rows());

    // Stratified validation hold-out; skipped when it would starve a class.
    std::vector<int> train_idx, val_idx;
    bool early = opts.early_stopping;
    if (early) {
        std::map<int, std::vector<int>> by_class;
        for (int i = 0; i < n; ++i) by_class[y[i]].push_back(i);
        for (auto& [cls, members] : by_class) {
            std::shuffle(members.begin(), members.end(), rng);
            const int take = static_cast<int>(std::lround(members.size() * opts.validation_fraction));
            if (take < 1 || take >= static_cast<int>(members.size())) {
                early = false;
                break;
            }
            val_idx.insert(val_idx.end(), members.begin(), members.begin() + take);
            train_idx.insert(train_idx.end(), members.begin() + take, members.end());
        }
    }
    if (!early) {
        train_idx.resize(n);
        std::iota(train_idx.begin(), train_idx.end(), 0);
        val_idx.clear();
    }
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(val_idx.begin(), val_idx.end());

    auto class_index = [&](int label) {
        return static_cast<int>(std::lower_bound(classes.begin(), classes.end(), label) - classes.begin());
    };
    Eigen::MatrixXd x_val(val_idx.size(), x.cols());
    std::vector<int> y_val;
    for (std::size_t i = 0; i < val_idx.size(); ++i) {
        x_val.row(i) = x.row(val_idx[i]);
        y_val.push_back(y[val_idx[i]]);
    }

    Mlp net = init_mlp(static_cast<int>(x.cols()), opts.hidden, k, rng());
    net.classes = classes;

    // Adam state
    std::vector<Eigen::MatrixXd> mw, vw;
    std::vector<Eigen::VectorXd> mb, vb;
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        mw.push_back(Eigen::MatrixXd::Zero(net.weights[l].rows(), net.weights[l].cols()));
        vw.push_back(mw.back());
        mb.push_back(Eigen::VectorXd::Zero(net.biases[l].size()));
        vb.push_back(mb.back());
    }
    constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
    long step = 0;

    const int n_train = static_cast<int>(train_idx.size());
    const int batch = std::clamp(opts.batch_size, 1, n_train);
    double best_score = -INFINITY;
    double best_loss = INFINITY;
    int stale = 0;
    Mlp best = net;
    Mlp grad;
    std::vector<int> order = train_idx;
    for (int epoch = 0; epoch < opts.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0;
        for (int start = 0; start < n_train; start += batch) {
            const int m = std::min(batch, n_train - start);
            Eigen::MatrixXd xb(m, x.cols());
            Eigen::MatrixXd yb = Eigen::MatrixXd::Zero(m, k);
            for (int i = 0; i < m; ++i) {
                xb.row(i) = x.row(order[start + i]);
                yb(i, class_index(y[order[start + i]])) = 1.0;
            }
            epoch_loss += mlp_loss_and_gradient(net, xb, yb, opts.alpha, &grad) * m;
            ++step;
            const double c1 = 1 - std::pow(kBeta1, static_cast<double>(step));
            const double c2 = 1 - std::pow(kBeta2, static_cast<double>(step));
            const double lr = opts.learning_rate * std::sqrt(c2) / c1;
            for (std::size_t l = 0; l < net.weights.size(); ++l) {
                mw[l] = kBeta1 * mw[l] + (1 - kBeta1) * grad.weights[l];
                vw[l] = kBeta2 * vw[l] + (1 - kBeta2) * grad.weights[l].cwiseAbs2();
                net.weights[l].array() -= lr * mw[l].array() / (vw[l].array().sqrt() + kEps);
                mb[l] = kBeta1 * mb[l] + (1 - kBeta1) * grad.biases[l];
                vb[l] = kBeta2 * vb[l] + (1 - kBeta2) * grad.biases[l].cwiseAbs2();
                net.biases[l].array() -= lr * mb[l].array() / (vb[l].array().sqrt() + kEps);
            }
        }
        epoch_loss /= n_train;
        net.epochs_run = epoch + 1;

        if (early) {
            const double score = accuracy(net, x_val, y_val);
            if (score > best_score + opts.tol) {
                best_score = score;
                best = net;
                stale = 0;
            } else if (++stale >= opts.n_iter_no_change) {
                break;
            }
        } else {
            if (epoch_loss < best_loss - opts.tol) {
                best_loss = epoch_loss;
                stale = 0;
            } else if (++stale >= opts.n_iter_no_change) {
                break;
            }
        }
    }
    if (early) {
        best.epochs_run = net.epochs_run;
        return best;
    }
    return net;
}

Eigen::MatrixXd Mlp::predict_proba(const Eigen::MatrixXd& x) const {
    if (x.cols() != num_features()) throw Error(ErrorKind::dimension_mismatch, "MLP column count mismatch");
    std::vector<Eigen::MatrixXd> acts;
    forward(*this, x, acts);
    return acts.back();
}

std::vector<int> Mlp::predict(const Eigen::MatrixXd& x) const { return argmax_labels(predict_proba(x), classes); }

}  // namespace inspector
