#include "inspector/features.hpp"

#include "inspector/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace inspector {

std::string FeatureOptions::key() const {
    std::string k = use_pca ? "pca" + std::to_string(pca_dim) : "raw";
    if (include_stats) k += "+stats";
    if (include_attention) k += "+attn";
    return k;
}

FeatureOptions parse_feature_options(const std::string& key) {
    FeatureOptions opts;
    opts.include_stats = false;
    opts.include_attention = false;
    std::stringstream ss(key);
    std::string part;
    bool first = true;
    while (std::getline(ss, part, '+')) {
        if (first) {
            if (part == "raw") {
                opts.use_pca = false;
            } else if (part.rfind("pca", 0) == 0 && part.size() > 3) {
                opts.use_pca = true;
                opts.pca_dim = std::stoi(part.substr(3));
            } else {
                throw Error(ErrorKind::invalid_argument, "bad feature options key '" + key + "'");
            }
            first = false;
        } else if (part == "stats") {
            opts.include_stats = true;
        } else if (part == "attn") {
            opts.include_attention = true;
        } else {
            throw Error(ErrorKind::invalid_argument, "bad feature options key '" + key + "'");
        }
    }
    if (first) throw Error(ErrorKind::invalid_argument, "empty feature options key");
    return opts;
}

void FeatureMatrix::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path);
    for (std::size_t j = 0; j < column_labels.size(); ++j) out << (j ? "," : "") << column_labels[j];
    out << '\n';
    out.precision(17);
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << values(i, j);
        out << '\n';
    }
}

Eigen::VectorXd pool_hidden(const Eigen::MatrixXd& hidden, PoolMode mode, int last_index) {
    if (hidden.rows() == 0 || hidden.cols() == 0) throw Error(ErrorKind::invalid_argument, "empty hidden-state matrix");
    switch (mode) {
        case PoolMode::mean: return hidden.colwise().mean().transpose();
        case PoolMode::last:
            if (last_index < 1 || last_index > hidden.rows())
                throw Error(ErrorKind::invalid_argument, "last token index outside 1..S");
            return hidden.row(last_index - 1).transpose();
        case PoolMode::min: return hidden.colwise().minCoeff().transpose();
        case PoolMode::max: return hidden.colwise().maxCoeff().transpose();
        case PoolMode::concat: {
            const Eigen::Index d = hidden.cols();
            Eigen::VectorXd out(3 * d);
            out << hidden.colwise().minCoeff().transpose(), hidden.colwise().maxCoeff().transpose(),
                hidden.colwise().mean().transpose();
            return out;
        }
    }
    throw Error(ErrorKind::invalid_argument, "unknown pool mode");
}

double attention_entropy(const Eigen::MatrixXd& attention, double epsilon) {
    const Eigen::Index s = attention.rows();
    if (s == 0 || attention.cols() != s) throw Error(ErrorKind::invalid_argument, "attention must be a nonempty S x S matrix");
    if ((attention.array() < 0).any()) throw Error(ErrorKind::invalid_argument, "attention has negative entries");
    double total = 0;
    for (Eigen::Index r = 0; r < s; ++r) {
        const double row_sum = attention.row(r).sum();
        if (std::abs(row_sum - 1.0) > 1e-4)
            throw Error(ErrorKind::invalid_argument, "attention row " + std::to_string(r) + " sums to " +
                                                         std::to_string(row_sum));
        for (Eigen::Index c = 0; c < s; ++c) {
            const double a = attention(r, c);
            total += a * std::log(a + epsilon);
        }
    }
    return -total / static_cast<double>(s);
}

HeadSummary attention_summary(std::span<const double> e) {
    if (e.empty()) throw Error(ErrorKind::invalid_argument, "no head entropies");
    const double n = static_cast<double>(e.size());
    HeadSummary out;
    out.mean = std::accumulate(e.begin(), e.end(), 0.0) / n;
    double ss = 0;
    for (double v : e) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / n);
    out.max = *std::max_element(e.begin(), e.end());
    return out;
}

PooledStats pooled_stats(std::span<const double> r) {
    if (r.empty()) throw Error(ErrorKind::invalid_argument, "empty pooled vector");
    for (double v : r)
        if (!std::isfinite(v)) throw Error(ErrorKind::non_finite, "pooled vector has non-finite entries");
    const double n = static_cast<double>(r.size());
    PooledStats out;
    double sum = 0, sq = 0;
    for (double v : r) {
        sum += v;
        sq += v * v;
    }
    out.norm = std::sqrt(sq);
    const double mean = sum / n;
    double ss = 0;
    for (double v : r) ss += (v - mean) * (v - mean);
    out.var = ss / n;

    // H(softmax(r)) = logsumexp(r) - sum_m p_m r_m
    const double top = *std::max_element(r.begin(), r.end());
    double z = 0;
    for (double v : r) z += std::exp(v - top);
    const double lse = top + std::log(z);
    double expect = 0;
    for (double v : r) expect += std::exp(v - lse) * v;
    out.entropy = lse - expect;
    return out;
}

std::vector<double> pooled_vector(const SampleRepresentation& sample, int layer, PoolMode mode) {
    if (mode != PoolMode::concat) {
        auto v = sample.pool(layer, mode);
        return {v.begin(), v.end()};
    }
    std::vector<double> out;
    out.reserve(3 * sample.hidden_dim());
    for (auto part : {sample.min(layer), sample.max(layer), sample.mean(layer)}) out.insert(out.end(), part.begin(), part.end());
    return out;
}

namespace {

void check_layer(const Dump& dump, int layer) {
    if (layer < 1 || layer > dump.manifest.num_layers)
        throw Error(ErrorKind::invalid_argument,
                    "unknown layer " + std::to_string(layer) + " (dump has 1.." + std::to_string(dump.manifest.num_layers) + ")");
}

}  // namespace

LayerFeatures compute_layer_features(const Dump& dump, std::span<const int> rows, int layer, PoolMode mode,
                                     Execution exec) {
    check_layer(dump, layer);
    const int n = static_cast<int>(rows.size());
    const int width = pooled_width(dump.manifest.hidden_dim, mode);
    LayerFeatures out;
    out.pool = mode;
    out.pooled.resize(n, width);
    out.stats.resize(n, 3);
    out.attention.resize(n, 3);

    auto fill = [&](int i) {
        const auto& sample = dump.samples.at(rows[i]);
        const auto r = pooled_vector(sample, layer, mode);
        for (int j = 0; j < width; ++j) out.pooled(i, j) = r[j];
        // Statistics are undefined on non-finite rows; leave them to the imputer.
        bool finite = std::all_of(r.begin(), r.end(), [](double v) { return std::isfinite(v); });
        if (finite) {
            const auto st = pooled_stats(r);
            out.stats.row(i) << st.norm, st.var, st.entropy;
        } else {
            out.stats.row(i).setConstant(std::nan(""));
        }
        const auto hs = attention_summary(sample.entropies(layer));
        out.attention.row(i) << hs.mean, hs.std, hs.max;
    };

    if (exec == Execution::parallel) {
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i) fill(i);
    } else {
        for (int i = 0; i < n; ++i) fill(i);
    }
    return out;
}

PipelineModel fit_block_reducer(const LayerFeatures& features, std::span<const int> train_rows,
                                const FeatureOptions& opts) {
    Eigen::MatrixXd block(train_rows.size(), features.pooled.cols());
    for (std::size_t i = 0; i < train_rows.size(); ++i) block.row(i) = features.pooled.row(train_rows[i]);
    PipelineOptions po;
    po.standardize = true;
    if (opts.use_pca) po.pca_dim = opts.pca_dim;
    return fit_pipeline(block, po);
}

FeatureMatrix assemble_rows(const LayerFeatures& features, std::span<const int> rows, const FeatureOptions& opts,
                            const PipelineModel* reducer) {
    const int n = static_cast<int>(rows.size());
    Eigen::MatrixXd pooled(n, features.pooled.cols());
    for (int i = 0; i < n; ++i) pooled.row(i) = features.pooled.row(rows[i]);

    FeatureMatrix out;
    Eigen::MatrixXd head;
    if (opts.use_pca) {
        if (reducer == nullptr || !reducer->pca)
            throw Error(ErrorKind::invalid_argument, "PCA features requested without a fitted reducer");
        head = reducer->transform(pooled);
        for (Eigen::Index k = 0; k < head.cols(); ++k) out.column_labels.push_back("pca:" + std::to_string(k));
    } else {
        head = std::move(pooled);
        for (Eigen::Index k = 0; k < head.cols(); ++k)
            out.column_labels.push_back(std::string("pool:") + to_string(features.pool) + ":" + std::to_string(k));
    }

    const int width = static_cast<int>(head.cols()) + (opts.include_stats ? 3 : 0) + (opts.include_attention ? 3 : 0);
    out.values.resize(n, width);
    out.values.leftCols(head.cols()) = head;
    int col = static_cast<int>(head.cols());
    if (opts.include_stats) {
        for (int i = 0; i < n; ++i) out.values.block(i, col, 1, 3) = features.stats.row(rows[i]);
        for (const char* name : {"stat:norm", "stat:var", "stat:entropy"}) out.column_labels.push_back(name);
        col += 3;
    }
    if (opts.include_attention) {
        for (int i = 0; i < n; ++i) out.values.block(i, col, 1, 3) = features.attention.row(rows[i]);
        for (const char* name : {"attn:mean", "attn:std", "attn:max"}) out.column_labels.push_back(name);
    }
    return out;
}

FeatureMatrix assemble_features(const Dump& dump, int layer, PoolMode mode, const FeatureOptions& opts,
                                const PipelineModel* reducer) {
    if (opts.use_pca && reducer != nullptr && reducer->pca &&
        reducer->pca->output_dim() > pooled_width(dump.manifest.hidden_dim, mode))
        throw Error(ErrorKind::invalid_argument, "PCA dimension exceeds pooled dimension");
    std::vector<int> rows(dump.size());
    std::iota(rows.begin(), rows.end(), 0);
    const auto features = compute_layer_features(dump, rows, layer, mode);
    return assemble_rows(features, rows, opts, reducer);
}

}  // namespace inspector
