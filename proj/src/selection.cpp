#include "inspector/selection.hpp"

#include "inspector/error.hpp"
#include "inspector/log.hpp"
#include "inspector/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <set>

namespace inspector {

std::string layers_to_string(const LayerSet& layers) {
    std::string out;
    for (std::size_t i = 0; i < layers.size(); ++i) out += (i ? "|" : "") + std::to_string(layers[i]);
    return out;
}

LayerSet topk_unique_layers(const ProbeRanking& ranking, int k) {
    if (k < 1) throw Error(ErrorKind::invalid_argument, "K must be >= 1");
    if (ranking.entries.empty()) throw Error(ErrorKind::invalid_argument, "ranking is empty");
    LayerSet out;
    std::set<int> seen;
    for (const auto& e : ranking.entries) {
        if (static_cast<int>(out.size()) == k) break;
        if (seen.insert(e.config.layer).second) out.push_back(e.config.layer);
    }
    if (static_cast<int>(out.size()) < k)
        warn("top-K requested " + std::to_string(k) + " layers but the ranking has only " +
             std::to_string(out.size()) + " distinct layers");
    return out;
}

FeatureMatrix concat_multilayer(const Dump& dump, std::span<const int> rows, const LayerSet& layers, PoolMode pool,
                                bool include_attention) {
    if (layers.empty()) throw Error(ErrorKind::invalid_argument, "layer set is empty");
    for (int l : layers)
        if (l < 1 || l > dump.manifest.num_layers)
            throw Error(ErrorKind::invalid_argument, "unknown layer " + std::to_string(l) + " (dump has 1.." +
                                                         std::to_string(dump.manifest.num_layers) + ")");
    const int dp = pooled_width(dump.manifest.hidden_dim, pool);
    const int s = static_cast<int>(layers.size());
    const int width = s * dp + (include_attention ? 3 * s : 0);
    FeatureMatrix out;
    out.values.resize(static_cast<Eigen::Index>(rows.size()), width);
    for (int l : layers)
        for (int j = 0; j < dp; ++j)
            out.column_labels.push_back("L" + std::to_string(l) + ":pool:" + to_string(pool) + ":" + std::to_string(j));
    if (include_attention)
        for (int l : layers)
            for (const char* name : {"mean", "std", "max"})
                out.column_labels.push_back("L" + std::to_string(l) + ":attn:" + name);

    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& sample = dump.samples.at(rows[i]);
        int col = 0;
        for (int l : layers) {
            const auto r = pooled_vector(sample, l, pool);
            for (int j = 0; j < dp; ++j) out.values(static_cast<Eigen::Index>(i), col++) = r[j];
        }
        if (include_attention) {
            for (int l : layers) {
                const auto hs = attention_summary(sample.entropies(l));
                out.values(static_cast<Eigen::Index>(i), col++) = hs.mean;
                out.values(static_cast<Eigen::Index>(i), col++) = hs.std;
                out.values(static_cast<Eigen::Index>(i), col++) = hs.max;
            }
        }
    }
    return out;
}

FeatureMatrix concat_multilayer(const Dump& dump, const LayerSet& layers, PoolMode pool, bool include_attention) {
    std::vector<int> rows(dump.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<int>(i);
    return concat_multilayer(dump, rows, layers, pool, include_attention);
}

GreedyResult greedy_layer_selection(std::span<const int> layers, const std::function<double(const LayerSet&)>& eval) {
    if (layers.empty()) throw Error(ErrorKind::invalid_argument, "greedy selection needs at least one layer");
    GreedyResult result;
    result.layers = {layers.front()};
    result.score = eval(result.layers);
    result.trace.push_back({result.layers, result.score, true});
    for (std::size_t i = 1; i < layers.size(); ++i) {
        LayerSet trial = result.layers;
        trial.push_back(layers[i]);
        const double score = eval(trial);
        const bool keep = score > result.score + kImprovementThreshold;
        result.trace.push_back({trial, score, keep});
        if (keep) {
            result.layers = std::move(trial);
            result.score = score;
        }
    }
    return result;
}

bool candidate_better(const CandidateResult& a, const CandidateResult& b) {
    if (a.mean != b.mean) return a.mean > b.mean;
    if (a.std != b.std) return a.std < b.std;
    if (a.layers.size() != b.layers.size()) return a.layers.size() < b.layers.size();
    if (a.layers != b.layers) return a.layers < b.layers;
    return static_cast<int>(a.family) < static_cast<int>(b.family);
}

std::size_t pick_candidate(std::span<const CandidateResult> candidates) {
    if (candidates.empty()) throw Error(ErrorKind::invalid_argument, "no viable candidate");
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
        if (candidate_better(candidates[i], candidates[best])) best = i;
    return best;
}

void write_candidate_csv(std::span<const CandidateResult> candidates, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path);
    out.precision(17);
    out << "layers,pool,family,hyperparameters,mean,std,macro_f1_mean,include_attention,selected\n";
    for (const auto& c : candidates) {
        std::string params;
        for (char ch : c.spec.params().dump()) params += ch == '"' ? std::string("\"\"") : std::string(1, ch);
        out << layers_to_string(c.layers) << ',' << to_string(c.pool) << ',' << to_string(c.family) << ",\"" << params
            << "\"," << c.mean << ',' << c.std << ',' << c.macro_f1_mean << ',' << (c.include_attention ? 1 : 0) << ','
            << (c.selected ? 1 : 0) << '\n';
    }
}

SelectionResult select_final(const Dump& dump, const ProbeTask& task, const ProbeRanking& ranking,
                             const SelectionOptions& options) {
    if (options.pools.empty() || options.families.empty())
        throw Error(ErrorKind::invalid_argument, "selection needs at least one pool and one family");
    ProbeRanking ordered = ranking;
    ordered.sort_by(options.target);
    const LayerSet top = topk_unique_layers(ordered, options.top_k);

    const auto& y = task.labels(options.target);
    const auto& folds = task.folds(options.target);
    PipelineOptions pipeline{true, options.pca_dim};

    SelectionResult result;
    for (auto pool : options.pools) {
        // Growth is scored by the sweep's logistic probe on the multi-layer features.
        auto eval = [&](const LayerSet& layers) {
            const auto x = concat_multilayer(dump, task.rows, layers, pool, options.include_attention);
            std::vector<double> acc;
            for (int f = 0; f < folds.k; ++f) {
                const auto train = folds.train_rows(f), test = folds.test_rows(f);
                Eigen::MatrixXd xt(train.size(), x.cols()), xv(test.size(), x.cols());
                std::vector<int> yt, yv;
                for (std::size_t i = 0; i < train.size(); ++i) {
                    xt.row(i) = x.values.row(train[i]);
                    yt.push_back(y[train[i]]);
                }
                for (std::size_t i = 0; i < test.size(); ++i) {
                    xv.row(i) = x.values.row(test[i]);
                    yv.push_back(y[test[i]]);
                }
                const auto model = fit_pipeline(xt, pipeline);
                const auto probe = fit_logistic_probe(model.transform(xt), yt, sweep_probe_options());
                acc.push_back(compute_metrics(yv, probe.predict(model.transform(xv))).accuracy);
            }
            return mean_std(acc).mean;
        };
        result.growth.push_back(greedy_layer_selection(top, eval));
    }

    // Grid search per (pool, family); candidate score is the winner's CV accuracy.
    std::vector<GridResult> grids;
    for (std::size_t p = 0; p < options.pools.size(); ++p) {
        const auto& layers = result.growth[p].layers;
        const auto x = concat_multilayer(dump, task.rows, layers, options.pools[p], options.include_attention);
        for (auto family : options.families) {
            auto grid = grid_search(family, x.values, y, folds, pipeline, options.seed, options.exec);
            const auto& best = grid.best_point();
            CandidateResult c;
            c.layers = layers;
            c.pool = options.pools[p];
            c.family = family;
            c.spec = best.spec;
            c.mean = best.accuracy_mean;
            c.std = best.accuracy_std;
            c.macro_f1_mean = best.macro_f1_mean;
            c.include_attention = options.include_attention;
            result.candidates.push_back(std::move(c));
            grids.push_back(std::move(grid));
        }
    }
    result.selected = pick_candidate(result.candidates);
    result.candidates[result.selected].selected = true;
    result.pipeline = std::move(grids[result.selected].pipeline);
    result.classifier = std::move(grids[result.selected].refit);
    return result;
}

}  // namespace inspector
