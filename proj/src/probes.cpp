#include "inspector/probes.hpp"

#include "inspector/error.hpp"
#include "inspector/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

using nlohmann::json;

namespace inspector {

const char* to_string(Target target) { return target == Target::bin ? "bin" : "multi"; }

Target parse_target(std::string_view text) {
    if (text == "bin") return Target::bin;
    if (text == "multi") return Target::multi;
    throw Error(ErrorKind::invalid_argument, "unknown target '" + std::string(text) + "' (expected bin or multi)");
}

std::string ProbeConfig::key() const {
    return "layer=" + std::to_string(layer) + ";pool=" + to_string(pool) + ";opts=" + opts.key();
}

MeanStd mean_std(std::span<const double> values) {
    MeanStd out;
    if (values.empty()) return out;
    const double n = static_cast<double>(values.size());
    out.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0;
    for (double v : values) ss += (v - out.mean) * (v - out.mean);
    out.std = std::sqrt(ss / n);
    return out;
}

ProbeTask make_probe_task(std::vector<int> rows, std::span<const int> scores, int tau, int k, std::uint64_t seed) {
    if (rows.size() != scores.size()) throw Error(ErrorKind::dimension_mismatch, "rows and scores differ in length");
    ProbeTask task;
    task.rows = std::move(rows);
    task.y_multi.assign(scores.begin(), scores.end());
    task.y_bin = binarize_labels(scores, tau);
    task.folds_bin = stratified_kfold(task.y_bin, k, seed, true);
    task.folds_multi = stratified_kfold(task.y_multi, k, seed, true);
    return task;
}

CvResult cross_validate(const LayerFeatures& features, std::span<const int> labels, const FoldAssignment& folds,
                        const FeatureOptions& opts, const LogisticOptions& probe_opts) {
    if (static_cast<Eigen::Index>(labels.size()) != features.pooled.rows() || folds.fold_of.size() != labels.size())
        throw Error(ErrorKind::dimension_mismatch, "features, labels and folds must align");
    std::vector<double> acc, macro, weighted;
    for (int fold = 0; fold < folds.k; ++fold) {
        const auto train = folds.train_rows(fold);
        const auto test = folds.test_rows(fold);
        if (test.empty()) continue;
        std::vector<int> y_train, y_test;
        for (int r : train) y_train.push_back(labels[r]);
        for (int r : test) y_test.push_back(labels[r]);
        if (std::all_of(y_train.begin(), y_train.end(), [&](int v) { return v == y_train.front(); }))
            throw Error(ErrorKind::degenerate_labels,
                        "fold " + std::to_string(fold) + " has a single class in its training portion");

        std::optional<PipelineModel> reducer;
        if (opts.use_pca) reducer = fit_block_reducer(features, train, opts);
        const auto x_train = assemble_rows(features, train, opts, reducer ? &*reducer : nullptr);
        const auto x_test = assemble_rows(features, test, opts, reducer ? &*reducer : nullptr);
        const auto scaler = fit_pipeline(x_train.values, PipelineOptions{true, std::nullopt});
        const auto probe = fit_logistic_probe(scaler.transform(x_train.values), y_train, probe_opts);
        const auto pred = probe.predict(scaler.transform(x_test.values));
        const auto m = compute_metrics(y_test, pred);
        acc.push_back(m.accuracy);
        macro.push_back(m.macro_f1);
        weighted.push_back(m.weighted_f1);
    }
    CvResult out;
    out.accuracy = mean_std(acc);
    out.macro_f1 = mean_std(macro);
    out.weighted_f1 = mean_std(weighted);
    out.fold_accuracy = std::move(acc);
    return out;
}

CvResult cross_validate(const ProbeConfig& config, const Dump& dump, const ProbeTask& task, Target target) {
    const auto features = compute_layer_features(dump, task.rows, config.layer, config.pool);
    return cross_validate(features, task.labels(target), task.folds(target), config.opts);
}

// ---- ranking ----

namespace {

bool better_entry(const RankedEntry& a, const RankedEntry& b, Target t) {
    if (a.perf.mean(t) != b.perf.mean(t)) return a.perf.mean(t) > b.perf.mean(t);
    if (a.perf.std(t) != b.perf.std(t)) return a.perf.std(t) < b.perf.std(t);
    return a.config.layer < b.config.layer;
}

json config_json(const ProbeConfig& c) { return json{{"layer", c.layer}, {"pool", to_string(c.pool)}, {"opts", c.opts.key()}}; }

}  // namespace

void ProbeRanking::sort_by(Target t) {
    criterion = t;
    std::stable_sort(entries.begin(), entries.end(),
                     [t](const RankedEntry& a, const RankedEntry& b) { return better_entry(a, b, t); });
}

std::vector<LayerProgression> ProbeRanking::progression() const {
    std::map<int, const RankedEntry*> best;
    for (const auto& e : entries) {
        auto it = best.find(e.config.layer);
        if (it == best.end() || better_entry(e, *it->second, criterion)) best[e.config.layer] = &e;
    }
    std::vector<LayerProgression> out;
    for (const auto& [layer, e] : best)
        out.push_back({layer, e->config.pool, e->config.opts.key(), e->perf.mean(criterion), e->perf.std(criterion)});
    return out;
}

json ProbeRanking::to_json() const {
    json arr = json::array();
    for (const auto& e : entries) {
        json row = config_json(e.config);
        row["a_bin_mean"] = e.perf.a_bin_mean;
        row["a_bin_std"] = e.perf.a_bin_std;
        row["a_multi_mean"] = e.perf.a_multi_mean;
        row["a_multi_std"] = e.perf.a_multi_std;
        row["bin_weighted_f1"] = e.bin_weighted_f1;
        row["multi_weighted_f1"] = e.multi_weighted_f1;
        arr.push_back(std::move(row));
    }
    return json{{"criterion", to_string(criterion)},
                {"majority_baseline", {{"bin", majority_bin}, {"multi", majority_multi}}},
                {"entries", arr}};
}

ProbeRanking ProbeRanking::from_json(const json& j) {
    ProbeRanking r;
    try {
        r.criterion = parse_target(j.at("criterion").get<std::string>());
        r.majority_bin = j.at("majority_baseline").at("bin").get<double>();
        r.majority_multi = j.at("majority_baseline").at("multi").get<double>();
        for (const auto& row : j.at("entries")) {
            RankedEntry e;
            e.config.layer = row.at("layer").get<int>();
            e.config.pool = parse_pool_mode(row.at("pool").get<std::string>());
            e.config.opts = parse_feature_options(row.at("opts").get<std::string>());
            e.perf = {row.at("a_bin_mean").get<double>(), row.at("a_bin_std").get<double>(),
                      row.at("a_multi_mean").get<double>(), row.at("a_multi_std").get<double>()};
            e.bin_weighted_f1 = row.value("bin_weighted_f1", 0.0);
            e.multi_weighted_f1 = row.value("multi_weighted_f1", 0.0);
            r.entries.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::format, std::string("malformed ranking: ") + e.what());
    }
    return r;
}

void ProbeRanking::write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path);
    out.precision(17);
    out << "rank,layer,pool,opts,a_bin_mean,a_bin_std,a_multi_mean,a_multi_std\n";
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        out << i + 1 << ',' << e.config.layer << ',' << to_string(e.config.pool) << ',' << e.config.opts.key() << ','
            << e.perf.a_bin_mean << ',' << e.perf.a_bin_std << ',' << e.perf.a_multi_mean << ',' << e.perf.a_multi_std
            << '\n';
    }
}

void ProbeRanking::write_progression_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path);
    out.precision(17);
    out << "layer,best_pool,best_opts,criterion,mean,std\n";
    for (const auto& p : progression())
        out << p.layer << ',' << to_string(p.best_pool) << ',' << p.best_opts << ',' << to_string(criterion) << ','
            << p.best_mean << ',' << p.best_std << '\n';
}

ProbeRanking sweep_and_rank(const Dump& dump, const ProbeTask& task, const SweepOptions& options) {
    if (task.rows.size() != task.y_bin.size() || task.rows.size() != task.y_multi.size())
        throw Error(ErrorKind::dimension_mismatch, "probe task rows and labels differ in length");
    if (options.pools.empty() || options.variants.empty())
        throw Error(ErrorKind::invalid_argument, "sweep needs at least one pool and one feature variant");

    struct Item {
        int layer;
        PoolMode pool;
    };
    std::vector<Item> items;
    for (int layer = 1; layer <= dump.manifest.num_layers; ++layer)
        for (auto pool : options.pools) items.push_back({layer, pool});

    const std::size_t per_item = options.variants.size();
    std::vector<RankedEntry> slots(items.size() * per_item);

    auto evaluate = [&](std::size_t idx) {
        const auto& item = items[idx];
        const auto features = compute_layer_features(dump, task.rows, item.layer, item.pool);
        for (std::size_t v = 0; v < per_item; ++v) {
            RankedEntry& e = slots[idx * per_item + v];
            e.config = {item.layer, item.pool, options.variants[v]};
            const auto bin = cross_validate(features, task.y_bin, task.folds_bin, e.config.opts);
            e.perf.a_bin_mean = bin.accuracy.mean;
            e.perf.a_bin_std = bin.accuracy.std;
            e.bin_weighted_f1 = bin.weighted_f1.mean;
            if (options.evaluate_multi) {
                const auto multi = cross_validate(features, task.y_multi, task.folds_multi, e.config.opts);
                e.perf.a_multi_mean = multi.accuracy.mean;
                e.perf.a_multi_std = multi.accuracy.std;
                e.multi_weighted_f1 = multi.weighted_f1.mean;
            }
        }
    };

    const auto n_items = static_cast<std::ptrdiff_t>(items.size());
    if (options.exec == Execution::parallel) {
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t i = 0; i < n_items; ++i) {
            try {
                evaluate(static_cast<std::size_t>(i));
            } catch (...) {
#pragma omp critical(inspector_sweep_failure)
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    } else {
        for (std::ptrdiff_t i = 0; i < n_items; ++i) evaluate(static_cast<std::size_t>(i));
    }

    ProbeRanking ranking;
    ranking.entries = std::move(slots);
    ranking.majority_bin = majority_baseline(task.y_bin);
    ranking.majority_multi = majority_baseline(task.y_multi);
    ranking.sort_by(options.criterion);
    return ranking;
}

}  // namespace inspector
