#include "inspector/app.hpp"

#include "inspector/log.hpp"
#include "inspector/parallel.hpp"
#include "inspector/version.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

namespace inspector {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void ensure_dir(const std::string& path) {
    std::error_code ec;
    fs::create_directories(path, ec);
    if (!fs::is_directory(path)) throw Error(ErrorKind::io, "cannot create directory " + path);
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "cannot write " + path);
    out << j.dump(2) << '\n';
}

std::string ranking_path(const RunConfig& c, const std::string& aspect) {
    return aspect_dir(c, aspect) + "/ranking.json";
}

std::string artifact_path(const RunConfig& c, const std::string& aspect) {
    return c.out + "/artifacts/" + artifact_file_name(aspect, c.gamma);
}

void require_dumps(const RunConfig& c) {
    if (c.dumps.empty()) throw Error(ErrorKind::not_found, "no dump configured (use --dump or the 'dumps' key)");
    if (c.labels.empty()) throw Error(ErrorKind::labels_not_found, "no label file configured");
}

ProbeRanking probe_aspect(const RunConfig& c, const AspectData& data) {
    SweepOptions sweep;
    sweep.pools = c.pools;
    sweep.variants = {c.feature_options()};
    sweep.criterion = c.gamma;
    return sweep_and_rank(data.dump, data.task, sweep);
}

}  // namespace

std::string aspect_dir(const RunConfig& config, const std::string& aspect) { return config.out + "/" + aspect; }

AspectData prepare_aspect(const RunConfig& c, const std::string& aspect, const LabelTable& labels) {
    AspectData d;
    d.aspect = aspect;
    d.dump = read_dump(c.dumps.at(aspect));

    std::vector<std::string> ids;
    std::vector<int> scores;
    std::size_t unlabeled = 0;
    for (const auto& id : d.dump.manifest.sample_ids) {
        if (auto s = labels.get(id, aspect)) {
            ids.push_back(id);
            scores.push_back(*s);
        } else {
            ++unlabeled;
        }
    }
    if (ids.empty()) throw Error(ErrorKind::labels_not_found, "no labels for aspect '" + aspect + "'");
    if (unlabeled) warn(aspect + ": " + std::to_string(unlabeled) + " dump samples have no label and are skipped");

    if (c.downsample) {
        const auto kept = balanced_downsample(ids, scores, c.seed);
        std::vector<int> kept_scores;
        for (const auto& id : kept) kept_scores.push_back(*labels.get(id, aspect));
        ids = kept;
        scores = std::move(kept_scores);
    }

    // Stratifying on the 1..5 scores keeps both targets balanced in train and test.
    d.split = split_train_test(ids, scores, c.split_ratio, c.seed);
    for (const auto& id : d.split.train_ids) {
        d.train_rows.push_back(static_cast<int>(d.dump.index_of(id)));
        d.train_scores.push_back(*labels.get(id, aspect));
    }
    for (const auto& id : d.split.test_ids) {
        d.test_rows.push_back(static_cast<int>(d.dump.index_of(id)));
        d.test_scores.push_back(*labels.get(id, aspect));
    }
    d.task = make_probe_task(d.train_rows, d.train_scores, c.tau, c.folds, c.seed);
    return d;
}

std::map<std::string, ProbeRanking> cmd_probe(const RunConfig& c) {
    c.validate();
    require_dumps(c);
    const auto labels = read_labels_jsonl(c.labels);
    std::map<std::string, ProbeRanking> out;
    for (const auto& [aspect, path] : c.dumps) {
        const auto data = prepare_aspect(c, aspect, labels);
        auto ranking = probe_aspect(c, data);
        const auto dir = aspect_dir(c, aspect);
        ensure_dir(dir);
        write_json(data.split.to_json(), dir + "/split.json");
        std::vector<std::string> train_ids = data.split.train_ids;
        write_json(json{{"bin", data.task.folds_bin.to_json(train_ids)}, {"multi", data.task.folds_multi.to_json(train_ids)}},
                   dir + "/folds.json");
        write_json(ranking.to_json(), ranking_path(c, aspect));
        ranking.write_csv(dir + "/ranking.csv");
        ranking.write_progression_csv(dir + "/progression.csv");
        std::cout << aspect << ": best " << ranking.entries.front().config.key() << " "
                  << to_string(c.gamma) << " accuracy " << ranking.entries.front().perf.mean(c.gamma) << '\n';
        out.emplace(aspect, std::move(ranking));
    }
    return out;
}

std::map<std::string, BuildSummary> cmd_build(const RunConfig& c) {
    c.validate();
    require_dumps(c);
    const auto labels = read_labels_jsonl(c.labels);
    std::map<std::string, BuildSummary> out;
    for (const auto& [aspect, path] : c.dumps) {
        const auto data = prepare_aspect(c, aspect, labels);
        const auto dir = aspect_dir(c, aspect);
        ensure_dir(dir);
        ProbeRanking ranking;
        if (fs::exists(ranking_path(c, aspect))) {
            std::ifstream in(ranking_path(c, aspect));
            json j;
            try {
                in >> j;
            } catch (const json::exception& e) {
                throw Error(ErrorKind::format, ranking_path(c, aspect) + ": " + e.what());
            }
            ranking = ProbeRanking::from_json(j);
        } else {
            ranking = probe_aspect(c, data);
        }

        SelectionOptions sel;
        sel.top_k = c.topk;
        sel.target = c.gamma;
        sel.pools = c.pools;
        sel.families = c.families;
        sel.include_attention = c.include_attention;
        sel.seed = c.seed;

        BuildSummary summary;
        summary.aspect = aspect;
        summary.selection = select_final(data.dump, data.task, ranking, sel);
        const auto& best = summary.selection.best();
        write_candidate_csv(summary.selection.candidates,
                            dir + "/candidates." + std::string(to_string(c.gamma)) + ".csv");

        EvaluatorArtifact artifact;
        artifact.aspect = aspect;
        artifact.target = c.gamma;
        artifact.tau = c.tau;
        artifact.layers = best.layers;
        artifact.pool = best.pool;
        artifact.include_attention = best.include_attention;
        artifact.pipeline = summary.selection.pipeline;
        artifact.classifier = summary.selection.classifier;
        const auto& m = data.dump.manifest;
        artifact.provenance = {m.model_id, m.num_layers, m.hidden_dim, m.num_heads, c.seed, kToolkitVersion};
        ensure_dir(c.out + "/artifacts");
        summary.artifact_path = artifact_path(c, aspect);
        save_artifact(artifact, summary.artifact_path);

        // Held-out evaluation on the 20% split.
        const auto x = concat_multilayer(data.dump, data.test_rows, best.layers, best.pool, best.include_attention);
        const auto pred = artifact.classifier.predict(artifact.pipeline.transform(x.values));
        const auto truth = c.gamma == Target::bin ? binarize_labels(data.test_scores, c.tau) : data.test_scores;
        summary.test_metrics = compute_metrics(truth, pred);
        summary.test_majority = majority_baseline(truth);
        write_json(json{{"aspect", aspect},
                        {"gamma", to_string(c.gamma)},
                        {"layers", best.layers},
                        {"pool", to_string(best.pool)},
                        {"family", to_string(best.family)},
                        {"params", best.spec.params()},
                        {"cv_accuracy_mean", best.mean},
                        {"cv_accuracy_std", best.std},
                        {"test_size", truth.size()},
                        {"test_accuracy", summary.test_metrics.accuracy},
                        {"test_macro_f1", summary.test_metrics.macro_f1},
                        {"test_weighted_f1", summary.test_metrics.weighted_f1},
                        {"majority_baseline", summary.test_majority}},
                   dir + "/test_report." + std::string(to_string(c.gamma)) + ".json");
        std::cout << aspect << ": S=" << layers_to_string(best.layers) << " p=" << to_string(best.pool) << " "
                  << best.spec.describe() << " cv " << best.mean << " test weighted F1 "
                  << summary.test_metrics.weighted_f1 << '\n';
        out.emplace(aspect, std::move(summary));
    }
    return out;
}

ScoreSummary cmd_score(const RunConfig& c) {
    if (c.artifacts.empty()) throw Error(ErrorKind::not_found, "no artifacts supplied");
    std::map<std::string, Dump> dumps;
    auto dump_for = [&](const std::string& aspect) -> const Dump& {
        std::string path;
        if (auto it = c.dumps.find(aspect); it != c.dumps.end()) path = it->second;
        else if (!c.score_dump.empty()) path = c.score_dump;
        else throw Error(ErrorKind::not_found, "no dump to score for aspect '" + aspect + "'");
        auto it = dumps.find(path);
        if (it == dumps.end()) it = dumps.emplace(path, read_dump(path)).first;
        return it->second;
    };

    ScoreSummary summary;
    std::map<std::string, AspectScores> binary;
    ensure_dir(c.out + "/scores");
    for (const auto& path : c.artifacts) {
        if (!fs::exists(path)) throw Error(ErrorKind::not_found, "artifact not found: " + path);
        const auto artifact = load_artifact(path);
        auto result = score_samples(artifact, dump_for(artifact.aspect));
        const std::string key = artifact.aspect + "." + to_string(artifact.target);
        result.write_csv(c.out + "/scores/" + key + ".csv");
        if (artifact.target == Target::bin) binary[artifact.aspect] = to_aspect_scores(result);
        summary.by_aspect.emplace(key, std::move(result));
    }

    const bool all_aspects = std::all_of(kCanonicalAspects.begin(), kCanonicalAspects.end(),
                                         [&](const char* a) { return binary.count(a) > 0; });
    if (all_aspects) {
        summary.filter = aggregate_aspects(binary);
        summary.filter->write_jsonl(c.out + "/filter_report.jsonl");
        summary.filter->write_csv(c.out + "/filter_report.csv");
        write_json(summary.filter->slices_json(), c.out + "/slices.json");
        std::cout << "filtered " << summary.filter->rows.size() << " samples into "
                  << summary.filter->ranking.slice_sizes.size() << " nested slices\n";
    } else {
        std::cout << "scored " << summary.by_aspect.size() << " artifact(s)\n";
    }
    return summary;
}

ScoreSummary run_all(const RunConfig& config) {
    cmd_probe(config);
    const auto built = cmd_build(config);
    RunConfig scoring = config;
    scoring.artifacts.clear();
    for (const auto& [aspect, b] : built) scoring.artifacts.push_back(b.artifact_path);
    return cmd_score(scoring);
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::labels_not_found:
        case ErrorKind::not_found: return 2;
        case ErrorKind::dimension_mismatch: return 3;
        default: return 1;
    }
}

json error_json(const Error& error) {
    return json{{"error", to_string(error.kind())}, {"message", error.what()}};
}

namespace {

// Reads only the aspect field of a dump manifest.
std::string manifest_aspect(const std::string& dump_path) {
    const auto path = dump_path + "/manifest.json";
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::not_found, "no manifest.json under " + dump_path);
    try {
        json j;
        in >> j;
        return j.at("aspect").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::format, path + ": " + e.what());
    }
}

struct Flags {
    std::string config_file;
    std::vector<std::string> dumps;
    std::string labels;
    int tau = 0, pca_dim = 0, topk = 0, folds = 0;
    std::uint64_t seed = 0;
    std::string gamma, pools, families, out, score_dump;
    double split_ratio = 0;
    bool no_downsample = false, no_attention = false, no_stats = false;
    std::vector<std::string> artifacts;
    std::map<std::string, CLI::Option*> opt;
};

void add_run_flags(CLI::App* cmd, Flags& f) {
    f.opt["config"] = cmd->add_option("--config", f.config_file, "JSON config file");
    f.opt["dump"] = cmd->add_option("--dump", f.dumps, "dump directory, optionally as aspect=path (repeatable)");
    f.opt["labels"] = cmd->add_option("--labels", f.labels, "label JSON-lines file");
    f.opt["seed"] = cmd->add_option("--seed", f.seed, "random seed");
    f.opt["tau"] = cmd->add_option("--tau", f.tau, "binarization threshold");
    f.opt["pca_dim"] = cmd->add_option("--pca-dim", f.pca_dim, "PCA dimension for probes (0 disables)");
    f.opt["topk"] = cmd->add_option("--topk", f.topk, "number of unique top layers");
    f.opt["folds"] = cmd->add_option("--folds", f.folds, "cross-validation folds");
    f.opt["gamma"] = cmd->add_option("--gamma", f.gamma, "selection criterion")->check(CLI::IsMember({"bin", "multi"}));
    f.opt["pools"] = cmd->add_option("--pools", f.pools, "comma-separated pools");
    f.opt["families"] = cmd->add_option("--families", f.families, "comma-separated classifier families");
    f.opt["out"] = cmd->add_option("--out", f.out, "output directory");
    f.opt["split_ratio"] = cmd->add_option("--split-ratio", f.split_ratio, "train fraction of the split");
    f.opt["artifact"] = cmd->add_option("--artifact", f.artifacts, "artifact file (repeatable)");
    f.opt["score_dump"] = cmd->add_option("--score-dump", f.score_dump, "dump to score when no per-aspect dump is set");
    cmd->add_flag("--no-downsample", f.no_downsample, "keep all labeled samples");
    cmd->add_flag("--no-attention", f.no_attention, "drop attention summaries");
    cmd->add_flag("--no-stats", f.no_stats, "drop pooled-vector statistics from probes");
}

RunConfig resolve_config(const Flags& f) {
    RunConfig c;
    if (!f.config_file.empty()) c = RunConfig::load(f.config_file, c);
    auto given = [&](const char* name) { return f.opt.at(name)->count() > 0; };
    if (given("dump")) {
        c.dumps.clear();
        for (const auto& d : f.dumps) {
            const auto eq = d.find('=');
            if (eq == std::string::npos) c.dumps[manifest_aspect(d)] = d;
            else c.dumps[d.substr(0, eq)] = d.substr(eq + 1);
        }
    }
    if (given("labels")) c.labels = f.labels;
    if (given("seed")) c.seed = f.seed;
    if (given("tau")) c.tau = f.tau;
    if (given("pca_dim")) c.pca_dim = f.pca_dim;
    if (given("topk")) c.topk = f.topk;
    if (given("folds")) c.folds = f.folds;
    if (given("gamma")) c.gamma = parse_target(f.gamma);
    if (given("pools")) c.pools = parse_pool_list(f.pools);
    if (given("families")) c.families = parse_family_list(f.families);
    if (given("out")) c.out = f.out;
    if (given("split_ratio")) c.split_ratio = f.split_ratio;
    if (given("artifact")) c.artifacts = f.artifacts;
    if (given("score_dump")) c.score_dump = f.score_dump;
    if (f.no_downsample) c.downsample = false;
    if (f.no_attention) c.include_attention = false;
    if (f.no_stats) c.include_stats = false;
    c.validate();
    return c;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Layer-wise probing toolkit for building small-model evaluators"};
    app.set_version_flag("--version", kToolkitVersion);
    app.require_subcommand(1);

    std::map<CLI::App*, Flags> flags;
    auto* probe = app.add_subcommand("probe", "sweep layers and pools, write rankings");
    auto* build = app.add_subcommand("build", "select layers and classifier, write evaluator artifacts");
    auto* score = app.add_subcommand("score", "score a dump with artifacts and write filter reports");
    auto* all = app.add_subcommand("run-all", "probe, build and score in one pass");
    auto* config = app.add_subcommand("config", "print the effective configuration");
    for (auto* cmd : {probe, build, score, all, config}) add_run_flags(cmd, flags[cmd]);

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "check a dump for format and value violations");
    validate->add_option("dump", validate_path, "dump directory")->required();

    SynthSpec synth_spec;
    std::string synth_out, synth_pool = "mean", synth_aspects;
    auto* synth = app.add_subcommand("synth", "write a synthetic dump with a planted signal");
    synth->add_option("--out", synth_out, "output directory")->required();
    synth->add_option("--layers", synth_spec.num_layers, "number of layers");
    synth->add_option("--hidden", synth_spec.hidden_dim, "hidden width");
    synth->add_option("--heads", synth_spec.num_heads, "attention heads");
    synth->add_option("--samples", synth_spec.num_samples, "number of samples");
    synth->add_option("--signal-layer", synth_spec.signal_layer, "layer carrying the signal");
    synth->add_option("--signal-pool", synth_pool, "pool carrying the signal");
    synth->add_option("--noise", synth_spec.noise_std, "noise standard deviation");
    synth->add_option("--signal-scale", synth_spec.signal_scale, "signal strength (0 for a null control)");
    synth->add_option("--balance", synth_spec.class_balance, "fraction of high-quality samples");
    synth->add_option("--seed", synth_spec.seed, "random seed");
    synth->add_option("--aspects", synth_aspects, "comma-separated aspects, one dump each");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        apply_thread_cap();
        if (*probe) cmd_probe(resolve_config(flags[probe]));
        else if (*build) cmd_build(resolve_config(flags[build]));
        else if (*score) cmd_score(resolve_config(flags[score]));
        else if (*all) run_all(resolve_config(flags[all]));
        else if (*config) std::cout << resolve_config(flags[config]).to_json().dump(2) << '\n';
        else if (*validate) {
            const auto report = validate_dump(read_dump(validate_path));
            std::cout << report.to_json().dump(2) << '\n';
            return report.clean() ? 0 : 1;
        } else if (*synth) {
            synth_spec.signal_pool = parse_pool_mode(synth_pool);
            std::vector<std::string> aspects;
            std::stringstream ss(synth_aspects);
            for (std::string a; std::getline(ss, a, ',');)
                if (!a.empty()) aspects.push_back(a);
            if (aspects.empty()) aspects.push_back(synth_spec.aspect);
            LabelTable labels;
            const auto base_seed = synth_spec.seed;
            for (std::size_t i = 0; i < aspects.size(); ++i) {
                synth_spec.aspect = aspects[i];
                synth_spec.seed = base_seed + i;
                const auto data = generate_synthetic_dump(synth_spec);
                const auto dir = aspects.size() == 1 ? synth_out : synth_out + "/" + aspects[i];
                write_dump(data.dump, dir);
                for (const auto& [key, s] : data.labels.entries()) labels.set(key.first, key.second, s);
                std::cout << "wrote " << data.dump.size() << " samples to " << dir << '\n';
            }
            ensure_dir(synth_out);
            write_labels_jsonl(labels, synth_out + "/labels.jsonl");
        }
    } catch (const Error& e) {
        std::cerr << error_json(e).dump() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace inspector
