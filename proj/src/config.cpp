#include "inspector/config.hpp"

#include "inspector/error.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace inspector {

using nlohmann::json;

namespace {

std::vector<std::string> split_csv(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

}  // namespace

std::vector<PoolMode> parse_pool_list(const std::string& csv) {
    std::vector<PoolMode> out;
    for (const auto& s : split_csv(csv)) out.push_back(parse_pool_mode(s));
    return out;
}

std::vector<Family> parse_family_list(const std::string& csv) {
    std::vector<Family> out;
    for (const auto& s : split_csv(csv)) out.push_back(parse_family(s));
    return out;
}

FeatureOptions RunConfig::feature_options() const {
    FeatureOptions o;
    o.use_pca = pca_dim > 0;
    o.pca_dim = pca_dim > 0 ? pca_dim : kDefaultPcaDim;
    o.include_stats = include_stats;
    o.include_attention = include_attention;
    return o;
}

json RunConfig::to_json() const {
    std::vector<std::string> pool_names, family_names;
    for (auto p : pools) pool_names.push_back(to_string(p));
    for (auto f : families) family_names.push_back(to_string(f));
    return json{{"dumps", dumps},
                {"labels", labels},
                {"tau", tau},
                {"pca_dim", pca_dim},
                {"topk", topk},
                {"folds", folds},
                {"seed", seed},
                {"gamma", to_string(gamma)},
                {"pools", pool_names},
                {"families", family_names},
                {"out", out},
                {"split_ratio", split_ratio},
                {"downsample", downsample},
                {"include_stats", include_stats},
                {"include_attention", include_attention},
                {"artifacts", artifacts},
                {"score_dump", score_dump}};
}

RunConfig RunConfig::from_json(const json& j, RunConfig c) {
    if (!j.is_object()) throw Error(ErrorKind::format, "config must be a JSON object");
    static const std::set<std::string> known = {
        "dumps", "labels", "tau",       "pca_dim",       "topk",          "folds",             "seed",
        "gamma", "pools",  "families",  "out",           "split_ratio",   "downsample",        "include_stats",
        "include_attention", "artifacts", "score_dump"};
    try {
        for (const auto& [key, v] : j.items()) {
            if (!known.count(key)) throw Error(ErrorKind::invalid_argument, "unknown config key '" + key + "'");
            if (key == "dumps") c.dumps = v.get<std::map<std::string, std::string>>();
            else if (key == "labels") c.labels = v.get<std::string>();
            else if (key == "tau") c.tau = v.get<int>();
            else if (key == "pca_dim") c.pca_dim = v.get<int>();
            else if (key == "topk") c.topk = v.get<int>();
            else if (key == "folds") c.folds = v.get<int>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else if (key == "gamma") c.gamma = parse_target(v.get<std::string>());
            else if (key == "pools") {
                c.pools.clear();
                for (const auto& s : v) c.pools.push_back(parse_pool_mode(s.get<std::string>()));
            } else if (key == "families") {
                c.families.clear();
                for (const auto& s : v) c.families.push_back(parse_family(s.get<std::string>()));
            } else if (key == "out") c.out = v.get<std::string>();
            else if (key == "split_ratio") c.split_ratio = v.get<double>();
            else if (key == "downsample") c.downsample = v.get<bool>();
            else if (key == "include_stats") c.include_stats = v.get<bool>();
            else if (key == "include_attention") c.include_attention = v.get<bool>();
            else if (key == "artifacts") c.artifacts = v.get<std::vector<std::string>>();
            else if (key == "score_dump") c.score_dump = v.get<std::string>();
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::format, std::string("bad config value: ") + e.what());
    }
    return c;
}

RunConfig RunConfig::load(const std::string& path, RunConfig base) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::not_found, "config file not found: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::format, path + ": " + e.what());
    }
    return from_json(j, std::move(base));
}

RunConfig RunConfig::from_json(const json& j) { return from_json(j, RunConfig{}); }

RunConfig RunConfig::load(const std::string& path) { return load(path, RunConfig{}); }

void RunConfig::validate() const {
    auto fail = [](const std::string& what) { throw Error(ErrorKind::invalid_argument, what); };
    if (tau < 2 || tau > 5) fail("tau must lie in [2, 5]");
    if (topk < 1) fail("topk must be >= 1");
    if (folds < 2) fail("folds must be >= 2");
    if (pca_dim < 0) fail("pca_dim must be >= 0 (0 disables PCA)");
    if (!(split_ratio > 0 && split_ratio < 1)) fail("split_ratio must lie in (0, 1)");
    if (pools.empty()) fail("at least one pool is required");
    if (families.empty()) fail("at least one classifier family is required");
}

}  // namespace inspector
