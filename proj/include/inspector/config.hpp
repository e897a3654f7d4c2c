#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "inspector/classifiers.hpp"
#include "inspector/features.hpp"
#include "inspector/pool.hpp"
#include "inspector/probes.hpp"
#include "inspector/selection.hpp"

namespace inspector {

inline constexpr int kDefaultFolds = 5;
inline constexpr double kDefaultSplitRatio = 0.8;
inline constexpr std::uint64_t kDefaultSeed = 42;

struct RunConfig {
    std::map<std::string, std::string> dumps;  // aspect -> dump directory
    std::string labels;
    int tau = kDefaultTau;
    int pca_dim = kDefaultPcaDim;
    int topk = kDefaultTopK;
    int folds = kDefaultFolds;
    std::uint64_t seed = kDefaultSeed;
    Target gamma = Target::bin;
    std::vector<PoolMode> pools{kAllPools.begin(), kAllPools.end()};
    std::vector<Family> families{std::begin(kAllFamilies), std::end(kAllFamilies)};
    std::string out = "inspector_out";
    double split_ratio = kDefaultSplitRatio;
    bool downsample = true;
    bool include_stats = true;
    bool include_attention = true;
    std::vector<std::string> artifacts;  // score: artifact files
    std::string score_dump;              // score: dump used when no per-aspect dump is configured

    // Probe feature variant derived from pca_dim / include_* settings.
    FeatureOptions feature_options() const;

    nlohmann::json to_json() const;
    // Overlays the keys present in `j` onto `base`; unknown keys are rejected.
    static RunConfig from_json(const nlohmann::json& j, RunConfig base);
    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path, RunConfig base);
    static RunConfig load(const std::string& path);

    void validate() const;
};

std::vector<PoolMode> parse_pool_list(const std::string& csv);
std::vector<Family> parse_family_list(const std::string& csv);

}  // namespace inspector
