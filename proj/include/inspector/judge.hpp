#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "inspector/classifiers.hpp"
#include "inspector/dumpio.hpp"
#include "inspector/preprocess.hpp"
#include "inspector/probes.hpp"

namespace inspector {

inline constexpr std::uint32_t kArtifactVersion = 1;

inline constexpr std::array<const char*, 5> kCanonicalAspects = {
    "semantic_consistency", "logicality", "informativeness", "fluency", "factuality"};

struct Provenance {
    std::string model_id;
    int num_layers = 0;
    int hidden_dim = 0;
    int num_heads = 0;
    std::uint64_t seed = 0;
    std::string toolkit_version;

    nlohmann::json to_json() const;
};

struct EvaluatorArtifact {
    std::string aspect;
    Target target = Target::bin;
    int tau = kDefaultTau;
    std::vector<int> layers;
    PoolMode pool = PoolMode::mean;
    bool include_attention = true;
    PipelineModel pipeline;
    TrainedClassifier classifier;
    Provenance provenance;
};

// Container layout:
//   "INSPJDGE" | u32 version | u32 header length | JSON header |
//   u32 section count | TensorBlob sections | u32 crc32 of all preceding bytes
std::vector<std::uint8_t> serialize_artifact(const EvaluatorArtifact& artifact);
EvaluatorArtifact deserialize_artifact(std::span<const std::uint8_t> bytes, const std::string& context = "artifact");

void save_artifact(const EvaluatorArtifact& artifact, const std::string& path);
EvaluatorArtifact load_artifact(const std::string& path);

std::string artifact_file_name(const std::string& aspect, Target target);  // "<aspect>.<gamma>.inspector"

struct ScoreResult {
    std::vector<std::string> ids;  // dump order
    std::vector<int> labels;
    std::vector<int> classes;
    Eigen::MatrixXd probabilities;  // rows x classes

    // Probability of the high-quality class (binary artifacts only).
    std::vector<double> positive_probability() const;
    void write_csv(const std::string& path) const;
};

// Throws dimension_mismatch when the dump's model, L, d or R differ from provenance.
ScoreResult score_samples(const EvaluatorArtifact& artifact, const Dump& dump);

struct FilterRow {
    std::string id;
    std::array<int, 5> bits{};  // kCanonicalAspects order
    int total = 0;
    double margin = 0;  // sum over aspects of p(high) - 0.5
    int rank = 0;       // 1-based
    std::vector<bool> in_slice;
};

struct RankResult {
    std::vector<std::size_t> order;  // indices into the input, best first
    std::vector<double> fractions;
    std::vector<std::size_t> slice_sizes;  // nested prefixes of `order`
};

inline constexpr std::array<double, 10> kDefaultFractions = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

// Total desc, margin desc, id asc. Slice i is the first ceil(f_i * N) entries.
RankResult rank_and_slice(std::span<const std::string> ids, std::span<const int> totals,
                          std::span<const double> margins, std::span<const double> fractions);

struct AspectScores {
    std::vector<std::string> ids;
    std::vector<int> bits;
    std::vector<double> positive_probability;
};

struct FilterReport {
    std::vector<FilterRow> rows;  // rank order
    RankResult ranking;

    void write_jsonl(const std::string& path) const;
    void write_csv(const std::string& path) const;
    nlohmann::json slices_json() const;
};

// Requires all five canonical aspects for every sample of the first aspect's id list.
FilterReport aggregate_aspects(const std::map<std::string, AspectScores>& by_aspect,
                               std::span<const double> fractions = kDefaultFractions);

AspectScores to_aspect_scores(const ScoreResult& scores);

}  // namespace inspector
