#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "inspector/config.hpp"
#include "inspector/dumpio.hpp"
#include "inspector/error.hpp"
#include "inspector/judge.hpp"
#include "inspector/metrics.hpp"
#include "inspector/probes.hpp"
#include "inspector/selection.hpp"

namespace inspector {

// Labeled, downsampled and split view of one aspect's dump. Row vectors index
// into `dump`; score vectors are aligned with them.
struct AspectData {
    std::string aspect;
    Dump dump;
    SplitIndex split;
    std::vector<int> train_rows;
    std::vector<int> test_rows;
    std::vector<int> train_scores;
    std::vector<int> test_scores;
    ProbeTask task;  // over train_rows
};

AspectData prepare_aspect(const RunConfig& config, const std::string& aspect, const LabelTable& labels);

struct BuildSummary {
    std::string aspect;
    std::string artifact_path;
    SelectionResult selection;
    Metrics test_metrics;
    double test_majority = 0;
};

struct ScoreSummary {
    std::map<std::string, ScoreResult> by_aspect;
    std::optional<FilterReport> filter;
};

std::string aspect_dir(const RunConfig& config, const std::string& aspect);

std::map<std::string, ProbeRanking> cmd_probe(const RunConfig& config);
std::map<std::string, BuildSummary> cmd_build(const RunConfig& config);
ScoreSummary cmd_score(const RunConfig& config);
// probe -> build -> score over every configured aspect; scoring uses the built artifacts.
ScoreSummary run_all(const RunConfig& config);

// 2: missing input, 3: dimension mismatch, 1: anything else.
int exit_code_for(ErrorKind kind);
nlohmann::json error_json(const Error& error);

// Full command-line entry point; returns the process exit code.
int run_cli(int argc, const char* const* argv);

}  // namespace inspector
