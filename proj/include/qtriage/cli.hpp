#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtriage/eval.hpp"
#include "qtriage/hierarchy.hpp"

namespace qtriage::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kTrainingError = 4 };

/// Parsed run configuration. Relative paths are resolved against the config file's directory.
struct RunConfig {
    std::filesystem::path corpus;
    StrategyMode mode = StrategyMode::Flat;
    std::vector<LearnerKind> algos;         // flat
    std::vector<LearnerKind> algos_level1;  // single-path
    std::vector<LearnerKind> algos_level2;
    PipelineConfig pipeline;
    Hyperparams hyper;
    std::size_t folds = 10;
    std::optional<std::uint64_t> seed;
    Level2Eval level2_eval = Level2Eval::PredictedRelevant;
    bool allow_sparse = false;
    std::optional<std::filesystem::path> model_path;
    std::optional<std::filesystem::path> report_path;
};

/// Throws ConfigError on any schema violation.
RunConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Command-line overrides applied on top of a config file.
struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> folds;
    std::optional<std::string> strategy;
    std::optional<std::string> algo;  // "svm", "nbm,svm" (flat list) or "nbm:svm" (single-path levels)
};

void apply_overrides(RunConfig& cfg, const Overrides& o);
/// Checks cross-field constraints (mutually exclusive strategy fields, k >= 2, seed present).
void validate(const RunConfig& cfg);

/// One spec per learner (flat) or per level-1 x level-2 pair (single-path).
std::vector<StrategySpec> expand_specs(const RunConfig& cfg);

/// Entry point shared by the qtriage binary and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace qtriage::cli
