#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "qtriage/hierarchy.hpp"

namespace qtriage {

nlohmann::json to_json(const TokenizerConfig& c);
TokenizerConfig tokenizer_from_json(const nlohmann::json& j);

nlohmann::json to_json(const PipelineConfig& c);
PipelineConfig pipeline_from_json(const nlohmann::json& j);

nlohmann::json to_json(const Hyperparams& h);
Hyperparams hyperparams_from_json(const nlohmann::json& j);

nlohmann::json to_json(const StrategySpec& s);

nlohmann::json to_json(const TrainedLearner& m);
TrainedLearner learner_from_json(const nlohmann::json& j);

nlohmann::json to_json(const StrategyModel& m);
StrategyModel strategy_model_from_json(const nlohmann::json& j);

/// Model file: strategy parameters, vocabulary, tokenizer and training metadata.
struct ModelFile {
    static constexpr int kFormatVersion = 1;

    StrategyModel model;
    std::string corpus_digest;
    std::uint64_t seed = 0;
    std::string timestamp;  // metadata only, never read back into a computation
};

nlohmann::json to_json(const ModelFile& f);
ModelFile model_file_from_json(const nlohmann::json& j);

void save_model(const ModelFile& f, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

/// Digest of the model document with the timestamp removed.
std::string model_content_digest(const nlohmann::json& model_doc);

}  // namespace qtriage
