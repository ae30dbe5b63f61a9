#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qtriage/corpus.hpp"
#include "qtriage/features.hpp"
#include "qtriage/learners.hpp"

namespace qtriage {

/// Text-to-vector settings shared by every learner in a strategy.
struct PipelineConfig {
    TokenizerConfig tokenizer;
    std::size_t min_df = 2;
    std::optional<std::size_t> top_k;  // chi-square selection on training data
    std::array<Weighting, 4> weighting{default_weighting(LearnerKind::NBM), default_weighting(LearnerKind::LG),
                                       default_weighting(LearnerKind::SVM), default_weighting(LearnerKind::BDT)};

    Weighting weighting_for(LearnerKind k) const { return weighting[static_cast<std::size_t>(k)]; }
    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

enum class StrategyMode { Flat, SinglePath };

std::string_view to_string(StrategyMode m);
std::optional<StrategyMode> parse_strategy(std::string_view s);

/// Everything needed to train one strategy model.
struct StrategySpec {
    StrategyMode mode = StrategyMode::Flat;
    LearnerKind flat_kind = LearnerKind::SVM;
    LearnerKind level1_kind = LearnerKind::NBM;
    LearnerKind level2_kind = LearnerKind::SVM;
    PipelineConfig pipeline;
    Hyperparams hyper;

    /// "svm" for flat, "nbm+svm" for single-path.
    std::string learner_name() const;
};

/// Label strings used by the learners at each level.
inline constexpr std::string_view kRelevantLabel = "relevant";
inline constexpr std::string_view kIrrelevantLabel = "irrelevant";

struct StrategyModel {
    StrategyMode mode = StrategyMode::Flat;
    PipelineConfig pipeline;
    Vocabulary vocab;
    std::optional<TrainedLearner> flat;
    std::optional<TrainedLearner> level1;  // irrelevant / relevant
    std::optional<TrainedLearner> level2;  // effective / ineffective

    SparseVector features(std::string_view text, LearnerKind kind) const;

    friend bool operator==(const StrategyModel&, const StrategyModel&) = default;
};

struct LevelTrace {
    std::string level;  // "flat", "relevance" or "efficacy"
    std::vector<std::string> labels;
    Prediction prediction;
};

struct StrategyPrediction {
    Leaf leaf = Leaf::Irrelevant;
    std::vector<LevelTrace> path;

    bool efficacy_invoked() const { return path.size() == 2; }
};

/// Training uses the labeled questions only; the vocabulary is built from their texts.
StrategyModel train_flat(std::span<const Question> questions, LearnerKind kind, const PipelineConfig& pipeline,
                         const Hyperparams& h);
StrategyModel train_single_path(std::span<const Question> questions, LearnerKind level1, LearnerKind level2,
                                const PipelineConfig& pipeline, const Hyperparams& h);
StrategyModel train_strategy(const StrategySpec& spec, std::span<const Question> questions);

inline StrategyModel train_flat(const Corpus& c, LearnerKind kind, const PipelineConfig& p, const Hyperparams& h) {
    return train_flat(c.questions(), kind, p, h);
}
inline StrategyModel train_single_path(const Corpus& c, LearnerKind k1, LearnerKind k2, const PipelineConfig& p,
                                       const Hyperparams& h) {
    return train_single_path(c.questions(), k1, k2, p, h);
}

/// Flat: one leaf prediction. Single-path: relevance first; the efficacy
/// learner runs only when relevance says relevant.
StrategyPrediction predict_strategy(const StrategyModel& m, std::string_view text);

/// Question-parallel (OpenMP); equals element-wise predict_strategy.
std::vector<StrategyPrediction> predict_strategy_batch(const StrategyModel& m, std::span<const std::string> texts);

namespace reference {
std::vector<StrategyPrediction> predict_strategy_batch(const StrategyModel& m, std::span<const std::string> texts);
}

}  // namespace qtriage
