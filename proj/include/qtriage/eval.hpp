#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "qtriage/corpus.hpp"
#include "qtriage/hierarchy.hpp"

namespace qtriage {

/// counts(i, j): gold label i predicted as label j.
class ConfusionMatrix {
public:
    ConfusionMatrix() = default;
    explicit ConfusionMatrix(std::vector<std::string> labels);

    const std::vector<std::string>& labels() const { return labels_; }
    std::size_t size() const { return labels_.size(); }
    std::optional<std::size_t> index_of(std::string_view label) const;

    std::size_t operator()(std::size_t gold, std::size_t pred) const { return counts_[gold * size() + pred]; }
    /// Throws ArgumentError for labels outside the universe.
    void add(std::string_view gold, std::string_view pred, std::size_t n = 1);
    void add_index(std::size_t gold, std::size_t pred, std::size_t n = 1) { counts_[gold * size() + pred] += n; }

    std::size_t total() const;
    std::size_t trace() const;
    std::size_t row_sum(std::size_t gold) const;
    std::size_t col_sum(std::size_t pred) const;

    /// Element-wise sum; label universes must match.
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

private:
    std::vector<std::string> labels_;
    std::vector<std::size_t> counts_;
};

ConfusionMatrix confusion(std::span<const std::string> gold, std::span<const std::string> pred,
                          std::vector<std::string> labels);

/// Undefined values stay std::nullopt; they are never reported as zero.
struct ClassMetrics {
    std::string positive;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::size_t support = 0;
};

std::optional<double> f1_score(std::optional<double> precision, std::optional<double> recall);
ClassMetrics class_metrics(const ConfusionMatrix& cm, std::string_view positive);
/// trace / total; throws ArgumentError on an empty matrix.
double overall_accuracy(const ConfusionMatrix& cm);

enum class LabelLevel { Leaf, Relevance, Efficacy };
/// Largest label share among questions labeled at `level`.
double majority_baseline(const Corpus& c, LabelLevel level);

enum class Level2Eval { GoldRelevant, PredictedRelevant };
std::string_view to_string(Level2Eval e);
std::optional<Level2Eval> parse_level2_eval(std::string_view s);

inline constexpr std::string_view kSectionLeaf = "leaf";
inline constexpr std::string_view kSectionRelevance = "relevance";
inline constexpr std::string_view kSectionEfficacyGold = "efficacy_gold_relevant";
inline constexpr std::string_view kSectionEfficacyPredicted = "efficacy_predicted_relevant";

/// One confusion stream of a cross-validation run.
struct ReportSection {
    std::string name;
    std::string algorithm;
    std::string positive;
    ConfusionMatrix pooled;
    std::vector<ConfusionMatrix> folds;
    /// Predicted-relevant framing only: gold-irrelevant questions routed to the efficacy level.
    std::size_t intruders = 0;
    std::vector<std::size_t> fold_intruders;

    friend bool operator==(const ReportSection&, const ReportSection&) = default;
};

struct EvalReport {
    static constexpr int kVersion = 1;

    std::string strategy;
    std::string learner;
    std::uint64_t seed = 0;
    std::size_t k = 0;
    Level2Eval level2_eval = Level2Eval::PredictedRelevant;
    std::string corpus_digest;
    std::string config_digest;
    nlohmann::json config;
    std::optional<double> baseline_leaf;
    std::optional<double> baseline_relevance;
    std::optional<double> baseline_efficacy;
    std::vector<std::size_t> fold_sizes;
    std::vector<ReportSection> sections;

    const ReportSection* section(std::string_view name) const;
    /// Sections shown in text tables: flat -> leaf; single-path -> relevance,
    /// the designated efficacy framing, leaf.
    std::vector<const ReportSection*> designated_sections() const;

    friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct CvOptions {
    Level2Eval level2_eval = Level2Eval::PredictedRelevant;
    bool parallel = true;  // folds run under OpenMP; results equal the serial run
    bool allow_sparse = false;
};

/// Seed used for the learners of one fold.
std::uint64_t fold_seed(std::uint64_t master_seed, std::size_t fold);

/// Trains on every labeled question outside `fold`. The vocabulary is built
/// from those questions only.
StrategyModel train_fold(const Corpus& c, const FoldPlan& plan, std::size_t fold, const StrategySpec& spec,
                         std::uint64_t master_seed);

EvalReport cross_validate(const Corpus& c, const StrategySpec& spec, std::size_t k, std::uint64_t seed,
                          const CvOptions& opts = {});

enum class ReportFormat { TextTable, Json, Csv };
std::optional<ReportFormat> parse_report_format(std::string_view s);

nlohmann::json report_to_json(const EvalReport& r);
/// Inverse of report_to_json; derived metrics are recomputed from the confusions.
EvalReport report_from_json(const nlohmann::json& j);

/// Text tables put one row per report, sorted by F-measure descending.
std::string render_reports(std::span<const EvalReport> reports, ReportFormat format);
std::string render_report(const EvalReport& r, ReportFormat format);
std::vector<EvalReport> reports_from_json(const nlohmann::json& j);

}  // namespace qtriage
