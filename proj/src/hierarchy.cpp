#include "qtriage/hierarchy.hpp"

#include "qtriage/error.hpp"
#include "qtriage/rng.hpp"

namespace qtriage {

std::string_view to_string(StrategyMode m) { return m == StrategyMode::Flat ? "flat" : "single-path"; }

std::optional<StrategyMode> parse_strategy(std::string_view s) {
    if (s == "flat") return StrategyMode::Flat;
    if (s == "single-path") return StrategyMode::SinglePath;
    return std::nullopt;
}

std::string StrategySpec::learner_name() const {
    if (mode == StrategyMode::Flat) return std::string(to_string(flat_kind));
    return std::string(to_string(level1_kind)) + "+" + std::string(to_string(level2_kind));
}

SparseVector StrategyModel::features(std::string_view text, LearnerKind kind) const {
    return vectorize(tokenize(text, pipeline.tokenizer), vocab, pipeline.weighting_for(kind));
}

namespace {

struct TrainingView {
    std::vector<const Question*> questions;
    std::vector<std::vector<std::string>> tokens;
};

TrainingView labeled_view(std::span<const Question> questions, const TokenizerConfig& cfg) {
    TrainingView v;
    for (const auto& q : questions) {
        if (!q.gold) continue;
        v.questions.push_back(&q);
        v.tokens.push_back(tokenize(q.text, cfg));
    }
    if (v.questions.empty()) throw TrainingError("no labeled questions to train on");
    return v;
}

Vocabulary fit_vocabulary(const TrainingView& view, const PipelineConfig& p) {
    Vocabulary vocab = build_vocab(view.tokens, p.min_df);
    if (!p.top_k || vocab.empty()) return vocab;

    std::vector<SparseVector> raw;
    std::vector<std::size_t> leaf;
    raw.reserve(view.tokens.size());
    for (std::size_t i = 0; i < view.tokens.size(); ++i) {
        raw.push_back(vectorize(view.tokens[i], vocab, Weighting::RawCount));
        leaf.push_back(static_cast<std::size_t>(view.questions[i]->gold->leaf()));
    }
    return vocab.restrict_to(chi2_select(raw, leaf, kAllLeaves.size(), *p.top_k));
}

std::vector<SparseVector> vectors_for(const TrainingView& view, const std::vector<std::size_t>& rows,
                                      const Vocabulary& vocab, Weighting w) {
    std::vector<SparseVector> out;
    out.reserve(rows.size());
    for (std::size_t r : rows) out.push_back(vectorize(view.tokens[r], vocab, w));
    return out;
}

std::vector<std::size_t> all_rows(const TrainingView& view) {
    std::vector<std::size_t> rows(view.questions.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return rows;
}

}  // namespace

StrategyModel train_flat(std::span<const Question> questions, LearnerKind kind, const PipelineConfig& pipeline,
                         const Hyperparams& h) {
    const auto view = labeled_view(questions, pipeline.tokenizer);
    StrategyModel m;
    m.mode = StrategyMode::Flat;
    m.pipeline = pipeline;
    m.vocab = fit_vocabulary(view, pipeline);

    const auto rows = all_rows(view);
    std::vector<std::string> y;
    for (const auto* q : view.questions) y.emplace_back(to_string(q->gold->leaf()));
    m.flat = train(kind, vectors_for(view, rows, m.vocab, pipeline.weighting_for(kind)), y, h);
    return m;
}

StrategyModel train_single_path(std::span<const Question> questions, LearnerKind level1, LearnerKind level2,
                                const PipelineConfig& pipeline, const Hyperparams& h) {
    const auto view = labeled_view(questions, pipeline.tokenizer);
    StrategyModel m;
    m.mode = StrategyMode::SinglePath;
    m.pipeline = pipeline;
    m.vocab = fit_vocabulary(view, pipeline);

    const auto rows = all_rows(view);
    std::vector<std::string> y1;
    std::vector<std::size_t> relevant_rows;
    std::vector<std::string> y2;
    bool has_irrelevant = false;
    bool has_effective = false, has_ineffective = false;
    for (std::size_t r : rows) {
        const auto& g = *view.questions[r]->gold;
        y1.emplace_back(to_string(g.relevance()));
        if (g.relevance() == Relevance::Irrelevant) {
            has_irrelevant = true;
            continue;
        }
        relevant_rows.push_back(r);
        y2.emplace_back(to_string(*g.efficacy()));
        (*g.efficacy() == Efficacy::Effective ? has_effective : has_ineffective) = true;
    }
    if (!has_irrelevant || relevant_rows.empty())
        throw TrainingError("single-path: training data must contain both relevant and irrelevant questions");
    if (!has_effective || !has_ineffective)
        throw TrainingError(std::string("single-path: relevant training questions lack label '") +
                            (has_effective ? "ineffective" : "effective") + "'");

    Hyperparams h1 = h, h2 = h;
    h1.seed = mix_seed(h.seed, 1);
    h2.seed = mix_seed(h.seed, 2);
    m.level1 = train(level1, vectors_for(view, rows, m.vocab, pipeline.weighting_for(level1)), y1, h1);
    m.level2 = train(level2, vectors_for(view, relevant_rows, m.vocab, pipeline.weighting_for(level2)), y2, h2);
    return m;
}

StrategyModel train_strategy(const StrategySpec& spec, std::span<const Question> questions) {
    if (spec.mode == StrategyMode::Flat) return train_flat(questions, spec.flat_kind, spec.pipeline, spec.hyper);
    return train_single_path(questions, spec.level1_kind, spec.level2_kind, spec.pipeline, spec.hyper);
}

StrategyPrediction predict_strategy(const StrategyModel& m, std::string_view text) {
    const auto tokens = tokenize(text, m.pipeline.tokenizer);
    auto run = [&](const TrainedLearner& learner, const char* level) {
        LevelTrace t;
        t.level = level;
        t.labels = learner.labels;
        t.prediction = predict(learner, vectorize(tokens, m.vocab, m.pipeline.weighting_for(learner.kind)));
        return t;
    };

    StrategyPrediction out;
    if (m.mode == StrategyMode::Flat) {
        out.path.push_back(run(*m.flat, "flat"));
        out.leaf = *parse_leaf(out.path.back().prediction.label);
        return out;
    }
    out.path.push_back(run(*m.level1, "relevance"));
    if (out.path.back().prediction.label != kRelevantLabel) {
        out.leaf = Leaf::Irrelevant;
        return out;
    }
    out.path.push_back(run(*m.level2, "efficacy"));
    out.leaf = *parse_leaf(out.path.back().prediction.label);
    return out;
}

std::vector<StrategyPrediction> predict_strategy_batch(const StrategyModel& m, std::span<const std::string> texts) {
    std::vector<StrategyPrediction> out(texts.size());
    const auto n = static_cast<std::ptrdiff_t>(texts.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = predict_strategy(m, texts[i]);
    return out;
}

namespace reference {

std::vector<StrategyPrediction> predict_strategy_batch(const StrategyModel& m, std::span<const std::string> texts) {
    std::vector<StrategyPrediction> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(predict_strategy(m, t));
    return out;
}

}  // namespace reference

}  // namespace qtriage
