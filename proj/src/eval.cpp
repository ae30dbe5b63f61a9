#include "qtriage/eval.hpp"

#include <algorithm>

#include "qtriage/error.hpp"
#include "qtriage/hash.hpp"
#include "qtriage/rng.hpp"
#include "qtriage/serialize.hpp"

namespace qtriage {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> labels)
    : labels_(std::move(labels)), counts_(labels_.size() * labels_.size(), 0) {}

std::optional<std::size_t> ConfusionMatrix::index_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels_.size(); ++i)
        if (labels_[i] == label) return i;
    return std::nullopt;
}

void ConfusionMatrix::add(std::string_view gold, std::string_view pred, std::size_t n) {
    auto g = index_of(gold), p = index_of(pred);
    if (!g) throw ArgumentError("confusion: gold label '" + std::string(gold) + "' outside the label universe");
    if (!p) throw ArgumentError("confusion: predicted label '" + std::string(pred) + "' outside the label universe");
    add_index(*g, *p, n);
}

std::size_t ConfusionMatrix::total() const {
    std::size_t s = 0;
    for (auto c : counts_) s += c;
    return s;
}

std::size_t ConfusionMatrix::trace() const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < size(); ++i) s += (*this)(i, i);
    return s;
}

std::size_t ConfusionMatrix::row_sum(std::size_t gold) const {
    std::size_t s = 0;
    for (std::size_t j = 0; j < size(); ++j) s += (*this)(gold, j);
    return s;
}

std::size_t ConfusionMatrix::col_sum(std::size_t pred) const {
    std::size_t s = 0;
    for (std::size_t i = 0; i < size(); ++i) s += (*this)(i, pred);
    return s;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    if (labels_ != other.labels_) throw ArgumentError("confusion: adding matrices over different labels");
    for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
    return *this;
}

ConfusionMatrix confusion(std::span<const std::string> gold, std::span<const std::string> pred,
                          std::vector<std::string> labels) {
    if (gold.size() != pred.size()) throw ArgumentError("confusion: gold and predicted lists differ in length");
    ConfusionMatrix cm(std::move(labels));
    for (std::size_t i = 0; i < gold.size(); ++i) cm.add(gold[i], pred[i]);
    return cm;
}

std::optional<double> f1_score(std::optional<double> precision, std::optional<double> recall) {
    if (!precision || !recall) return std::nullopt;
    const double s = *precision + *recall;
    if (s == 0.0) return std::nullopt;
    return 2.0 * *precision * *recall / s;
}

ClassMetrics class_metrics(const ConfusionMatrix& cm, std::string_view positive) {
    auto p = cm.index_of(positive);
    if (!p) throw ArgumentError("class_metrics: '" + std::string(positive) + "' is not in the label universe");
    ClassMetrics m;
    m.positive = std::string(positive);
    const std::size_t tp = cm(*p, *p);
    const std::size_t predicted = cm.col_sum(*p);
    m.support = cm.row_sum(*p);
    if (predicted) m.precision = static_cast<double>(tp) / static_cast<double>(predicted);
    if (m.support) m.recall = static_cast<double>(tp) / static_cast<double>(m.support);
    m.f1 = f1_score(m.precision, m.recall);
    return m;
}

double overall_accuracy(const ConfusionMatrix& cm) {
    const std::size_t n = cm.total();
    if (!n) throw ArgumentError("accuracy of an empty confusion matrix");
    return static_cast<double>(cm.trace()) / static_cast<double>(n);
}

double majority_baseline(const Corpus& c, LabelLevel level) {
    const auto& k = c.counts();
    std::size_t top = 0, denom = 0;
    switch (level) {
        case LabelLevel::Leaf:
            top = std::max({k.irrelevant, k.effective, k.ineffective});
            denom = k.labeled();
            break;
        case LabelLevel::Relevance:
            top = std::max(k.irrelevant, k.relevant);
            denom = k.labeled();
            break;
        case LabelLevel::Efficacy:
            top = std::max(k.effective, k.ineffective);
            denom = k.relevant;
            break;
    }
    if (!denom) throw ArgumentError("majority baseline: no labeled questions at the requested level");
    return static_cast<double>(top) / static_cast<double>(denom);
}

std::string_view to_string(Level2Eval e) {
    return e == Level2Eval::GoldRelevant ? "gold_relevant" : "predicted_relevant";
}

std::optional<Level2Eval> parse_level2_eval(std::string_view s) {
    if (s == "gold_relevant") return Level2Eval::GoldRelevant;
    if (s == "predicted_relevant") return Level2Eval::PredictedRelevant;
    return std::nullopt;
}

const ReportSection* EvalReport::section(std::string_view name) const {
    for (const auto& s : sections)
        if (s.name == name) return &s;
    return nullptr;
}

std::vector<const ReportSection*> EvalReport::designated_sections() const {
    std::vector<const ReportSection*> out;
    auto push = [&](std::string_view n) {
        if (auto* s = section(n)) out.push_back(s);
    };
    if (strategy == to_string(StrategyMode::Flat)) {
        push(kSectionLeaf);
    } else {
        push(kSectionRelevance);
        push(level2_eval == Level2Eval::GoldRelevant ? kSectionEfficacyGold : kSectionEfficacyPredicted);
        push(kSectionLeaf);
    }
    return out;
}

std::uint64_t fold_seed(std::uint64_t master_seed, std::size_t fold) { return mix_seed(master_seed, 100 + fold); }

namespace {

std::vector<std::string> leaf_labels() { return {"effective", "ineffective", "irrelevant"}; }
std::vector<std::string> relevance_labels() { return {"irrelevant", "relevant"}; }
std::vector<std::string> efficacy_labels() { return {"effective", "ineffective"}; }

struct FoldResult {
    ConfusionMatrix leaf{leaf_labels()};
    ConfusionMatrix relevance{relevance_labels()};
    ConfusionMatrix efficacy_gold{efficacy_labels()};
    ConfusionMatrix efficacy_predicted{efficacy_labels()};
    std::size_t intruders = 0;
    std::size_t test_size = 0;
};

FoldResult run_fold(const Corpus& c, const FoldPlan& plan, std::size_t fold, const StrategySpec& spec,
                    std::uint64_t seed) {
    const StrategyModel model = train_fold(c, plan, fold, spec, seed);
    FoldResult r;
    for (std::size_t idx : plan.test_indices(fold)) {
        const Question& q = c[idx];
        const HierLabel gold = *q.gold;
        ++r.test_size;
        const StrategyPrediction sp = predict_strategy(model, q.text);
        r.leaf.add(to_string(gold.leaf()), to_string(sp.leaf));
        if (spec.mode == StrategyMode::Flat) continue;

        r.relevance.add(to_string(gold.relevance()), sp.path.front().prediction.label);
        if (gold.efficacy()) {
            const auto p2 = predict(*model.level2, model.features(q.text, model.level2->kind));
            r.efficacy_gold.add(to_string(*gold.efficacy()), p2.label);
        }
        if (sp.efficacy_invoked()) {
            if (gold.efficacy()) r.efficacy_predicted.add(to_string(*gold.efficacy()), sp.path.back().prediction.label);
            else ++r.intruders;
        }
    }
    return r;
}

ReportSection make_section(std::string_view name, std::string algorithm, std::string positive,
                           std::vector<std::string> labels) {
    ReportSection s;
    s.name = std::string(name);
    s.algorithm = std::move(algorithm);
    s.positive = std::move(positive);
    s.pooled = ConfusionMatrix(std::move(labels));
    return s;
}

}  // namespace

StrategyModel train_fold(const Corpus& c, const FoldPlan& plan, std::size_t fold, const StrategySpec& spec,
                         std::uint64_t master_seed) {
    std::vector<Question> train;
    for (std::size_t idx : plan.train_indices(fold)) train.push_back(c[idx]);
    StrategySpec s = spec;
    s.hyper.seed = fold_seed(master_seed, fold);
    try {
        return train_strategy(s, train);
    } catch (const TrainingError& e) {
        throw StratificationError("fold " + std::to_string(fold) + ": " + e.what());
    }
}

EvalReport cross_validate(const Corpus& c, const StrategySpec& spec, std::size_t k, std::uint64_t seed,
                          const CvOptions& opts) {
    const FoldPlan plan = stratified_kfold(c, k, seed, opts.allow_sparse);

    std::vector<FoldResult> folds(k);
    std::exception_ptr failure;
    const auto nk = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(dynamic, 1) if (opts.parallel)
    for (std::ptrdiff_t f = 0; f < nk; ++f) {
        try {
            folds[f] = run_fold(c, plan, static_cast<std::size_t>(f), spec, seed);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    EvalReport r;
    r.strategy = std::string(to_string(spec.mode));
    r.learner = spec.learner_name();
    r.seed = seed;
    r.k = k;
    r.level2_eval = opts.level2_eval;
    r.corpus_digest = hex_digest(c.digest());
    r.config = to_json(spec);
    r.config["hyperparams"].erase("seed");
    r.config_digest = hex_digest(fnv1a64(r.config.dump()));
    const auto& counts = c.counts();
    if (counts.labeled()) {
        r.baseline_leaf = majority_baseline(c, LabelLevel::Leaf);
        r.baseline_relevance = majority_baseline(c, LabelLevel::Relevance);
    }
    if (counts.relevant) r.baseline_efficacy = majority_baseline(c, LabelLevel::Efficacy);

    const std::string ineffective(to_string(Leaf::Ineffective));
    auto accumulate = [&](ReportSection s, auto member) {
        for (const auto& f : folds) {
            s.folds.push_back(f.*member);
            s.pooled += f.*member;
        }
        return s;
    };
    for (const auto& f : folds) r.fold_sizes.push_back(f.test_size);

    if (spec.mode == StrategyMode::SinglePath) {
        const std::string l1(to_string(spec.level1_kind)), l2(to_string(spec.level2_kind));
        r.sections.push_back(accumulate(make_section(kSectionRelevance, l1, std::string(kRelevantLabel), relevance_labels()),
                                        &FoldResult::relevance));
        r.sections.push_back(accumulate(make_section(kSectionEfficacyGold, l2, ineffective, efficacy_labels()),
                                        &FoldResult::efficacy_gold));
        auto pred = accumulate(make_section(kSectionEfficacyPredicted, l2, ineffective, efficacy_labels()),
                               &FoldResult::efficacy_predicted);
        for (const auto& f : folds) {
            pred.fold_intruders.push_back(f.intruders);
            pred.intruders += f.intruders;
        }
        r.sections.push_back(std::move(pred));
    }
    r.sections.push_back(
        accumulate(make_section(kSectionLeaf, spec.learner_name(), ineffective, leaf_labels()), &FoldResult::leaf));
    return r;
}

}  // namespace qtriage
