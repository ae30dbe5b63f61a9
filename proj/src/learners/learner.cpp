#include <algorithm>
#include <cmath>

#include "qtriage/error.hpp"
#include "qtriage/learners.hpp"

namespace qtriage {

std::string_view to_string(LearnerKind k) {
    switch (k) {
        case LearnerKind::NBM: return "nbm";
        case LearnerKind::LG: return "lg";
        case LearnerKind::SVM: return "svm";
        case LearnerKind::BDT: return "bdt";
    }
    return "?";
}

std::optional<LearnerKind> parse_learner(std::string_view s) {
    for (auto k : kAllLearners)
        if (to_string(k) == s) return k;
    return std::nullopt;
}

Weighting default_weighting(LearnerKind k) {
    switch (k) {
        case LearnerKind::NBM: return Weighting::RawCount;
        case LearnerKind::LG:
        case LearnerKind::SVM: return Weighting::L2NormalizedCount;
        case LearnerKind::BDT: return Weighting::BinaryPresence;
    }
    return Weighting::RawCount;
}

LabelIndex index_labels(std::span<const std::string> y) {
    LabelIndex out;
    out.labels.assign(y.begin(), y.end());
    std::sort(out.labels.begin(), out.labels.end());
    out.labels.erase(std::unique(out.labels.begin(), out.labels.end()), out.labels.end());
    out.y.reserve(y.size());
    for (const auto& l : y)
        out.y.push_back(static_cast<std::size_t>(std::lower_bound(out.labels.begin(), out.labels.end(), l) -
                                                 out.labels.begin()));
    return out;
}

std::size_t argmax_first(std::span<const double> scores) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return best;
}

std::size_t DecisionTree::predict(const SparseVector& x) const {
    int at = 0;
    const auto entries = x.entries();
    while (!nodes[at].is_leaf()) {
        const auto& n = nodes[at];
        auto it = std::lower_bound(entries.begin(), entries.end(), static_cast<std::size_t>(n.feature),
                                   [](const SparseVector::Entry& e, std::size_t f) { return e.first < f; });
        const double v = (it != entries.end() && it->first == static_cast<std::size_t>(n.feature)) ? it->second : 0.0;
        at = v <= n.threshold ? n.left : n.right;
    }
    return nodes[at].label;
}

std::size_t DecisionTree::depth() const {
    // Nodes are stored parent-before-child.
    std::vector<std::size_t> d(nodes.size(), 0);
    std::size_t best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (nodes[i].is_leaf()) {
            best = std::max(best, d[i]);
            continue;
        }
        d[nodes[i].left] = d[nodes[i].right] = d[i] + 1;
    }
    return best;
}

namespace {

double sparse_dot(std::span<const double> w, const SparseVector& x) {
    double s = 0.0;
    for (const auto& [i, v] : x.entries()) s += w[i] * v;
    return s;
}

}  // namespace

Prediction predict(const TrainedLearner& m, const SparseVector& x) {
    if (x.dim() != m.dim)
        throw ArgumentError("feature dimension " + std::to_string(x.dim()) + " does not match model dimension " +
                            std::to_string(m.dim));
    const std::size_t L = m.labels.size();
    Prediction p;
    p.scores.assign(L, 0.0);

    if (const auto* nb = std::get_if<NbmParams>(&m.params)) {
        for (std::size_t l = 0; l < L; ++l) p.scores[l] = nb->log_prior[l] + sparse_dot(nb->log_prob.row(l), x);
    } else if (const auto* lin = std::get_if<LinearParams>(&m.params)) {
        if (m.kind == LearnerKind::LG) {
            p.scores = logreg::softmax(*lin, x);
        } else {
            for (std::size_t l = 0; l < L; ++l) p.scores[l] = sparse_dot(lin->weights.row(l), x) + lin->bias[l];
        }
    } else {
        const auto& bp = std::get<BoostParams>(m.params);
        for (std::size_t t = 0; t < bp.trees.size(); ++t) p.scores[bp.trees[t].predict(x)] += bp.stage_weights[t];
        if (bp.trees.empty()) p.scores[bp.fallback_label] = 1.0;
    }
    p.index = argmax_first(p.scores);
    p.label = m.labels[p.index];
    return p;
}

std::vector<Prediction> predict_batch(const TrainedLearner& m, std::span<const SparseVector> xs) {
    std::vector<Prediction> out(xs.size());
    const auto n = static_cast<std::ptrdiff_t>(xs.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 32)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[i] = predict(m, xs[i]);
        } catch (...) {
#pragma omp critical
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

namespace reference {

std::vector<Prediction> predict_batch(const TrainedLearner& m, std::span<const SparseVector> xs) {
    std::vector<Prediction> out;
    out.reserve(xs.size());
    for (const auto& x : xs) out.push_back(predict(m, x));
    return out;
}

}  // namespace reference

TrainedLearner train(LearnerKind kind, std::span<const SparseVector> X, std::span<const std::string> y,
                     const Hyperparams& h) {
    switch (kind) {
        case LearnerKind::NBM: return train_nbm(X, y, h);
        case LearnerKind::LG: return train_logreg(X, y, h);
        case LearnerKind::SVM: return train_svm(X, y, h);
        case LearnerKind::BDT: return train_bdt(X, y, h);
    }
    throw ArgumentError("unknown learner kind");
}

}  // namespace qtriage
