#include <cmath>

#include "common.hpp"

namespace qtriage {

TrainedLearner train_nbm(std::span<const SparseVector> X, std::span<const std::string> y, const Hyperparams& h) {
    const std::size_t dim = detail::check_training_set(X, y, "nbm");
    if (!(h.nbm_alpha > 0.0)) throw ArgumentError("nbm: smoothing alpha must be > 0");
    for (const auto& x : X)
        for (const auto& [i, v] : x.entries())
            if (v < 0.0) throw ArgumentError("nbm: negative feature value at index " + std::to_string(i));

    auto li = index_labels(y);
    const std::size_t L = li.labels.size();
    std::vector<double> docs(L, 0.0), totals(L, 0.0);
    Matrix counts(L, dim);
    for (std::size_t n = 0; n < X.size(); ++n) {
        const std::size_t l = li.y[n];
        docs[l] += 1.0;
        for (const auto& [i, v] : X[n].entries()) {
            counts(l, i) += v;
            totals[l] += v;
        }
    }

    NbmParams p;
    p.log_prior.resize(L);
    p.log_prob = Matrix(L, dim);
    const double N = static_cast<double>(X.size());
    for (std::size_t l = 0; l < L; ++l) {
        p.log_prior[l] = std::log(docs[l] / N);
        const double denom = std::log(totals[l] + h.nbm_alpha * static_cast<double>(dim));
        for (std::size_t i = 0; i < dim; ++i) p.log_prob(l, i) = std::log(counts(l, i) + h.nbm_alpha) - denom;
    }

    TrainedLearner m;
    m.kind = LearnerKind::NBM;
    m.labels = std::move(li.labels);
    m.dim = dim;
    m.hyper = h;
    m.params = std::move(p);
    return m;
}

}  // namespace qtriage
