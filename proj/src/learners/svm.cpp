#include <algorithm>
#include <cmath>
#include <numeric>

#include "common.hpp"
#include "qtriage/rng.hpp"

namespace qtriage {

namespace svm {

double objective(std::span<const double> w, double b, std::span<const SparseVector> X, std::span<const int> y,
                 double lambda) {
    double hinge = 0.0;
    for (std::size_t n = 0; n < X.size(); ++n) {
        double s = b;
        for (const auto& [i, v] : X[n].entries()) s += w[i] * v;
        hinge += std::max(0.0, 1.0 - y[n] * s);
    }
    double sq = b * b;
    for (double v : w) sq += v * v;
    return 0.5 * lambda * sq + hinge / static_cast<double>(X.size());
}

}  // namespace svm

namespace {

// Binary Pegasos on the bias-augmented problem. The weight vector is kept as
// scale * v so the per-step shrink is O(1).
struct Pegasos {
    std::vector<double> v;
    double vb = 0.0;
    double scale = 1.0;
    double sq = 0.0;  // ||v||^2 + vb^2

    explicit Pegasos(std::size_t dim) : v(dim, 0.0) {}

    void reset() {
        std::fill(v.begin(), v.end(), 0.0);
        vb = 0.0;
        scale = 1.0;
        sq = 0.0;
    }

    double margin(const SparseVector& x) const {
        double s = vb;
        for (const auto& [i, val] : x.entries()) s += v[i] * val;
        return scale * s;
    }

    void fold_scale() {
        for (double& e : v) e *= scale;
        vb *= scale;
        scale = 1.0;
        recompute_norm();
    }

    void recompute_norm() {
        sq = vb * vb;
        for (double e : v) sq += e * e;
    }

    void step(const SparseVector& x, int y, std::uint64_t t, double lambda, double radius) {
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const bool violated = y * margin(x) < 1.0;
        if (t == 1) {
            reset();
        } else {
            scale *= 1.0 - 1.0 / static_cast<double>(t);
        }
        if (violated) {
            const double c = eta * y / scale;
            for (const auto& [i, val] : x.entries()) {
                sq += 2.0 * c * v[i] * val + c * c * val * val;
                v[i] += c * val;
            }
            sq += 2.0 * c * vb + c * c;
            vb += c;
        }
        const double norm = scale * std::sqrt(std::max(sq, 0.0));
        if (norm > radius) scale *= radius / norm;
        if (scale < 1e-9) fold_scale();
    }

};

}  // namespace

TrainedLearner train_svm(std::span<const SparseVector> X, std::span<const std::string> y, const Hyperparams& h,
                         SvmTrace* trace) {
    const std::size_t dim = detail::check_training_set(X, y, "svm");
    auto li = index_labels(y);
    detail::require_two_labels(li, "svm");
    if (!(h.svm_lambda > 0.0) || h.svm_epochs < 0) throw ArgumentError("svm: invalid hyperparameters");

    const std::size_t L = li.labels.size();
    const double radius = 1.0 / std::sqrt(h.svm_lambda);
    LinearParams p;
    p.weights = Matrix(L, dim);
    p.bias.assign(L, 0.0);
    if (trace) trace->objective.assign(L, {});

    std::vector<int> yb(X.size());
    std::vector<std::size_t> order(X.size());
    for (std::size_t l = 0; l < L; ++l) {
        for (std::size_t n = 0; n < X.size(); ++n) yb[n] = li.y[n] == l ? 1 : -1;
        Rng rng(mix_seed(h.seed, 0x5000 + l));
        std::iota(order.begin(), order.end(), std::size_t{0});
        Pegasos model(dim);
        // The returned model is a running mean of epoch-end iterates. An iterate
        // is mixed in only if that does not raise the objective; the mixing
        // weight is halved a few times before the epoch is skipped.
        std::vector<double> avg(dim, 0.0), cand(dim);
        double avg_b = 0.0;
        double avg_obj = svm::objective(avg, avg_b, X, yb, h.svm_lambda);
        std::size_t accepted = 0;
        std::uint64_t t = 0;
        for (int epoch = 0; epoch < h.svm_epochs; ++epoch) {
            rng.shuffle(std::span(order));
            for (std::size_t n : order) model.step(X[n], yb[n], ++t, h.svm_lambda, radius);
            model.fold_scale();
            double k = 1.0 / static_cast<double>(accepted + 1);
            for (int attempt = 0; attempt < 4; ++attempt, k *= 0.5) {
                for (std::size_t i = 0; i < dim; ++i) cand[i] = avg[i] + (model.v[i] - avg[i]) * k;
                const double cand_b = avg_b + (model.vb - avg_b) * k;
                const double obj = svm::objective(cand, cand_b, X, yb, h.svm_lambda);
                if (obj <= avg_obj) {
                    avg.swap(cand);
                    avg_b = cand_b;
                    avg_obj = obj;
                    ++accepted;
                    break;
                }
            }
            if (trace) trace->objective[l].push_back(avg_obj);
        }
        std::copy(avg.begin(), avg.end(), p.weights.row(l).begin());
        p.bias[l] = avg_b;
    }

    TrainedLearner m;
    m.kind = LearnerKind::SVM;
    m.labels = std::move(li.labels);
    m.dim = dim;
    m.hyper = h;
    m.params = std::move(p);
    return m;
}

}  // namespace qtriage
