#include <algorithm>
#include <cmath>
#include <numeric>

#include "common.hpp"
#include "qtriage/rng.hpp"

namespace qtriage {

namespace logreg {

std::vector<double> softmax(const LinearParams& p, const SparseVector& x) {
    const std::size_t L = p.bias.size();
    std::vector<double> z(L);
    for (std::size_t l = 0; l < L; ++l) {
        double s = p.bias[l];
        auto w = p.weights.row(l);
        for (const auto& [i, v] : x.entries()) s += w[i] * v;
        z[l] = s;
    }
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double& v : z) sum += v = std::exp(v - mx);
    for (double& v : z) v /= sum;
    return z;
}

double objective(const LinearParams& p, std::span<const SparseVector> X, std::span<const std::size_t> y, double lambda) {
    double loss = 0.0;
    for (std::size_t n = 0; n < X.size(); ++n) loss -= std::log(softmax(p, X[n])[y[n]]);
    loss /= static_cast<double>(X.size());
    double sq = 0.0;
    for (double w : p.weights.data) sq += w * w;
    return loss + 0.5 * lambda * sq;
}

LinearParams gradient(const LinearParams& p, std::span<const SparseVector> X, std::span<const std::size_t> y,
                      double lambda) {
    const std::size_t L = p.bias.size();
    LinearParams g;
    g.weights = Matrix(L, p.weights.cols);
    g.bias.assign(L, 0.0);
    const double inv_n = 1.0 / static_cast<double>(X.size());
    for (std::size_t n = 0; n < X.size(); ++n) {
        auto prob = softmax(p, X[n]);
        prob[y[n]] -= 1.0;
        for (std::size_t l = 0; l < L; ++l) {
            const double r = prob[l] * inv_n;
            g.bias[l] += r;
            auto row = g.weights.row(l);
            for (const auto& [i, v] : X[n].entries()) row[i] += r * v;
        }
    }
    for (std::size_t k = 0; k < g.weights.data.size(); ++k) g.weights.data[k] += lambda * p.weights.data[k];
    return g;
}

}  // namespace logreg

TrainedLearner train_logreg(std::span<const SparseVector> X, std::span<const std::string> y, const Hyperparams& h) {
    const std::size_t dim = detail::check_training_set(X, y, "lg");
    auto li = index_labels(y);
    detail::require_two_labels(li, "lg");
    if (h.lg_lambda < 0.0 || !(h.lg_eta0 > 0.0) || h.lg_epochs < 0 || h.lg_batch == 0)
        throw ArgumentError("lg: invalid hyperparameters");

    const std::size_t L = li.labels.size();
    LinearParams p;
    p.weights = Matrix(L, dim);
    p.bias.assign(L, 0.0);

    Rng rng(mix_seed(h.seed, 0x16));
    std::vector<std::size_t> order(X.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Matrix gw(L, dim);
    std::vector<double> gb(L);
    std::vector<std::size_t> touched;

    for (int epoch = 0; epoch < h.lg_epochs; ++epoch) {
        const double eta = h.lg_eta0 / (1.0 + static_cast<double>(epoch) / h.lg_epochs);
        rng.shuffle(std::span(order));
        for (std::size_t start = 0; start < order.size(); start += h.lg_batch) {
            const std::size_t stop = std::min(order.size(), start + h.lg_batch);
            const double inv_b = 1.0 / static_cast<double>(stop - start);
            std::fill(gb.begin(), gb.end(), 0.0);
            touched.clear();
            for (std::size_t k = start; k < stop; ++k) {
                const auto& x = X[order[k]];
                auto prob = logreg::softmax(p, x);
                prob[li.y[order[k]]] -= 1.0;
                for (std::size_t l = 0; l < L; ++l) {
                    gb[l] += prob[l] * inv_b;
                    auto row = gw.row(l);
                    for (const auto& [i, v] : x.entries()) row[i] += prob[l] * inv_b * v;
                }
                for (const auto& e : x.entries()) touched.push_back(e.first);
            }
            // Dense L2 shrink, then the sparse data gradient.
            const double shrink = 1.0 - eta * h.lg_lambda;
            if (shrink != 1.0)
                for (double& w : p.weights.data) w *= shrink;
            std::sort(touched.begin(), touched.end());
            touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
            for (std::size_t l = 0; l < L; ++l) {
                p.bias[l] -= eta * gb[l];
                auto row = p.weights.row(l);
                auto grow = gw.row(l);
                for (std::size_t i : touched) {
                    row[i] -= eta * grow[i];
                    grow[i] = 0.0;
                }
            }
        }
    }

    TrainedLearner m;
    m.kind = LearnerKind::LG;
    m.labels = std::move(li.labels);
    m.dim = dim;
    m.hyper = h;
    m.params = std::move(p);
    return m;
}

}  // namespace qtriage
