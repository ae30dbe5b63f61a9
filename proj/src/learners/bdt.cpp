#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "common.hpp"

namespace qtriage {

namespace bdt {

namespace {

constexpr double kMinError = 1e-10;

struct Column {
    std::vector<std::size_t> rows;
    std::vector<double> values;
};

std::vector<Column> to_columns(std::span<const SparseVector> X, std::size_t dim) {
    std::vector<Column> cols(dim);
    for (std::size_t n = 0; n < X.size(); ++n)
        for (const auto& [i, v] : X[n].entries()) {
            cols[i].rows.push_back(n);
            cols[i].values.push_back(v);
        }
    return cols;
}

// Weighted Gini impurity times node weight: W - sum_c w_c^2 / W.
double weighted_gini(std::span<const double> w) {
    double total = 0.0, sq = 0.0;
    for (double c : w) {
        total += c;
        sq += c * c;
    }
    return total > 0.0 ? total - sq / total : 0.0;
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double score = std::numeric_limits<double>::infinity();
};

class TreeBuilder {
public:
    TreeBuilder(std::span<const SparseVector> X, std::span<const std::size_t> y, std::span<const double> w,
                std::size_t num_labels)
        : y_(y), w_(w), L_(num_labels), cols_(to_columns(X, X.empty() ? 0 : X.front().dim())), mark_(X.size(), -1), value_(X.size(), 0.0) {}

    DecisionTree build(int max_depth) {
        std::vector<std::size_t> all(y_.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        grow(all, 0, max_depth);
        return std::move(tree_);
    }

private:
    int grow(const std::vector<std::size_t>& members, int depth, int max_depth) {
        std::vector<double> cw(L_, 0.0);
        std::vector<char> seen(L_, 0);
        for (std::size_t n : members) {
            cw[y_[n]] += w_[n];
            seen[y_[n]] = 1;
        }
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back(TreeNode{});
        tree_.nodes[id].label = argmax_first(cw);

        const bool pure = std::count(seen.begin(), seen.end(), 1) <= 1;
        if (depth >= max_depth || pure) return id;

        const Split best = find_split(members, cw, id);
        if (best.feature < 0) return id;

        std::vector<std::size_t> left, right;
        const auto& col = cols_[best.feature];
        for (std::size_t k = 0; k < col.rows.size(); ++k)
            if (mark_[col.rows[k]] == id) value_[col.rows[k]] = col.values[k];
        for (std::size_t n : members) {
            (value_[n] <= best.threshold ? left : right).push_back(n);
            value_[n] = 0.0;
        }

        tree_.nodes[id].feature = best.feature;
        tree_.nodes[id].threshold = best.threshold;
        const int l = grow(left, depth + 1, max_depth);
        const int r = grow(right, depth + 1, max_depth);
        tree_.nodes[id].left = l;
        tree_.nodes[id].right = r;
        return id;
    }

    Split find_split(const std::vector<std::size_t>& members, const std::vector<double>& node_w, int id) {
        for (std::size_t n : members) mark_[n] = id;
        Split best;
        std::vector<std::pair<double, std::size_t>> vals;  // (value, row)
        std::vector<double> left(L_), right(L_), zero(L_), sum_nz(L_);
        for (std::size_t f = 0; f < cols_.size(); ++f) {
            const auto& col = cols_[f];
            vals.clear();
            for (std::size_t k = 0; k < col.rows.size(); ++k)
                if (mark_[col.rows[k]] == id) vals.emplace_back(col.values[k], col.rows[k]);
            if (vals.empty()) continue;
            std::sort(vals.begin(), vals.end());

            const std::size_t zero_count = members.size() - vals.size();
            std::fill(sum_nz.begin(), sum_nz.end(), 0.0);
            for (const auto& [v, n] : vals) sum_nz[y_[n]] += w_[n];
            for (std::size_t c = 0; c < L_; ++c) zero[c] = std::max(0.0, node_w[c] - sum_nz[c]);

            // Sweep distinct values in increasing order; absent entries sit at 0.
            std::fill(left.begin(), left.end(), 0.0);
            bool zero_done = zero_count == 0;
            double prev = 0.0;
            bool have_prev = false;
            auto consider = [&](double next) {
                if (!have_prev || next == prev) return;
                for (std::size_t c = 0; c < L_; ++c) right[c] = std::max(0.0, node_w[c] - left[c]);
                const double score = weighted_gini(left) + weighted_gini(right);
                if (score < best.score) {
                    best.score = score;
                    best.feature = static_cast<int>(f);
                    best.threshold = prev + (next - prev) / 2.0;
                }
            };
            for (std::size_t k = 0; k < vals.size();) {
                const double v = vals[k].first;
                if (!zero_done && v > 0.0) {
                    consider(0.0);
                    for (std::size_t c = 0; c < L_; ++c) left[c] += zero[c];
                    prev = 0.0;
                    have_prev = true;
                    zero_done = true;
                }
                consider(v);
                for (; k < vals.size() && vals[k].first == v; ++k) left[y_[vals[k].second]] += w_[vals[k].second];
                prev = v;
                have_prev = true;
            }
            if (!zero_done) consider(0.0);
        }
        return best;
    }

    std::span<const std::size_t> y_;
    std::span<const double> w_;
    std::size_t L_;
    std::vector<Column> cols_;
    std::vector<int> mark_;
    std::vector<double> value_;
    DecisionTree tree_;
};

}  // namespace

DecisionTree fit_tree(std::span<const SparseVector> X, std::span<const std::size_t> y, std::span<const double> w,
                      std::size_t num_labels, int max_depth) {
    if (X.size() != y.size() || X.size() != w.size()) throw ArgumentError("fit_tree: misaligned inputs");
    if (X.empty()) throw TrainingError("fit_tree: no examples");
    if (max_depth < 0) throw ArgumentError("fit_tree: negative depth");
    return TreeBuilder(X, y, w, num_labels).build(max_depth);
}

double stage_weight(double err, std::size_t num_labels) {
    const double e = std::max(err, kMinError);
    double a = std::log((1.0 - e) / e);
    if (num_labels > 1) a += std::log(static_cast<double>(num_labels - 1));
    return a;
}

}  // namespace bdt

TrainedLearner train_bdt(std::span<const SparseVector> X, std::span<const std::string> y, const Hyperparams& h,
                         BoostTrace* trace) {
    const std::size_t dim = detail::check_training_set(X, y, "bdt");
    if (h.bdt_rounds < 0 || h.bdt_depth < 1) throw ArgumentError("bdt: invalid hyperparameters");
    auto li = index_labels(y);
    const std::size_t L = li.labels.size();
    const std::size_t N = X.size();

    std::vector<double> w(N, 1.0 / static_cast<double>(N));
    BoostParams bp;
    {
        std::vector<double> cw(L, 0.0);
        for (std::size_t n = 0; n < N; ++n) cw[li.y[n]] += w[n];
        bp.fallback_label = argmax_first(cw);
    }

    std::vector<char> miss(N);
    for (int round = 0; round < h.bdt_rounds; ++round) {
        DecisionTree tree = bdt::fit_tree(X, li.y, w, L, h.bdt_depth);
        double err = 0.0, total = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            miss[n] = tree.predict(X[n]) != li.y[n];
            total += w[n];
            if (miss[n]) err += w[n];
        }
        err /= total;
        if (trace) trace->round_error.push_back(err);
        if (L > 1 && err >= 1.0 - 1.0 / static_cast<double>(L)) {
            if (trace) trace->accepted.push_back(false);
            break;
        }
        const double alpha = bdt::stage_weight(err, L);
        bp.trees.push_back(std::move(tree));
        bp.stage_weights.push_back(alpha);
        if (trace) trace->accepted.push_back(true);

        if (err <= 0.0) {
            if (trace) trace->weight_sum_after.push_back(std::accumulate(w.begin(), w.end(), 0.0));
            break;
        }
        const double boost = std::exp(alpha);
        double sum = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            if (miss[n]) w[n] *= boost;
            sum += w[n];
        }
        for (double& v : w) v /= sum;
        if (trace) trace->weight_sum_after.push_back(std::accumulate(w.begin(), w.end(), 0.0));
    }

    TrainedLearner m;
    m.kind = LearnerKind::BDT;
    m.labels = std::move(li.labels);
    m.dim = dim;
    m.hyper = h;
    m.params = std::move(bp);
    return m;
}

}  // namespace qtriage
