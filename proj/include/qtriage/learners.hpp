#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qtriage/features.hpp"

namespace qtriage {

enum class LearnerKind { NBM, LG, SVM, BDT };

inline constexpr LearnerKind kAllLearners[] = {LearnerKind::NBM, LearnerKind::LG, LearnerKind::SVM, LearnerKind::BDT};

std::string_view to_string(LearnerKind k);
std::optional<LearnerKind> parse_learner(std::string_view s);

/// Feature weighting each learner expects by default.
Weighting default_weighting(LearnerKind k);

struct Hyperparams {
    double nbm_alpha = 1.0;

    double lg_lambda = 1e-3;
    double lg_eta0 = 0.1;
    int lg_epochs = 50;
    std::size_t lg_batch = 32;

    double svm_lambda = 1e-3;
    int svm_epochs = 50;

    int bdt_rounds = 100;
    int bdt_depth = 3;

    std::uint64_t seed = 0;

    friend bool operator==(const Hyperparams&, const Hyperparams&) = default;
};

/// Row-major dense matrix.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

    friend bool operator==(const Matrix&, const Matrix&) = default;
};

struct NbmParams {
    std::vector<double> log_prior;  // per label
    Matrix log_prob;                // label x feature

    friend bool operator==(const NbmParams&, const NbmParams&) = default;
};

/// Shared by logistic regression (softmax rows) and one-vs-rest SVM.
struct LinearParams {
    Matrix weights;  // label x feature
    std::vector<double> bias;

    friend bool operator==(const LinearParams&, const LinearParams&) = default;
};

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;   // x[feature] <= threshold
    int right = -1;  // x[feature] >  threshold
    std::size_t label = 0;

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root

    std::size_t predict(const SparseVector& x) const;
    std::size_t depth() const;
    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

struct BoostParams {
    std::vector<DecisionTree> trees;
    std::vector<double> stage_weights;
    std::size_t fallback_label = 0;  // weighted majority, used by an empty ensemble

    friend bool operator==(const BoostParams&, const BoostParams&) = default;
};

struct TrainedLearner {
    LearnerKind kind = LearnerKind::NBM;
    std::vector<std::string> labels;  // lexicographic
    std::size_t dim = 0;
    Hyperparams hyper;
    std::variant<NbmParams, LinearParams, BoostParams> params;

    friend bool operator==(const TrainedLearner&, const TrainedLearner&) = default;
};

struct Prediction {
    std::size_t index = 0;
    std::string label;
    /// Kind-specific score per label: NBM log joint, LG probability,
    /// SVM margin, BDT summed stage weight.
    std::vector<double> scores;

    friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// Training diagnostics; not part of the model.
struct SvmTrace {
    /// objective[label][epoch]: regularized hinge objective of the returned
    /// (epoch-averaged) weights after each epoch.
    std::vector<std::vector<double>> objective;
};

struct BoostTrace {
    std::vector<double> round_error;       // every attempted round
    std::vector<bool> accepted;            // aligned with round_error
    std::vector<double> weight_sum_after;  // sum of example weights after each accepted round
};

TrainedLearner train_nbm(std::span<const SparseVector> X, std::span<const std::string> y, const Hyperparams& h);
TrainedLearner train_logreg(std::span<const SparseVector> X, std::span<const std::string> y, const Hyperparams& h);
TrainedLearner train_svm(std::span<const SparseVector> X, std::span<const std::string> y, const Hyperparams& h,
                         SvmTrace* trace = nullptr);
TrainedLearner train_bdt(std::span<const SparseVector> X, std::span<const std::string> y, const Hyperparams& h,
                         BoostTrace* trace = nullptr);
TrainedLearner train(LearnerKind kind, std::span<const SparseVector> X, std::span<const std::string> y,
                     const Hyperparams& h);

/// Argmax of the kind-specific score; ties go to the lexicographically first label.
Prediction predict(const TrainedLearner& m, const SparseVector& x);
/// Input-parallel (OpenMP); equals element-wise predict.
std::vector<Prediction> predict_batch(const TrainedLearner& m, std::span<const SparseVector> xs);

namespace reference {
std::vector<Prediction> predict_batch(const TrainedLearner& m, std::span<const SparseVector> xs);
}

/// Sorted unique labels and each example's index into them.
struct LabelIndex {
    std::vector<std::string> labels;
    std::vector<std::size_t> y;
};
LabelIndex index_labels(std::span<const std::string> y);

/// Index of the maximum; the first wins ties.
std::size_t argmax_first(std::span<const double> scores);

namespace logreg {

/// Mean cross-entropy plus (lambda/2)||W||^2; the bias is unregularized.
double objective(const LinearParams& p, std::span<const SparseVector> X, std::span<const std::size_t> y, double lambda);
/// Gradient of objective() with respect to weights and bias.
LinearParams gradient(const LinearParams& p, std::span<const SparseVector> X, std::span<const std::size_t> y,
                      double lambda);
std::vector<double> softmax(const LinearParams& p, const SparseVector& x);

}  // namespace logreg

namespace svm {

/// (lambda/2)(||w||^2 + b^2) + mean hinge; y in {-1, +1}.
double objective(std::span<const double> w, double b, std::span<const SparseVector> X, std::span<const int> y,
                 double lambda);

}  // namespace svm

namespace bdt {

/// Greedy weighted-Gini tree of depth <= max_depth on example weights w.
DecisionTree fit_tree(std::span<const SparseVector> X, std::span<const std::size_t> y, std::span<const double> w,
                      std::size_t num_labels, int max_depth);

/// ln((1 - err)/err) + ln(L - 1), with err clamped to [1e-10, ...]. The
/// ln(L - 1) term is dropped when L == 1.
double stage_weight(double err, std::size_t num_labels);

}  // namespace bdt

}  // namespace qtriage
