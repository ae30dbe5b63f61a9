#pragma once

#include <span>
#include <string>

#include "qtriage/error.hpp"
#include "qtriage/learners.hpp"

namespace qtriage::detail {

/// Aligned, non-empty, single dimension. Returns the shared dimension.
inline std::size_t check_training_set(std::span<const SparseVector> X, std::span<const std::string> y,
                                      std::string_view who) {
    if (X.size() != y.size())
        throw ArgumentError(std::string(who) + ": " + std::to_string(X.size()) + " vectors but " +
                            std::to_string(y.size()) + " labels");
    if (X.empty()) throw TrainingError(std::string(who) + ": no training examples");
    const std::size_t dim = X.front().dim();
    for (const auto& x : X)
        if (x.dim() != dim) throw ArgumentError(std::string(who) + ": inconsistent feature dimensions");
    return dim;
}

inline void require_two_labels(const LabelIndex& li, std::string_view who) {
    if (li.labels.size() < 2)
        throw TrainingError(std::string(who) + ": needs at least 2 distinct labels, got " +
                            std::to_string(li.labels.size()));
}

}  // namespace qtriage::detail
