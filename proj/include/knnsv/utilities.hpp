#pragma once

#include <cstdint>
#include <span>

#include "knnsv/core.hpp"

namespace knnsv {

// Permutation of the training set by ascending l2 distance to `query`,
// ties by original index.
SortedIndex sort_by_distance(const Dataset& data, std::span<const double> query);

// KNN utility functions v(S; (x_test, y_test)). Subsets are bitmasks over
// original training indices (bit i = point i), which caps n at 31; that is
// plenty for the enumeration oracle these feed. Subset neighborhoods are
// obtained by filtering the full-dataset SortedIndex, so the tie-break
// convention is inherited exactly.

// mean match indicator over the min(K,|S|) nearest; 1/C on the empty set
double utility_soft_classification(std::uint32_t subset, const SortedIndex& sorted,
                                   const Dataset& data, const Label& y_test, int k, int c);

// (1/K) * sum of match indicators over the min(K,|S|) nearest; 0 on the empty set
double utility_original_classification(std::uint32_t subset, const SortedIndex& sorted,
                                       const Dataset& data, const Label& y_test, int k);

// -(mean of the min(K,|S|) nearest targets - y_test)^2; -y_test^2 on the empty set
double utility_soft_regression(std::uint32_t subset, const SortedIndex& sorted,
                               const Dataset& data, const Label& y_test, int k);

// -((1/K) * sum of the min(K,|S|) nearest targets - y_test)^2; -y_test^2 on the empty set
double utility_original_regression(std::uint32_t subset, const SortedIndex& sorted,
                                   const Dataset& data, const Label& y_test, int k);

}  // namespace knnsv
