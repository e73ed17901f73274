#pragma once

#include <cstdint>
#include <functional>

#include "knnsv/core.hpp"

namespace knnsv {

// Utility bound to a test point: maps a subset bitmask to v(S).
using SubsetUtility = std::function<double(std::uint32_t)>;

// Ground-truth Shapley by exhaustive subset enumeration of the weighted
// marginal-contribution formula. Every mask is evaluated once and folded into
// per-player layer sums, so memory stays O(n^2) while time is O(2^n * n)
// utility-eval-weighted. Guarded at n <= 20.
ValueVector shapley_exact_enumeration(const SubsetUtility& utility, int n);

// Full-pipeline utility for a test point under the configured method.
SubsetUtility bind_utility(const Dataset& train, std::span<const double> x_test,
                           const Label& y_test, const ValuationConfig& cfg);

// v(empty set) for the configured method: 0, 1/C, or -y_test^2.
double empty_set_utility(const Label& y_test, const ValuationConfig& cfg);

}  // namespace knnsv
