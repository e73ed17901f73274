#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "knnsv/core.hpp"

namespace knnsv {

// Closed-form Shapley recursions. The *_ranked functions work in distance-
// sorted rank space (input arrays ordered nearest-first) and return values in
// the same order; shapley_for_test_point handles sorting and scattering back
// to original indices.

// Coefficient of the soft-label recursion step
//   phi_i = phi_{i+1} + (ind_i - ind_{i+1}) / (N-1) * coeff(i).
// For N >= K this is sum_{j=1..K} 1/j + (min(i,K)(N-1)/i - K)/K; for N < K it
// is the N<K form sum_{j=1..N-1} 1/j, which the enumeration oracle confirms
// against the alternative. Shared with the truncated approximation so the two
// paths produce bit-identical first differences.
struct SoftIncrementCoeffs {
  int n = 0;
  int k = 0;
  double h_k = 0.0;      // sum_{j=1}^{min(k,n)} 1/j
  double h_case2 = 0.0;  // sum_{j=1}^{n-1} 1/j

  SoftIncrementCoeffs(int n, int k);
  double operator()(int rank_i) const {  // 1-based rank, 1 <= rank_i <= n-1
    if (n >= k) return h_k + (static_cast<double>(std::min(rank_i, k)) * (n - 1) / rank_i - k) / k;
    return h_case2;
  }
};

std::vector<double> sv_original_classification_ranked(std::span<const std::uint8_t> match, int k);
std::vector<double> sv_soft_classification_ranked(std::span<const std::uint8_t> match, int k,
                                                  int c);
// requires n > k; throws UnsupportedError otherwise
std::vector<double> sv_soft_regression_ranked(std::span<const double> y, double y_test, int k);

// ranked values -> per-original-index values
ValueVector scatter_to_original(std::span<const double> ranked, const SortedIndex& sorted);

// sort + recursion + scatter for one test point
ValueVector shapley_for_test_point(const Dataset& train, std::span<const double> x_test,
                                   const Label& y_test, const ValuationConfig& cfg);

// elementwise sum in input order
ValueVector aggregate_over_test_set(const std::vector<ValueVector>& per_test);

// per-test-point values aggregated over the whole test set; the parallel loop
// accumulates in test order so results are identical for every thread count
ValueVector shapley_over_test_set(const Dataset& train, const TestSet& test,
                                  const ValuationConfig& cfg, int threads = 1);

}  // namespace knnsv
