#include "knnsv/utilities.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace knnsv {

SortedIndex sort_by_distance(const Dataset& data, std::span<const double> query) {
  if (static_cast<int>(query.size()) != data.dim())
    throw InputError("query dimension does not match dataset dimension");
  const int n = data.n();
  const int d = data.dim();
  const double* xs = data.features().data();

  std::vector<double> d2(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double* p = xs + static_cast<std::size_t>(i) * d;
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
      const double diff = p[j] - query[j];
      acc += diff * diff;
    }
    d2[static_cast<std::size_t>(i)] = acc;
  }

  SortedIndex out;
  out.order.resize(static_cast<std::size_t>(n));
  std::iota(out.order.begin(), out.order.end(), 0);
  std::sort(out.order.begin(), out.order.end(), [&](int a, int b) {
    const double da = d2[static_cast<std::size_t>(a)], db = d2[static_cast<std::size_t>(b)];
    if (da != db) return da < db;
    return a < b;
  });
  out.dist.resize(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t)
    out.dist[static_cast<std::size_t>(t)] = std::sqrt(d2[static_cast<std::size_t>(out.order[t])]);
  return out;
}

namespace {

void check_subset(std::uint32_t subset, const SortedIndex& sorted, const Dataset& data) {
  const int n = data.n();
  if (sorted.size() != n) throw InputError("sorted index size does not match dataset");
  if (n < 32 && (subset >> n) != 0) throw InputError("subset mask has bits outside {0..n-1}");
}

// walks the sorted order collecting the min(k,|S|) nearest members of S
template <typename Fn>
int for_nearest_members(std::uint32_t subset, const SortedIndex& sorted, int k, Fn&& fn) {
  const int size = std::popcount(subset);
  const int take = std::min(k, size);
  int got = 0;
  for (int t = 0; t < sorted.size() && got < take; ++t) {
    const int idx = sorted.order[static_cast<std::size_t>(t)];
    if (subset >> idx & 1u) {
      fn(idx);
      ++got;
    }
  }
  return take;
}

}  // namespace

double utility_soft_classification(std::uint32_t subset, const SortedIndex& sorted,
                                   const Dataset& data, const Label& y_test, int k, int c) {
  check_subset(subset, sorted, data);
  if (subset == 0) return 1.0 / c;
  int matches = 0;
  const int yt = y_test.cls();
  const int take = for_nearest_members(subset, sorted, k,
                                       [&](int idx) { matches += data.label_class(idx) == yt; });
  return static_cast<double>(matches) / take;
}

double utility_original_classification(std::uint32_t subset, const SortedIndex& sorted,
                                       const Dataset& data, const Label& y_test, int k) {
  check_subset(subset, sorted, data);
  if (subset == 0) return 0.0;
  int matches = 0;
  const int yt = y_test.cls();
  for_nearest_members(subset, sorted, k,
                      [&](int idx) { matches += data.label_class(idx) == yt; });
  return static_cast<double>(matches) / k;
}

double utility_soft_regression(std::uint32_t subset, const SortedIndex& sorted,
                               const Dataset& data, const Label& y_test, int k) {
  check_subset(subset, sorted, data);
  const double yt = y_test.value();
  if (subset == 0) return -yt * yt;
  double sum = 0.0;
  const int take = for_nearest_members(subset, sorted, k,
                                       [&](int idx) { sum += data.label_value(idx); });
  const double resid = sum / take - yt;
  return -resid * resid;
}

double utility_original_regression(std::uint32_t subset, const SortedIndex& sorted,
                                   const Dataset& data, const Label& y_test, int k) {
  check_subset(subset, sorted, data);
  const double yt = y_test.value();
  if (subset == 0) return -yt * yt;
  double sum = 0.0;
  for_nearest_members(subset, sorted, k, [&](int idx) { sum += data.label_value(idx); });
  const double resid = sum / k - yt;
  return -resid * resid;
}

}  // namespace knnsv
