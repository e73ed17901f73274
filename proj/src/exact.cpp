#include "knnsv/exact.hpp"

#include <algorithm>
#include <cmath>

#include "knnsv/parallel.hpp"
#include "knnsv/utilities.hpp"

namespace knnsv {

SoftIncrementCoeffs::SoftIncrementCoeffs(int n_, int k_) : n(n_), k(k_) {
  const int m = std::min(k, n);
  for (int j = 1; j <= m; ++j) h_k += 1.0 / j;
  for (int j = 1; j <= n - 1; ++j) h_case2 += 1.0 / j;
}

std::vector<double> sv_original_classification_ranked(std::span<const std::uint8_t> match,
                                                      int k) {
  const int n = static_cast<int>(match.size());
  if (n < 1) throw InputError("empty instance");
  if (k < 1) throw InputError("k must be >= 1");
  std::vector<double> phi(static_cast<std::size_t>(n));
  phi[n - 1] = match[n - 1] ? 1.0 / std::max(k, n) : 0.0;
  for (int i = n - 2; i >= 0; --i) {
    const int rank = i + 1;  // 1-based
    const double delta = static_cast<double>(match[i]) - match[i + 1];
    phi[i] = phi[i + 1] + delta / k * std::min(k, rank) / rank;
  }
  return phi;
}

std::vector<double> sv_soft_classification_ranked(std::span<const std::uint8_t> match, int k,
                                                  int c) {
  const int n = static_cast<int>(match.size());
  if (n < 1) throw InputError("empty instance");
  if (k < 1 || c < 2) throw InputError("need k >= 1 and c >= 2");
  std::vector<double> phi(static_cast<std::size_t>(n));

  double h_tail = 0.0;  // sum_{j=1}^{min(k,n)-1} 1/(j+1)
  for (int j = 1; j <= std::min(k, n) - 1; ++j) h_tail += 1.0 / (j + 1);

  double phi_last = (match[n - 1] - 1.0 / c) / n;
  if (n >= 2) {
    double s = 0.0;
    for (int i = 0; i < n - 1; ++i) s += match[i];
    phi_last += (match[n - 1] - s / (n - 1)) * h_tail / n;
  }
  phi[n - 1] = phi_last;

  if (n >= 2) {
    const SoftIncrementCoeffs coeff(n, k);
    for (int i = n - 2; i >= 0; --i) {
      const double delta = static_cast<double>(match[i]) - match[i + 1];
      phi[i] = phi[i + 1] + delta / (n - 1) * coeff(i + 1);
    }
  }
  return phi;
}

std::vector<double> sv_soft_regression_ranked(std::span<const double> y, double y_test, int k) {
  const int n = static_cast<int>(y.size());
  if (k < 1) throw InputError("k must be >= 1");
  if (n <= k)
    throw UnsupportedError("soft-regression recursion requires n > k (got n=" +
                           std::to_string(n) + ", k=" + std::to_string(k) + ")");
  std::vector<double> phi(static_cast<std::size_t>(n));

  const double y_last = y[n - 1];
  double sum_head = 0.0, sumsq_head = 0.0;  // over the n-1 nearest
  for (int i = 0; i < n - 1; ++i) {
    sum_head += y[i];
    sumsq_head += y[i] * y[i];
  }

  // the (*) block of phi_N; empty for k == 1
  double star = 0.0;
  for (int j = 1; j <= k - 1; ++j) {
    const double jj = j, j1 = j + 1.0;
    star += (2 * jj + 1) / (jj * jj * j1 * j1) *
            (jj * (jj - 1) / ((n - 1.0) * (n - 2.0)) * sum_head * sum_head +
             jj * (n - jj - 1) / ((n - 1.0) * (n - 2.0)) * sumsq_head);
    star += (-2 * y_last / (j1 * j1) - 2 * y_test / (jj * j1)) * jj / (n - 1.0) * sum_head;
    star += (y_last / j1 - 2 * y_test) * (-y_last / j1);
  }
  phi[n - 1] = star / n + (y_test * y_test - (y_last - y_test) * (y_last - y_test)) / n;

  double h_k = 0.0, h_sq = 0.0, j_sum = 0.0;
  for (int j = 1; j <= k; ++j) {
    h_k += 1.0 / j;
    h_sq += 1.0 / (static_cast<double>(j) * j);
  }
  for (int j = 1; j <= k - 1; ++j) j_sum += static_cast<double>(j) / ((j + 1.0) * (j + 1.0));

  const double total = sum_head + y_last;
  const double kk = static_cast<double>(k) * k;

  // weight of y_l inside the second A2 block, 1-based l >= 3
  auto tail_weight = [&](int l) -> double {
    if (k == 1) return 0.0;
    return (n - 1.0) * std::min(k, l - 1) * std::min(k - 1, l - 2) / (2.0 * (l - 1) * (l - 2)) -
           (k - 1.0) * k / (2.0 * (n - 2.0));
  };

  // suffix[m] = sum_{l=m}^{n} y_l * tail_weight(l), 1-based m
  std::vector<double> suffix(static_cast<std::size_t>(n) + 3, 0.0);
  for (int l = n; l >= 3; --l)
    suffix[static_cast<std::size_t>(l)] =
        suffix[static_cast<std::size_t>(l) + 1] + y[l - 1] * tail_weight(l);
  std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
  for (int m = 1; m <= n; ++m)
    prefix[static_cast<std::size_t>(m)] = prefix[static_cast<std::size_t>(m) - 1] + y[m - 1];

  for (int i = n - 1; i >= 1; --i) {  // 1-based rank i
    const double yi = y[i - 1], yi1 = y[i];
    const double a1 = h_sq + ((n - 1.0) * std::min(k, i) / i - k) / kk;
    const double a3 = h_k + std::min(k, i) * (n - 1.0) / (static_cast<double>(i) * k) - 1.0;
    double a2 = 0.0;
    if (k >= 2) {
      a2 += (total - yi - yi1) / (n - 2.0) * j_sum;
      if (i >= 2) {
        const double head_w = (n - 1.0) * std::min(k, i) * std::min(k - 1, i - 1) /
                                  (2.0 * (i - 1.0) * i) -
                              (k - 1.0) * k / (2.0 * (n - 2.0));
        a2 += prefix[static_cast<std::size_t>(i) - 1] * head_w / kk;
      }
      a2 += suffix[static_cast<std::size_t>(i) + 2] / kk;
    }
    phi[i - 1] = phi[i] + (yi1 - yi) / (n - 1.0) * ((yi + yi1) * a1 + 2 * a2 - 2 * y_test * a3);
  }
  return phi;
}

ValueVector scatter_to_original(std::span<const double> ranked, const SortedIndex& sorted) {
  if (static_cast<int>(ranked.size()) != sorted.size())
    throw InputError("ranked value count does not match sorted index");
  ValueVector out(ranked.size());
  for (int t = 0; t < sorted.size(); ++t)
    out[static_cast<std::size_t>(sorted.order[static_cast<std::size_t>(t)])] =
        ranked[static_cast<std::size_t>(t)];
  return out;
}

ValueVector shapley_for_test_point(const Dataset& train, std::span<const double> x_test,
                                   const Label& y_test, const ValuationConfig& cfg) {
  cfg.validate();
  const SortedIndex sorted = sort_by_distance(train, x_test);
  const int n = train.n();

  std::vector<double> ranked;
  if (is_classification(cfg.method)) {
    const int yt = y_test.cls();
    std::vector<std::uint8_t> match(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t)
      match[static_cast<std::size_t>(t)] =
          train.label_class(sorted.order[static_cast<std::size_t>(t)]) == yt;
    ranked = cfg.method == Method::SoftClassification
                 ? sv_soft_classification_ranked(match, cfg.k, cfg.num_classes)
                 : sv_original_classification_ranked(match, cfg.k);
  } else if (cfg.method == Method::SoftRegression) {
    std::vector<double> ys(static_cast<std::size_t>(n));
    for (int t = 0; t < n; ++t)
      ys[static_cast<std::size_t>(t)] =
          train.label_value(sorted.order[static_cast<std::size_t>(t)]);
    ranked = sv_soft_regression_ranked(ys, y_test.value(), cfg.k);
  } else {
    throw UnsupportedError(
        "no closed-form recursion for the original regression utility; use the enumeration "
        "oracle");
  }
  return scatter_to_original(ranked, sorted);
}

ValueVector aggregate_over_test_set(const std::vector<ValueVector>& per_test) {
  if (per_test.empty()) throw InputError("nothing to aggregate");
  const std::size_t n = per_test.front().size();
  ValueVector total(n, 0.0);
  for (const ValueVector& v : per_test) {
    if (v.size() != n) throw InputError("value vector length mismatch in aggregation");
    for (std::size_t i = 0; i < n; ++i) total[i] += v[i];
  }
  return total;
}

ValueVector shapley_over_test_set(const Dataset& train, const TestSet& test,
                                  const ValuationConfig& cfg, int threads) {
  cfg.validate();
  if (test.dim() != train.dim()) throw InputError("test set dimension mismatch");
  const int n_test = test.n();
  ValueVector total(static_cast<std::size_t>(train.n()), 0.0);

  // blocks keep memory bounded while the in-order accumulation keeps the
  // result independent of the thread count
  const int block = 64;
  std::vector<ValueVector> slot(static_cast<std::size_t>(block));
  for (int begin = 0; begin < n_test; begin += block) {
    const int end = std::min(begin + block, n_test);
    parallel_for(begin, end, threads, [&](int t) {
      slot[static_cast<std::size_t>(t - begin)] =
          shapley_for_test_point(train, test.point(t), test.label(t), cfg);
    });
    for (int t = begin; t < end; ++t) {
      const ValueVector& v = slot[static_cast<std::size_t>(t - begin)];
      for (std::size_t i = 0; i < total.size(); ++i) total[i] += v[i];
    }
  }
  return total;
}

}  // namespace knnsv
