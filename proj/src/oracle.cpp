#include "knnsv/oracle.hpp"

#include <bit>
#include <cmath>
#include <memory>
#include <vector>

#include "knnsv/utilities.hpp"

namespace knnsv {

namespace {

// binom(n, k) as a double; exact integer arithmetic below n = 15, log-gamma above
double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  if (n <= 15) {
    std::uint64_t num = 1;
    for (int j = 0; j < k; ++j) num = num * static_cast<std::uint64_t>(n - j) / (j + 1);
    return static_cast<double>(num);
  }
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
}

}  // namespace

ValueVector shapley_exact_enumeration(const SubsetUtility& utility, int n) {
  if (n < 1) throw InputError("need n >= 1");
  if (n > 20)
    throw InputError("enumeration oracle refuses n = " + std::to_string(n) +
                     " (2^n utility evaluations; limit is 20)");

  // with_i[i][s]  = sum over |S| = s of v(S u {i}),  i not in S
  // without_i[i][s] = sum over |S| = s of v(S),      i not in S
  const std::size_t un = static_cast<std::size_t>(n);
  std::vector<std::vector<double>> with_i(un, std::vector<double>(un, 0.0));
  std::vector<std::vector<double>> without_i(un, std::vector<double>(un, 0.0));

  const std::uint32_t top = n == 32 ? 0 : (1u << n);
  for (std::uint32_t mask = 0; mask < top; ++mask) {
    const double u = utility(mask);
    if (!std::isfinite(u))
      throw InputError("utility returned a non-finite value on mask " + std::to_string(mask));
    const int size = std::popcount(mask);
    for (int i = 0; i < n; ++i) {
      if (mask >> i & 1u)
        with_i[static_cast<std::size_t>(i)][static_cast<std::size_t>(size - 1)] += u;
      else
        without_i[static_cast<std::size_t>(i)][static_cast<std::size_t>(size)] += u;
    }
  }

  ValueVector phi(un, 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int s = 0; s <= n - 1; ++s)
      acc += (with_i[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)] -
              without_i[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)]) /
             binom(n - 1, s);
    phi[static_cast<std::size_t>(i)] = acc / n;
  }
  return phi;
}

SubsetUtility bind_utility(const Dataset& train, std::span<const double> x_test,
                           const Label& y_test, const ValuationConfig& cfg) {
  cfg.validate();
  auto sorted = std::make_shared<SortedIndex>(sort_by_distance(train, x_test));
  auto data = std::make_shared<Dataset>(train);
  switch (cfg.method) {
    case Method::SoftClassification:
      return [data, sorted, y_test, k = cfg.k, c = cfg.num_classes](std::uint32_t s) {
        return utility_soft_classification(s, *sorted, *data, y_test, k, c);
      };
    case Method::OriginalClassification:
      return [data, sorted, y_test, k = cfg.k](std::uint32_t s) {
        return utility_original_classification(s, *sorted, *data, y_test, k);
      };
    case Method::SoftRegression:
      return [data, sorted, y_test, k = cfg.k](std::uint32_t s) {
        return utility_soft_regression(s, *sorted, *data, y_test, k);
      };
    case Method::OriginalRegression:
      return [data, sorted, y_test, k = cfg.k](std::uint32_t s) {
        return utility_original_regression(s, *sorted, *data, y_test, k);
      };
  }
  throw InputError("unknown method");
}

double empty_set_utility(const Label& y_test, const ValuationConfig& cfg) {
  switch (cfg.method) {
    case Method::SoftClassification: return 1.0 / cfg.num_classes;
    case Method::OriginalClassification: return 0.0;
    case Method::SoftRegression:
    case Method::OriginalRegression: {
      const double yt = y_test.value();
      return -yt * yt;
    }
  }
  throw InputError("unknown method");
}

}  // namespace knnsv
