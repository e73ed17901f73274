#include <doctest.h>

#include <bit>

#include "knnsv/rng.hpp"
#include "knnsv/utilities.hpp"
#include "test_helpers.hpp"

using namespace knnsv;
using namespace knnsv::testing;

TEST_CASE("sort_by_distance basics") {
  SUBCASE("singleton") {
    const Dataset d = line_classification({0});
    const SortedIndex s = sort_by_distance(d, origin());
    CHECK(s.order == std::vector<int>{0});
  }
  SUBCASE("forced order") {
    // points at distances 3, 1, 2 from the query
    const Dataset d = Dataset::classification({3.0, 1.0, 2.0}, {0, 0, 0}, 1);
    const SortedIndex s = sort_by_distance(d, origin());
    CHECK(s.order == std::vector<int>{1, 2, 0});
    CHECK(s.dist[0] == doctest::Approx(1.0));
    CHECK(s.dist[2] == doctest::Approx(3.0));
  }
  SUBCASE("distance ties break by original index") {
    std::vector<double> xs(6, 9.0);
    xs[5] = 1.0;  // index 5 at distance 1
    xs[2] = -1.0; // index 2 at distance 1
    const Dataset d = Dataset::classification(std::move(xs), {0, 0, 0, 0, 0, 0}, 1);
    const SortedIndex s = sort_by_distance(d, origin());
    CHECK(s.order[0] == 2);
    CHECK(s.order[1] == 5);
  }
  SUBCASE("dimension mismatch") {
    const Dataset d = line_classification({0, 1});
    CHECK_THROWS_AS(sort_by_distance(d, std::vector<double>{0.0, 0.0}), InputError);
  }
}

TEST_CASE("sorted distances are non-decreasing and re-sorting is the identity") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = random_classification(rng, 1 + static_cast<int>(rng.below(30)), 2);
    const SortedIndex s = sort_by_distance(inst.data, inst.query);
    for (std::size_t t = 1; t < s.dist.size(); ++t) CHECK(s.dist[t] >= s.dist[t - 1]);

    // lay the points out again in sorted order; the new permutation is identity
    std::vector<double> xs;
    std::vector<int> ys;
    for (int idx : s.order) {
      const auto p = inst.data.point(idx);
      xs.insert(xs.end(), p.begin(), p.end());
      ys.push_back(inst.data.label_class(idx));
    }
    const Dataset resorted = Dataset::classification(std::move(xs), ys, inst.data.dim());
    const SortedIndex s2 = sort_by_distance(resorted, inst.query);
    for (int t = 0; t < s2.size(); ++t) CHECK(s2.order[t] == t);
  }
}

TEST_CASE("utility spot values") {
  // line order: index = rank; labels alternate
  const Dataset d = line_classification({1, 0, 1, 0});
  const SortedIndex s = sort_by_distance(d, origin());
  const Label yt = Label::cls(1);

  SUBCASE("soft classification") {
    CHECK(utility_soft_classification(0u, s, d, yt, 3, 2) == doctest::Approx(0.5));
    CHECK(utility_soft_classification(0b0001u, s, d, yt, 3, 2) == doctest::Approx(1.0));
    // K = 2: two nearest of the full set are labels (match, mismatch)
    CHECK(utility_soft_classification(0b0111u, s, d, yt, 2, 2) == doctest::Approx(0.5));
  }
  SUBCASE("original classification") {
    CHECK(utility_original_classification(0u, s, d, yt, 3) == doctest::Approx(0.0));
    CHECK(utility_original_classification(0b0001u, s, d, yt, 3) == doctest::Approx(1.0 / 3));
    CHECK(utility_original_classification(0b0001u, s, d, yt, 1) == doctest::Approx(1.0));
  }
}

TEST_CASE("regression utility spot values") {
  SUBCASE("empty set") {
    const Dataset d = line_regression({1.0});
    const SortedIndex s = sort_by_distance(d, origin());
    CHECK(utility_soft_regression(0u, s, d, Label::real(2.0), 2) == doctest::Approx(-4.0));
    CHECK(utility_original_regression(0u, s, d, Label::real(1.0), 2) == doctest::Approx(-1.0));
  }
  SUBCASE("zero residual") {
    const Dataset d = line_regression({3.0, 3.0, 3.0});
    const SortedIndex s = sort_by_distance(d, origin());
    CHECK(utility_soft_regression(0b111u, s, d, Label::real(3.0), 2) == doctest::Approx(0.0));
    CHECK(utility_original_regression(0b001u, s, d, Label::real(3.0), 1) == doctest::Approx(0.0));
  }
  SUBCASE("derived examples") {
    const Dataset d = line_regression({1.0, 3.0, 5.0});
    const SortedIndex s = sort_by_distance(d, origin());
    // K = 2, nearest two labels (1, 3), y_test = 0 -> -(mean - 0)^2 = -4
    CHECK(utility_soft_regression(0b111u, s, d, Label::real(0.0), 2) == doctest::Approx(-4.0));
    // original: K = 2, |S| = 1 holding label 2 -> -(2/2)^2 = -1
    const Dataset d2 = line_regression({2.0});
    const SortedIndex s2 = sort_by_distance(d2, origin());
    CHECK(utility_original_regression(0b1u, s2, d2, Label::real(0.0), 2) == doctest::Approx(-1.0));
  }
}

TEST_CASE("utility range and coincidence properties") {
  Rng rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(10));
    const int k = 1 + static_cast<int>(rng.below(5));
    const auto inst = random_classification(rng, n, 2);
    const SortedIndex s = sort_by_distance(inst.data, inst.query);
    const std::uint32_t mask =
        static_cast<std::uint32_t>(rng.below(1ull << n));

    const double soft = utility_soft_classification(mask, s, inst.data, inst.y_test, k, 2);
    const double orig = utility_original_classification(mask, s, inst.data, inst.y_test, k);
    CHECK(soft >= 0.0);
    CHECK(soft <= 1.0);
    const int size = std::popcount(mask);
    if (size >= k) CHECK(soft == doctest::Approx(orig).epsilon(1e-12));
    if (size > 0 && size < k)
      CHECK(soft == doctest::Approx(static_cast<double>(k) / size * orig).epsilon(1e-12));

    const auto reg = random_regression(rng, n);
    const SortedIndex sr = sort_by_distance(reg.data, reg.query);
    const double soft_r = utility_soft_regression(mask, sr, reg.data, reg.y_test, k);
    const double orig_r = utility_original_regression(mask, sr, reg.data, reg.y_test, k);
    CHECK(soft_r <= 0.0);
    CHECK(orig_r <= 0.0);
    if (size >= k) CHECK(soft_r == doctest::Approx(orig_r).epsilon(1e-12));
  }
}

TEST_CASE("utilities ignore members beyond the K nearest") {
  // 5 points in line order; S = {0,1,4}: with K = 2 the far point 4 is inert
  const Dataset d = line_classification({1, 0, 1, 1, 1});
  const SortedIndex s = sort_by_distance(d, origin());
  const Label yt = Label::cls(1);
  CHECK(utility_soft_classification(0b00011u, s, d, yt, 2, 2) ==
        utility_soft_classification(0b10011u, s, d, yt, 2, 2));
  CHECK(utility_original_classification(0b00011u, s, d, yt, 2) ==
        utility_original_classification(0b10011u, s, d, yt, 2));
}
