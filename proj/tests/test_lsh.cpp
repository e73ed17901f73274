#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "knnsv/exact.hpp"
#include "knnsv/lsh.hpp"
#include "knnsv/rng.hpp"
#include "knnsv/synth.hpp"
#include "knnsv/utilities.hpp"
#include "lsh_recall_eval.hpp"
#include "test_helpers.hpp"

using namespace knnsv;
using namespace knnsv::testing;

TEST_CASE("collision probability") {
  SUBCASE("identical points always collide") {
    CHECK(collision_probability(0.0, 2.0) == 1.0);
  }
  SUBCASE("invalid inputs") {
    CHECK_THROWS_AS(collision_probability(1.0, 0.0), InputError);
    CHECK_THROWS_AS(collision_probability(-1.0, 1.0), InputError);
  }
  SUBCASE("strictly decreasing over 0.1r .. 10r") {
    const double r = 3.0;
    double prev = collision_probability(0.1 * r, r);
    CHECK(prev < 1.0);
    for (int i = 1; i < 20; ++i) {
      const double y = 0.1 * r * std::pow(100.0, i / 19.0);
      const double p = collision_probability(y, r);
      CHECK(p < prev);
      CHECK(p > 0.0);
      prev = p;
    }
  }
  SUBCASE("value at distance r") {
    // closed form at y = r: (2 Phi(1) - 1) - sqrt(2/pi)(1 - e^{-1/2})
    CHECK(collision_probability(4.0, 4.0) == doctest::Approx(0.3687463).epsilon(1e-5));
  }
  SUBCASE("Monte Carlo agreement at distance r") {
    const double r = 4.0;
    Rng rng(123);
    const int samples = 1'000'000;
    int hits = 0;
    for (int s = 0; s < samples; ++s) {
      const double w = rng.normal();
      const double b = rng.uniform(0.0, r);
      const auto h0 = static_cast<std::int64_t>(std::floor(b / r));
      const auto h1 = static_cast<std::int64_t>(std::floor((w * r + b) / r));
      hits += h0 == h1;
    }
    const double mc = static_cast<double>(hits) / samples;
    CHECK(std::abs(collision_probability(r, r) - mc) < 0.002);
  }
}

TEST_CASE("hash family determinism") {
  const HashFamily a = sample_hash_family(3, 4, 2.5, 5, 77);
  const HashFamily b = sample_hash_family(3, 4, 2.5, 5, 77);
  const HashFamily c = sample_hash_family(3, 4, 2.5, 5, 78);
  bool same = true, diff = false;
  for (int t = 0; t < 3; ++t)
    for (int bit = 0; bit < 4; ++bit) {
      const auto wa = a.weights(t, bit), wb = b.weights(t, bit);
      for (int j = 0; j < 5; ++j) same = same && wa[j] == wb[j];
      same = same && a.shift(t, bit) == b.shift(t, bit);
      diff = diff || a.shift(t, bit) != c.shift(t, bit);
    }
  CHECK(same);
  CHECK(diff);
  CHECK_THROWS_AS(sample_hash_family(0, 1, 1.0, 1, 0), InputError);
}

TEST_CASE("build and query") {
  SUBCASE("single point occupies one bucket per table") {
    const Dataset d = line_classification({0});
    const HashFamily family = sample_hash_family(4, 3, 1.0, 1, 1);
    const HashTables tables = build_tables(family, d);
    for (const auto& table : tables.tables()) {
      CHECK(table.size() == 1);
      CHECK(table.begin()->second == std::vector<int>{0});
    }
  }
  SUBCASE("identical points share buckets; stored points are retrievable") {
    std::vector<double> xs = {1.0, 2.0, 1.0, 2.0, 5.0, 5.0};
    const Dataset d = Dataset::classification(std::move(xs), {0, 0, 1}, 2);
    const HashFamily family = sample_hash_family(3, 4, 2.0, 2, 5);
    const HashTables tables = build_tables(family, d);
    const auto cand = query_candidates(tables, family, d.point(0));
    CHECK(std::find(cand.begin(), cand.end(), 0) != cand.end());
    CHECK(std::find(cand.begin(), cand.end(), 1) != cand.end());  // duplicate of point 0
  }
  SUBCASE("every point is among its own candidates on random data") {
    const Dataset d = make_blobs(100, 4, 3.0, 9);
    const HashFamily family = sample_hash_family(5, 3, default_bucket_width(d), 4, 10);
    const HashTables tables = build_tables(family, d);
    for (int i = 0; i < d.n(); ++i) {
      const auto cand = query_candidates(tables, family, d.point(i));
      CHECK(std::binary_search(cand.begin(), cand.end(), i));
    }
  }
  SUBCASE("far query finds nothing") {
    const Dataset d = line_classification({0});
    const HashFamily family = sample_hash_family(2, 4, 0.5, 1, 3);
    const HashTables tables = build_tables(family, d);
    const std::vector<double> far{1000.0};
    CHECK(query_candidates(tables, family, far).empty());
  }
}

TEST_CASE("truncated soft-label approximation") {
  SUBCASE("C = 2 zeroes the tail") {
    const Dataset d = line_classification({1, 0, 1, 1, 0, 1});
    std::vector<int> cand{0, 1, 2, 3, 4, 5};
    const auto out = approx_sv_soft(cand, d, origin(), Label::cls(1), 3, 2, 2);
    REQUIRE(out.ok);
    for (int i = 3; i < 6; ++i) CHECK(out.values[static_cast<std::size_t>(i)] == 0.0);
  }
  SUBCASE("K* = N with all labels matching is flat") {
    const Dataset d = line_classification({1, 1, 1, 1});
    std::vector<int> cand{0, 1, 2, 3};
    const auto out = approx_sv_soft(cand, d, origin(), Label::cls(1), 4, 2, 3);
    REQUIRE(out.ok);
    for (double v : out.values) CHECK(v == doctest::Approx((0.5 - 1.0 / 3) / 4).epsilon(1e-14));
  }
  SUBCASE("insufficient candidates fail loudly") {
    const Dataset d = line_classification({1, 0, 1, 1, 0, 1});
    const auto out = approx_sv_soft({0, 2}, d, origin(), Label::cls(1), 4, 2, 2);
    CHECK_FALSE(out.ok);
    CHECK(out.candidates_found == 2);
    CHECK(out.k_star == 4);
    CHECK(out.fail_message().find("Fail") != std::string::npos);
    CHECK(out.fail_message().find('2') != std::string::npos);
    CHECK(out.fail_message().find('4') != std::string::npos);
  }
  SUBCASE("error bound and shared first differences against the exact values") {
    Rng rng(31);
    const int n = 200, k = 5, k_star = 25;
    std::vector<int> labels(n);
    for (int& l : labels) l = static_cast<int>(rng.below(2));
    const Dataset d = line_classification(labels);
    const Label yt = Label::cls(1);

    ValuationConfig cfg{Method::SoftClassification, k, 2};
    const ValueVector exact = shapley_for_test_point(d, origin(), yt, cfg);
    std::vector<int> cand(n);
    for (int i = 0; i < n; ++i) cand[static_cast<std::size_t>(i)] = i;
    const auto out = approx_sv_soft(cand, d, origin(), yt, k_star, k, 2);
    REQUIRE(out.ok);

    double err = 0.0;
    for (int i = 0; i < n; ++i)
      err = std::max(err, std::abs(out.values[static_cast<std::size_t>(i)] -
                                   exact[static_cast<std::size_t>(i)]));
    CHECK(err <= truncation_error_bound(n, k, k_star) + 1e-12);

    // identical increments below the truncation rank, bit for bit
    // (line dataset: original index == rank)
    for (int i = 0; i + 1 < k_star - 1; ++i)
      CHECK(out.values[static_cast<std::size_t>(i)] - out.values[static_cast<std::size_t>(i + 1)] ==
            exact[static_cast<std::size_t>(i)] - exact[static_cast<std::size_t>(i + 1)]);
  }
  SUBCASE("bound property over random instances") {
    Rng rng(32);
    for (int trial = 0; trial < 100; ++trial) {
      const int k = static_cast<int>(rng.below(3)) * 3 + 2;  // 2, 5, 8
      const int k_star = k * (1 + static_cast<int>(rng.below(3)));
      const int n =
          std::max(std::max(2, k), k_star + 1) + static_cast<int>(rng.below(200));
      std::vector<int> labels(static_cast<std::size_t>(n));
      for (int& l : labels) l = static_cast<int>(rng.below(2));
      const Dataset d = line_classification(labels);
      const Label yt = Label::cls(1);
      ValuationConfig cfg{Method::SoftClassification, k, 2};
      const ValueVector exact = shapley_for_test_point(d, origin(), yt, cfg);
      std::vector<int> cand(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) cand[static_cast<std::size_t>(i)] = i;
      const auto out = approx_sv_soft(cand, d, origin(), yt, k_star, k, 2);
      REQUIRE(out.ok);
      double err = 0.0;
      for (int i = 0; i < n; ++i)
        err = std::max(err, std::abs(out.values[static_cast<std::size_t>(i)] -
                                     exact[static_cast<std::size_t>(i)]));
      CHECK(err <= truncation_error_bound(n, k, k_star) + 1e-12);
    }
  }
}

TEST_CASE("parameter recommendation") {
  SUBCASE("equal neighbor distances give contrast 1") {
    // two training points both at distance 1 from the test point
    const Dataset train = Dataset::classification({-1.0, 1.0}, {0, 1}, 1);
    const Dataset test = Dataset::classification({0.0}, {0}, 1);
    const LshTuning tuning = recommend_parameters(train, test, 1, 0.1, 2.0);
    CHECK(tuning.p1[0] == tuning.p2[0]);
    CHECK(tuning.contrast_c == doctest::Approx(1.0));
  }
  SUBCASE("degenerate contrast is an explicit error") {
    // K*+1 training copies of the test point force p2 = 1
    const Dataset train = Dataset::classification({0.0, 0.0, 0.0}, {0, 0, 0}, 1);
    const Dataset test = Dataset::classification({0.0}, {0}, 1);
    CHECK_THROWS_AS(recommend_parameters(train, test, 2, 0.1, 2.0), InputError);
  }
  SUBCASE("invalid arguments") {
    const Dataset train = Dataset::classification({-1.0, 1.0}, {0, 1}, 1);
    const Dataset test = Dataset::classification({0.0}, {0}, 1);
    CHECK_THROWS_AS(recommend_parameters(train, test, 2, 0.1, 2.0), InputError);  // K* >= N
    CHECK_THROWS_AS(recommend_parameters(train, test, 1, 0.0, 2.0), InputError);
    CHECK_THROWS_AS(recommend_parameters(train, test, 1, 0.1, -1.0), InputError);
  }
}

namespace {

// high-contrast instance: a tight cluster of K* points under the single test
// point, everything else far away; with one test point the global
// recommendation coincides with per-point tuning, the regime the
// recall guarantee actually covers
struct ContrastInstance {
  Dataset train;
  Dataset test;
};

ContrastInstance make_contrast_instance(int n, int k_star, std::uint64_t seed) {
  Rng rng(seed);
  const int dim = 4;
  std::vector<double> xs;
  std::vector<int> ys;
  for (int i = 0; i < n; ++i) {
    const bool near = i < k_star;
    for (int j = 0; j < dim; ++j) {
      const double center = near ? 0.0 : 60.0;
      xs.push_back(center + (near ? 0.05 : 4.0) * rng.normal());
    }
    ys.push_back(near ? 1 : 0);
  }
  Dataset train = Dataset::classification(std::move(xs), ys, dim);
  Dataset test = Dataset::classification(std::vector<double>(dim, 0.0), {1}, dim);
  return {std::move(train), std::move(test)};
}

}  // namespace

TEST_CASE("recommended parameters retrieve all K* neighbors in the covered regime") {
  const int n = 300, k_star = 5;
  const auto inst = make_contrast_instance(n, k_star, 21);
  const double r = default_bucket_width(inst.train);
  const LshTuning tuning = recommend_parameters(inst.train, inst.test, k_star, 0.1, r);
  CHECK(tuning.contrast_c < 0.5);  // the far shell creates real contrast

  const SortedIndex sorted = sort_by_distance(inst.train, inst.test.point(0));
  std::vector<int> nearest(sorted.order.begin(), sorted.order.begin() + k_star);

  int full = 0;
  double candidates_total = 0.0;
  const int families = 30;
  for (int f = 0; f < families; ++f) {
    const HashFamily family =
        sample_hash_family(tuning.l, tuning.m, r, inst.train.dim(), 1000 + f);
    const HashTables tables = build_tables(family, inst.train);
    const auto cand = query_candidates(tables, family, inst.test.point(0));
    candidates_total += static_cast<double>(cand.size());
    bool all = true;
    for (int idx : nearest) all = all && std::binary_search(cand.begin(), cand.end(), idx);
    full += all;
  }
  CHECK(static_cast<double>(full) / families >= 1.0 - tuning.delta);
  // candidate volume stays on the K*L scale
  CHECK(candidates_total / families <= 4.0 * k_star * tuning.l);
}

TEST_CASE("pair-collision evaluator agrees with build + query") {
  const Dataset train = make_blobs(60, 3, 4.0, 70);
  const Dataset test = make_blobs(7, 3, 4.0, 71);
  const int l = 4, m = 3;
  const double r = default_bucket_width(train);
  const std::uint64_t seed = 99;

  // track every training point for every test point
  std::vector<std::vector<int>> tracked(7);
  for (auto& v : tracked) {
    v.resize(static_cast<std::size_t>(train.n()));
    for (int i = 0; i < train.n(); ++i) v[static_cast<std::size_t>(i)] = i;
  }
  const auto retrieved = evaluate_pair_collisions(train, test, tracked, l, m, r, seed);

  const HashFamily family = sample_hash_family(l, m, r, 3, seed);
  const HashTables tables = build_tables(family, train);
  for (int t = 0; t < test.n(); ++t) {
    const auto cand = query_candidates(tables, family, test.point(t));
    for (int i = 0; i < train.n(); ++i) {
      const bool in_cand = std::binary_search(cand.begin(), cand.end(), i);
      CHECK(static_cast<bool>(retrieved[static_cast<std::size_t>(t)][static_cast<std::size_t>(i)]) ==
            in_cand);
    }
  }
}

TEST_CASE("index persistence round-trips bit-exactly") {
  const Dataset train = make_blobs(120, 5, 4.0, 33);
  const HashFamily family = sample_hash_family(4, 3, default_bucket_width(train), 5, 44);
  const HashTables tables = build_tables(family, train);

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "knnsv_index_test";
  fs::create_directories(dir);
  const std::string p1 = (dir / "a.knsv").string();
  const std::string p2 = (dir / "b.knsv").string();

  save_index(p1, family, tables);
  auto [family2, tables2] = load_index(p1);
  save_index(p2, family2, tables2);

  const auto slurp = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  };
  CHECK(slurp(p1) == slurp(p2));

  const Dataset queries = make_blobs(10, 5, 4.0, 55);
  for (int q = 0; q < queries.n(); ++q)
    CHECK(query_candidates(tables, family, queries.point(q)) ==
          query_candidates(tables2, family2, queries.point(q)));
  fs::remove_all(dir);
}
