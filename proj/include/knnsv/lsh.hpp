#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "knnsv/core.hpp"

namespace knnsv {

// Pr[h(x) = h(x_test)] for the p-stable hash h(x) = floor((w.x + b)/r) at the
// given point distance; adaptive quadrature of the collision integral,
// absolute tolerance 1e-8. distance 0 returns exactly 1.
double collision_probability(double distance, double r);

// l_inf error bound of the truncated approximation:
// (1/n) * sum_{j=2}^{k-1} 1/(j+1) + 1/max(k_star, k).
double truncation_error_bound(int n, int k, int k_star);

// L tables of M p-stable hash functions; parameters are fully determined by
// the seed.
class HashFamily {
 public:
  HashFamily(int l, int m, double r, int dim, std::uint64_t seed);

  int tables() const { return l_; }
  int bits() const { return m_; }
  double bucket_width() const { return r_; }
  int dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

  // hash value of one function; functions are indexed (table, bit)
  std::int64_t hash_bit(int table, int bit, std::span<const double> x) const;
  // full M-tuple key for one table
  void hash_key(int table, std::span<const double> x, std::int64_t* out) const;

  std::span<const double> weights(int table, int bit) const {
    const std::size_t f = fn_index(table, bit);
    return {w_.data() + f * dim_, static_cast<std::size_t>(dim_)};
  }
  double shift(int table, int bit) const { return b_[fn_index(table, bit)]; }

 private:
  std::size_t fn_index(int table, int bit) const {
    return static_cast<std::size_t>(table) * m_ + bit;
  }
  int l_, m_, dim_;
  double r_;
  std::uint64_t seed_;
  std::vector<double> w_;  // (l*m) x dim
  std::vector<double> b_;  // l*m
};

HashFamily sample_hash_family(int l, int m, double r, int dim, std::uint64_t seed);

// Populated buckets of the preprocessing pass: per table, M-tuple key -> the
// training indices hashed to it.
class HashTables {
 public:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& key) const;
  };
  using Table = std::unordered_map<std::vector<std::int64_t>, std::vector<int>, KeyHash>;

  const std::vector<Table>& tables() const { return tables_; }
  std::vector<Table>& mutable_tables() { return tables_; }
  int n_points() const { return n_points_; }
  void set_n_points(int n) { n_points_ = n; }

 private:
  std::vector<Table> tables_;
  int n_points_ = 0;
};

HashTables build_tables(const HashFamily& family, const Dataset& data);

// deduplicated union over the L tables of the query's bucket members,
// ascending index order
std::vector<int> query_candidates(const HashTables& tables, const HashFamily& family,
                                  std::span<const double> query);

// Truncated soft-label approximation from a candidate set. Every index at
// candidate-sorted rank >= k_star (and every non-candidate) receives the flat
// tail value (1/N)(1/2 - 1/C); ranks below k_star run the shared soft-label
// recursion upward from it.
struct ApproxSoftOutcome {
  bool ok = false;
  ValueVector values;          // populated when ok
  std::size_t candidates_found = 0;
  int k_star = 0;

  // "Fail" carrying what was found vs. needed
  std::string fail_message() const;
};

ApproxSoftOutcome approx_sv_soft(const std::vector<int>& candidates, const Dataset& train,
                                 std::span<const double> x_test, const Label& y_test, int k_star,
                                 int k, int c);

// Hash-parameter recommendation from the collision probabilities at the
// K*-th / (K*+1)-th neighbor distances of each test point, big-O constants
// taken as 1.
struct LshTuning {
  int k_star = 0;
  double delta = 0.0;
  double r = 0.0;
  std::vector<double> p1;  // per test point
  std::vector<double> p2;  // per test point
  double p_max = 0.0;
  double contrast_c = 0.0;
  int m = 0;
  int l = 0;
};

LshTuning recommend_parameters(const Dataset& train, const TestSet& test, int k_star, double delta,
                               double r);

// 4 x median pairwise distance on a deterministic <=1000-point subsample
double default_bucket_width(const Dataset& data);

// Self-describing binary persistence of a built index ("KNSV" header; the
// family is regenerated from the stored seed). Round-trips bit-exactly.
void save_index(const std::string& path, const HashFamily& family, const HashTables& tables);
std::pair<HashFamily, HashTables> load_index(const std::string& path);

}  // namespace knnsv
