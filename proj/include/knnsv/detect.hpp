#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "knnsv/core.hpp"

namespace knnsv {

// Flip the labels of exactly floor(rate * n) distinct points, chosen uniformly;
// each flipped label becomes a uniformly random different class. Returns the
// flipped dataset and the ground-truth flip mask.
std::pair<Dataset, std::vector<std::uint8_t>> flip_labels(const Dataset& data, double rate,
                                                          std::uint64_t seed);

// flag i iff values[i] < empirical 10th percentile (linear-interpolation
// quantile); ties at the threshold are not flagged
std::vector<std::uint8_t> detect_ranking(const ValueVector& values);

// 1-D 2-means on the values (centers initialized at min and max, Lloyd to
// convergence); flag i iff values[i] < min of the two centers
std::vector<std::uint8_t> detect_cluster(const ValueVector& values);

// 2 p r / (p + r); 0 whenever a denominator vanishes
double f1_score(const std::vector<std::uint8_t>& flags, const std::vector<std::uint8_t>& truth);

struct DetectionReport {
  std::string dataset;
  std::string method;
  std::string rule;  // "rank" or "cluster"
  int k = 0;
  std::uint64_t seed = 0;
  int n = 0;
  int n_flipped = 0;
  double f1 = 0.0;
  std::vector<std::uint8_t> flags;
  std::vector<std::uint8_t> truth;

  // one line-oriented JSON record
  std::string to_json_line() const;
};

}  // namespace knnsv
