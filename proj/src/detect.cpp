#include "knnsv/detect.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "knnsv/rng.hpp"

namespace knnsv {

std::pair<Dataset, std::vector<std::uint8_t>> flip_labels(const Dataset& data, double rate,
                                                          std::uint64_t seed) {
  if (data.task() != Task::Classification)
    throw UnsupportedError("label flipping applies to classification datasets only");
  const int n = data.n();
  const int flips = static_cast<int>(std::floor(rate * n));
  if (!(rate > 0.0 && rate < 1.0) || flips < 1)
    throw InputError("flip rate must lie in (0,1) with rate * n >= 1");
  const int classes = data.num_classes();
  if (classes < 2) throw InputError("need at least two classes to flip labels");

  Rng rng(seed);
  // partial Fisher-Yates picks the flip set without replacement
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  std::vector<std::uint8_t> truth(static_cast<std::size_t>(n), 0);
  std::vector<Label> labels = data.labels();
  for (int t = 0; t < flips; ++t) {
    const std::size_t pick = t + rng.below(static_cast<std::uint64_t>(n - t));
    std::swap(pool[static_cast<std::size_t>(t)], pool[pick]);
    const int idx = pool[static_cast<std::size_t>(t)];
    truth[static_cast<std::size_t>(idx)] = 1;
    const int old = labels[static_cast<std::size_t>(idx)].cls();
    const int draw = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes - 1)));
    labels[static_cast<std::size_t>(idx)] = Label::cls(draw >= old ? draw + 1 : draw);
  }
  return {data.with_labels(std::move(labels)), std::move(truth)};
}

namespace {

// linear-interpolation quantile of the N values
double quantile(const ValueVector& values, double q) {
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const double h = q * (sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - lo) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

std::vector<std::uint8_t> detect_ranking(const ValueVector& values) {
  if (values.empty()) throw InputError("empty value vector");
  const double threshold = quantile(values, 0.10);
  std::vector<std::uint8_t> flags(values.size(), 0);
  for (std::size_t i = 0; i < values.size(); ++i) flags[i] = values[i] < threshold;
  return flags;
}

std::vector<std::uint8_t> detect_cluster(const ValueVector& values) {
  if (values.size() < 2) throw InputError("2-means needs at least two values");
  const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
  double c1 = *mn_it, c2 = *mx_it;
  std::vector<std::uint8_t> flags(values.size(), 0);
  if (c1 == c2) return flags;  // both centers equal; nothing strictly below

  for (int iter = 0; iter < 1000; ++iter) {
    // assignment ties (exactly at the midpoint) go to the lower center
    double sum1 = 0.0, sum2 = 0.0;
    std::size_t cnt1 = 0, cnt2 = 0;
    for (double v : values) {
      if (std::abs(v - c1) <= std::abs(v - c2)) {
        sum1 += v;
        ++cnt1;
      } else {
        sum2 += v;
        ++cnt2;
      }
    }
    // min/max initialization keeps both clusters non-empty in 1-D
    const double n1 = sum1 / static_cast<double>(cnt1);
    const double n2 = sum2 / static_cast<double>(cnt2);
    const double moved = std::max(std::abs(n1 - c1), std::abs(n2 - c2));
    c1 = n1;
    c2 = n2;
    if (moved < 1e-10) break;
  }

  const double threshold = std::min(c1, c2);
  for (std::size_t i = 0; i < values.size(); ++i) flags[i] = values[i] < threshold;
  return flags;
}

double f1_score(const std::vector<std::uint8_t>& flags, const std::vector<std::uint8_t>& truth) {
  if (flags.size() != truth.size()) throw InputError("flags/truth length mismatch");
  long tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < flags.size(); ++i) {
    tp += flags[i] && truth[i];
    fp += flags[i] && !truth[i];
    fn += !flags[i] && truth[i];
  }
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / (tp + fp);
  const double recall = static_cast<double>(tp) / (tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

std::string DetectionReport::to_json_line() const {
  nlohmann::json j;
  j["dataset"] = dataset;
  j["method"] = method;
  j["rule"] = rule;
  j["k"] = k;
  j["seed"] = seed;
  j["f1"] = f1;
  j["n"] = n;
  j["n_flipped"] = n_flipped;
  return j.dump();
}

}  // namespace knnsv
