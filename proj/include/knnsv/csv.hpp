#pragma once

#include <string>
#include <vector>

#include "knnsv/core.hpp"

namespace knnsv {

// Header-row CSV with one label column (by name) and real-valued features in
// every other column. Classification labels must parse as integers.
struct CsvOptions {
  std::string label_column = "label";
  Task task = Task::Classification;
};

struct LoadedCsv {
  Dataset data;
  std::vector<std::string> feature_names;
};

LoadedCsv load_csv(const std::string& path, const CsvOptions& options);

// per-feature z-score fit on one dataset and applied to others; zero-variance
// features get std clamped to 1
struct Normalizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static Normalizer fit(const Dataset& data);
  void apply(Dataset& data) const;
};

}  // namespace knnsv
