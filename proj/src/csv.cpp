#include "knnsv/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace knnsv {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    cells.push_back(first == std::string::npos ? "" : cell.substr(first, last - first + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

[[noreturn]] void cell_error(const std::string& what, const std::string& cell, int row, int col) {
  throw InputError(what + " '" + cell + "' at row " + std::to_string(row) + ", column " +
                   std::to_string(col));
}

double parse_real(const std::string& cell, int row, int col) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    cell_error("malformed real", cell, row, col);
  if (!std::isfinite(v)) cell_error("non-finite value", cell, row, col);
  return v;
}

int parse_class(const std::string& cell, int row, int col) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    cell_error("malformed class label", cell, row, col);
  if (v < 0) cell_error("negative class label", cell, row, col);
  return v;
}

}  // namespace

LoadedCsv load_csv(const std::string& path, const CsvOptions& options) {
  std::ifstream file(path);
  if (!file) throw InputError("cannot open " + path);

  std::string line;
  if (!std::getline(file, line)) throw InputError(path + " is empty; a header row is required");
  const std::vector<std::string> header = split_row(line);

  int label_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == options.label_column) label_col = static_cast<int>(i);
  if (label_col < 0)
    throw InputError("label column '" + options.label_column + "' not found in " + path);
  if (header.size() < 2) throw InputError(path + " has no feature columns");

  std::vector<std::string> feature_names;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (static_cast<int>(i) != label_col) feature_names.push_back(header[i]);
  const int dim = static_cast<int>(feature_names.size());

  std::vector<double> features;
  std::vector<Label> labels;
  int row = 1;  // 1-based file line numbers; the header is row 1
  while (std::getline(file, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const std::vector<std::string> cells = split_row(line);
    if (cells.size() != header.size())
      throw InputError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                       " cells, expected " + std::to_string(header.size()));
    for (std::size_t col = 0; col < cells.size(); ++col) {
      const int col1 = static_cast<int>(col) + 1;
      if (static_cast<int>(col) == label_col) {
        if (options.task == Task::Classification)
          labels.push_back(Label::cls(parse_class(cells[col], row, col1)));
        else
          labels.push_back(Label::real(parse_real(cells[col], row, col1)));
      } else {
        features.push_back(parse_real(cells[col], row, col1));
      }
    }
  }
  if (labels.empty()) throw InputError(path + " contains a header but no data rows");
  return {Dataset(std::move(features), std::move(labels), dim), std::move(feature_names)};
}

Normalizer Normalizer::fit(const Dataset& data) {
  const int n = data.n(), d = data.dim();
  Normalizer norm;
  norm.mean.assign(static_cast<std::size_t>(d), 0.0);
  norm.stddev.assign(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < n; ++i) {
    const auto p = data.point(i);
    for (int j = 0; j < d; ++j) norm.mean[static_cast<std::size_t>(j)] += p[j];
  }
  for (double& m : norm.mean) m /= n;
  for (int i = 0; i < n; ++i) {
    const auto p = data.point(i);
    for (int j = 0; j < d; ++j) {
      const double diff = p[j] - norm.mean[static_cast<std::size_t>(j)];
      norm.stddev[static_cast<std::size_t>(j)] += diff * diff;
    }
  }
  for (double& s : norm.stddev) {
    s = std::sqrt(s / n);
    if (s == 0.0) s = 1.0;  // constant feature
  }
  return norm;
}

void Normalizer::apply(Dataset& data) const {
  const int d = data.dim();
  if (static_cast<int>(mean.size()) != d) throw InputError("normalizer dimension mismatch");
  std::vector<double>& xs = data.mutable_features();
  for (int i = 0; i < data.n(); ++i)
    for (int j = 0; j < d; ++j) {
      double& v = xs[static_cast<std::size_t>(i) * d + j];
      v = (v - mean[static_cast<std::size_t>(j)]) / stddev[static_cast<std::size_t>(j)];
    }
}

}  // namespace knnsv
