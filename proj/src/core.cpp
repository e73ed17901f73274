#include "knnsv/core.hpp"

#include <algorithm>

namespace knnsv {

Dataset::Dataset(std::vector<double> features, std::vector<Label> labels, int dim)
    : features_(std::move(features)), labels_(std::move(labels)), dim_(dim) {
  if (dim_ < 1) throw InputError("feature dimension must be >= 1");
  if (labels_.empty()) throw InputError("dataset must contain at least one point");
  if (features_.size() != labels_.size() * static_cast<std::size_t>(dim_))
    throw InputError("feature buffer size does not match n * dim");
  n_ = static_cast<int>(labels_.size());
  task_ = labels_.front().task();
  for (const Label& l : labels_)
    if (l.task() != task_) throw InputError("mixed label kinds in one dataset");
}

Dataset Dataset::classification(std::vector<double> features, const std::vector<int>& class_ids,
                                int dim) {
  std::vector<Label> labels;
  labels.reserve(class_ids.size());
  for (int id : class_ids) labels.push_back(Label::cls(id));
  return Dataset(std::move(features), std::move(labels), dim);
}

Dataset Dataset::regression(std::vector<double> features, const std::vector<double>& targets,
                            int dim) {
  std::vector<Label> labels;
  labels.reserve(targets.size());
  for (double y : targets) labels.push_back(Label::real(y));
  return Dataset(std::move(features), std::move(labels), dim);
}

int Dataset::num_classes() const {
  if (task_ != Task::Classification) throw InputError("num_classes on a regression dataset");
  int top = 0;
  for (const Label& l : labels_) top = std::max(top, l.cls());
  return top + 1;
}

Dataset Dataset::with_labels(std::vector<Label> labels) const {
  if (labels.size() != labels_.size()) throw InputError("label count mismatch");
  return Dataset(features_, std::move(labels), dim_);
}

bool is_classification(Method m) {
  return m == Method::OriginalClassification || m == Method::SoftClassification;
}

Method parse_method(const std::string& name) {
  if (name == "original") return Method::OriginalClassification;
  if (name == "soft") return Method::SoftClassification;
  if (name == "original-regression") return Method::OriginalRegression;
  if (name == "soft-regression") return Method::SoftRegression;
  throw InputError("unknown method: " + name);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::OriginalClassification: return "original";
    case Method::SoftClassification: return "soft";
    case Method::OriginalRegression: return "original-regression";
    case Method::SoftRegression: return "soft-regression";
  }
  return "?";
}

}  // namespace knnsv
