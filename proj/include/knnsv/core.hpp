#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace knnsv {

struct InputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnsupportedError : std::logic_error {
  using std::logic_error::logic_error;
};

enum class Task { Classification, Regression };

// Class id for classification tasks, real target for regression.
class Label {
 public:
  static Label cls(int id) {
    if (id < 0) throw InputError("class label must be >= 0");
    Label l;
    l.task_ = Task::Classification;
    l.cls_ = id;
    return l;
  }
  static Label real(double y) {
    Label l;
    l.task_ = Task::Regression;
    l.value_ = y;
    return l;
  }

  Task task() const { return task_; }
  int cls() const {
    if (task_ != Task::Classification) throw InputError("label is not a class id");
    return cls_;
  }
  double value() const {
    if (task_ != Task::Regression) throw InputError("label is not a regression target");
    return value_;
  }

 private:
  Label() = default;
  Task task_ = Task::Classification;
  int cls_ = 0;
  double value_ = 0.0;
};

// One real value per training index.
using ValueVector = std::vector<double>;

// Fixed-size collection of (feature vector, label) pairs. Features are stored
// row-major; immutable after construction.
class Dataset {
 public:
  Dataset(std::vector<double> features, std::vector<Label> labels, int dim);

  static Dataset classification(std::vector<double> features, const std::vector<int>& class_ids,
                                int dim);
  static Dataset regression(std::vector<double> features, const std::vector<double>& targets,
                            int dim);

  int n() const { return n_; }
  int dim() const { return dim_; }
  Task task() const { return task_; }

  std::span<const double> point(int i) const {
    return {features_.data() + static_cast<std::size_t>(i) * dim_, static_cast<std::size_t>(dim_)};
  }
  const Label& label(int i) const { return labels_[static_cast<std::size_t>(i)]; }
  int label_class(int i) const { return labels_[static_cast<std::size_t>(i)].cls(); }
  double label_value(int i) const { return labels_[static_cast<std::size_t>(i)].value(); }

  // max class id + 1; classification only
  int num_classes() const;

  const std::vector<double>& features() const { return features_; }
  std::vector<double>& mutable_features() { return features_; }
  const std::vector<Label>& labels() const { return labels_; }

  Dataset with_labels(std::vector<Label> labels) const;

 private:
  std::vector<double> features_;
  std::vector<Label> labels_;
  int n_ = 0;
  int dim_ = 0;
  Task task_ = Task::Classification;
};

using TestSet = Dataset;

enum class Method {
  OriginalClassification,
  SoftClassification,
  OriginalRegression,
  SoftRegression,
};

bool is_classification(Method m);
Method parse_method(const std::string& name);
std::string method_name(Method m);

struct ValuationConfig {
  Method method = Method::SoftClassification;
  int k = 5;
  int num_classes = 0;  // C; required for classification methods

  void validate() const {
    if (k < 1) throw InputError("k must be >= 1");
    if (is_classification(method) && num_classes < 2)
      throw InputError("classification requires num_classes >= 2");
  }
};

// Permutation of {0..n-1} by ascending l2 distance to a query point,
// ties broken by original index.
struct SortedIndex {
  std::vector<int> order;
  std::vector<double> dist;  // non-decreasing, aligned with order

  int size() const { return static_cast<int>(order.size()); }
};

}  // namespace knnsv
