#include "knnsv/synth.hpp"

#include <cmath>

#include "knnsv/rng.hpp"

namespace knnsv {

Dataset make_blobs(int n, int dim, double separation, std::uint64_t seed) {
  if (n < 1 || dim < 1) throw InputError("need n >= 1 and dim >= 1");
  Rng rng(seed);
  const double offset = separation / 2.0 / std::sqrt(static_cast<double>(dim));
  std::vector<double> xs(static_cast<std::size_t>(n) * dim);
  std::vector<int> ys(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int cls = i % 2;
    const double center = cls == 0 ? -offset : offset;
    for (int j = 0; j < dim; ++j)
      xs[static_cast<std::size_t>(i) * dim + j] = center + rng.normal();
    ys[static_cast<std::size_t>(i)] = cls;
  }
  return Dataset::classification(std::move(xs), ys, dim);
}

}  // namespace knnsv
