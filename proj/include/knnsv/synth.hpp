#pragma once

#include <cstdint>

#include "knnsv/core.hpp"

namespace knnsv {

// Two balanced Gaussian blobs (unit per-coordinate std) with centers
// `separation` apart along the unit diagonal; class of point i is i % 2.
Dataset make_blobs(int n, int dim, double separation, std::uint64_t seed);

}  // namespace knnsv
