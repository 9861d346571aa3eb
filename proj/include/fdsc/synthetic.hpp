#pragma once

#include <cstdint>

#include "fdsc/dataio.hpp"

namespace fdsc {

// Union of random linear subspaces. Bases and coefficients are drawn
// nonnegative so every point stays in the [0, 1] pixel range after a single
// global rescale (which preserves linear subspaces).
struct SubspaceSpec {
  int subspaces = 3;
  int dimension = 3;
  int per_subspace = 60;
  double noise = 0.01;
  ImageShape shape{1, 20, 1};  // ambient dimension = shape.size()
  std::uint64_t seed = 0;

  bool operator==(const SubspaceSpec&) const = default;
};

Dataset make_subspace_dataset(const SubspaceSpec& spec);

}  // namespace fdsc
