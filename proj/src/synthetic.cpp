#include "fdsc/synthetic.hpp"

#include <algorithm>

#include "fdsc/errors.hpp"
#include "fdsc/random.hpp"

namespace fdsc {

Dataset make_subspace_dataset(const SubspaceSpec& spec) {
  if (spec.subspaces < 1 || spec.dimension < 1 || spec.per_subspace < 1)
    throw ConfigError("subspace generator needs positive counts");
  const int ambient = spec.shape.size();
  if (ambient < 1) throw ConfigError("subspace generator needs a positive ambient dimension");

  Rng rng(spec.seed);
  const int n = spec.subspaces * spec.per_subspace;
  Dataset out;
  out.shape = spec.shape;
  out.class_count = spec.subspaces;
  out.samples.resize(n, ambient);
  out.labels.resize(n);

  for (int s = 0; s < spec.subspaces; ++s) {
    Matrix basis(ambient, spec.dimension);
    for (Eigen::Index i = 0; i < basis.size(); ++i) basis.data()[i] = rng.uniform();
    for (int p = 0; p < spec.per_subspace; ++p) {
      Vector coeff(spec.dimension);
      for (int j = 0; j < spec.dimension; ++j) coeff[j] = rng.uniform();
      const int row = s * spec.per_subspace + p;
      out.samples.row(row) = (basis * coeff).transpose();
      out.labels[row] = s;
    }
  }
  const double peak = out.samples.maxCoeff();
  if (peak > 0.0) out.samples /= peak;
  for (Eigen::Index i = 0; i < out.samples.size(); ++i) {
    double& v = out.samples.data()[i];
    v = std::clamp(v + spec.noise * rng.normal(), 0.0, 1.0);
  }
  return out;
}

}  // namespace fdsc
