#include "fdsc/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "fdsc/errors.hpp"
#include "fdsc/random.hpp"

namespace fdsc {
namespace {

// Squared distances from every point to every center (n x k).
Matrix squared_distances(const RowMatrix& points, const RowMatrix& centers,
                         const Vector& point_norms) {
  Matrix d = -2.0 * (points * centers.transpose());
  d.colwise() += point_norms;
  d.rowwise() += centers.rowwise().squaredNorm().transpose();
  return d.cwiseMax(0.0);
}

RowMatrix kmeanspp_seeds(const RowMatrix& points, int k, Rng& rng) {
  const Eigen::Index n = points.rows();
  RowMatrix centers(k, points.cols());
  centers.row(0) = points.row(static_cast<Eigen::Index>(rng.below(n)));
  Vector nearest = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = nearest.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double target = rng.uniform() * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        target -= nearest[i];
        if (target < 0.0 && nearest[i] > 0.0) {
          pick = i;
          break;
        }
      }
      // Guard against rounding landing on an already-chosen point.
      while (nearest[pick] <= 0.0 && pick > 0) --pick;
    } else {
      pick = static_cast<Eigen::Index>(rng.below(n));
    }
    centers.row(c) = points.row(pick);
    nearest = nearest.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }
  return centers;
}

KMeansResult lloyd(const RowMatrix& points, RowMatrix centers, const Vector& norms, int max_iterations) {
  const Eigen::Index n = points.rows();
  const int k = static_cast<int>(centers.rows());
  KMeansResult result;
  result.labels.assign(n, -1);
  Vector best_dist(n);
  for (int iter = 0; iter < max_iterations; ++iter) {
    const Matrix d = squared_distances(points, centers, norms);
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index arg;
      best_dist[i] = d.row(i).minCoeff(&arg);
      if (result.labels[i] != static_cast<int>(arg)) {
        result.labels[i] = static_cast<int>(arg);
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    RowMatrix sums = RowMatrix::Zero(k, points.cols());
    std::vector<int> counts(k, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(result.labels[i]) += points.row(i);
      ++counts[result.labels[i]];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        centers.row(c) = sums.row(c) / counts[c];
      } else {
        // Empty cluster: move it onto the point worst served right now.
        Eigen::Index far;
        best_dist.maxCoeff(&far);
        centers.row(c) = points.row(far);
        best_dist[far] = 0.0;
      }
    }
  }
  const Matrix d = squared_distances(points, centers, norms);
  result.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index arg;
    d.row(i).minCoeff(&arg);
    result.labels[i] = static_cast<int>(arg);
    result.inertia += (points.row(i) - centers.row(arg)).squaredNorm();
  }
  result.centers = std::move(centers);
  return result;
}

// Renumbers labels in order of first appearance.
std::vector<int> canonical(const std::vector<int>& labels, int k) {
  std::vector<int> map(k, -1);
  int next = 0;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (map[labels[i]] < 0) map[labels[i]] = next++;
    out[i] = map[labels[i]];
  }
  return out;
}

}  // namespace

AffinityMatrix affinity_from_r(const Matrix& r, int top_s) {
  if (r.rows() != r.cols()) throw ShapeError("self-expressive matrix must be square");
  if (!r.allFinite()) throw NumericsError("non-finite entry in self-expressive matrix");
  const Eigen::Index n = r.rows();
  Matrix c = r.cwiseAbs();
  c.diagonal().setZero();
  if (top_s > 0 && top_s < n) {
    std::vector<Eigen::Index> order(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      std::iota(order.begin(), order.end(), Eigen::Index{0});
      std::partial_sort(order.begin(), order.begin() + top_s, order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (c(i, a) != c(i, b)) return c(i, a) > c(i, b);
        return a < b;
      });
      for (Eigen::Index t = top_s; t < n; ++t) c(i, order[t]) = 0.0;
    }
  }
  AffinityMatrix out;
  out.w = 0.5 * (c + c.transpose());
  out.w.diagonal().setZero();
  return out;
}

Matrix normalized_laplacian(const AffinityMatrix& w) {
  const Eigen::Index n = w.w.rows();
  const Vector degree = w.w.rowwise().sum();
  Vector scale(n);
  for (Eigen::Index i = 0; i < n; ++i) scale[i] = degree[i] > 0.0 ? 1.0 / std::sqrt(degree[i]) : 0.0;
  Matrix l = -(scale.asDiagonal() * w.w * scale.asDiagonal());
  l.diagonal().array() += 1.0;
  return l;
}

EigenPairs smallest_eigvecs(const Matrix& l, int k) {
  const Eigen::Index n = l.rows();
  if (l.cols() != n) throw ShapeError("eigen-decomposition needs a square matrix");
  if (k < 1 || k > n) throw ConfigError("requested eigenpair count out of range");
  if (!l.allFinite()) throw NumericsError("non-finite entry in Laplacian");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(l);
  if (solver.info() != Eigen::Success) throw NumericsError("symmetric eigensolver did not converge");
  EigenPairs out;
  out.values = solver.eigenvalues().head(k);
  out.vectors = solver.eigenvectors().leftCols(k);
  for (int j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = out.vectors(i, j);
      if (std::abs(v) > 1e-12) {
        if (v < 0.0) out.vectors.col(j) *= -1.0;
        break;
      }
    }
  }
  return out;
}

KMeansResult kmeans(const RowMatrix& points, int k, std::uint64_t seed, const KMeansOptions& options) {
  const Eigen::Index n = points.rows();
  if (k < 1 || k > n) throw ConfigError("k-means needs 1 <= k <= n");
  if (!points.allFinite()) throw NumericsError("non-finite k-means input");
  const Vector norms = points.rowwise().squaredNorm();
  Rng rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int restart = 0; restart < std::max(1, options.restarts); ++restart) {
    KMeansResult candidate = lloyd(points, kmeanspp_seeds(points, k, rng), norms, options.max_iterations);
    if (candidate.inertia < best.inertia) best = std::move(candidate);
  }
  return best;
}

ClusterLabels spectral_cluster(const AffinityMatrix& w, int k, std::uint64_t seed, const KMeansOptions& options) {
  if (k < 2) throw ConfigError("spectral clustering needs k >= 2");
  const EigenPairs eig = smallest_eigvecs(normalized_laplacian(w), k);
  RowMatrix embedding = eig.vectors;
  for (Eigen::Index i = 0; i < embedding.rows(); ++i) {
    const double norm = embedding.row(i).norm();
    if (norm > 0.0) embedding.row(i) /= norm;
  }
  const KMeansResult km = kmeans(embedding, k, seed, options);
  return ClusterLabels{canonical(km.labels, k), k};
}

void write_affinity_csv(const std::filesystem::path& path, const Matrix& w) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out.precision(9);
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) out << (j ? "," : "") << w(i, j);
    out << '\n';
  }
}

void write_affinity_binary(const std::filesystem::path& path, const Matrix& w) {
  if (w.rows() != w.cols()) throw ShapeError("affinity must be square");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  const auto n = static_cast<std::uint32_t>(w.rows());
  out.write(reinterpret_cast<const char*>(&n), sizeof(n));
  std::vector<float> row(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) row[j] = static_cast<float>(w(i, j));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(n * sizeof(float)));
  }
}

Matrix read_affinity_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::uint32_t n = 0;
  in.read(reinterpret_cast<char*>(&n), sizeof(n));
  if (in.gcount() != sizeof(n)) throw FormatError("truncated affinity header in " + path.string());
  Matrix w(n, n);
  std::vector<float> row(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(n * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(n * sizeof(float)))
      throw FormatError("truncated affinity payload in " + path.string());
    for (std::uint32_t j = 0; j < n; ++j) w(i, j) = row[j];
  }
  return w;
}

}  // namespace fdsc
