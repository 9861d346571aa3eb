#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "fdsc/types.hpp"

namespace fdsc {

// Nonnegative symmetric similarity with a zero diagonal.
struct AffinityMatrix {
  Matrix w;
};

struct ClusterLabels {
  std::vector<int> labels;
  int k = 0;
};

// W = (|R| + |R^T|) / 2 with zero diagonal. top_s > 0 keeps only the s
// largest |R| entries per row before symmetrising.
AffinityMatrix affinity_from_r(const Matrix& r, int top_s = 0);

// I - D^{-1/2} W D^{-1/2}; zero-degree vertices get a zero scaling.
Matrix normalized_laplacian(const AffinityMatrix& w);

struct EigenPairs {
  Vector values;   // ascending
  Matrix vectors;  // orthonormal columns
};

// k smallest eigenpairs of a symmetric matrix. Each vector's first
// component with magnitude above 1e-12 is made positive.
EigenPairs smallest_eigvecs(const Matrix& l, int k);

struct KMeansOptions {
  int restarts = 20;
  int max_iterations = 300;

  bool operator==(const KMeansOptions&) const = default;
};

struct KMeansResult {
  std::vector<int> labels;
  RowMatrix centers;
  double inertia = 0.0;
};

// Lloyd iterations from k-means++ seeds; best inertia over the restarts.
KMeansResult kmeans(const RowMatrix& points, int k, std::uint64_t seed, const KMeansOptions& options = {});

// Normalized-Laplacian embedding, unit-length rows, then k-means.
ClusterLabels spectral_cluster(const AffinityMatrix& w, int k, std::uint64_t seed,
                               const KMeansOptions& options = {});

// Dense CSV, and a binary form: u32 n then n*n little-endian f32, row-major.
void write_affinity_csv(const std::filesystem::path& path, const Matrix& w);
void write_affinity_binary(const std::filesystem::path& path, const Matrix& w);
Matrix read_affinity_binary(const std::filesystem::path& path);

}  // namespace fdsc
