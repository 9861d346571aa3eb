#include "fdsc/graph.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <vector>

#include "fdsc/errors.hpp"

namespace fdsc {

AdjacencyMatrix knn_adjacency(const RowMatrix& samples, int k) {
  const Eigen::Index n = samples.rows();
  if (k < 1 || k >= n) throw ConfigError("k-NN needs 1 <= k < n");
  if (!samples.allFinite()) throw DataError("non-finite value in k-NN input");

  Matrix dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (samples.row(i) - samples.row(j)).squaredNorm();
      dist(i, j) = d;
      dist(j, i) = d;
    }
  }

  AdjacencyMatrix out;
  out.k = k;
  out.a = Matrix::Zero(n, n);
  std::vector<Eigen::Index> order(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index slot = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) order[slot++] = j;
    std::partial_sort(order.begin(), order.begin() + k, order.end(),
                      [&](Eigen::Index x, Eigen::Index y) {
                        if (dist(i, x) != dist(i, y)) return dist(i, x) < dist(i, y);
                        return x < y;
                      });
    for (int t = 0; t < k; ++t) {
      out.a(i, order[t]) = 1.0;
      out.a(order[t], i) = 1.0;
    }
  }
  out.a.diagonal().setZero();
  return out;
}

std::string adjacency_edges_csv(const AdjacencyMatrix& adjacency) {
  std::ostringstream out;
  out << "i,j\n";
  const Eigen::Index n = adjacency.size();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (adjacency.a(i, j) != 0.0) out << i << ',' << j << '\n';
  return out.str();
}

}  // namespace fdsc
