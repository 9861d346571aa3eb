#pragma once

#include <string>

#include "fdsc/types.hpp"

namespace fdsc {

// Binary symmetric k-NN graph over one client's samples.
struct AdjacencyMatrix {
  Matrix a;
  int k = 0;

  Eigen::Index size() const { return a.rows(); }
};

// Euclidean k-NN on the raw rows of `samples`, ties broken by smaller
// index, symmetrised with max(A, A^T) and a zero diagonal.
AdjacencyMatrix knn_adjacency(const RowMatrix& samples, int k);

// "i,j" per undirected edge (i < j), with a header line.
std::string adjacency_edges_csv(const AdjacencyMatrix& adjacency);

}  // namespace fdsc
