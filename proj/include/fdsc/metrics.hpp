#pragma once

#include <span>
#include <vector>

#include "fdsc/types.hpp"

namespace fdsc {

// Counts of (predicted cluster, true class) pairs over densely renumbered
// label ids.
struct ContingencyTable {
  Eigen::MatrixXi counts;  // k_pred x k_true
  std::vector<int> row_sums;
  std::vector<int> col_sums;
  int n = 0;
};

ContingencyTable contingency(std::span<const int> pred, std::span<const int> truth);

// Minimum-cost perfect assignment on a square cost matrix; returns the
// column assigned to each row.
std::vector<int> solve_assignment(const Matrix& cost);

// The unit-scale indices in [0, 1] (ARI in [-1, 1]).
double accuracy(std::span<const int> pred, std::span<const int> truth);
double nmi(std::span<const int> pred, std::span<const int> truth);
double ami(std::span<const int> pred, std::span<const int> truth);
double ari(std::span<const int> pred, std::span<const int> truth);

// E[MI] under the hypergeometric (fixed-marginals permutation) model.
double expected_mutual_information(const ContingencyTable& table);
double mutual_information(const ContingencyTable& table);

// Percentages, as reported in result tables.
struct MetricsReport {
  double acc = 0.0;
  double nmi = 0.0;
  double ami = 0.0;
  double ari = 0.0;

  bool operator==(const MetricsReport&) const = default;
};

MetricsReport evaluate_clustering(std::span<const int> pred, std::span<const int> truth);

// Arithmetic mean of each field.
MetricsReport mean_report(std::span<const MetricsReport> reports);

}  // namespace fdsc
