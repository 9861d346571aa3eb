#include "fdsc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "fdsc/errors.hpp"

namespace fdsc {
namespace {

void check_pair(std::span<const int> pred, std::span<const int> truth) {
  if (pred.size() != truth.size()) throw ShapeError("label vectors differ in length");
  if (pred.empty()) throw ConfigError("cannot score an empty labelling");
}

std::vector<int> dense_ids(std::span<const int> labels, int& count) {
  std::map<int, int> ids;
  for (int l : labels) ids.emplace(l, 0);
  count = 0;
  for (auto& [label, id] : ids) id = count++;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = ids[labels[i]];
  return out;
}

double entropy(const std::vector<int>& sums, int n) {
  double h = 0.0;
  for (int s : sums)
    if (s > 0) {
      const double p = static_cast<double>(s) / n;
      h -= p * std::log(p);
    }
  return h;
}

double choose2(double x) { return x * (x - 1.0) / 2.0; }

// Same partition up to renaming: the contingency table is a permutation.
bool identical_partitions(const ContingencyTable& t) {
  if (t.counts.rows() != t.counts.cols()) return false;
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i)
    if ((t.counts.row(i).array() > 0).count() != 1) return false;
  for (Eigen::Index j = 0; j < t.counts.cols(); ++j)
    if ((t.counts.col(j).array() > 0).count() != 1) return false;
  return true;
}

}  // namespace

ContingencyTable contingency(std::span<const int> pred, std::span<const int> truth) {
  check_pair(pred, truth);
  int kp = 0, kt = 0;
  const auto p = dense_ids(pred, kp);
  const auto t = dense_ids(truth, kt);
  ContingencyTable table;
  table.n = static_cast<int>(pred.size());
  table.counts = Eigen::MatrixXi::Zero(kp, kt);
  for (std::size_t i = 0; i < p.size(); ++i) ++table.counts(p[i], t[i]);
  table.row_sums.resize(kp);
  table.col_sums.resize(kt);
  for (int i = 0; i < kp; ++i) table.row_sums[i] = table.counts.row(i).sum();
  for (int j = 0; j < kt; ++j) table.col_sums[j] = table.counts.col(j).sum();
  return table;
}

// Shortest augmenting path formulation (Kuhn-Munkres with potentials), O(k^3).
std::vector<int> solve_assignment(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n) throw ShapeError("assignment needs a square cost matrix");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), min_to(n + 1);
  std::vector<int> match(n + 1, 0), way(n + 1, 0);  // match[col] = row, 1-based
  std::vector<char> used(n + 1);
  for (int row = 1; row <= n; ++row) {
    match[0] = row;
    int col0 = 0;
    std::fill(min_to.begin(), min_to.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const int r = match[col0];
      double delta = inf;
      int col1 = 0;
      for (int col = 1; col <= n; ++col) {
        if (used[col]) continue;
        const double reduced = cost(r - 1, col - 1) - u[r] - v[col];
        if (reduced < min_to[col]) {
          min_to[col] = reduced;
          way[col] = col0;
        }
        if (min_to[col] < delta) {
          delta = min_to[col];
          col1 = col;
        }
      }
      for (int col = 0; col <= n; ++col) {
        if (used[col]) {
          u[match[col]] += delta;
          v[col] -= delta;
        } else {
          min_to[col] -= delta;
        }
      }
      col0 = col1;
    } while (match[col0] != 0);
    do {
      const int col1 = way[col0];
      match[col0] = match[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<int> assignment(n, -1);
  for (int col = 1; col <= n; ++col)
    if (match[col] > 0) assignment[match[col] - 1] = col - 1;
  return assignment;
}

double accuracy(std::span<const int> pred, std::span<const int> truth) {
  const ContingencyTable t = contingency(pred, truth);
  const Eigen::Index k = std::max(t.counts.rows(), t.counts.cols());
  Matrix cost = Matrix::Zero(k, k);  // zero padding for unmatched ids
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i)
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) cost(i, j) = -t.counts(i, j);
  const auto assignment = solve_assignment(cost);
  long matched = 0;
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i)
    if (assignment[i] < t.counts.cols()) matched += t.counts(i, assignment[i]);
  return static_cast<double>(matched) / t.n;
}

double mutual_information(const ContingencyTable& t) {
  double mi = 0.0;
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i)
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) {
      const int nij = t.counts(i, j);
      if (nij == 0) continue;
      mi += static_cast<double>(nij) / t.n *
            std::log(static_cast<double>(nij) * t.n / (static_cast<double>(t.row_sums[i]) * t.col_sums[j]));
    }
  return std::max(mi, 0.0);
}

double expected_mutual_information(const ContingencyTable& t) {
  const int n = t.n;
  const double log_n = std::log(static_cast<double>(n));
  const double lg_n = std::lgamma(n + 1.0);
  double emi = 0.0;
  for (int a : t.row_sums) {
    for (int b : t.col_sums) {
      const int lo = std::max(1, a + b - n);
      const int hi = std::min(a, b);
      const double fixed = std::lgamma(a + 1.0) + std::lgamma(b + 1.0) + std::lgamma(n - a + 1.0) +
                           std::lgamma(n - b + 1.0) - lg_n;
      for (int nij = lo; nij <= hi; ++nij) {
        const double term = static_cast<double>(nij) / n *
                            (std::log(static_cast<double>(nij)) + log_n - std::log(static_cast<double>(a)) -
                             std::log(static_cast<double>(b)));
        const double log_p = fixed - std::lgamma(nij + 1.0) - std::lgamma(a - nij + 1.0) -
                             std::lgamma(b - nij + 1.0) - std::lgamma(n - a - b + nij + 1.0);
        emi += term * std::exp(log_p);
      }
    }
  }
  return emi;
}

double nmi(std::span<const int> pred, std::span<const int> truth) {
  const ContingencyTable t = contingency(pred, truth);
  const double hu = entropy(t.row_sums, t.n);
  const double hv = entropy(t.col_sums, t.n);
  if (hu == 0.0 && hv == 0.0) return 1.0;
  const double mi = mutual_information(t);
  if (mi == 0.0) return 0.0;
  return std::min(1.0, mi / (0.5 * (hu + hv)));
}

double ami(std::span<const int> pred, std::span<const int> truth) {
  const ContingencyTable t = contingency(pred, truth);
  // a single-cluster side carries no information: I = E[I] = 0 exactly
  if (t.row_sums.size() == 1 || t.col_sums.size() == 1) return identical_partitions(t) ? 1.0 : 0.0;
  const double hu = entropy(t.row_sums, t.n);
  const double hv = entropy(t.col_sums, t.n);
  const double mi = mutual_information(t);
  const double emi = expected_mutual_information(t);
  const double denom = 0.5 * (hu + hv) - emi;
  if (std::abs(denom) <= 1e-12 * std::max(1.0, 0.5 * (hu + hv)))
    return identical_partitions(t) ? 1.0 : 0.0;
  return (mi - emi) / denom;
}

double ari(std::span<const int> pred, std::span<const int> truth) {
  const ContingencyTable t = contingency(pred, truth);
  double index = 0.0;
  for (Eigen::Index i = 0; i < t.counts.rows(); ++i)
    for (Eigen::Index j = 0; j < t.counts.cols(); ++j) index += choose2(t.counts(i, j));
  double t1 = 0.0, t2 = 0.0;
  for (int a : t.row_sums) t1 += choose2(a);
  for (int b : t.col_sums) t2 += choose2(b);
  const double pairs = choose2(t.n);
  const double expected = pairs > 0.0 ? t1 * t2 / pairs : 0.0;
  const double denom = 0.5 * (t1 + t2) - expected;
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

MetricsReport evaluate_clustering(std::span<const int> pred, std::span<const int> truth) {
  return MetricsReport{100.0 * accuracy(pred, truth), 100.0 * nmi(pred, truth), 100.0 * ami(pred, truth),
                       100.0 * ari(pred, truth)};
}

MetricsReport mean_report(std::span<const MetricsReport> reports) {
  MetricsReport mean;
  if (reports.empty()) return mean;
  for (const auto& r : reports) {
    mean.acc += r.acc;
    mean.nmi += r.nmi;
    mean.ami += r.ami;
    mean.ari += r.ari;
  }
  const double n = static_cast<double>(reports.size());
  mean.acc /= n;
  mean.nmi /= n;
  mean.ami /= n;
  mean.ari /= n;
  return mean;
}

}  // namespace fdsc
