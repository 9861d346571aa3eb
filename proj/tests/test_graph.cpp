#include <doctest.h>

#include "fdsc/errors.hpp"
#include "fdsc/graph.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fdsc;

namespace {

RowMatrix column(std::initializer_list<double> v) {
  RowMatrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

std::set<std::pair<int, int>> edges(const AdjacencyMatrix& a) {
  std::set<std::pair<int, int>> out;
  for (Eigen::Index i = 0; i < a.size(); ++i)
    for (Eigen::Index j = i + 1; j < a.size(); ++j)
      if (a.a(i, j) != 0.0) out.emplace(static_cast<int>(i), static_cast<int>(j));
  return out;
}

}  // namespace

TEST_CASE("two pairs on a line") {
  const auto a = knn_adjacency(column({0, 1, 10, 11}), 1);
  CHECK(edges(a) == std::set<std::pair<int, int>>{{0, 1}, {2, 3}});
}

TEST_CASE("two points") {
  const auto a = knn_adjacency(column({0.3, -2}), 1);
  Matrix expect(2, 2);
  expect << 0, 1, 1, 0;
  CHECK(a.a == expect);
}

TEST_CASE("ties go to the smaller index") {
  const auto a = knn_adjacency(column({0, 1, 2}), 1);
  CHECK(edges(a) == std::set<std::pair<int, int>>{{0, 1}, {1, 2}});
  CHECK(a.a.row(1).sum() == 2.0);
}

TEST_CASE("matches brute force and keeps invariants") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const int n = 60 + 40 * static_cast<int>(seed);
    const RowMatrix x = testutil::random_matrix(n, 5, seed);
    for (int k : {1, 3, 7}) {
      const auto a = knn_adjacency(x, k);
      const auto truth = oracle::brute_knn(x, k);
      CHECK(a.a == a.a.transpose());
      CHECK(a.a.diagonal().isZero(0.0));
      CHECK((a.a.array() * (a.a.array() - 1.0)).isZero(0.0));
      for (int i = 0; i < n; ++i) {
        CHECK(a.a.row(i).sum() >= k);
        for (int j : truth[i]) CHECK(a.a(i, j) == 1.0);
        for (int j = 0; j < n; ++j)
          if (a.a(i, j) == 1.0) CHECK((truth[i].count(j) == 1 || truth[j].count(i) == 1));
      }
    }
  }
}

TEST_CASE("translation invariance") {
  const RowMatrix x = testutil::random_matrix(50, 4, 9);
  RowMatrix shifted = x;
  shifted.rowwise() += Eigen::RowVectorXd::LinSpaced(4, -3.0, 5.0);
  CHECK(knn_adjacency(x, 4).a == knn_adjacency(shifted, 4).a);
}

TEST_CASE("errors") {
  const RowMatrix x = testutil::random_matrix(5, 2, 1);
  CHECK_THROWS_AS(knn_adjacency(x, 5), ConfigError);
  CHECK_THROWS_AS(knn_adjacency(x, 0), ConfigError);
  RowMatrix bad = x;
  bad(2, 1) = std::nan("");
  CHECK_THROWS_AS(knn_adjacency(bad, 2), DataError);
}

TEST_CASE("edge csv") {
  const auto a = knn_adjacency(column({0, 1, 10, 11}), 1);
  CHECK(adjacency_edges_csv(a) == "i,j\n0,1\n2,3\n");
}
