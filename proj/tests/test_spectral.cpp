#include <doctest.h>

#include "fdsc/errors.hpp"
#include "fdsc/metrics.hpp"
#include "fdsc/random.hpp"
#include "fdsc/spectral.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace fdsc;

namespace {

Matrix random_symmetric(int n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  const Matrix m = testutil::random_matrix(n, n, seed, lo, hi);
  return (m + m.transpose()) / 2.0;
}

// Dense cliques of the given sizes with random positive weights.
AffinityMatrix blocks(const std::vector<int>& sizes, std::uint64_t seed, std::vector<int>& truth) {
  int n = 0;
  for (int s : sizes) n += s;
  Matrix w = Matrix::Zero(n, n);
  Rng rng(seed);
  truth.clear();
  int start = 0;
  for (std::size_t b = 0; b < sizes.size(); ++b) {
    for (int i = 0; i < sizes[b]; ++i) {
      truth.push_back(static_cast<int>(b));
      for (int j = i + 1; j < sizes[b]; ++j) w(start + i, start + j) = w(start + j, start + i) = rng.uniform(0.2, 1.0);
    }
    start += sizes[b];
  }
  return {w};
}

}  // namespace

TEST_CASE("affinity from R") {
  SUBCASE("fixed point") {
    Matrix r = random_symmetric(5, 1, 0.0, 1.0);
    r.diagonal().setZero();
    CHECK(affinity_from_r(r).w == r);
  }
  SUBCASE("two by two") {
    Matrix r(2, 2);
    r << 0, -2, 4, 0;
    Matrix want(2, 2);
    want << 0, 3, 3, 0;
    CHECK(affinity_from_r(r).w == want);
  }
  SUBCASE("properties on random input") {
    const Matrix r = testutil::random_matrix(5, 5, 7, -1, 1);
    const Matrix w = affinity_from_r(r).w;
    for (int i = 0; i < 5; ++i) {
      CHECK(w(i, i) == 0.0);
      for (int j = 0; j < 5; ++j) {
        CHECK(w(i, j) == w(j, i));
        CHECK(w(i, j) >= 0.0);
        if (i != j) CHECK(w(i, j) == doctest::Approx((std::abs(r(i, j)) + std::abs(r(j, i))) / 2).epsilon(1e-15));
      }
    }
    CHECK(affinity_from_r(r.transpose()).w == w);
  }
  SUBCASE("top-s keeps the largest entries of each row") {
    Matrix r(3, 3);
    r << 0, 5, 1, 2, 0, -9, 3, 4, 0;
    const Matrix w = affinity_from_r(r, 1).w;
    // rows keep (0,1)=5, (1,2)=-9, (2,1)=4
    Matrix want(3, 3);
    want << 0, 2.5, 0, 2.5, 0, 6.5, 0, 6.5, 0;
    CHECK(w == want);
  }
  Matrix bad = Matrix::Zero(3, 3);
  bad(0, 1) = std::nan("");
  CHECK_THROWS_AS(affinity_from_r(bad), NumericsError);
  CHECK_THROWS_AS(affinity_from_r(Matrix::Zero(2, 3)), ShapeError);
}

TEST_CASE("normalized Laplacian") {
  SUBCASE("two unit edges") {
    Matrix w = Matrix::Zero(4, 4);
    w(0, 1) = w(1, 0) = w(2, 3) = w(3, 2) = 1.0;
    Matrix want = Matrix::Zero(4, 4);
    want.block(0, 0, 2, 2) << 1, -1, -1, 1;
    want.block(2, 2, 2, 2) << 1, -1, -1, 1;
    CHECK(normalized_laplacian({w}) == want);
  }
  SUBCASE("empty graph") {
    CHECK(normalized_laplacian({Matrix::Zero(3, 3)}) == Matrix::Identity(3, 3));
  }
  SUBCASE("isolated vertex keeps a unit diagonal") {
    Matrix w = Matrix::Zero(3, 3);
    w(0, 1) = w(1, 0) = 2.0;
    const Matrix l = normalized_laplacian({w});
    CHECK(l(2, 2) == 1.0);
    CHECK(l.row(2).sum() == 1.0);
  }
  SUBCASE("spectrum lies in [0, 2]") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      Matrix r = testutil::random_matrix(9, 9, seed, -1, 1);
      const Matrix l = normalized_laplacian(affinity_from_r(r));
      for (double ev : oracle::jacobi_eigenvalues(l)) {
        CHECK(ev >= -1e-12);
        CHECK(ev <= 2.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("smallest eigenpairs") {
  SUBCASE("identity") {
    const auto e = smallest_eigvecs(Matrix::Identity(3, 3), 2);
    CHECK(e.values(0) == doctest::Approx(1.0));
    CHECK(e.values(1) == doctest::Approx(1.0));
    CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(2, 2)).norm() < 1e-12);
  }
  SUBCASE("diagonal, with the sign convention") {
    Matrix l = Matrix::Zero(3, 3);
    l(1, 1) = 1.0;
    l(2, 2) = 2.0;
    const auto e = smallest_eigvecs(l, 1);
    CHECK(e.values(0) == doctest::Approx(0.0));
    CHECK(e.vectors(0, 0) == doctest::Approx(1.0));
    CHECK(e.vectors.col(0).tail(2).isZero(1e-14));
    const auto flipped = smallest_eigvecs(l, 3);
    for (int c = 0; c < 3; ++c) CHECK(flipped.vectors(c, c) > 0.0);
  }
  SUBCASE("random symmetric against Jacobi") {
    for (std::uint64_t seed = 10; seed < 15; ++seed) {
      const Matrix l = random_symmetric(8, seed);
      const auto e = smallest_eigvecs(l, 8);
      const auto want = oracle::jacobi_eigenvalues(l);
      const double fro = l.norm();
      for (int i = 0; i < 8; ++i) {
        CHECK(std::abs(e.values(i) - want[i]) <= 1e-8);
        CHECK((l * e.vectors.col(i) - e.values(i) * e.vectors.col(i)).norm() <= 1e-8 * fro);
        Eigen::Index first = 0;
        while (std::abs(e.vectors(first, i)) <= 1e-12) ++first;
        CHECK(e.vectors(first, i) > 0.0);
        if (i > 0) CHECK(e.values(i) >= e.values(i - 1));
      }
      CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(8, 8)).norm() < 1e-10);
    }
  }
  CHECK_THROWS_AS(smallest_eigvecs(Matrix::Identity(3, 3), 4), ConfigError);
  CHECK_THROWS_AS(smallest_eigvecs(Matrix::Identity(3, 3), 0), ConfigError);
  Matrix bad = Matrix::Identity(3, 3);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(smallest_eigvecs(bad, 1), NumericsError);
}

TEST_CASE("k-means") {
  const RowMatrix pts = testutil::random_matrix(7, 3, 2);
  const auto full = kmeans(pts, 7, 1);
  CHECK(full.inertia == 0.0);
  std::set<int> distinct(full.labels.begin(), full.labels.end());
  CHECK(distinct.size() == 7);

  const auto a = kmeans(pts, 3, 9), b = kmeans(pts, 3, 9);
  CHECK(a.labels == b.labels);
  CHECK(a.inertia == b.inertia);
  CHECK_THROWS_AS(kmeans(pts, 8, 1), ConfigError);
  CHECK_THROWS_AS(kmeans(pts, 0, 1), ConfigError);

  // inertia matches a direct recomputation
  double s = 0.0;
  for (int i = 0; i < 7; ++i) s += (pts.row(i) - a.centers.row(a.labels[i])).squaredNorm();
  CHECK(a.inertia == doctest::Approx(s).epsilon(1e-12));
}

TEST_CASE("spectral clustering recovers components") {
  std::vector<int> truth;
  const auto two = blocks({3, 3}, 1, truth);
  const auto got = spectral_cluster(two, 2, 5);
  CHECK(got.labels[0] == got.labels[1]);
  CHECK(got.labels[1] == got.labels[2]);
  CHECK(got.labels[3] == got.labels[4]);
  CHECK(got.labels[0] != got.labels[3]);
  CHECK(got.k == 2);

  for (int k = 2; k <= 4; ++k) {
    std::vector<int> sizes;
    for (int b = 0; b < k; ++b) sizes.push_back(40 / k - b);
    const auto w = blocks(sizes, 10 + k, truth);
    const auto labels = spectral_cluster(w, k, 3).labels;
    CHECK(accuracy(labels, truth) == 1.0);
  }
  CHECK_THROWS_AS(spectral_cluster(two, 1, 0), ConfigError);
}

TEST_CASE("three separated blobs") {
  for (std::uint64_t seed : {1, 2, 3}) {
    Rng rng(seed);
    RowMatrix pts(60, 2);
    std::vector<int> truth;
    for (int i = 0; i < 60; ++i) {
      const int c = i % 3;
      truth.push_back(c);
      pts(i, 0) = 100.0 * c + rng.normal();
      pts(i, 1) = -50.0 * c + rng.normal();
    }
    Matrix w(60, 60);
    for (int i = 0; i < 60; ++i)
      for (int j = 0; j < 60; ++j) w(i, j) = i == j ? 0.0 : std::exp(-(pts.row(i) - pts.row(j)).squaredNorm() / 8.0);
    CHECK(accuracy(spectral_cluster({w}, 3, seed).labels, truth) == 1.0);
  }
}

TEST_CASE("permutation equivariance") {
  std::vector<int> truth;
  AffinityMatrix w = blocks({9, 8, 7}, 4, truth);
  // light cross-block noise so the problem is not trivially disconnected
  Rng rng(8);
  for (int i = 0; i < 24; ++i)
    for (int j = i + 1; j < 24; ++j)
      if (truth[i] != truth[j]) w.w(i, j) = w.w(j, i) = rng.uniform(0.0, 0.02);
  std::vector<int> perm(24);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 g(3);
  std::shuffle(perm.begin(), perm.end(), g);
  Matrix pw(24, 24);
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 24; ++j) pw(i, j) = w.w(perm[i], perm[j]);
  const auto base = spectral_cluster(w, 3, 1).labels;
  const auto permuted = spectral_cluster({pw}, 3, 1).labels;
  std::vector<int> back(24);
  for (int i = 0; i < 24; ++i) back[perm[i]] = permuted[i];
  CHECK(accuracy(back, base) == 1.0);
}

TEST_CASE("affinity files") {
  testutil::TempDir dir("aff");
  Matrix w = testutil::random_matrix(5, 5, 3);
  write_affinity_binary(dir / "w.bin", w);
  const Matrix back = read_affinity_binary(dir / "w.bin");
  REQUIRE(back.rows() == 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) CHECK(back(i, j) == static_cast<double>(static_cast<float>(w(i, j))));
  CHECK(std::filesystem::file_size(dir / "w.bin") == 4 + 25 * 4);
  // row-major: the second float is w(0, 1)
  std::ifstream in(dir / "w.bin", std::ios::binary);
  std::uint32_t n = 0;
  float f[2];
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(f), 8);
  CHECK(n == 5);
  CHECK(f[1] == static_cast<float>(w(0, 1)));

  write_affinity_csv(dir / "w.csv", w);
  std::ifstream csv(dir / "w.csv");
  std::string line;
  int rows = 0;
  while (std::getline(csv, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 4);
    ++rows;
  }
  CHECK(rows == 5);

  testutil::write_bytes(dir / "short.bin", {5, 0, 0, 0, 1, 2});
  CHECK_THROWS_AS(read_affinity_binary(dir / "short.bin"), FormatError);
}
