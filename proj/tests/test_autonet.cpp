#include <doctest.h>

#include "fdsc/autonet.hpp"
#include "fdsc/errors.hpp"
#include "fdsc/synthetic.hpp"
#include "gradient_check.hpp"
#include "net_fixtures.hpp"
#include "oracles.hpp"

using namespace fdsc;

TEST_CASE("init shapes and zero R") {
  const auto arch = fixtures::tiny_arch({28, 28, 1});
  const NetParams p = make_net(init_encoder(arch, 1), init_decoder(arch, 2), 6);
  CHECK(p.encoder.layers[0].kernels.rows() == 4);
  CHECK(p.encoder.layers[0].kernels.cols() == 9);
  CHECK(p.encoder.latent_dim() == 3 * 7 * 7);
  CHECK(p.decoder.latent_dim() == p.encoder.latent_dim());
  CHECK(p.self_expressive.r.isZero(0.0));
  const double bound = 1.0 / 3.0;
  CHECK(p.encoder.layers[0].kernels.cwiseAbs().maxCoeff() <= bound);
  CHECK(p.encoder.layers[1].kernels.cwiseAbs().maxCoeff() <= 1.0 / 6.0);
  // seeded
  const EncoderParams again = init_encoder(arch, 1);
  CHECK(again.layers[1].kernels == p.encoder.layers[1].kernels);
  CHECK(init_encoder(arch, 3).layers[1].kernels != p.encoder.layers[1].kernels);
}

TEST_CASE("all-zero encoder gives zero latent") {
  const auto arch = fixtures::tiny_arch();
  NetParams p = zeros_like(fixtures::random_net(arch, 3, 1));
  const RowMatrix z = encode(p.encoder, testutil::random_matrix(3, 64, 2));
  CHECK(z.isZero(0.0));
}

TEST_CASE("identity 1x1 encoder passes pixels through") {
  Architecture arch;
  arch.input = {5, 4, 1};
  arch.conv1 = {1, 1, 1};
  arch.conv2 = {1, 1, 1};
  EncoderParams enc = init_encoder(arch, 0);
  for (auto& l : enc.layers) {
    l.kernels.setOnes();
    l.biases.setZero();
  }
  const RowMatrix x = testutil::random_matrix(3, 20, 5);
  CHECK(encode(enc, x) == x);
}

TEST_CASE("encoder matches the direct network per sample") {
  const auto arch = fixtures::tiny_arch({9, 7, 2});
  const NetParams p = fixtures::random_net(arch, 4, 3);
  const RowMatrix x = testutil::random_matrix(4, 9 * 7 * 2, 4);
  const RowMatrix z = encode(p.encoder, x);
  const RowMatrix xh = decode(p.decoder, z);
  for (int i = 0; i < 4; ++i) {
    std::vector<double> row(x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) row[j] = x(i, j);
    const auto f = oracle::forward_sample(p, row);
    REQUIRE(f.z.size() == static_cast<std::size_t>(z.cols()));
    for (std::size_t j = 0; j < f.z.size(); ++j) CHECK(z(i, j) == doctest::Approx(f.z[j]).epsilon(1e-13));
    for (std::size_t j = 0; j < f.x_hat.size(); ++j) CHECK(xh(i, j) == doctest::Approx(f.x_hat[j]).epsilon(1e-13));
  }
}

TEST_CASE("self-expression") {
  SUBCASE("zero R") {
    SelfExpressiveParams r{Matrix::Zero(3, 3)};
    CHECK(self_express(r, testutil::random_matrix(3, 2, 1)).isZero(0.0));
  }
  SUBCASE("row swap") {
    SelfExpressiveParams r{Matrix(2, 2)};
    r.r << 0, 1, 1, 0;
    RowMatrix z(2, 2);
    z << 1, 2, 3, 4;
    RowMatrix want(2, 2);
    want << 3, 4, 1, 2;
    CHECK(self_express(r, z) == want);
  }
  SUBCASE("triple loop") {
    SelfExpressiveParams r{testutil::random_matrix(4, 4, 3, -1, 1)};
    r.r.diagonal().setZero();
    const RowMatrix z = testutil::random_matrix(4, 2, 4, -1, 1);
    const RowMatrix got = self_express(r, z);
    for (int i = 0; i < 4; ++i)
      for (int c = 0; c < 2; ++c) {
        double s = 0.0;
        for (int j = 0; j < 4; ++j) s += r.r(i, j) * z(j, c);
        CHECK(got(i, c) == doctest::Approx(s).epsilon(1e-14));
      }
  }
  SUBCASE("shape") {
    SelfExpressiveParams r{Matrix::Zero(3, 3)};
    CHECK_THROWS_AS(self_express(r, RowMatrix::Zero(2, 2)), ShapeError);
  }
}

TEST_CASE("decoder output") {
  const auto arch = fixtures::tiny_arch({28, 28, 1});
  NetParams p = fixtures::random_net(arch, 2, 5);
  const RowMatrix z = testutil::random_matrix(2, p.decoder.latent_dim(), 6);
  const RowMatrix xh = decode(p.decoder, z);
  CHECK(xh.rows() == 2);
  CHECK(xh.cols() == 784);
  CHECK((xh.array() > 0.0).all());
  CHECK((xh.array() < 1.0).all());
  const NetParams zero = zeros_like(p);
  CHECK((decode(zero.decoder, z).array() == 0.5).all());
  CHECK_THROWS_AS(decode(p.decoder, RowMatrix::Zero(2, 5)), ShapeError);
  CHECK_THROWS_AS(encode(p.encoder, RowMatrix::Zero(2, 5)), ShapeError);
}

TEST_CASE("loss against scalar loops") {
  const auto arch = fixtures::tiny_arch({2, 2, 1});
  const NetParams p = fixtures::random_net(arch, 3, 8);
  const RowMatrix x = testutil::random_matrix(3, 4, 9);
  const auto a = knn_adjacency(x, 1);
  const Hyperparams h{0.7, 3.0, 2.5, 1.3, 0.8};
  const LossBreakdown got = loss(p, h, x, a);
  const LossBreakdown want = oracle::loss(p, h, x, a.a);
  CHECK(got.reconstruction == doctest::Approx(want.reconstruction).epsilon(1e-12));
  CHECK(got.regularizer_r == doctest::Approx(want.regularizer_r).epsilon(1e-12));
  CHECK(got.self_expression == doctest::Approx(want.self_expression).epsilon(1e-12));
  CHECK(got.graph_alignment == doctest::Approx(want.graph_alignment).epsilon(1e-12));
  CHECK(got.total == doctest::Approx(want.total).epsilon(1e-12));
  CHECK(std::abs(got.total - (got.reconstruction + got.regularizer_r + got.self_expression + got.graph_alignment)) <=
        1e-12 * got.total);
}

TEST_CASE("loss term zeroing") {
  const auto arch = fixtures::tiny_arch();
  NetParams p = fixtures::random_net(arch, 5, 2);
  const RowMatrix x = testutil::random_matrix(5, 64, 3);
  const auto a = knn_adjacency(x, 2);

  SUBCASE("pure reconstruction") {
    const LossBreakdown l = loss(p, {0, 0, 0, 1, 1}, x, a);
    const RowMatrix xh = decode(p.decoder, encode(p.encoder, x));
    CHECK(l.total == doctest::Approx(0.5 * (x - xh).squaredNorm()).epsilon(1e-13));
    CHECK(l.regularizer_r == 0.0);
  }
  SUBCASE("R = 0, A = 0, perfect reconstruction") {
    // zero output kernels make x_hat = sigmoid(bias) whatever the input;
    // that constant image is then used as the data
    p.self_expressive.r.setZero();
    p.decoder.layers[1].kernels.setZero();
    const RowMatrix xh = decode(p.decoder, encode(p.encoder, x));
    AdjacencyMatrix empty{Matrix::Zero(5, 5), 0};
    const Hyperparams h{1.0, 15.0, 7.0, 1.0, 1.0};
    const LossBreakdown l = loss(p, h, xh, empty);
    const RowMatrix z = encode(p.encoder, xh);
    CHECK(l.reconstruction == 0.0);
    CHECK(l.regularizer_r == 0.0);
    CHECK(l.graph_alignment == 0.0);
    CHECK(l.total == doctest::Approx(7.5 * z.squaredNorm()).epsilon(1e-13));
  }
}

TEST_CASE("analytic gradients match central differences") {
  const auto arch = fixtures::tiny_arch({6, 6, 1});
  const NetParams p = fixtures::random_net(arch, 5, 21);
  const RowMatrix x = testutil::random_matrix(5, 36, 22);
  const auto a = knn_adjacency(x, 2);
  for (const Hyperparams& h : {Hyperparams{1, 15, 0, 1, 1}, Hyperparams{0.5, 2, 3, 1.5, 0.7}}) {
    const auto errs = gradcheck::compare(p, h, x, a);
    CHECK(errs.size() == 9);
    for (const auto& [name, e] : errs) {
      INFO(name, " rel ", e.relative());
      CHECK(e.relative() <= 1e-5);
    }
  }
}

TEST_CASE("R gradient projection and stationarity") {
  const auto arch = fixtures::tiny_arch();
  NetParams p = fixtures::random_net(arch, 6, 4);
  const RowMatrix x = testutil::random_matrix(6, 64, 5);
  const auto a = knn_adjacency(x, 2);
  CHECK(gradients(p, {1, 15, 1e3, 1, 1}, x, a).self_expressive.r.diagonal().isZero(0.0));

  p.self_expressive.r.setZero();
  const RowMatrix xh = decode(p.decoder, encode(p.encoder, x));
  CHECK(gradients(p, {1, 0, 0, 1, 1}, xh, a).self_expressive.r.isZero(0.0));
}

TEST_CASE("without the graph term A is irrelevant") {
  const auto arch = fixtures::tiny_arch();
  const NetParams p = fixtures::random_net(arch, 7, 6);
  const RowMatrix x = testutil::random_matrix(7, 64, 7);
  const auto a1 = knn_adjacency(x, 1);
  const auto a2 = knn_adjacency(x, 4);
  const Hyperparams h{1, 15, 0, 1, 1};
  CHECK(loss(p, h, x, a1) == loss(p, h, x, a2));
  const NetParams g1 = gradients(p, h, x, a1), g2 = gradients(p, h, x, a2);
  CHECK(g1.self_expressive.r == g2.self_expressive.r);
  CHECK(g1.encoder.layers[0].kernels == g2.encoder.layers[0].kernels);
  CHECK(g1.decoder.layers[1].kernels == g2.decoder.layers[1].kernels);
}

TEST_CASE("forward passes are repeatable") {
  const auto arch = fixtures::tiny_arch();
  const NetParams p = fixtures::random_net(arch, 4, 9);
  const RowMatrix x = testutil::random_matrix(4, 64, 10);
  CHECK(encode(p.encoder, x) == encode(p.encoder, x));
  const RowMatrix z = encode(p.encoder, x);
  CHECK(decode(p.decoder, z) == decode(p.decoder, z));
}

TEST_CASE("non-finite input names the term") {
  const auto arch = fixtures::tiny_arch();
  NetParams p = fixtures::random_net(arch, 3, 1);
  RowMatrix x = testutil::random_matrix(3, 64, 2);
  const auto a = knn_adjacency(x, 1);
  p.self_expressive.r(0, 1) = std::numeric_limits<double>::infinity();
  try {
    loss(p, {1, 15, 0, 1, 1}, x, a);
    FAIL("expected NumericsError");
  } catch (const NumericsError& e) {
    CHECK(std::string(e.what()).find("regularizer_r") != std::string::npos);
  }
}

TEST_CASE("momentum step") {
  const auto arch = fixtures::tiny_arch();
  const NetParams p0 = fixtures::random_net(arch, 3, 3);
  NetParams g = zeros_like(p0);
  for_each_tensor(g, [](const std::string&, std::span<double> v, const auto&) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.01 * static_cast<double>(i % 7) - 0.03;
  });
  g.self_expressive.r.diagonal().setZero();

  SUBCASE("mu = 0 is plain descent") {
    NetParams p = p0;
    OptimizerState st = OptimizerState::create(p, {0.1, 0.1, 0.0});
    sgd_momentum_step(p, g, st);
    CHECK(p.encoder.layers[1].kernels.isApprox(p0.encoder.layers[1].kernels - 0.1 * g.encoder.layers[1].kernels));
    CHECK(p.self_expressive.r.isApprox(p0.self_expressive.r - 0.1 * g.self_expressive.r));
  }
  SUBCASE("zero gradient, zero velocity") {
    NetParams p = p0;
    OptimizerState st = OptimizerState::create(p, {0.1, 0.1, 0.9});
    sgd_momentum_step(p, zeros_like(p0), st);
    CHECK(p.encoder.layers[0].kernels == p0.encoder.layers[0].kernels);
    CHECK(p.decoder.layers[0].biases == p0.decoder.layers[0].biases);
    CHECK(p.self_expressive.r == p0.self_expressive.r);
  }
  SUBCASE("two steps with constant gradient move by -0.29 g") {
    NetParams p = p0;
    OptimizerState st = OptimizerState::create(p, {0.1, 0.1, 0.9});
    sgd_momentum_step(p, g, st);
    sgd_momentum_step(p, g, st);
    const Matrix moved = p.decoder.layers[1].kernels - p0.decoder.layers[1].kernels;
    CHECK(moved.isApprox(-0.29 * g.decoder.layers[1].kernels, 1e-12));
    CHECK(st.velocity.decoder.layers[1].kernels.isApprox(-0.19 * g.decoder.layers[1].kernels, 1e-12));
  }
  SUBCASE("diagonal of R re-zeroed") {
    NetParams p = p0;
    NetParams bad = g;
    bad.self_expressive.r.diagonal().setConstant(1.0);
    OptimizerState st = OptimizerState::create(p, {0.1, 0.1, 0.9});
    sgd_momentum_step(p, bad, st);
    CHECK(p.self_expressive.r.diagonal().isZero(0.0));
  }
}

TEST_CASE("gradient clipping leaves R alone") {
  const auto arch = fixtures::tiny_arch();
  NetParams g = fixtures::random_net(arch, 4, 5);
  const Matrix r = g.self_expressive.r;
  const double before = clip_network_gradients(g, 0.0);
  CHECK(before > 0.5);
  CHECK(clip_network_gradients(g, 0.5) == doctest::Approx(before));
  CHECK(clip_network_gradients(g, 0.0) == doctest::Approx(0.5));
  CHECK(g.self_expressive.r == r);
}

TEST_CASE("train_local edge cases") {
  const auto arch = fixtures::tiny_arch();
  const NetParams p0 = fixtures::random_net(arch, 5, 2);
  const RowMatrix x = testutil::random_matrix(5, 64, 3);
  const auto shard = fixtures::shard_of(x, arch.input);
  const auto a = knn_adjacency(x, 2);
  const Hyperparams h{1, 15, 10, 1, 1};

  SUBCASE("zero epochs") {
    NetParams p = p0;
    OptimizerState st = OptimizerState::create(p, {});
    CHECK(train_local(shard, p, h, a, 0, st).empty());
    CHECK(p.encoder.layers[0].kernels == p0.encoder.layers[0].kernels);
  }
  SUBCASE("zero learning rates") {
    NetParams p = p0;
    OptimizerState st = OptimizerState::create(p, {0.0, 0.0, 0.9});
    const auto trace = train_local(shard, p, h, a, 4, st);
    REQUIRE(trace.size() == 4);
    for (const auto& l : trace) CHECK(l == trace[0]);
    CHECK(p.encoder.layers[1].kernels == p0.encoder.layers[1].kernels);
    CHECK(p.self_expressive.r == p0.self_expressive.r);
  }
}

TEST_CASE("training descends on a tiny synthetic shard") {
  SubspaceSpec spec;
  spec.subspaces = 2;
  spec.per_subspace = 10;
  spec.seed = 4;
  const Dataset d = make_subspace_dataset(spec);
  Architecture arch;
  arch.input = d.shape;
  NetParams p = make_net(init_encoder(arch, 1), init_decoder(arch, 2), d.size());
  const auto shard = fixtures::shard_of(d.samples, d.shape);
  const auto a = knn_adjacency(d.samples, 3);
  OptimizerState st = OptimizerState::create(p, OptimizerSettings{});
  const auto trace = train_local(shard, p, {1, 15, 0, 1, 1}, a, 50, st);
  int down = 0;
  for (std::size_t e = 1; e < trace.size(); ++e) down += trace[e].total <= trace[e - 1].total;
  CHECK(down >= 45);
  CHECK(trace.back().total < trace.front().total);
  CHECK(p.self_expressive.r.diagonal().isZero(0.0));
}
