#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "fdsc/conv.hpp"
#include "fdsc/dataio.hpp"
#include "fdsc/graph.hpp"
#include "fdsc/types.hpp"

namespace fdsc {

struct LayerSpec {
  int channels = 16;
  int kernel = 5;
  int stride = 2;

  bool operator==(const LayerSpec&) const = default;
};

// Two conv layers (ReLU after each) for the encoder, mirrored transposed
// convs for the decoder (ReLU, then sigmoid on the output).
struct Architecture {
  ImageShape input;
  LayerSpec conv1{16, 5, 2};
  LayerSpec conv2{8, 3, 2};

  bool operator==(const Architecture&) const = default;
};

// Kernels are stored as out_channels x (in_channels * kernel_h * kernel_w),
// i.e. the row-major flattening of an out x in x kh x kw tensor.
struct ConvLayerParams {
  Matrix kernels;
  Vector biases;
  int in_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;

  int out_channels() const { return static_cast<int>(kernels.rows()); }
};

// Kernels are in_channels x (out_channels * kernel_h * kernel_w).
struct TransposedConvLayerParams {
  Matrix kernels;
  Vector biases;
  int out_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;

  int in_channels() const { return static_cast<int>(kernels.rows()); }
};

struct EncoderParams {
  ImageShape input;
  std::array<ConvLayerParams, 2> layers;

  ConvGeometry geometry(int layer) const;
  int latent_dim() const;
};

struct DecoderParams {
  ImageShape output;
  std::array<TransposedConvLayerParams, 2> layers;

  // Geometry of the convolution each transposed layer mirrors.
  ConvGeometry geometry(int layer) const;
  int latent_dim() const;
};

// Self-expressive coefficients; row i reconstructs sample i from the others.
struct SelfExpressiveParams {
  Matrix r;
};

struct NetParams {
  EncoderParams encoder;
  SelfExpressiveParams self_expressive;
  DecoderParams decoder;
};

struct Hyperparams {
  double lambda1 = 1.0;
  double lambda2 = 15.0;
  double lambda3 = 0.0;
  double alpha = 1.0;
  double beta = 1.0;

  void validate() const;
  bool operator==(const Hyperparams&) const = default;
};

struct LossBreakdown {
  double reconstruction = 0.0;
  double regularizer_r = 0.0;
  double self_expression = 0.0;
  double graph_alignment = 0.0;
  double total = 0.0;

  bool operator==(const LossBreakdown&) const = default;
};

struct OptimizerSettings {
  double learning_rate = 1e-3;
  // Step for R. Negative selects 1 / L_R, the inverse of the curvature bound
  // lambda2 * ||Z||_F^2 + 2 lambda1 + lambda3 * beta^2 of the R-subproblem,
  // re-evaluated every epoch.
  double r_learning_rate = -1.0;
  double momentum = 0.9;
  // Rescales encoder and decoder gradients whose joint L2 norm exceeds this
  // before each step; R is exempt. 0 disables.
  double clip_norm = 1.0;

  bool operator==(const OptimizerSettings&) const = default;
};

struct OptimizerState {
  NetParams velocity;
  OptimizerSettings settings;
  double r_rate = 0.0;  // step applied to R by the next update

  static OptimizerState create(const NetParams& like, const OptimizerSettings& settings);
};

// Visits every parameter tensor as (name, flat values, logical dims).
template <class Enc, class F>
  requires std::is_same_v<std::remove_const_t<Enc>, EncoderParams>
void for_each_tensor(Enc& enc, F&& f) {
  using Value = std::conditional_t<std::is_const_v<Enc>, const double, double>;
  for (int l = 0; l < 2; ++l) {
    auto& layer = enc.layers[l];
    const std::string prefix = "encoder." + std::to_string(l);
    f(prefix + ".kernels", std::span<Value>(layer.kernels.data(), layer.kernels.size()),
      std::vector<std::int64_t>{layer.kernels.rows(), layer.in_channels, layer.kernel_h, layer.kernel_w});
    f(prefix + ".biases", std::span<Value>(layer.biases.data(), layer.biases.size()),
      std::vector<std::int64_t>{layer.biases.size()});
  }
}

template <class Net, class F>
  requires std::is_same_v<std::remove_const_t<Net>, NetParams>
void for_each_tensor(Net& net, F&& f) {
  using Value = std::conditional_t<std::is_const_v<Net>, const double, double>;
  for_each_tensor(net.encoder, f);
  auto& r = net.self_expressive.r;
  f(std::string("self_expressive.r"), std::span<Value>(r.data(), r.size()),
    std::vector<std::int64_t>{r.rows(), r.cols()});
  for (int l = 0; l < 2; ++l) {
    auto& layer = net.decoder.layers[l];
    const std::string prefix = "decoder." + std::to_string(l);
    f(prefix + ".kernels", std::span<Value>(layer.kernels.data(), layer.kernels.size()),
      std::vector<std::int64_t>{layer.kernels.rows(), layer.out_channels, layer.kernel_h, layer.kernel_w});
    f(prefix + ".biases", std::span<Value>(layer.biases.data(), layer.biases.size()),
      std::vector<std::int64_t>{layer.biases.size()});
  }
}

// Kernels uniform in +-1/sqrt(fan_in), biases zero.
EncoderParams init_encoder(const Architecture& arch, std::uint64_t seed);
DecoderParams init_decoder(const Architecture& arch, std::uint64_t seed);
// Assembles a network for n samples with R = 0.
NetParams make_net(EncoderParams encoder, DecoderParams decoder, int n);
NetParams zeros_like(const NetParams& net);
EncoderParams zeros_like(const EncoderParams& enc);

RowMatrix encode(const EncoderParams& enc, const RowMatrix& x);
RowMatrix self_express(const SelfExpressiveParams& r, const RowMatrix& z);
RowMatrix decode(const DecoderParams& dec, const RowMatrix& z);

LossBreakdown loss(const NetParams& params, const Hyperparams& hyper, const RowMatrix& x,
                   const AdjacencyMatrix& a);

// Analytic gradient of loss().total; the R gradient has a zero diagonal.
NetParams gradients(const NetParams& params, const Hyperparams& hyper, const RowMatrix& x,
                    const AdjacencyMatrix& a);

struct GradientEvaluation {
  NetParams grads;
  LossBreakdown loss;
  double latent_energy = 0.0;  // ||Z||_F^2
};

// Loss and gradients from a single forward pass.
GradientEvaluation evaluate(const NetParams& params, const Hyperparams& hyper, const RowMatrix& x,
                            const AdjacencyMatrix& a);

double auto_r_rate(const Hyperparams& hyper, double latent_energy);

// Joint L2 norm of the encoder and decoder gradients, scaled down in place
// to max_norm when larger (and max_norm > 0). Returns the norm before scaling.
double clip_network_gradients(NetParams& grads, double max_norm);

// v <- mu v - eta g; theta <- theta + v per tensor, then diag(R) <- 0.
void sgd_momentum_step(NetParams& params, const NetParams& grads, OptimizerState& state);

// tau full-batch epochs; returns the loss at the start of every epoch.
std::vector<LossBreakdown> train_local(const DatasetShard& shard, NetParams& params,
                                       const Hyperparams& hyper, const AdjacencyMatrix& a,
                                       int epochs, OptimizerState& state);

// Reconstruction-only warm-up with its own throwaway optimizer state.
std::vector<LossBreakdown> pretrain_autoencoder(const DatasetShard& shard, NetParams& params,
                                                const AdjacencyMatrix& a, int epochs,
                                                const OptimizerSettings& settings);

}  // namespace fdsc
