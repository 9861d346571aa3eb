#include "fdsc/autonet.hpp"

#include <cmath>

#include "fdsc/errors.hpp"
#include "fdsc/random.hpp"

namespace fdsc {
namespace {

Matrix relu(Matrix m) { return m.cwiseMax(0.0); }

// Zeroes entries of `grad` where the ReLU output was not positive.
void mask_relu(Matrix& grad, const Matrix& activated) {
  grad = (activated.array() > 0.0).select(grad, 0.0);
}

void fill_uniform(Eigen::Ref<Matrix> m, double bound, Rng& rng) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
}

struct EncoderPass {
  Matrix cols1;
  Matrix h1;  // after ReLU
  Matrix cols2;
  Matrix z_act;  // after ReLU, channel-major
  RowMatrix z;
};

struct DecoderPass {
  Matrix hidden;  // after ReLU
  Matrix out;     // sigmoid output, channel-major
};

EncoderPass run_encoder(const EncoderParams& enc, const RowMatrix& x) {
  if (x.cols() != enc.input.size())
    throw ShapeError("encoder expects rows of width " + std::to_string(enc.input.size()) +
                     ", got " + std::to_string(x.cols()));
  const int n = static_cast<int>(x.rows());
  const ConvGeometry g1 = enc.geometry(0);
  const ConvGeometry g2 = enc.geometry(1);
  const Matrix input = rows_to_channel_major(x, enc.input.channels, enc.input.height * enc.input.width);
  EncoderPass pass;
  pass.h1 = relu(conv_forward(enc.layers[0].kernels, enc.layers[0].biases, input, g1, n, &pass.cols1));
  pass.z_act = relu(conv_forward(enc.layers[1].kernels, enc.layers[1].biases, pass.h1, g2, n, &pass.cols2));
  pass.z = channel_major_to_features(pass.z_act, g2.grid_channels, g2.grid_pixels());
  return pass;
}

DecoderPass run_decoder(const DecoderParams& dec, const Matrix& z_act, int n) {
  const ConvGeometry g0 = dec.geometry(0);
  const ConvGeometry g1 = dec.geometry(1);
  DecoderPass pass;
  pass.hidden = relu(conv_transpose_forward(dec.layers[0].kernels, dec.layers[0].biases, z_act, g0, n));
  Matrix logits = conv_transpose_forward(dec.layers[1].kernels, dec.layers[1].biases, pass.hidden, g1, n);
  pass.out = logits.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
  return pass;
}

void check_finite(double value, const char* term) {
  if (!std::isfinite(value)) throw NumericsError(std::string("non-finite ") + term + " term");
}

void check_inputs(const NetParams& params, const RowMatrix& x, const AdjacencyMatrix& a) {
  const Eigen::Index n = x.rows();
  const Matrix& r = params.self_expressive.r;
  if (r.rows() != n || r.cols() != n)
    throw ShapeError("self-expressive matrix is " + std::to_string(r.rows()) + "x" +
                     std::to_string(r.cols()) + " for " + std::to_string(n) + " samples");
  if (a.a.rows() != n || a.a.cols() != n) throw ShapeError("adjacency size does not match samples");
  if (params.decoder.latent_dim() != params.encoder.latent_dim())
    throw ShapeError("decoder latent size does not match encoder");
  if (!(params.decoder.output == params.encoder.input))
    throw ShapeError("decoder output shape does not match encoder input");
}

struct FullPass {
  EncoderPass enc;
  RowMatrix residual;  // Z - R Z
  DecoderPass dec;
  Matrix target;       // x, channel-major
  LossBreakdown loss;
};

FullPass forward(const NetParams& params, const Hyperparams& hyper, const RowMatrix& x,
                 const AdjacencyMatrix& a) {
  check_inputs(params, x, a);
  const int n = static_cast<int>(x.rows());
  const Matrix& r = params.self_expressive.r;
  FullPass pass;
  pass.enc = run_encoder(params.encoder, x);
  pass.dec = run_decoder(params.decoder, pass.enc.z_act, n);
  pass.target = rows_to_channel_major(x, params.encoder.input.channels,
                                      params.encoder.input.height * params.encoder.input.width);
  pass.residual = pass.enc.z - r * pass.enc.z;

  LossBreakdown& l = pass.loss;
  l.reconstruction = 0.5 * (pass.target - pass.dec.out).squaredNorm();
  check_finite(l.reconstruction, "reconstruction");
  l.regularizer_r = hyper.lambda1 == 0.0 ? 0.0 : hyper.lambda1 * r.squaredNorm();
  check_finite(l.regularizer_r, "regularizer_r");
  l.self_expression = 0.5 * hyper.lambda2 * pass.residual.squaredNorm();
  check_finite(l.self_expression, "self_expression");
  l.graph_alignment =
      hyper.lambda3 == 0.0 ? 0.0 : 0.5 * hyper.lambda3 * (hyper.alpha * a.a - hyper.beta * r).squaredNorm();
  check_finite(l.graph_alignment, "graph_alignment");
  l.total = l.reconstruction + l.regularizer_r + l.self_expression + l.graph_alignment;
  check_finite(l.total, "total");
  return pass;
}

template <class Layer>
void zero_layer(Layer& layer) {
  layer.kernels.setZero();
  layer.biases.setZero();
}

}  // namespace

ConvGeometry EncoderParams::geometry(int layer) const {
  const ConvGeometry g1 = ConvGeometry::make(input.channels, input.height, input.width,
                                             layers[0].out_channels(), layers[0].kernel_h,
                                             layers[0].kernel_w, layers[0].stride);
  if (layer == 0) return g1;
  if (layers[1].in_channels != layers[0].out_channels())
    throw ShapeError("encoder channel chaining is inconsistent");
  return ConvGeometry::make(g1.grid_channels, g1.grid_h, g1.grid_w, layers[1].out_channels(),
                            layers[1].kernel_h, layers[1].kernel_w, layers[1].stride);
}

int EncoderParams::latent_dim() const {
  const ConvGeometry g = geometry(1);
  return g.grid_channels * g.grid_pixels();
}

ConvGeometry DecoderParams::geometry(int layer) const {
  const TransposedConvLayerParams& last = layers[1];
  const ConvGeometry g1 = ConvGeometry::make(output.channels, output.height, output.width,
                                             last.in_channels(), last.kernel_h, last.kernel_w, last.stride);
  if (last.out_channels != output.channels) throw ShapeError("decoder output channels mismatch");
  if (layer == 1) return g1;
  const TransposedConvLayerParams& first = layers[0];
  if (first.out_channels != last.in_channels())
    throw ShapeError("decoder channel chaining is inconsistent");
  return ConvGeometry::make(g1.grid_channels, g1.grid_h, g1.grid_w, first.in_channels(),
                            first.kernel_h, first.kernel_w, first.stride);
}

int DecoderParams::latent_dim() const {
  const ConvGeometry g = geometry(0);
  return g.grid_channels * g.grid_pixels();
}

void Hyperparams::validate() const {
  for (double v : {lambda1, lambda2, lambda3, alpha, beta})
    if (!std::isfinite(v) || v < 0.0) throw ConfigError("loss weights must be finite and nonnegative");
}

OptimizerState OptimizerState::create(const NetParams& like, const OptimizerSettings& settings) {
  OptimizerState state;
  state.velocity = zeros_like(like);
  state.settings = settings;
  state.r_rate = settings.r_learning_rate >= 0.0 ? settings.r_learning_rate : settings.learning_rate;
  return state;
}

EncoderParams init_encoder(const Architecture& arch, std::uint64_t seed) {
  if (arch.input.size() <= 0) throw ConfigError("architecture input shape must be positive");
  Rng rng(seed);
  EncoderParams enc;
  enc.input = arch.input;
  int in_channels = arch.input.channels;
  const LayerSpec specs[2] = {arch.conv1, arch.conv2};
  for (int l = 0; l < 2; ++l) {
    ConvLayerParams& layer = enc.layers[l];
    layer.in_channels = in_channels;
    layer.kernel_h = specs[l].kernel;
    layer.kernel_w = specs[l].kernel;
    layer.stride = specs[l].stride;
    const int fan_in = in_channels * specs[l].kernel * specs[l].kernel;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    layer.kernels.resize(specs[l].channels, fan_in);
    fill_uniform(layer.kernels, bound, rng);
    layer.biases = Vector::Zero(specs[l].channels);
    in_channels = specs[l].channels;
  }
  enc.geometry(1);  // validates the stack
  return enc;
}

DecoderParams init_decoder(const Architecture& arch, std::uint64_t seed) {
  Rng rng(seed);
  DecoderParams dec;
  dec.output = arch.input;
  // Layer 0 mirrors conv2 (latent -> hidden), layer 1 mirrors conv1.
  const LayerSpec mirrored[2] = {arch.conv2, arch.conv1};
  const int in_ch[2] = {arch.conv2.channels, arch.conv1.channels};
  const int out_ch[2] = {arch.conv1.channels, arch.input.channels};
  for (int l = 0; l < 2; ++l) {
    TransposedConvLayerParams& layer = dec.layers[l];
    layer.out_channels = out_ch[l];
    layer.kernel_h = mirrored[l].kernel;
    layer.kernel_w = mirrored[l].kernel;
    layer.stride = mirrored[l].stride;
    const int fan_in = in_ch[l] * mirrored[l].kernel * mirrored[l].kernel;
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    layer.kernels.resize(in_ch[l], out_ch[l] * mirrored[l].kernel * mirrored[l].kernel);
    fill_uniform(layer.kernels, bound, rng);
    layer.biases = Vector::Zero(out_ch[l]);
  }
  dec.geometry(0);
  return dec;
}

NetParams make_net(EncoderParams encoder, DecoderParams decoder, int n) {
  if (n < 1) throw ConfigError("network needs at least one sample");
  NetParams net;
  net.encoder = std::move(encoder);
  net.decoder = std::move(decoder);
  net.self_expressive.r = Matrix::Zero(n, n);
  return net;
}

EncoderParams zeros_like(const EncoderParams& enc) {
  EncoderParams out = enc;
  for (auto& layer : out.layers) zero_layer(layer);
  return out;
}

NetParams zeros_like(const NetParams& net) {
  NetParams out = net;
  for (auto& layer : out.encoder.layers) zero_layer(layer);
  for (auto& layer : out.decoder.layers) zero_layer(layer);
  out.self_expressive.r.setZero();
  return out;
}

RowMatrix encode(const EncoderParams& enc, const RowMatrix& x) { return run_encoder(enc, x).z; }

RowMatrix self_express(const SelfExpressiveParams& r, const RowMatrix& z) {
  if (r.r.rows() != z.rows() || r.r.cols() != z.rows())
    throw ShapeError("self-expressive matrix does not match the sample count");
  return r.r * z;
}

RowMatrix decode(const DecoderParams& dec, const RowMatrix& z) {
  const ConvGeometry g0 = dec.geometry(0);
  const Matrix z_act = features_to_channel_major(z, g0.grid_channels, g0.grid_pixels());
  const DecoderPass pass = run_decoder(dec, z_act, static_cast<int>(z.rows()));
  return channel_major_to_rows(pass.out, dec.output.channels, dec.output.height * dec.output.width);
}

LossBreakdown loss(const NetParams& params, const Hyperparams& hyper, const RowMatrix& x,
                   const AdjacencyMatrix& a) {
  return forward(params, hyper, x, a).loss;
}

GradientEvaluation evaluate(const NetParams& params, const Hyperparams& hyper, const RowMatrix& x,
                            const AdjacencyMatrix& a) {
  FullPass pass = forward(params, hyper, x, a);
  const int n = static_cast<int>(x.rows());
  const Matrix& r = params.self_expressive.r;

  GradientEvaluation out;
  out.loss = pass.loss;
  out.latent_energy = pass.enc.z.squaredNorm();
  NetParams& g = out.grads;
  g.encoder = params.encoder;
  g.decoder = params.decoder;

  // Decoder: d/dlogits of 1/2||x - sigmoid(.)||^2.
  const ConvGeometry gd0 = params.decoder.geometry(0);
  const ConvGeometry gd1 = params.decoder.geometry(1);
  Matrix d_logits = (pass.dec.out - pass.target).cwiseProduct(
      pass.dec.out.cwiseProduct((1.0 - pass.dec.out.array()).matrix()));
  {
    const Matrix d_cols = im2col(d_logits, gd1, n);
    g.decoder.layers[1].kernels = pass.dec.hidden * d_cols.transpose();
    g.decoder.layers[1].biases = d_logits.rowwise().sum();
    Matrix d_hidden = params.decoder.layers[1].kernels * d_cols;
    mask_relu(d_hidden, pass.dec.hidden);
    d_logits.resize(0, 0);

    const Matrix d_cols0 = im2col(d_hidden, gd0, n);
    g.decoder.layers[0].kernels = pass.enc.z_act * d_cols0.transpose();
    g.decoder.layers[0].biases = d_hidden.rowwise().sum();
    Matrix d_z_act = params.decoder.layers[0].kernels * d_cols0;

    // Self-expression: d/dZ of lambda2/2 ||(I - R) Z||^2.
    const ConvGeometry ge1 = params.encoder.geometry(1);
    if (hyper.lambda2 != 0.0) {
      const RowMatrix d_z_se = hyper.lambda2 * (pass.residual - r.transpose() * pass.residual);
      d_z_act += features_to_channel_major(d_z_se, ge1.grid_channels, ge1.grid_pixels());
    }

    // Encoder.
    mask_relu(d_z_act, pass.enc.z_act);
    g.encoder.layers[1].kernels = d_z_act * pass.enc.cols2.transpose();
    g.encoder.layers[1].biases = d_z_act.rowwise().sum();
    const Matrix d_cols2 = params.encoder.layers[1].kernels.transpose() * d_z_act;
    Matrix d_h1 = col2im(d_cols2, ge1, n);
    mask_relu(d_h1, pass.enc.h1);
    g.encoder.layers[0].kernels = d_h1 * pass.enc.cols1.transpose();
    g.encoder.layers[0].biases = d_h1.rowwise().sum();
  }

  // R: 2 l1 R - l2 (Z - RZ) Z^T - l3 beta (alpha A - beta R), diagonal projected out.
  Matrix& dr = g.self_expressive.r;
  dr = Matrix::Zero(n, n);
  if (hyper.lambda2 != 0.0) dr.noalias() -= hyper.lambda2 * (pass.residual * pass.enc.z.transpose());
  if (hyper.lambda1 != 0.0) dr += 2.0 * hyper.lambda1 * r;
  if (hyper.lambda3 != 0.0) dr -= hyper.lambda3 * hyper.beta * (hyper.alpha * a.a - hyper.beta * r);
  dr.diagonal().setZero();
  return out;
}

NetParams gradients(const NetParams& params, const Hyperparams& hyper, const RowMatrix& x,
                    const AdjacencyMatrix& a) {
  return evaluate(params, hyper, x, a).grads;
}

double auto_r_rate(const Hyperparams& hyper, double latent_energy) {
  const double curvature = hyper.lambda2 * latent_energy + 2.0 * hyper.lambda1 +
                           hyper.lambda3 * hyper.beta * hyper.beta;
  return curvature > 0.0 ? 1.0 / curvature : 0.0;
}

double clip_network_gradients(NetParams& grads, double max_norm) {
  double sq = 0.0;
  for_each_tensor(grads, [&](const std::string& name, std::span<const double> v, const auto&) {
    if (name == "self_expressive.r") return;
    for (double g : v) sq += g * g;
  });
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for_each_tensor(grads, [&](const std::string& name, std::span<double> v, const auto&) {
      if (name == "self_expressive.r") return;
      for (double& g : v) g *= scale;
    });
  }
  return norm;
}

void sgd_momentum_step(NetParams& params, const NetParams& grads, OptimizerState& state) {
  const double mu = state.settings.momentum;
  std::vector<std::span<double>> theta, vel;
  std::vector<std::span<const double>> grad;
  std::vector<std::string> names;
  for_each_tensor(params, [&](const std::string& name, std::span<double> v, const auto&) {
    theta.push_back(v);
    names.push_back(name);
  });
  for_each_tensor(state.velocity, [&](const std::string&, std::span<double> v, const auto&) { vel.push_back(v); });
  for_each_tensor(grads, [&](const std::string&, std::span<const double> v, const auto&) { grad.push_back(v); });
  if (theta.size() != vel.size() || theta.size() != grad.size())
    throw ShapeError("optimizer tensor count mismatch");
  for (std::size_t t = 0; t < theta.size(); ++t) {
    if (theta[t].size() != vel[t].size() || theta[t].size() != grad[t].size())
      throw ShapeError("optimizer shape mismatch in " + names[t]);
    const double eta = names[t] == "self_expressive.r" ? state.r_rate : state.settings.learning_rate;
    for (std::size_t i = 0; i < theta[t].size(); ++i) {
      vel[t][i] = mu * vel[t][i] - eta * grad[t][i];
      theta[t][i] += vel[t][i];
    }
  }
  params.self_expressive.r.diagonal().setZero();
}

std::vector<LossBreakdown> train_local(const DatasetShard& shard, NetParams& params,
                                       const Hyperparams& hyper, const AdjacencyMatrix& a,
                                       int epochs, OptimizerState& state) {
  std::vector<LossBreakdown> trace;
  trace.reserve(epochs > 0 ? epochs : 0);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    try {
      GradientEvaluation eval = evaluate(params, hyper, shard.samples, a);
      if (state.settings.r_learning_rate < 0.0) {
        const double rate = auto_r_rate(hyper, eval.latent_energy);
        state.r_rate = rate > 0.0 ? rate : state.settings.learning_rate;
      }
      if (state.settings.clip_norm > 0.0) clip_network_gradients(eval.grads, state.settings.clip_norm);
      sgd_momentum_step(params, eval.grads, state);
      trace.push_back(eval.loss);
    } catch (const NumericsError& e) {
      throw NumericsError("client " + std::to_string(shard.client_id) + " epoch " +
                          std::to_string(epoch) + ": " + e.what());
    }
  }
  return trace;
}

std::vector<LossBreakdown> pretrain_autoencoder(const DatasetShard& shard, NetParams& params,
                                                const AdjacencyMatrix& a, int epochs,
                                                const OptimizerSettings& settings) {
  OptimizerState state = OptimizerState::create(params, settings);
  return train_local(shard, params, Hyperparams{0.0, 0.0, 0.0, 1.0, 1.0}, a, epochs, state);
}

}  // namespace fdsc
