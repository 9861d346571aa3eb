#pragma once

#include <cstring>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fdsc/autonet.hpp"
#include "fdsc/graph.hpp"
#include "test_util.hpp"

namespace fixtures {

inline fdsc::Architecture tiny_arch(fdsc::ImageShape input = {8, 8, 1}) {
  fdsc::Architecture arch;
  arch.input = input;
  arch.conv1 = {4, 3, 2};
  arch.conv2 = {3, 3, 2};
  return arch;
}

// Every tensor random (biases included, so no unit sits exactly at a kink),
// R random with zero diagonal.
inline fdsc::NetParams random_net(const fdsc::Architecture& arch, int n, std::uint64_t seed) {
  fdsc::NetParams p = fdsc::make_net(fdsc::init_encoder(arch, seed), fdsc::init_decoder(arch, seed + 1), n);
  std::mt19937_64 rng(seed + 2);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto& l : p.encoder.layers)
    for (Eigen::Index i = 0; i < l.biases.size(); ++i) l.biases[i] = 0.1 + std::abs(u(rng));
  for (auto& l : p.decoder.layers)
    for (Eigen::Index i = 0; i < l.biases.size(); ++i) l.biases[i] = u(rng);
  auto& r = p.self_expressive.r;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r(i, j) = i == j ? 0.0 : u(rng) * 0.2;
  return p;
}

inline fdsc::DatasetShard shard_of(const fdsc::RowMatrix& x, fdsc::ImageShape shape, int client = 0) {
  fdsc::DatasetShard s;
  s.client_id = client;
  s.samples = x;
  s.shape = shape;
  s.labels.assign(static_cast<std::size_t>(x.rows()), 0);
  s.classes_present = {0};
  for (int i = 0; i < x.rows(); ++i) s.sample_indices.push_back(i);
  return s;
}

// Flattened copy of every tensor, in for_each_tensor order.
template <class Params>
std::vector<std::vector<double>> flatten(const Params& p) {
  std::vector<std::vector<double>> out;
  fdsc::for_each_tensor(p, [&](const std::string&, std::span<const double> v, const auto&) {
    out.emplace_back(v.begin(), v.end());
  });
  return out;
}

// Exact equality, bit for bit (NaN payloads and signed zeros included).
template <class Params>
bool bit_identical(const Params& a, const Params& b) {
  const auto fa = flatten(a), fb = flatten(b);
  if (fa.size() != fb.size()) return false;
  for (std::size_t t = 0; t < fa.size(); ++t)
    if (fa[t].size() != fb[t].size() ||
        std::memcmp(fa[t].data(), fb[t].data(), fa[t].size() * sizeof(double)) != 0)
      return false;
  return true;
}

}  // namespace fixtures
