#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "fdsc/autonet.hpp"
#include "fdsc/federation.hpp"
#include "fdsc/spectral.hpp"
#include "fdsc/synthetic.hpp"

namespace fdsc {

struct DatasetConfig {
  std::string kind = "synthetic";  // "mnist", "image_dir" or "synthetic"
  std::string images;              // mnist
  std::string labels;              // mnist
  std::string root;                // image_dir
  int resize_h = 32;               // image_dir
  int resize_w = 32;
  int limit = 0;                   // keep the first N samples (0 = all)
  SubspaceSpec synthetic;

  bool operator==(const DatasetConfig&) const = default;
};

struct ExperimentConfig {
  std::string name = "fdsc";
  DatasetConfig dataset;

  int clients = 20;             // m
  int classes_per_client = 10;  // q
  int samples_per_client = 0;   // 0 = floor(n / m)

  double participation = 0.25;  // r
  int rounds = 100;             // T
  int local_epochs = 7;         // tau
  int pretrain_epochs = 5;
  int workers = 1;
  int checkpoint_every = 0;

  Hyperparams hyper{1.0, 15.0, 1e6, 1.0, 1.0};
  int knn = 5;
  LayerSpec conv1{16, 5, 2};
  LayerSpec conv2{8, 3, 2};
  OptimizerSettings optimizer;

  int clusters = 0;  // per-client cluster count; 0 = classes present in the shard
  int affinity_top_s = 0;
  KMeansOptions kmeans;

  std::uint64_t seed = 0;
  std::string output_dir;

  bool operator==(const ExperimentConfig&) const = default;

  // Throws ConfigError on out-of-range fields.
  void validate() const;
};

std::string config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Sets one field. `key` is either a sweep axis name (m, samples_per_client,
// q, lambda1, lambda2, lambda3, r, T, tau, k) or a JSON pointer such as
// "/optimizer/learning_rate". `value` is parsed as JSON.
void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value);

bool is_sweep_axis(const std::string& axis);

// Git-style content hash: SHA-1 of "blob <len>\0" + canonical config JSON.
std::string config_hash(const ExperimentConfig& config);

FederationConfig federation_config(const ExperimentConfig& config, const ImageShape& input);

}  // namespace fdsc
