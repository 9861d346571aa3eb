#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "fdsc/autonet.hpp"
#include "fdsc/dataio.hpp"
#include "fdsc/graph.hpp"
#include "fdsc/random.hpp"

namespace fdsc {

struct FederationConfig {
  Architecture architecture;
  Hyperparams hyper;
  OptimizerSettings optimizer;
  int knn = 5;
  double participation = 1.0;  // r
  int rounds = 1;              // T
  int local_epochs = 7;        // tau
  int pretrain_epochs = 5;
  int workers = 1;             // concurrent client trainers per round
  int checkpoint_every = 0;    // rounds between checkpoints, 0 = never
  std::filesystem::path checkpoint_dir;
  std::uint64_t seed = 0;
};

// The server only ever holds encoder parameters.
struct ServerState {
  EncoderParams global_encoder;
  int round = 0;
  Rng rng;
};

struct LossRecord {
  int round = 0;  // 0 for pretraining
  int epoch = 0;
  LossBreakdown loss;
};

struct ClientHandle {
  int client_id = 0;
  DatasetShard shard;
  AdjacencyMatrix adjacency;
  NetParams params;
  OptimizerState optimizer;
  double weight = 0.0;  // n_i / sum_j n_j
  std::vector<LossRecord> trace;

  // Server-facing surface: the encoder is the only thing that crosses.
  EncoderParams upload_encoder() const { return params.encoder; }
  void receive_encoder(const EncoderParams& global) { params.encoder = global; }
};

struct RoundReport {
  int round = 0;
  std::vector<int> participants;
  std::vector<LossBreakdown> final_losses;
  std::vector<double> weights;
};

struct Federation {
  ServerState server;
  std::vector<ClientHandle> clients;
};

// Seeds used for initialisation, shared with direct (non-federated) loops.
std::uint64_t encoder_seed(std::uint64_t master);
std::uint64_t decoder_seed(std::uint64_t master, int client_id);
std::uint64_t sampling_seed(std::uint64_t master);

Federation init_federation(std::vector<DatasetShard> shards, const FederationConfig& config);

// Reconstruction-only warm-up on every client, followed by a full-weight
// average that becomes the starting global encoder.
void pretrain_federation(Federation& fed, const FederationConfig& config);

// |S| = max(1, round(r m)) distinct ids, ascending.
std::vector<int> sample_clients(ServerState& server, int m, double r);

// Convex combination of encoders; weights are renormalised to sum to 1.
EncoderParams aggregate(std::span<const EncoderParams> encoders, std::span<const double> weights);

RoundReport run_round(Federation& fed, const FederationConfig& config);

std::vector<RoundReport> run_training(Federation& fed, const FederationConfig& config, int rounds);

void save_federation(const std::filesystem::path& dir, const Federation& fed);

}  // namespace fdsc
