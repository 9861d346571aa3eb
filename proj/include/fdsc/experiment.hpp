#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "fdsc/config.hpp"
#include "fdsc/dataio.hpp"
#include "fdsc/federation.hpp"
#include "fdsc/metrics.hpp"

namespace fdsc {

struct ClientOutcome {
  int client_id = 0;
  int clusters = 0;
  std::vector<int> truth;
  std::vector<int> predicted;           // spectral clustering of the learned R
  std::vector<int> baseline_predicted;  // k-means on raw pixels
  MetricsReport metrics;
  MetricsReport baseline;
};

struct RunResult {
  std::string method;
  std::vector<ClientOutcome> clients;
  MetricsReport mean;              // average of per-client metrics
  MetricsReport pooled;            // all clients scored together
  MetricsReport baseline_mean;
  MetricsReport baseline_pooled;
  std::vector<RoundReport> rounds;
  Federation federation;           // final client and server state
  double wall_seconds = 0.0;
  std::string config_hash;
};

// "FDSC1" (lambda3 = 0) or "FDSC2", prefixed "central-" when m = 1.
std::string method_name(const ExperimentConfig& config);

Dataset load_dataset(const ExperimentConfig& config);

// Per-client spectral clustering of R plus the raw-pixel k-means baseline.
void score_clients(const ExperimentConfig& config, const Federation& fed, RunResult& result);

// partition -> adjacency -> pretrain -> T rounds -> clustering -> metrics.
// Writes metrics.csv, rounds.csv, per-client loss CSVs, partition.json,
// manifest.json and checkpoints when config.output_dir is set.
RunResult run_experiment(const ExperimentConfig& config);
RunResult run_experiment(const ExperimentConfig& config, const Dataset& dataset);

struct SweepTable {
  std::string axis;
  std::vector<std::string> values;
  std::vector<RunResult> runs;
};

// One run per value, every run with the base seed. Writes sweep.csv (and a
// sub-directory per run) under base.output_dir when set.
SweepTable sweep(const ExperimentConfig& base, const std::string& axis, const std::vector<std::string>& values);
SweepTable sweep(const ExperimentConfig& base, const std::string& axis, const std::vector<std::string>& values,
                 const Dataset& dataset);

std::string sweep_csv(const SweepTable& table);
std::string metrics_csv(const RunResult& result);

// Re-scores a finished run directory from its manifest and checkpoints.
RunResult evaluate_run(const std::filesystem::path& run_dir);

// Rebuilds the final federation state of a run directory from checkpoints.
Federation load_run_state(const std::filesystem::path& run_dir, ExperimentConfig& config);

}  // namespace fdsc
