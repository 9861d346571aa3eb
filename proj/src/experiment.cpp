#include "fdsc/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "fdsc/checkpoint.hpp"
#include "fdsc/errors.hpp"
#include "fdsc/spectral.hpp"
#include "fdsc/synthetic.hpp"

namespace fdsc {
namespace {

namespace fs = std::filesystem;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// Scores all clients at once: cluster ids are offset per client so they
// never collide, and ACC sums each client's optimally mapped matches.
MetricsReport pooled_report(const std::vector<ClientOutcome>& clients, bool baseline) {
  std::vector<int> pred, truth;
  double matched = 0.0;
  int offset = 0;
  for (const auto& c : clients) {
    const auto& labels = baseline ? c.baseline_predicted : c.predicted;
    int top = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      pred.push_back(offset + labels[i]);
      truth.push_back(c.truth[i]);
      top = std::max(top, labels[i] + 1);
    }
    offset += top;
    matched += std::round(accuracy(labels, c.truth) * static_cast<double>(labels.size()));
  }
  MetricsReport r = evaluate_clustering(pred, truth);
  r.acc = 100.0 * matched / static_cast<double>(pred.size());
  return r;
}

std::string loss_row(const LossBreakdown& l) {
  std::ostringstream out;
  out.precision(17);
  out << l.reconstruction << ',' << l.regularizer_r << ',' << l.self_expression << ',' << l.graph_alignment << ','
      << l.total;
  return out.str();
}

std::string rounds_csv(const RunResult& result) {
  std::ostringstream out;
  out << "round,participants,client,weight,reconstruction,regularizer_r,self_expression,graph_alignment,total\n";
  for (const auto& report : result.rounds) {
    std::string ids;
    for (std::size_t i = 0; i < report.participants.size(); ++i)
      ids += (i ? ";" : "") + std::to_string(report.participants[i]);
    for (std::size_t i = 0; i < report.participants.size(); ++i)
      out << report.round << ',' << ids << ',' << report.participants[i] << ',' << report.weights[i] << ','
          << loss_row(report.final_losses[i]) << '\n';
  }
  return out.str();
}

std::string trace_csv(const ClientHandle& client) {
  std::ostringstream out;
  out << "round,epoch,reconstruction,regularizer_r,self_expression,graph_alignment,total\n";
  for (const auto& rec : client.trace) out << rec.round << ',' << rec.epoch << ',' << loss_row(rec.loss) << '\n';
  return out.str();
}

void write_outputs(const ExperimentConfig& config, const RunResult& result) {
  const fs::path dir = config.output_dir;
  fs::create_directories(dir);
  write_text(dir / "metrics.csv", metrics_csv(result));
  write_text(dir / "rounds.csv", rounds_csv(result));
  std::vector<DatasetShard> shards;
  for (const auto& client : result.federation.clients) {
    write_text(dir / ("loss_client_" + std::to_string(client.client_id) + ".csv"), trace_csv(client));
    shards.push_back(client.shard);
  }
  write_text(dir / "partition.json", partition_manifest_json(shards));
  save_federation(dir / "checkpoints", result.federation);
  nlohmann::json manifest = {
      {"config", nlohmann::json::parse(config_to_json(config))},
      {"config_hash", result.config_hash},
      {"seed", config.seed},
      {"round", result.federation.server.round},
      {"method", result.method},
      {"wall_seconds", result.wall_seconds},
  };
  write_text(dir / "manifest.json", manifest.dump(2));
}

int cluster_count(const ExperimentConfig& config, const DatasetShard& shard) {
  const int k = config.clusters > 0 ? config.clusters : shard.distinct_labels();
  return std::min(k, shard.size());
}

}  // namespace

std::string method_name(const ExperimentConfig& config) {
  const std::string base = config.hyper.lambda3 == 0.0 ? "FDSC1" : "FDSC2";
  return config.clients == 1 ? "central-" + base : base;
}

Dataset load_dataset(const ExperimentConfig& config) {
  Dataset data;
  if (config.dataset.kind == "mnist") {
    data = load_mnist_idx(config.dataset.images, config.dataset.labels);
  } else if (config.dataset.kind == "image_dir") {
    data = load_image_dir(config.dataset.root, config.dataset.resize_h, config.dataset.resize_w);
  } else if (config.dataset.kind == "synthetic") {
    data = make_subspace_dataset(config.dataset.synthetic);
  } else {
    throw ConfigError("unknown dataset kind '" + config.dataset.kind + "'");
  }
  return take_prefix(data, config.dataset.limit);
}

void score_clients(const ExperimentConfig& config, const Federation& fed, RunResult& result) {
  result.clients.clear();
  for (const auto& client : fed.clients) {
    ClientOutcome out;
    out.client_id = client.client_id;
    out.truth = client.shard.labels;
    out.clusters = cluster_count(config, client.shard);
    const auto n = static_cast<std::size_t>(client.shard.size());
    if (out.clusters < 2) {
      out.predicted.assign(n, 0);
      out.baseline_predicted.assign(n, 0);
    } else {
      const AffinityMatrix w = affinity_from_r(client.params.self_expressive.r, config.affinity_top_s);
      out.predicted =
          spectral_cluster(w, out.clusters, derive_seed(config.seed, "spectral", client.client_id), config.kmeans).labels;
      out.baseline_predicted = kmeans(client.shard.samples, out.clusters,
                                      derive_seed(config.seed, "baseline", client.client_id), config.kmeans)
                                   .labels;
    }
    out.metrics = evaluate_clustering(out.predicted, out.truth);
    out.baseline = evaluate_clustering(out.baseline_predicted, out.truth);
    result.clients.push_back(std::move(out));
  }
  std::vector<MetricsReport> fdsc, base;
  for (const auto& c : result.clients) {
    fdsc.push_back(c.metrics);
    base.push_back(c.baseline);
  }
  result.mean = mean_report(fdsc);
  result.baseline_mean = mean_report(base);
  result.pooled = pooled_report(result.clients, false);
  result.baseline_pooled = pooled_report(result.clients, true);
}

RunResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  Dataset data;
  try {
    data = load_dataset(config);
  } catch (const Error& e) {
    throw ConfigError(std::string("loading dataset: ") + e.what());
  }
  return run_experiment(config, data);
}

RunResult run_experiment(const ExperimentConfig& config, const Dataset& dataset) {
  const auto start = std::chrono::steady_clock::now();
  config.validate();
  RunResult result;
  result.method = method_name(config);
  result.config_hash = config_hash(config);

  auto stage = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const NumericsError& e) {
      throw NumericsError(std::string(name) + ": " + e.what());
    } catch (const ShapeError& e) {
      throw ShapeError(std::string(name) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(std::string(name) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(name) + ": " + e.what());
    }
  };

  const PartitionSpec spec{config.clients, config.classes_per_client, config.samples_per_client,
                           derive_seed(config.seed, "partition")};
  auto shards = stage("partition", [&] { return partition(dataset, spec); });
  const FederationConfig fcfg = federation_config(config, dataset.shape);
  result.federation = stage("adjacency", [&] { return init_federation(std::move(shards), fcfg); });
  stage("pretraining", [&] {
    pretrain_federation(result.federation, fcfg);
    return 0;
  });
  result.rounds = stage("federation", [&] { return run_training(result.federation, fcfg, config.rounds); });
  stage("clustering", [&] {
    score_clients(config, result.federation, result);
    return 0;
  });
  result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!config.output_dir.empty()) write_outputs(config, result);
  return result;
}

std::string metrics_csv(const RunResult& result) {
  std::ostringstream out;
  out.precision(10);
  out << "method,client,ACC,NMI,AMI,ARI\n";
  auto row = [&](const std::string& method, const std::string& client, const MetricsReport& m) {
    out << method << ',' << client << ',' << m.acc << ',' << m.nmi << ',' << m.ami << ',' << m.ari << '\n';
  };
  for (const auto& c : result.clients) row(result.method, std::to_string(c.client_id), c.metrics);
  row(result.method, "mean", result.mean);
  row(result.method, "pooled", result.pooled);
  for (const auto& c : result.clients) row("kmeans-raw", std::to_string(c.client_id), c.baseline);
  row("kmeans-raw", "mean", result.baseline_mean);
  row("kmeans-raw", "pooled", result.baseline_pooled);
  return out.str();
}

SweepTable sweep(const ExperimentConfig& base, const std::string& axis, const std::vector<std::string>& values) {
  base.validate();
  if (!is_sweep_axis(axis)) throw ConfigError("'" + axis + "' is not a sweep axis");
  Dataset data;
  try {
    data = load_dataset(base);
  } catch (const Error& e) {
    throw ConfigError(std::string("loading dataset: ") + e.what());
  }
  return sweep(base, axis, values, data);
}

SweepTable sweep(const ExperimentConfig& base, const std::string& axis, const std::vector<std::string>& values,
                 const Dataset& dataset) {
  if (!is_sweep_axis(axis)) throw ConfigError("'" + axis + "' is not a sweep axis");
  SweepTable table;
  table.axis = axis;
  for (const auto& value : values) {
    ExperimentConfig cfg = base;
    apply_override(cfg, axis, value);
    if (!base.output_dir.empty()) cfg.output_dir = (fs::path(base.output_dir) / (axis + "_" + value)).string();
    table.values.push_back(value);
    table.runs.push_back(run_experiment(cfg, dataset));
  }
  if (!base.output_dir.empty()) {
    fs::create_directories(base.output_dir);
    write_text(fs::path(base.output_dir) / "sweep.csv", sweep_csv(table));
  }
  return table;
}

std::string sweep_csv(const SweepTable& table) {
  std::ostringstream out;
  out.precision(10);
  out << table.axis << ",method,ACC,NMI,AMI,ARI,kmeans_ACC,kmeans_NMI,kmeans_AMI,kmeans_ARI\n";
  for (std::size_t i = 0; i < table.runs.size(); ++i) {
    const RunResult& r = table.runs[i];
    out << table.values[i] << ',' << r.method << ',' << r.mean.acc << ',' << r.mean.nmi << ',' << r.mean.ami << ','
        << r.mean.ari << ',' << r.baseline_mean.acc << ',' << r.baseline_mean.nmi << ',' << r.baseline_mean.ami << ','
        << r.baseline_mean.ari << '\n';
  }
  return out.str();
}

Federation load_run_state(const fs::path& run_dir, ExperimentConfig& config) {
  const fs::path manifest_path = run_dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw ConfigError("no manifest.json in " + run_dir.string());
  const auto manifest = nlohmann::json::parse(read_text(manifest_path));
  config = config_from_json(manifest.at("config").dump());
  const Dataset data = load_dataset(config);
  const PartitionSpec spec{config.clients, config.classes_per_client, config.samples_per_client,
                           derive_seed(config.seed, "partition")};
  FederationConfig fcfg = federation_config(config, data.shape);
  Federation fed = init_federation(partition(data, spec), fcfg);
  const fs::path ckpt = run_dir / "checkpoints";
  if (!fs::exists(ckpt / "global_encoder.fdsc")) throw ConfigError("missing checkpoint in " + ckpt.string());
  load_checkpoint(ckpt / "global_encoder.fdsc", fed.server.global_encoder);
  for (auto& client : fed.clients) {
    const fs::path file = ckpt / ("client_" + std::to_string(client.client_id) + ".fdsc");
    if (!fs::exists(file)) throw ConfigError("missing checkpoint " + file.string());
    load_checkpoint(file, client.params);
  }
  fed.server.round = manifest.value("round", 0);
  return fed;
}

RunResult evaluate_run(const fs::path& run_dir) {
  ExperimentConfig config;
  RunResult result;
  result.federation = load_run_state(run_dir, config);
  result.method = method_name(config);
  result.config_hash = config_hash(config);
  score_clients(config, result.federation, result);
  write_text(run_dir / "metrics_eval.csv", metrics_csv(result));
  return result;
}

}  // namespace fdsc
