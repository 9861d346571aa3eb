#include "fdsc/federation.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <thread>

#include "fdsc/checkpoint.hpp"
#include "fdsc/errors.hpp"

namespace fdsc {
namespace {

// Runs job(i) for i in [0, count) on up to `workers` threads. Each job
// touches disjoint state, so the schedule cannot change results.
template <class Job>
void run_jobs(int count, int workers, Job&& job) {
  std::vector<std::exception_ptr> errors(count);
  auto guarded = [&](int i) {
    try {
      job(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (workers <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) guarded(i);
  } else {
    std::atomic<int> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < std::min(workers, count); ++w)
      pool.emplace_back([&] {
        for (int i = next++; i < count; i = next++) guarded(i);
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void check_diag_zero(const ClientHandle& client) {
  if (client.params.self_expressive.r.diagonal().cwiseAbs().maxCoeff() != 0.0)
    throw NumericsError("diag(R) drifted from zero on client " + std::to_string(client.client_id));
}

}  // namespace

std::uint64_t encoder_seed(std::uint64_t master) { return derive_seed(master, "encoder"); }

std::uint64_t decoder_seed(std::uint64_t master, int client_id) {
  return derive_seed(master, "decoder", static_cast<std::uint64_t>(client_id));
}

std::uint64_t sampling_seed(std::uint64_t master) { return derive_seed(master, "sampling"); }

Federation init_federation(std::vector<DatasetShard> shards, const FederationConfig& config) {
  if (shards.empty()) throw ConfigError("federation needs at least one shard");
  config.hyper.validate();
  Federation fed;
  fed.server.global_encoder = init_encoder(config.architecture, encoder_seed(config.seed));
  fed.server.rng = Rng(sampling_seed(config.seed));

  double total = 0.0;
  for (const auto& shard : shards) {
    if (shard.size() < 1) throw ConfigError("client " + std::to_string(shard.client_id) + " has an empty shard");
    if (shard.samples.cols() != config.architecture.input.size())
      throw ShapeError("shard sample width does not match the architecture input");
    total += shard.size();
  }

  fed.clients.resize(shards.size());
  run_jobs(static_cast<int>(shards.size()), config.workers, [&](int i) {
    ClientHandle& client = fed.clients[i];
    client.client_id = shards[i].client_id;
    client.adjacency = knn_adjacency(shards[i].samples, config.knn);
    client.params = make_net(fed.server.global_encoder,
                             init_decoder(config.architecture, decoder_seed(config.seed, client.client_id)),
                             shards[i].size());
    client.optimizer = OptimizerState::create(client.params, config.optimizer);
    client.weight = shards[i].size() / total;
    client.shard = std::move(shards[i]);
  });
  return fed;
}

void pretrain_federation(Federation& fed, const FederationConfig& config) {
  if (config.pretrain_epochs <= 0) return;
  run_jobs(static_cast<int>(fed.clients.size()), config.workers, [&](int i) {
    ClientHandle& client = fed.clients[i];
    const auto trace =
        pretrain_autoencoder(client.shard, client.params, client.adjacency, config.pretrain_epochs, config.optimizer);
    for (std::size_t e = 0; e < trace.size(); ++e)
      client.trace.push_back({0, static_cast<int>(e), trace[e]});
  });
  std::vector<EncoderParams> encoders;
  std::vector<double> weights;
  for (const auto& client : fed.clients) {
    encoders.push_back(client.upload_encoder());
    weights.push_back(client.weight);
  }
  fed.server.global_encoder = aggregate(encoders, weights);
  for (auto& client : fed.clients) client.receive_encoder(fed.server.global_encoder);
}

std::vector<int> sample_clients(ServerState& server, int m, double r) {
  if (!(r > 0.0 && r <= 1.0)) throw ConfigError("participation rate must lie in (0, 1]");
  if (m < 1) throw ConfigError("need at least one client");
  const int size = std::clamp(static_cast<int>(std::lround(r * m)), 1, m);
  std::vector<int> ids(m);
  for (int i = 0; i < m; ++i) ids[i] = i;
  for (int i = 0; i < size; ++i) {
    const int j = i + static_cast<int>(server.rng.below(static_cast<std::uint64_t>(m - i)));
    std::swap(ids[i], ids[j]);
  }
  ids.resize(size);
  std::sort(ids.begin(), ids.end());
  return ids;
}

EncoderParams aggregate(std::span<const EncoderParams> encoders, std::span<const double> weights) {
  if (encoders.empty()) throw ConfigError("nothing to aggregate");
  if (encoders.size() != weights.size()) throw ShapeError("one weight per encoder required");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("aggregation weights must be finite and nonnegative");
    sum += w;
  }
  if (sum <= 0.0) throw ConfigError("aggregation weights are all zero");
  if (encoders.size() == 1) return encoders[0];

  EncoderParams out = zeros_like(encoders[0]);
  std::vector<std::span<double>> target;
  std::vector<std::vector<std::int64_t>> shapes;
  for_each_tensor(out, [&](const std::string&, std::span<double> v, const std::vector<std::int64_t>& dims) {
    target.push_back(v);
    shapes.push_back(dims);
  });
  for (std::size_t e = 0; e < encoders.size(); ++e) {
    if (!(encoders[e].input == encoders[0].input)) throw ShapeError("encoder input shapes differ");
    const double w = weights[e] / sum;
    std::size_t t = 0;
    for_each_tensor(encoders[e], [&](const std::string& name, std::span<const double> v,
                                     const std::vector<std::int64_t>& dims) {
      if (t >= target.size() || dims != shapes[t]) throw ShapeError("encoder tensor " + name + " shape mismatch");
      for (std::size_t i = 0; i < v.size(); ++i) target[t][i] += w * v[i];
      ++t;
    });
    if (t != target.size()) throw ShapeError("encoder tensor count mismatch");
  }
  return out;
}

RoundReport run_round(Federation& fed, const FederationConfig& config) {
  if (fed.server.round >= config.rounds)
    throw ConfigError("round " + std::to_string(fed.server.round + 1) + " exceeds T = " + std::to_string(config.rounds));
  const int m = static_cast<int>(fed.clients.size());
  RoundReport report;
  report.round = fed.server.round + 1;
  report.participants = sample_clients(fed.server, m, config.participation);

  const EncoderParams broadcast = fed.server.global_encoder;
  const int count = static_cast<int>(report.participants.size());
  report.final_losses.resize(count);
  run_jobs(count, config.workers, [&](int slot) {
    ClientHandle& client = fed.clients[report.participants[slot]];
    client.receive_encoder(broadcast);
    const auto trace = train_local(client.shard, client.params, config.hyper, client.adjacency,
                                   config.local_epochs, client.optimizer);
    for (std::size_t e = 0; e < trace.size(); ++e)
      client.trace.push_back({report.round, static_cast<int>(e), trace[e]});
    if (!trace.empty()) report.final_losses[slot] = trace.back();
    check_diag_zero(client);
  });

  std::vector<EncoderParams> uploads;
  std::vector<double> raw;
  double sum = 0.0;
  for (int id : report.participants) {
    uploads.push_back(fed.clients[id].upload_encoder());
    raw.push_back(fed.clients[id].weight);
    sum += fed.clients[id].weight;
  }
  for (double w : raw) report.weights.push_back(w / sum);
  fed.server.global_encoder = aggregate(uploads, raw);
  fed.server.round = report.round;
  return report;
}

std::vector<RoundReport> run_training(Federation& fed, const FederationConfig& config, int rounds) {
  std::vector<RoundReport> reports;
  for (int t = 0; t < rounds; ++t) {
    reports.push_back(run_round(fed, config));
    if (config.checkpoint_every > 0 && !config.checkpoint_dir.empty() &&
        fed.server.round % config.checkpoint_every == 0)
      save_federation(config.checkpoint_dir, fed);
  }
  return reports;
}

void save_federation(const std::filesystem::path& dir, const Federation& fed) {
  std::filesystem::create_directories(dir);
  save_checkpoint(dir / "global_encoder.fdsc", fed.server.global_encoder);
  for (const auto& client : fed.clients)
    save_checkpoint(dir / ("client_" + std::to_string(client.client_id) + ".fdsc"), client.params);
}

}  // namespace fdsc
