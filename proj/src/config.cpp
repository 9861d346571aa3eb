#include "fdsc/config.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>

#include "fdsc/errors.hpp"

namespace fdsc {
namespace {

using nlohmann::json;

json layer_json(const LayerSpec& l) { return {{"channels", l.channels}, {"kernel", l.kernel}, {"stride", l.stride}}; }

LayerSpec layer_from(const json& j, const LayerSpec& d) {
  return {j.value("channels", d.channels), j.value("kernel", d.kernel), j.value("stride", d.stride)};
}

json to_json(const ExperimentConfig& c) {
  const auto& s = c.dataset.synthetic;
  return {
      {"name", c.name},
      {"dataset",
       {{"kind", c.dataset.kind},
        {"images", c.dataset.images},
        {"labels", c.dataset.labels},
        {"root", c.dataset.root},
        {"resize", {c.dataset.resize_h, c.dataset.resize_w}},
        {"limit", c.dataset.limit},
        {"synthetic",
         {{"subspaces", s.subspaces},
          {"dimension", s.dimension},
          {"per_subspace", s.per_subspace},
          {"noise", s.noise},
          {"shape", {s.shape.height, s.shape.width, s.shape.channels}},
          {"seed", s.seed}}}}},
      {"partition",
       {{"clients", c.clients}, {"classes_per_client", c.classes_per_client}, {"samples_per_client", c.samples_per_client}}},
      {"federation",
       {{"participation", c.participation},
        {"rounds", c.rounds},
        {"local_epochs", c.local_epochs},
        {"pretrain_epochs", c.pretrain_epochs},
        {"workers", c.workers},
        {"checkpoint_every", c.checkpoint_every}}},
      {"loss",
       {{"lambda1", c.hyper.lambda1},
        {"lambda2", c.hyper.lambda2},
        {"lambda3", c.hyper.lambda3},
        {"alpha", c.hyper.alpha},
        {"beta", c.hyper.beta}}},
      {"graph", {{"k", c.knn}}},
      {"architecture", {{"conv1", layer_json(c.conv1)}, {"conv2", layer_json(c.conv2)}}},
      {"optimizer",
       {{"learning_rate", c.optimizer.learning_rate},
        {"r_learning_rate", c.optimizer.r_learning_rate},
        {"momentum", c.optimizer.momentum},
        {"clip_norm", c.optimizer.clip_norm}}},
      {"clustering",
       {{"clusters", c.clusters},
        {"affinity_top_s", c.affinity_top_s},
        {"restarts", c.kmeans.restarts},
        {"max_iterations", c.kmeans.max_iterations}}},
      {"seed", c.seed},
      {"output_dir", c.output_dir},
  };
}

ExperimentConfig from_json(const json& j) {
  ExperimentConfig c;
  c.name = j.value("name", c.name);
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    c.dataset.kind = d.value("kind", c.dataset.kind);
    c.dataset.images = d.value("images", c.dataset.images);
    c.dataset.labels = d.value("labels", c.dataset.labels);
    c.dataset.root = d.value("root", c.dataset.root);
    if (d.contains("resize")) {
      c.dataset.resize_h = d["resize"].at(0).get<int>();
      c.dataset.resize_w = d["resize"].at(1).get<int>();
    }
    c.dataset.limit = d.value("limit", c.dataset.limit);
    if (d.contains("synthetic")) {
      const json& s = d["synthetic"];
      auto& o = c.dataset.synthetic;
      o.subspaces = s.value("subspaces", o.subspaces);
      o.dimension = s.value("dimension", o.dimension);
      o.per_subspace = s.value("per_subspace", o.per_subspace);
      o.noise = s.value("noise", o.noise);
      if (s.contains("shape"))
        o.shape = {s["shape"].at(0).get<int>(), s["shape"].at(1).get<int>(), s["shape"].at(2).get<int>()};
      o.seed = s.value("seed", o.seed);
    }
  }
  if (j.contains("partition")) {
    const json& p = j["partition"];
    c.clients = p.value("clients", c.clients);
    c.classes_per_client = p.value("classes_per_client", c.classes_per_client);
    c.samples_per_client = p.value("samples_per_client", c.samples_per_client);
  }
  if (j.contains("federation")) {
    const json& f = j["federation"];
    c.participation = f.value("participation", c.participation);
    c.rounds = f.value("rounds", c.rounds);
    c.local_epochs = f.value("local_epochs", c.local_epochs);
    c.pretrain_epochs = f.value("pretrain_epochs", c.pretrain_epochs);
    c.workers = f.value("workers", c.workers);
    c.checkpoint_every = f.value("checkpoint_every", c.checkpoint_every);
  }
  if (j.contains("loss")) {
    const json& l = j["loss"];
    c.hyper.lambda1 = l.value("lambda1", c.hyper.lambda1);
    c.hyper.lambda2 = l.value("lambda2", c.hyper.lambda2);
    c.hyper.lambda3 = l.value("lambda3", c.hyper.lambda3);
    c.hyper.alpha = l.value("alpha", c.hyper.alpha);
    c.hyper.beta = l.value("beta", c.hyper.beta);
  }
  if (j.contains("graph")) c.knn = j["graph"].value("k", c.knn);
  if (j.contains("architecture")) {
    const json& a = j["architecture"];
    if (a.contains("conv1")) c.conv1 = layer_from(a["conv1"], c.conv1);
    if (a.contains("conv2")) c.conv2 = layer_from(a["conv2"], c.conv2);
  }
  if (j.contains("optimizer")) {
    const json& o = j["optimizer"];
    c.optimizer.learning_rate = o.value("learning_rate", c.optimizer.learning_rate);
    c.optimizer.r_learning_rate = o.value("r_learning_rate", c.optimizer.r_learning_rate);
    c.optimizer.momentum = o.value("momentum", c.optimizer.momentum);
    c.optimizer.clip_norm = o.value("clip_norm", c.optimizer.clip_norm);
  }
  if (j.contains("clustering")) {
    const json& k = j["clustering"];
    c.clusters = k.value("clusters", c.clusters);
    c.affinity_top_s = k.value("affinity_top_s", c.affinity_top_s);
    c.kmeans.restarts = k.value("restarts", c.kmeans.restarts);
    c.kmeans.max_iterations = k.value("max_iterations", c.kmeans.max_iterations);
  }
  c.seed = j.value("seed", c.seed);
  c.output_dir = j.value("output_dir", c.output_dir);
  return c;
}

const std::map<std::string, std::string>& axis_paths() {
  static const std::map<std::string, std::string> paths = {
      {"m", "/partition/clients"},
      {"samples_per_client", "/partition/samples_per_client"},
      {"q", "/partition/classes_per_client"},
      {"lambda1", "/loss/lambda1"},
      {"lambda2", "/loss/lambda2"},
      {"lambda3", "/loss/lambda3"},
      {"r", "/federation/participation"},
      {"T", "/federation/rounds"},
      {"tau", "/federation/local_epochs"},
      {"k", "/graph/k"},
  };
  return paths;
}

}  // namespace

void ExperimentConfig::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  require(clients >= 1, "partition.clients must be >= 1");
  require(classes_per_client >= 1, "partition.classes_per_client must be >= 1");
  require(samples_per_client >= 0, "partition.samples_per_client must be >= 0");
  require(participation > 0.0 && participation <= 1.0, "federation.participation must lie in (0, 1]");
  require(rounds >= 0, "federation.rounds must be >= 0");
  require(local_epochs >= 0, "federation.local_epochs must be >= 0");
  require(pretrain_epochs >= 0, "federation.pretrain_epochs must be >= 0");
  require(workers >= 1, "federation.workers must be >= 1");
  require(knn >= 1, "graph.k must be >= 1");
  require(clusters >= 0, "clustering.clusters must be >= 0");
  require(optimizer.learning_rate >= 0.0, "optimizer.learning_rate must be >= 0");
  require(std::isfinite(optimizer.clip_norm) && optimizer.clip_norm >= 0.0, "optimizer.clip_norm must be >= 0");
  require(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0, "optimizer.momentum must lie in [0, 1)");
  for (const LayerSpec& l : {conv1, conv2})
    require(l.channels >= 1 && l.kernel >= 1 && l.stride >= 1, "architecture layers need positive sizes");
  require(dataset.kind == "mnist" || dataset.kind == "image_dir" || dataset.kind == "synthetic",
          "dataset.kind must be mnist, image_dir or synthetic");
  hyper.validate();
}

std::string config_to_json(const ExperimentConfig& config) { return to_json(config).dump(2); }

ExperimentConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  try {
    return from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field has the wrong type: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str());
}

bool is_sweep_axis(const std::string& axis) { return axis_paths().contains(axis); }

void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value) {
  std::string pointer = key;
  if (auto it = axis_paths().find(key); it != axis_paths().end()) pointer = it->second;
  if (pointer.empty() || pointer.front() != '/') throw ConfigError("unknown config key '" + key + "'");
  json j = to_json(config);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    parsed = value;  // bare strings
  }
  try {
    const json::json_pointer ptr(pointer);
    if (!j.contains(ptr)) throw ConfigError("unknown config key '" + key + "'");
    j[ptr] = parsed;
    config = from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError("cannot set '" + key + "': " + e.what());
  }
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string body = to_json(config).dump();
  const std::string blob = "blob " + std::to_string(body.size()) + std::string(1, '\0') + body;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(blob.data(), blob.size(), digest, &length, EVP_sha1(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

FederationConfig federation_config(const ExperimentConfig& config, const ImageShape& input) {
  FederationConfig f;
  f.architecture = Architecture{input, config.conv1, config.conv2};
  f.hyper = config.hyper;
  f.optimizer = config.optimizer;
  f.knn = config.knn;
  f.participation = config.participation;
  f.rounds = config.rounds;
  f.local_epochs = config.local_epochs;
  f.pretrain_epochs = config.pretrain_epochs;
  f.workers = config.workers;
  f.checkpoint_every = config.checkpoint_every;
  if (!config.output_dir.empty()) f.checkpoint_dir = std::filesystem::path(config.output_dir) / "checkpoints";
  f.seed = config.seed;
  return f;
}

}  // namespace fdsc
