#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "fdsc/config.hpp"
#include "fdsc/errors.hpp"
#include "fdsc/experiment.hpp"
#include "fdsc/export.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* app, CommonOptions& opts) {
  app->add_option("-c,--config", opts.config_path, "experiment config (JSON); defaults apply otherwise")
      ->check(CLI::ExistingFile);
  app->add_option("--set", opts.overrides, "override a field: key=value (axis name or JSON pointer)")
      ->take_all();
  app->add_option("-o,--output", opts.output_dir, "output directory");
}

fdsc::ExperimentConfig build_config(const CommonOptions& opts) {
  fdsc::ExperimentConfig cfg = opts.config_path.empty() ? fdsc::ExperimentConfig{} : fdsc::load_config(opts.config_path);
  for (const auto& item : opts.overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw fdsc::ConfigError("--set expects key=value, got '" + item + "'");
    fdsc::apply_override(cfg, item.substr(0, eq), item.substr(eq + 1));
  }
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.workers) cfg.workers = *opts.workers;
  if (!opts.output_dir.empty()) cfg.output_dir = opts.output_dir;
  cfg.validate();
  return cfg;
}

void print_summary(const fdsc::RunResult& r) {
  std::cout.setf(std::ios::fixed);
  std::cout.precision(2);
  std::cout << r.method << " mean   ACC " << r.mean.acc << "  NMI " << r.mean.nmi << "  AMI " << r.mean.ami
            << "  ARI " << r.mean.ari << '\n';
  std::cout << r.method << " pooled ACC " << r.pooled.acc << "  NMI " << r.pooled.nmi << "  AMI " << r.pooled.ami
            << "  ARI " << r.pooled.ari << '\n';
  std::cout << "kmeans-raw mean ACC " << r.baseline_mean.acc << "  NMI " << r.baseline_mean.nmi << '\n';
  std::cout.precision(1);
  std::cout << "wall " << r.wall_seconds << " s, config " << r.config_hash << '\n';
}

std::vector<std::string> split_values(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated deep subspace clustering simulator"};
  app.require_subcommand(1);

  CommonOptions part_opts, train_opts, sweep_opts;
  std::uint64_t train_seed = 0;

  auto* part = app.add_subcommand("partition", "write the client partition manifest");
  add_common(part, part_opts);
  part->add_option("--seed", part_opts.seed, "master seed");

  auto* train = app.add_subcommand("train", "run one federated experiment");
  add_common(train, train_opts);
  train->add_option("--seed", train_seed, "master seed")->required();
  train->add_option("-j,--workers", train_opts.workers, "concurrent client trainers");

  std::string run_dir;
  auto* eval = app.add_subcommand("evaluate", "re-score a finished run from its checkpoints");
  eval->add_option("run_dir", run_dir, "run directory")->required()->check(CLI::ExistingDirectory);

  std::string axis, values;
  auto* sw = app.add_subcommand("sweep", "one run per value of a parameter");
  add_common(sw, sweep_opts);
  sw->add_option("--seed", sweep_opts.seed, "master seed");
  sw->add_option("-j,--workers", sweep_opts.workers, "concurrent client trainers");
  sw->add_option("--axis", axis, "m, samples_per_client, q, lambda1, lambda2, lambda3, r, T, tau or k")->required();
  sw->add_option("--values", values, "comma-separated values")->required();

  std::string export_dir;
  auto* ex = app.add_subcommand("export", "write PCA coordinates and label-sorted affinities");
  ex->add_option("run_dir", export_dir, "run directory")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*part) {
      const auto cfg = build_config(part_opts);
      const auto data = fdsc::load_dataset(cfg);
      const fdsc::PartitionSpec spec{cfg.clients, cfg.classes_per_client, cfg.samples_per_client,
                                     fdsc::derive_seed(cfg.seed, "partition")};
      const std::string json = fdsc::partition_manifest_json(fdsc::partition(data, spec));
      if (cfg.output_dir.empty()) {
        std::cout << json << '\n';
      } else {
        std::filesystem::create_directories(cfg.output_dir);
        std::ofstream(std::filesystem::path(cfg.output_dir) / "partition.json") << json;
      }
    } else if (*train) {
      train_opts.seed = train_seed;
      auto cfg = build_config(train_opts);
      if (cfg.output_dir.empty()) cfg.output_dir = "runs/" + cfg.name + "_seed" + std::to_string(cfg.seed);
      const auto result = fdsc::run_experiment(cfg);
      print_summary(result);
      std::cout << "outputs in " << cfg.output_dir << '\n';
    } else if (*eval) {
      print_summary(fdsc::evaluate_run(run_dir));
    } else if (*sw) {
      const auto cfg = build_config(sweep_opts);
      const auto table = fdsc::sweep(cfg, axis, split_values(values));
      std::cout << fdsc::sweep_csv(table);
    } else if (*ex) {
      fdsc::export_views(export_dir);
      std::cout << "wrote " << (std::filesystem::path(export_dir) / "exports").string() << '\n';
    }
  } catch (const fdsc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const fdsc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
