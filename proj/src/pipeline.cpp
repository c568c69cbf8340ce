#include "sccdr/pipeline.hpp"

#include <fstream>
#include <iostream>

namespace sccdr {

namespace fs = std::filesystem;

CrossDomainDataset load_dataset(const fs::path& data_dir, std::uint64_t seed) {
  auto source = load_edges(data_dir / "source.tsv", Domain::Source);
  auto target = load_edges(data_dir / "target.tsv", Domain::Target);
  std::optional<fs::path> overlap;
  if (fs::exists(data_dir / "overlap.tsv")) overlap = data_dir / "overlap.tsv";
  return build_dataset(std::move(source), std::move(target), overlap, seed);
}

double effective_katz_alpha(const DomainGraph& g, const KatzConfig& cfg, bool auto_alpha) {
  if (!auto_alpha) return cfg.alpha;
  const double lambda = spectral_radius(g);
  if (lambda <= 0 || cfg.alpha * lambda < 1.0) return cfg.alpha;
  return 0.9 / lambda;
}

namespace {

CentralityTable centrality_for(const DomainGraph& g, const RunConfig& cfg, const char* name) {
  KatzConfig k = cfg.katz;
  k.alpha = effective_katz_alpha(g, cfg.katz, cfg.katz_alpha_auto);
  if (k.alpha != cfg.katz.alpha)
    std::cerr << "katz: " << name << " alpha " << cfg.katz.alpha << " diverges, using " << k.alpha << '\n';
  return katz_centrality(g, k);
}

fs::path centrality_path(const fs::path& data_dir, const char* domain) {
  return data_dir / "prepared" / domain / "centrality.tsv";
}

TrainConfig seeded(const RunConfig& cfg) {
  TrainConfig t = cfg.train;
  t.sampler.seed = t.seed;
  return t;
}

}  // namespace

Prepared prepare(const fs::path& data_dir, const RunConfig& cfg) {
  Prepared p{load_dataset(data_dir, cfg.train.seed), {}, {}};
  p.source_centrality = centrality_for(p.dataset.source, cfg, "source");
  p.target_centrality = centrality_for(p.dataset.target, cfg, "target");
  fs::create_directories(data_dir / "prepared" / "source");
  fs::create_directories(data_dir / "prepared" / "target");
  write_centrality(centrality_path(data_dir, "source"), p.source_centrality);
  write_centrality(centrality_path(data_dir, "target"), p.target_centrality);
  return p;
}

Prepared load_prepared(const fs::path& data_dir, const RunConfig& cfg) {
  Prepared p{load_dataset(data_dir, cfg.train.seed), {}, {}};
  for (const char* d : {"source", "target"})
    if (!fs::exists(centrality_path(data_dir, d)))
      throw DataError("missing " + centrality_path(data_dir, d).string() + " (run `sccdr prepare` first)");
  p.source_centrality = read_centrality(centrality_path(data_dir, "source"), p.dataset.source);
  p.target_centrality = read_centrality(centrality_path(data_dir, "target"), p.dataset.target);
  return p;
}

TrainResult run_training(const Prepared& prepared, const RunConfig& cfg, const fs::path& out_dir) {
  auto result = train(prepared.dataset, prepared.source_centrality, prepared.target_centrality, seeded(cfg));
  fs::create_directories(out_dir);
  save_checkpoint(out_dir, result.state, prepared.dataset);
  write_trainlog(out_dir / "trainlog.tsv", result.log);
  write_pools(out_dir / "pools.tsv", result.curriculum, prepared.dataset.target);
  write_effective_config(out_dir / "effective_config.txt", cfg);
  return result;
}

RunConfig training_config(const fs::path& data_dir, const std::optional<fs::path>& config_file) {
  RunConfig cfg;
  if (fs::exists(data_dir / "train.conf")) apply_config_file(cfg, data_dir / "train.conf");
  if (config_file) apply_config_file(cfg, *config_file);
  return cfg;
}

EvalReport run_eval(const fs::path& model_dir, const fs::path& data_dir, const std::vector<int>& cutoffs,
                    const EvalOptions& opts) {
  const auto conf = model_dir / "effective_config.txt";
  if (!fs::exists(conf)) throw DataError("missing " + conf.string() + " (not a model directory)");
  RunConfig cfg;
  apply_config_file(cfg, conf);
  const auto ds = load_dataset(data_dir, cfg.train.seed);
  auto [source, target] = load_checkpoint(model_dir, ds);
  target.jk_include_input = cfg.train.jk_include_input;
  auto report = hit_at_n(target, ds, cutoffs, opts);
  report.mode = std::string(mode_name(cfg.train.mode));
  report.seed = cfg.train.seed;
  write_metrics(model_dir / "metrics.json", report);
  return report;
}

StabilityReport run_stability(const fs::path& data_dir, const RunConfig& cfg,
                              const std::vector<std::uint64_t>& seeds, const fs::path& out_dir) {
  if (seeds.empty()) throw ConfigError("diag stability: no seeds");
  std::vector<TaggedLog> logs;
  for (auto seed : seeds) {
    RunConfig run = cfg;
    run.train.seed = seed;
    run.synth.seed = seed;
    const auto prepared = load_prepared(data_dir, run);
    for (auto mode : {TrainMode::Full, TrainMode::Mixed}) {
      run.train.mode = mode;
      const auto dir = out_dir / (std::string(mode_name(mode)) + "-" + std::to_string(seed));
      auto result = run_training(prepared, run, dir);
      logs.push_back({std::string(mode_name(mode)), seed, std::move(result.log)});
    }
  }
  auto report = stability_report(logs);
  write_stability(out_dir, report);
  return report;
}

}  // namespace sccdr
