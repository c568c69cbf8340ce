#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "sccdr/config.hpp"
#include "sccdr/evaluation.hpp"

namespace sccdr {

// DIR/source.tsv, DIR/target.tsv and, if present, DIR/overlap.tsv.
CrossDomainDataset load_dataset(const std::filesystem::path& data_dir, std::uint64_t seed);

// Alpha actually used for g: cfg.alpha, or 0.9 / lambda_max when auto is on
// and cfg.alpha >= 1 / lambda_max.
double effective_katz_alpha(const DomainGraph& g, const KatzConfig& cfg, bool auto_alpha);

struct Prepared {
  CrossDomainDataset dataset;
  CentralityTable source_centrality;
  CentralityTable target_centrality;
};

// Computes both centrality tables and writes them to
// DIR/prepared/{source,target}/centrality.tsv.
Prepared prepare(const std::filesystem::path& data_dir, const RunConfig& cfg);

// Loads the dataset plus the tables written by prepare().
Prepared load_prepared(const std::filesystem::path& data_dir, const RunConfig& cfg);

// Trains cfg.train.mode and writes the checkpoint, trainlog.tsv, pools.tsv
// and effective_config.txt into out_dir.
TrainResult run_training(const Prepared& prepared, const RunConfig& cfg,
                         const std::filesystem::path& out_dir);

// Config for `train --data DIR`: defaults, then DIR/train.conf if present,
// then the user's --config file.
RunConfig training_config(const std::filesystem::path& data_dir,
                          const std::optional<std::filesystem::path>& config_file);

// Reads MODEL/effective_config.txt, scores the test rows and writes
// MODEL/metrics.json.
EvalReport run_eval(const std::filesystem::path& model_dir, const std::filesystem::path& data_dir,
                    const std::vector<int>& cutoffs, const EvalOptions& opts);

// Trains full and mixed for each seed and writes stability.tsv and
// stability_pairs.tsv (plus per-run logs under out_dir/<mode>-<seed>/).
StabilityReport run_stability(const std::filesystem::path& data_dir, const RunConfig& cfg,
                              const std::vector<std::uint64_t>& seeds,
                              const std::filesystem::path& out_dir);

}  // namespace sccdr
