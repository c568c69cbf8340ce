#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sccdr/centrality.hpp"
#include "sccdr/curriculum.hpp"
#include "sccdr/diffmath.hpp"
#include "sccdr/encoder.hpp"
#include "sccdr/graphstore.hpp"
#include "sccdr/losses.hpp"

namespace sccdr {

enum class TrainMode {
  Full,          // separated stages, stop-gradient, curriculum
  NoCurriculum,  // all N_neg negatives from the first inter epoch
  NoStopgrad,    // additionally lets inter gradients reach the source encoder
  Mixed,         // one joint phase over all four losses
};

std::string_view mode_name(TrainMode mode);
TrainMode parse_mode(std::string_view name);

struct TrainConfig {
  TrainMode mode = TrainMode::Full;
  int epochs_intra = 100;
  int epochs_inter = 100;
  int batch_size = 1024;
  double lr = 1e-3;
  double weight_decay = 5e-4;
  std::uint64_t seed = 42;
  int dim = 64;
  bool jk_include_input = false;
  // Anchors per domain used to evaluate (not optimize) the losses of the
  // stage that is not running, so every epoch record has all four values.
  int monitor_anchors = 256;
  LossConfig loss;
  SamplerConfig sampler;
};

void validate(const TrainConfig& cfg);

struct EpochRecord {
  int epoch = 0;
  std::string stage;  // intra | inter | mixed
  double intra_s = 0;
  double intra_t = 0;
  double inter_u = 0;
  double inter_n = 0;
  double seconds = 0;

  double inter_total() const { return inter_u + inter_n; }
};

struct TrainLog {
  std::vector<EpochRecord> records;
};

struct DomainModel {
  EncoderParams params;
  AdamState adam;
};

struct TrainerState {
  DomainModel source;
  DomainModel target;
  std::uint64_t epoch = 0;  // global epoch counter, drives neighbor sampling
};

TrainerState init_trainer(const CrossDomainDataset& ds, const TrainConfig& cfg);

// Stage 1: lambda_intra * (L_intra_s + L_intra_t) for epochs_intra epochs.
void train_stage_intra(const CrossDomainDataset& ds, TrainerState& state,
                       const CurriculumState& curriculum, const TrainConfig& cfg, TrainLog& log);

// Stage 2: lambda_inter * (L_inter_u + L_inter_n) over overlapping users,
// with k_active from the curriculum. Source parameters only move in
// NoStopgrad mode.
void train_stage_inter(const CrossDomainDataset& ds, TrainerState& state,
                       const CurriculumState& curriculum, const TrainConfig& cfg, TrainLog& log);

// epochs_intra + epochs_inter epochs of the joint objective; no barrier,
// every negative active.
void train_mixed(const CrossDomainDataset& ds, TrainerState& state,
                 const CurriculumState& curriculum, const TrainConfig& cfg, TrainLog& log);

struct TrainResult {
  TrainerState state;
  TrainLog log;
  CurriculumState curriculum;
};

// Full pipeline for cfg.mode.
TrainResult train(const CrossDomainDataset& ds, const CentralityTable& source_centrality,
                  const CentralityTable& target_centrality, const TrainConfig& cfg);

// <dir>/source/encoder.txt and <dir>/target/encoder.txt
void save_checkpoint(const std::filesystem::path& dir, const TrainerState& state,
                     const CrossDomainDataset& ds);
std::pair<EncoderParams, EncoderParams> load_checkpoint(const std::filesystem::path& dir,
                                                        const CrossDomainDataset& ds);

void write_trainlog(const std::filesystem::path& path, const TrainLog& log);
TrainLog read_trainlog(const std::filesystem::path& path);

}  // namespace sccdr
