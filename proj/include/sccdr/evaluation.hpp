#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sccdr/encoder.hpp"
#include "sccdr/graphstore.hpp"
#include "sccdr/trainer.hpp"

namespace sccdr {

struct EvalOptions {
  bool include_train_items = false;
  bool dot_product = false;  // cosine otherwise
  unsigned threads = 0;      // 0: SCCDR_THREADS or hardware concurrency
};

struct EvalReport {
  std::map<int, double> hit_at;
  std::size_t num_test_rows = 0;
  std::string mode;
  std::uint64_t seed = 0;
};

// Rank of `truth` among candidate items (1-based): items scoring higher, or
// equal with a smaller index, rank ahead of it. Excluded items are skipped.
std::size_t rank_of(std::span<const double> scores, std::uint32_t truth,
                    std::span<const std::uint32_t> excluded);

// HIT@N over test rows given final user/item embeddings (rows = target
// slots). Exposed separately so fixtures can hand-set embeddings.
EvalReport hit_at_n(const Tensor& target_embeddings, const CrossDomainDataset& ds,
                    const std::vector<int>& cutoffs, const EvalOptions& opts = {});

// Encodes the target graph with full neighborhoods, then scores.
EvalReport hit_at_n(const EncoderParams& target_params, const CrossDomainDataset& ds,
                    const std::vector<int>& cutoffs, const EvalOptions& opts = {});

void write_metrics(const std::filesystem::path& path, const EvalReport& report);

// Sample standard deviation over the last half of the series
// (elements from floor(n/2) on).
double std_final_half(std::span<const double> series);

struct TaggedLog {
  std::string mode;
  std::uint64_t seed = 0;
  TrainLog log;
};

struct StabilityRow {
  std::string mode;
  std::string loss;  // L_intra_s, L_intra_t, L_inter_u, L_inter_n, L_inter
  double std_final_half = 0;  // mean over seeds
};

struct StabilityPair {
  std::uint64_t seed = 0;
  std::string loss;
  double full = 0;
  double mixed = 0;
};

struct StabilityReport {
  std::vector<StabilityRow> rows;
  std::vector<StabilityPair> pairs;  // inter losses, per seed
};

StabilityReport stability_report(const std::vector<TaggedLog>& logs);

void write_stability(const std::filesystem::path& dir, const StabilityReport& report);

}  // namespace sccdr
