#pragma once

#include <filesystem>
#include <vector>

#include "sccdr/centrality.hpp"
#include "sccdr/graphstore.hpp"

namespace sccdr {

// Higher sum = easier negative.
inline double pair_difficulty(double anchor_centrality, double candidate_centrality) {
  return anchor_centrality + candidate_centrality;
}

struct Schedule {
  int n_step = 1;
  int initial_active = 1;
};

// n_step = max(1, floor(n_epoch / (n_neg / 2))), initial_active = n_neg / 2.
Schedule build_schedule(int n_epoch, int n_neg);

struct RankedNegative {
  std::uint32_t slot = 0;  // target-domain slot
  double difficulty = 0;
};

// Orders candidates easiest first: descending difficulty, ties by ascending
// slot (which is ascending NodeId within a domain).
std::vector<RankedNegative> order_easiest_first(std::vector<RankedNegative> pool);

struct CurriculumState {
  int n_neg = 0;
  int n_epoch = 0;
  int n_step = 1;
  bool enabled = true;
  std::vector<OverlapPair> anchors;
  std::vector<std::vector<RankedNegative>> pools;  // parallel to anchors, easiest first
};

// One frozen pool per overlapping user, sampled from the target training
// graph (excluding the user's own target node and its neighbors) and ordered
// by pair_difficulty against the anchor's source-domain centrality.
CurriculumState build_curriculum(const CrossDomainDataset& ds, const CentralityTable& source_centrality,
                                 const CentralityTable& target_centrality, int n_neg, int n_epoch,
                                 std::uint64_t seed, bool enabled = true);

// min(n_neg, n_neg/2 + floor(epoch / n_step)); n_neg when disabled.
int active_count(const CurriculumState& state, int epoch);

// anchor\trank\tnode\tdifficulty, anchor as the source user index.
void write_pools(const std::filesystem::path& path, const CurriculumState& state,
                 const DomainGraph& target);

}  // namespace sccdr
