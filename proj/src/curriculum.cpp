#include "sccdr/curriculum.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

#include "sccdr/losses.hpp"

namespace sccdr {

Schedule build_schedule(int n_epoch, int n_neg) {
  if (n_epoch < 1) throw ConfigError("curriculum: n_epoch must be >= 1");
  if (n_neg < 2 || n_neg % 2 != 0) throw ConfigError("curriculum: n_neg must be even and >= 2");
  const int half = n_neg / 2;
  return {std::max(1, n_epoch / half), half};
}

std::vector<RankedNegative> order_easiest_first(std::vector<RankedNegative> pool) {
  std::stable_sort(pool.begin(), pool.end(), [](const RankedNegative& a, const RankedNegative& b) {
    if (a.difficulty != b.difficulty) return a.difficulty > b.difficulty;
    return a.slot < b.slot;
  });
  return pool;
}

CurriculumState build_curriculum(const CrossDomainDataset& ds, const CentralityTable& source_centrality,
                                 const CentralityTable& target_centrality, int n_neg, int n_epoch,
                                 std::uint64_t seed, bool enabled) {
  const auto sched = build_schedule(n_epoch, n_neg);
  CurriculumState st;
  st.n_neg = n_neg;
  st.n_epoch = n_epoch;
  st.n_step = sched.n_step;
  st.enabled = enabled;
  st.anchors = ds.overlap;
  st.pools.reserve(ds.overlap.size());
  for (const auto& pair : ds.overlap) {
    SplitMix64 rng(derive_seed(seed, 0x706f6f6c, pair.source_user));
    const auto slots = sample_inter_negative_pool(ds.target, pair.target_user, n_neg, rng);
    const double anchor_score = source_centrality[pair.source_user];
    std::vector<RankedNegative> pool;
    pool.reserve(slots.size());
    for (auto s : slots) pool.push_back({s, pair_difficulty(anchor_score, target_centrality[s])});
    st.pools.push_back(order_easiest_first(std::move(pool)));
  }
  return st;
}

int active_count(const CurriculumState& state, int epoch) {
  if (epoch < 0 || epoch >= state.n_epoch)
    throw std::out_of_range("active_count: epoch " + std::to_string(epoch) + " outside [0, " +
                            std::to_string(state.n_epoch) + ")");
  if (!state.enabled) return state.n_neg;
  return std::min(state.n_neg, state.n_neg / 2 + epoch / state.n_step);
}

void write_pools(const std::filesystem::path& path, const CurriculumState& state,
                 const DomainGraph& target) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "anchor\trank\tnode\tdifficulty\n";
  char buf[32];
  for (std::size_t a = 0; a < state.anchors.size(); ++a) {
    for (std::size_t r = 0; r < state.pools[a].size(); ++r) {
      const auto& neg = state.pools[a][r];
      const auto node = target.node_at(neg.slot);
      std::snprintf(buf, sizeof buf, "%.9g", neg.difficulty);
      out << state.anchors[a].source_user << '\t' << r << '\t' << node_label(node.kind, node.index)
          << '\t' << buf << '\n';
    }
  }
}

}  // namespace sccdr
