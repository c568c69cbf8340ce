#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sccdr/common.hpp"

namespace sccdr {

enum class Domain : std::uint8_t { Source = 0, Target = 1 };
enum class NodeKind : std::uint8_t { User = 0, Item = 1 };

std::string_view domain_name(Domain d);

struct NodeId {
  Domain domain = Domain::Source;
  NodeKind kind = NodeKind::User;
  std::uint32_t index = 0;

  auto operator<=>(const NodeId&) const = default;
};

// "u:<idx>" / "i:<idx>" as used by the centrality and checkpoint files.
std::string node_label(NodeKind kind, std::uint32_t index);

// One domain's bipartite interaction graph. Nodes are addressed either by
// NodeId or by a dense "slot" over users then items: slot = index for
// users, num_users + index for items. Adjacency lists hold slots, sorted
// and deduplicated.
class DomainGraph {
 public:
  using Edge = std::pair<std::uint32_t, std::uint32_t>;  // (user, item)

  DomainGraph() = default;
  DomainGraph(Domain domain, std::vector<std::string> user_ids, std::vector<std::string> item_ids,
              std::vector<Edge> edges);

  Domain domain() const { return domain_; }
  std::uint32_t num_users() const { return static_cast<std::uint32_t>(user_ids_.size()); }
  std::uint32_t num_items() const { return static_cast<std::uint32_t>(item_ids_.size()); }
  std::uint32_t num_nodes() const { return num_users() + num_items(); }
  std::size_t edge_count() const { return edges_.size(); }

  // Distinct edges in first-appearance order.
  const std::vector<Edge>& edges() const { return edges_; }

  std::span<const std::uint32_t> neighbors(std::uint32_t slot) const { return adj_[slot]; }
  std::span<const std::uint32_t> neighbors(const NodeId& node) const { return adj_[slot_of(node)]; }
  std::size_t degree(std::uint32_t slot) const { return adj_[slot].size(); }
  bool adjacent(std::uint32_t a, std::uint32_t b) const;

  std::uint32_t slot_of(const NodeId& node) const;
  NodeId node_at(std::uint32_t slot) const;
  bool is_user_slot(std::uint32_t slot) const { return slot < num_users(); }
  bool valid(const NodeId& node) const;

  const std::vector<std::string>& user_ids() const { return user_ids_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }
  std::optional<std::uint32_t> find_user(const std::string& raw) const;
  std::optional<std::uint32_t> find_item(const std::string& raw) const;

  // Same id maps, different edge set.
  DomainGraph with_edges(std::vector<Edge> edges) const;

 private:
  Domain domain_ = Domain::Source;
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
  std::unordered_map<std::string, std::uint32_t> user_index_;
  std::unordered_map<std::string, std::uint32_t> item_index_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::uint32_t>> adj_;
};

// Edge TSV: header "user_id\titem_id", then one "<user>\t<item>" per line.
DomainGraph load_edges(const std::filesystem::path& path, Domain domain);
DomainGraph parse_edges(std::istream& in, Domain domain, const std::string& origin = "<stream>");

struct SplitRow {
  std::uint32_t user = 0;  // target user index
  std::uint32_t valid_item = 0;
  std::uint32_t test_item = 0;
};

struct OverlapPair {
  std::uint32_t source_user = 0;
  std::uint32_t target_user = 0;
  auto operator<=>(const OverlapPair&) const = default;
};

struct CrossDomainDataset {
  DomainGraph source;
  DomainGraph target;           // training adjacency (split items removed)
  DomainGraph target_full;      // as loaded
  std::vector<OverlapPair> overlap;  // ascending by source user
  std::vector<SplitRow> splits;      // ascending by target user
};

// Splits the target's last two listed interactions per user (degree >= 3)
// into test and validation. Without an overlap file, users whose raw ids
// occur in both domains are aligned.
CrossDomainDataset build_dataset(DomainGraph source, DomainGraph target,
                                 const std::optional<std::filesystem::path>& overlap_path,
                                 std::uint64_t seed = 0);

struct SamplerConfig {
  std::uint32_t fanout = 10;
  std::uint64_t seed = 0;
};

// Up to `fanout` distinct neighbors in draw order; a pure function of
// (seed, node, epoch, layer).
std::vector<std::uint32_t> sample_neighbors(const DomainGraph& g, std::uint32_t slot,
                                            const SamplerConfig& cfg, std::uint64_t epoch,
                                            std::uint32_t layer);
std::vector<std::uint32_t> sample_neighbors(const DomainGraph& g, const NodeId& node,
                                            const SamplerConfig& cfg, std::uint64_t epoch,
                                            std::uint32_t layer);

// Uniform non-adjacent node of the opposite partition. Throws DataError
// when the node is adjacent to the whole opposite partition.
std::uint32_t sample_non_neighbor(const DomainGraph& g, std::uint32_t slot, SplitMix64& rng);
NodeId sample_non_neighbor(const DomainGraph& g, const NodeId& node, SplitMix64& rng);

}  // namespace sccdr
