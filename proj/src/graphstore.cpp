#include "sccdr/graphstore.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace sccdr {

std::string_view domain_name(Domain d) { return d == Domain::Source ? "source" : "target"; }

std::string node_label(NodeKind kind, std::uint32_t index) {
  return (kind == NodeKind::User ? "u:" : "i:") + std::to_string(index);
}

DomainGraph::DomainGraph(Domain domain, std::vector<std::string> user_ids,
                         std::vector<std::string> item_ids, std::vector<Edge> edges)
    : domain_(domain), user_ids_(std::move(user_ids)), item_ids_(std::move(item_ids)) {
  for (std::uint32_t i = 0; i < user_ids_.size(); ++i) user_index_.emplace(user_ids_[i], i);
  for (std::uint32_t i = 0; i < item_ids_.size(); ++i) item_index_.emplace(item_ids_[i], i);

  adj_.assign(num_nodes(), {});
  std::set<Edge> seen;
  edges_.reserve(edges.size());
  for (const auto& e : edges) {
    if (e.first >= num_users() || e.second >= num_items())
      throw DataError("edge references unknown node");
    if (!seen.insert(e).second) continue;
    edges_.push_back(e);
    adj_[e.first].push_back(num_users() + e.second);
    adj_[num_users() + e.second].push_back(e.first);
  }
  for (auto& list : adj_) std::sort(list.begin(), list.end());
}

bool DomainGraph::adjacent(std::uint32_t a, std::uint32_t b) const {
  const auto& list = adj_[a];
  return std::binary_search(list.begin(), list.end(), b);
}

std::uint32_t DomainGraph::slot_of(const NodeId& node) const {
  return node.kind == NodeKind::User ? node.index : num_users() + node.index;
}

NodeId DomainGraph::node_at(std::uint32_t slot) const {
  if (slot < num_users()) return {domain_, NodeKind::User, slot};
  return {domain_, NodeKind::Item, slot - num_users()};
}

bool DomainGraph::valid(const NodeId& node) const {
  if (node.domain != domain_) return false;
  return node.kind == NodeKind::User ? node.index < num_users() : node.index < num_items();
}

std::optional<std::uint32_t> DomainGraph::find_user(const std::string& raw) const {
  auto it = user_index_.find(raw);
  if (it == user_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::uint32_t> DomainGraph::find_item(const std::string& raw) const {
  auto it = item_index_.find(raw);
  if (it == item_index_.end()) return std::nullopt;
  return it->second;
}

DomainGraph DomainGraph::with_edges(std::vector<Edge> edges) const {
  return DomainGraph(domain_, user_ids_, item_ids_, std::move(edges));
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

DomainGraph parse_edges(std::istream& in, Domain domain, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(origin + ": empty file (missing header)");
  if (strip_cr(line) != "user_id\titem_id")
    throw DataError(origin + ":1: expected header 'user_id<TAB>item_id'");

  std::vector<std::string> users, items;
  std::unordered_map<std::string, std::uint32_t> user_index, item_index;
  std::vector<DomainGraph::Edge> edges;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(std::move(line));
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
      throw DataError(origin + ":" + std::to_string(line_no) + ": malformed edge line");
    auto [uit, unew] = user_index.try_emplace(fields[0], static_cast<std::uint32_t>(users.size()));
    if (unew) users.push_back(fields[0]);
    auto [iit, inew] = item_index.try_emplace(fields[1], static_cast<std::uint32_t>(items.size()));
    if (inew) items.push_back(fields[1]);
    edges.emplace_back(uit->second, iit->second);
  }
  return DomainGraph(domain, std::move(users), std::move(items), std::move(edges));
}

DomainGraph load_edges(const std::filesystem::path& path, Domain domain) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open edge file " + path.string());
  return parse_edges(in, domain, path.string());
}

namespace {

std::vector<OverlapPair> read_overlap(const std::filesystem::path& path, const DomainGraph& source,
                                      const DomainGraph& target) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open overlap file " + path.string());
  std::string line;
  if (!std::getline(in, line) || strip_cr(line) != "source_user_id\ttarget_user_id")
    throw DataError(path.string() + ":1: expected header 'source_user_id<TAB>target_user_id'");
  std::vector<OverlapPair> pairs;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(std::move(line));
    if (line.empty()) continue;
    auto fields = split_tabs(line);
    const auto where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() != 2) throw DataError(where + ": malformed overlap line");
    auto s = source.find_user(fields[0]);
    auto t = target.find_user(fields[1]);
    if (!s) throw DataError(where + ": unknown source user '" + fields[0] + "'");
    if (!t) throw DataError(where + ": unknown target user '" + fields[1] + "'");
    pairs.push_back({*s, *t});
  }
  return pairs;
}

}  // namespace

CrossDomainDataset build_dataset(DomainGraph source, DomainGraph target,
                                 const std::optional<std::filesystem::path>& overlap_path,
                                 std::uint64_t /*seed*/) {
  if (source.domain() != Domain::Source || target.domain() != Domain::Target)
    throw DataError("build_dataset: graphs must be (source, target)");

  std::vector<OverlapPair> overlap;
  if (overlap_path) {
    overlap = read_overlap(*overlap_path, source, target);
  } else {
    for (std::uint32_t u = 0; u < source.num_users(); ++u)
      if (auto t = target.find_user(source.user_ids()[u])) overlap.push_back({u, *t});
  }
  std::sort(overlap.begin(), overlap.end());
  {
    std::set<std::uint32_t> seen_s, seen_t;
    for (const auto& p : overlap) {
      if (!seen_s.insert(p.source_user).second || !seen_t.insert(p.target_user).second)
        throw DataError("overlap pairs must be unique in both coordinates");
    }
  }
  if (overlap.empty()) throw DataError("no overlapping users between source and target");

  // Per-user interaction lists in file order.
  std::vector<std::vector<std::uint32_t>> history(target.num_users());
  for (const auto& [u, i] : target.edges()) history[u].push_back(i);

  std::vector<SplitRow> splits;
  std::set<DomainGraph::Edge> held_out;
  for (std::uint32_t u = 0; u < target.num_users(); ++u) {
    const auto& h = history[u];
    if (h.size() < 3) continue;
    SplitRow row{u, h[h.size() - 2], h[h.size() - 1]};
    held_out.insert({u, row.valid_item});
    held_out.insert({u, row.test_item});
    splits.push_back(row);
  }
  std::vector<DomainGraph::Edge> train_edges;
  train_edges.reserve(target.edge_count() - held_out.size());
  for (const auto& e : target.edges())
    if (!held_out.contains(e)) train_edges.push_back(e);

  CrossDomainDataset ds;
  ds.target = target.with_edges(std::move(train_edges));
  ds.target_full = std::move(target);
  ds.source = std::move(source);
  ds.overlap = std::move(overlap);
  ds.splits = std::move(splits);
  return ds;
}

std::vector<std::uint32_t> sample_neighbors(const DomainGraph& g, std::uint32_t slot,
                                            const SamplerConfig& cfg, std::uint64_t epoch,
                                            std::uint32_t layer) {
  auto nbrs = g.neighbors(slot);
  const std::size_t take = std::min<std::size_t>(cfg.fanout, nbrs.size());
  std::vector<std::uint32_t> pool(nbrs.begin(), nbrs.end());
  SplitMix64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(g.domain()), slot, epoch, layer));
  // Partial Fisher-Yates: the first `take` entries are the draws.
  for (std::size_t i = 0; i < take; ++i) {
    auto j = i + rng.below(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(take);
  return pool;
}

std::vector<std::uint32_t> sample_neighbors(const DomainGraph& g, const NodeId& node,
                                            const SamplerConfig& cfg, std::uint64_t epoch,
                                            std::uint32_t layer) {
  if (!g.valid(node)) throw DataError("sample_neighbors: node not in graph");
  return sample_neighbors(g, g.slot_of(node), cfg, epoch, layer);
}

std::uint32_t sample_non_neighbor(const DomainGraph& g, std::uint32_t slot, SplitMix64& rng) {
  const bool user = g.is_user_slot(slot);
  const std::uint32_t base = user ? g.num_users() : 0;
  const std::uint32_t count = user ? g.num_items() : g.num_users();
  const auto degree = g.degree(slot);
  if (degree >= count) throw DataError("sample_non_neighbor: node is adjacent to its whole opposite partition");
  // Rejection sampling; fall back to enumeration when the graph is dense
  // around this node.
  if (degree * 2 <= count) {
    for (;;) {
      auto cand = base + static_cast<std::uint32_t>(rng.below(count));
      if (!g.adjacent(slot, cand)) return cand;
    }
  }
  auto nbrs = g.neighbors(slot);
  auto k = rng.below(count - degree);
  std::size_t n = 0;
  for (std::uint32_t c = base; c < base + count; ++c) {
    while (n < nbrs.size() && nbrs[n] < c) ++n;
    if (n < nbrs.size() && nbrs[n] == c) continue;
    if (k-- == 0) return c;
  }
  throw DataError("sample_non_neighbor: internal enumeration error");
}

NodeId sample_non_neighbor(const DomainGraph& g, const NodeId& node, SplitMix64& rng) {
  if (!g.valid(node)) throw DataError("sample_non_neighbor: node not in graph");
  return g.node_at(sample_non_neighbor(g, g.slot_of(node), rng));
}

}  // namespace sccdr
