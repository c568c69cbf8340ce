#include "sccdr/synthdata.hpp"

#include <algorithm>
#include <fstream>

namespace sccdr {

void validate(const SynthConfig& cfg) {
  if (cfg.clusters < 1) throw ConfigError("synth: clusters must be >= 1");
  if (cfg.users_source < 1 || cfg.users_target < 1) throw ConfigError("synth: user counts must be >= 1");
  if (cfg.items_source < cfg.clusters || cfg.items_target < cfg.clusters)
    throw ConfigError("synth: every cluster needs at least one item per domain");
  if (cfg.overlap < 1 || cfg.overlap > std::min(cfg.users_source, cfg.users_target))
    throw ConfigError("synth: overlap must be in [1, min(user counts)]");
  if (cfg.degree_source < 1 || cfg.degree_target < 1) throw ConfigError("synth: degrees must be >= 1");
  if (cfg.degree_source > cfg.items_source || cfg.degree_target > cfg.items_target)
    throw ConfigError("synth: infeasible degree target (more edges per user than items)");
  if (!(cfg.p_in >= 0 && cfg.p_in <= 1)) throw ConfigError("synth: p_in must be in [0, 1]");
  if (cfg.clusters == 1 && cfg.p_in != 1.0) throw ConfigError("synth: a single cluster requires p_in = 1");
  if (!(cfg.p_in > cfg.p_out())) throw ConfigError("synth: p_in must exceed p_out");
}

namespace {

// Draws `degree` distinct items for a user of cluster `c`. Items are
// assigned to clusters round-robin (item j belongs to cluster j % K).
std::vector<int> draw_items(int c, int degree, int items, int k, double p_in, SplitMix64& rng) {
  std::vector<int> chosen;
  std::vector<char> used(static_cast<std::size_t>(items), 0);
  auto cluster_size = [&](int cl) { return (items - cl + k - 1) / k; };
  std::vector<int> used_in(static_cast<std::size_t>(k), 0);
  while (static_cast<int>(chosen.size()) < degree) {
    int target = c;
    if (k > 1 && rng.uniform() >= p_in) {
      target = static_cast<int>(rng.below(static_cast<std::uint64_t>(k - 1)));
      if (target >= c) ++target;
    }
    if (used_in[static_cast<std::size_t>(target)] == cluster_size(target)) {
      // Category exhausted: take any unused item.
      int j;
      do j = static_cast<int>(rng.below(static_cast<std::uint64_t>(items)));
      while (used[static_cast<std::size_t>(j)]);
      used[static_cast<std::size_t>(j)] = 1;
      ++used_in[static_cast<std::size_t>(j % k)];
      chosen.push_back(j);
      continue;
    }
    int j;
    do j = target + k * static_cast<int>(rng.below(static_cast<std::uint64_t>(cluster_size(target))));
    while (used[static_cast<std::size_t>(j)]);
    used[static_cast<std::size_t>(j)] = 1;
    ++used_in[static_cast<std::size_t>(target)];
    chosen.push_back(j);
  }
  return chosen;
}

void write_pairs(const std::filesystem::path& path, const char* header,
                 const std::vector<std::pair<std::string, std::string>>& rows) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << header << '\n';
  for (const auto& [a, b] : rows) out << a << '\t' << b << '\n';
}

}  // namespace

SynthEdges generate_edges(const SynthConfig& cfg) {
  validate(cfg);
  SplitMix64 rng(derive_seed(cfg.seed, 0x73796e));
  const int k = cfg.clusters;
  const int only_s = cfg.users_source - cfg.overlap;
  const int only_t = cfg.users_target - cfg.overlap;

  struct Person {
    std::string id;
    int cluster;
  };
  auto make = [&](const char* prefix, int n) {
    std::vector<Person> v;
    v.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      v.push_back({prefix + std::to_string(i), static_cast<int>(rng.below(static_cast<std::uint64_t>(k)))});
    return v;
  };
  const auto shared = make("p", cfg.overlap);
  const auto source_only = make("s", only_s);
  const auto target_only = make("t", only_t);

  SynthEdges out;
  auto emit = [&](const std::vector<Person>& people, int degree, int items, const char* item_prefix,
                  std::vector<std::pair<std::string, std::string>>& edges) {
    for (const auto& p : people)
      for (int j : draw_items(p.cluster, degree, items, k, cfg.p_in, rng))
        edges.emplace_back(p.id, item_prefix + std::to_string(j));
  };
  emit(shared, cfg.degree_source, cfg.items_source, "si", out.source);
  emit(source_only, cfg.degree_source, cfg.items_source, "si", out.source);
  emit(shared, cfg.degree_target, cfg.items_target, "ti", out.target);
  emit(target_only, cfg.degree_target, cfg.items_target, "ti", out.target);

  for (const auto& p : shared) out.overlap.emplace_back(p.id, p.id);

  for (const auto* group : {&shared, &source_only})
    for (const auto& p : *group) out.clusters.emplace_back("source:" + p.id, p.cluster);
  for (const auto* group : {&shared, &target_only})
    for (const auto& p : *group) out.clusters.emplace_back("target:" + p.id, p.cluster);
  for (int j = 0; j < cfg.items_source; ++j) out.clusters.emplace_back("source:si" + std::to_string(j), j % k);
  for (int j = 0; j < cfg.items_target; ++j) out.clusters.emplace_back("target:ti" + std::to_string(j), j % k);
  return out;
}

void generate(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  const auto edges = generate_edges(cfg);
  std::filesystem::create_directories(out_dir);
  write_pairs(out_dir / "source.tsv", "user_id\titem_id", edges.source);
  write_pairs(out_dir / "target.tsv", "user_id\titem_id", edges.target);
  write_pairs(out_dir / "overlap.tsv", "source_user_id\ttarget_user_id", edges.overlap);
  {
    std::ofstream out(out_dir / "clusters.tsv", std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write clusters.tsv");
    out << "node\tcluster\n";
    for (const auto& [node, c] : edges.clusters) out << node << '\t' << c << '\n';
  }
  std::ofstream conf(out_dir / "train.conf", std::ios::binary | std::ios::trunc);
  if (!conf) throw DataError("cannot write train.conf");
  conf << "# defaults for this synthetic dataset; picked up by `sccdr train --data`\n"
       << "batch_size = 256\n";
}

}  // namespace sccdr
