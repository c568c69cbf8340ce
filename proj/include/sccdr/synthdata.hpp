#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sccdr/graphstore.hpp"

namespace sccdr {

struct SynthConfig {
  int clusters = 8;
  int users_source = 2000;
  int users_target = 2000;
  int overlap = 500;
  int items_source = 1000;
  int items_target = 500;
  int degree_source = 20;
  int degree_target = 3;
  double p_in = 0.9;
  std::uint64_t seed = 42;

  // Probability that an edge lands in one particular other cluster.
  double p_out() const { return clusters > 1 ? (1.0 - p_in) / (clusters - 1) : 0.0; }
};

void validate(const SynthConfig& cfg);

struct SynthEdges {
  std::vector<std::pair<std::string, std::string>> source;  // (user, item) in file order
  std::vector<std::pair<std::string, std::string>> target;
  std::vector<std::pair<std::string, std::string>> overlap;  // (source user, target user)
  std::vector<std::pair<std::string, int>> clusters;         // ("<domain>:<raw id>", cluster)
};

SynthEdges generate_edges(const SynthConfig& cfg);

// Writes source.tsv, target.tsv, overlap.tsv, clusters.tsv and a train.conf
// with the desk-scale batch size.
void generate(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace sccdr
