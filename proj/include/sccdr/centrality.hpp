#pragma once

#include <filesystem>
#include <vector>

#include "sccdr/graphstore.hpp"

namespace sccdr {

struct KatzConfig {
  double alpha = 0.1;
  double beta = 1.0;
  double tol = 1e-6;  // L1 norm of the iterate delta
  int max_iter = 1000;
  bool normalize = true;
};

// Per-node scores of one domain, indexed by DomainGraph slot.
struct CentralityTable {
  Domain domain = Domain::Source;
  std::uint32_t num_users = 0;
  std::vector<double> scores;

  double operator[](std::uint32_t slot) const { return scores[slot]; }
  double score(const NodeId& node) const {
    return scores[node.kind == NodeKind::User ? node.index : num_users + node.index];
  }
};

// Power iteration of x <- alpha*A*x + beta*1 from x = 0. Throws NumericError
// when the iteration does not settle within max_iter.
CentralityTable katz_centrality(const DomainGraph& g, const KatzConfig& cfg);

// Largest adjacency eigenvalue, via power iteration on A^2 (the bipartite
// spectrum is symmetric, so plain power iteration on A oscillates).
double spectral_radius(const DomainGraph& g, int max_iter = 500, double tol = 1e-10);

// header "node\tscore", node as u:<idx> / i:<idx>, score with 9 significant digits
void write_centrality(const std::filesystem::path& path, const CentralityTable& table);
CentralityTable read_centrality(const std::filesystem::path& path, const DomainGraph& g);

}  // namespace sccdr
