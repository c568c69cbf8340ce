#include "sccdr/centrality.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

namespace sccdr {

CentralityTable katz_centrality(const DomainGraph& g, const KatzConfig& cfg) {
  if (g.num_nodes() == 0) throw DataError("katz_centrality: empty graph");
  if (!(cfg.alpha > 0) || !(cfg.tol > 0) || cfg.max_iter < 1)
    throw ConfigError("katz_centrality: need alpha > 0, tol > 0, max_iter >= 1");

  const std::uint32_t n = g.num_nodes();
  std::vector<double> x(n, 0.0), next(n);
  bool converged = false;
  for (int it = 0; it < cfg.max_iter; ++it) {
    double delta = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
      double acc = 0;
      for (auto j : g.neighbors(i)) acc += x[j];
      next[i] = cfg.alpha * acc + cfg.beta;
      delta += std::abs(next[i] - x[i]);
    }
    x.swap(next);
    if (!std::isfinite(delta))
      throw NumericError("katz_centrality: iteration diverged (alpha too large for this graph)");
    if (delta < cfg.tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NumericError("katz_centrality: no convergence within " + std::to_string(cfg.max_iter) +
                       " iterations (alpha must stay below 1/lambda_max)");

  if (cfg.normalize) {
    double norm = 0;
    for (double v : x) norm += v * v;
    norm = std::sqrt(norm);
    if (norm > 0)
      for (double& v : x) v /= norm;
  }
  return {g.domain(), g.num_users(), std::move(x)};
}

double spectral_radius(const DomainGraph& g, int max_iter, double tol) {
  const std::uint32_t n = g.num_nodes();
  if (n == 0 || g.edge_count() == 0) return 0.0;
  std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n))), y(n), z(n);
  double lambda_sq = 0;
  for (int it = 0; it < max_iter; ++it) {
    for (std::uint32_t i = 0; i < n; ++i) {
      double acc = 0;
      for (auto j : g.neighbors(i)) acc += x[j];
      y[i] = acc;
    }
    double norm = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
      double acc = 0;
      for (auto j : g.neighbors(i)) acc += y[j];
      z[i] = acc;
      norm += acc * acc;
    }
    norm = std::sqrt(norm);
    if (norm == 0) return 0.0;
    for (std::uint32_t i = 0; i < n; ++i) x[i] = z[i] / norm;
    const double prev = lambda_sq;
    lambda_sq = norm;  // ||A^2 x|| with ||x|| = 1 from the previous step
    if (it > 0 && std::abs(lambda_sq - prev) <= tol * lambda_sq) break;
  }
  return std::sqrt(lambda_sq);
}

void write_centrality(const std::filesystem::path& path, const CentralityTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << "node\tscore\n";
  char buf[64];
  for (std::uint32_t s = 0; s < table.scores.size(); ++s) {
    const bool user = s < table.num_users;
    std::snprintf(buf, sizeof buf, "%.9g", table.scores[s]);
    out << node_label(user ? NodeKind::User : NodeKind::Item, user ? s : s - table.num_users) << '\t'
        << buf << '\n';
  }
}

CentralityTable read_centrality(const std::filesystem::path& path, const DomainGraph& g) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open centrality file " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "node\tscore")
    throw DataError(path.string() + ":1: expected header 'node<TAB>score'");
  CentralityTable table{g.domain(), g.num_users(), std::vector<double>(g.num_nodes(), 0.0)};
  std::vector<bool> seen(g.num_nodes(), false);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    const auto where = path.string() + ":" + std::to_string(line_no);
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab < 3 || line[1] != ':')
      throw DataError(where + ": malformed centrality line");
    const bool user = line[0] == 'u';
    if (!user && line[0] != 'i') throw DataError(where + ": bad node label");
    std::uint32_t idx = 0;
    double score = 0;
    try {
      idx = static_cast<std::uint32_t>(std::stoul(line.substr(2, tab - 2)));
      score = std::stod(line.substr(tab + 1));
    } catch (const std::exception&) {
      throw DataError(where + ": malformed centrality line");
    }
    const NodeId node{g.domain(), user ? NodeKind::User : NodeKind::Item, idx};
    if (!g.valid(node)) throw DataError(where + ": node out of range");
    const auto slot = g.slot_of(node);
    table.scores[slot] = score;
    seen[slot] = true;
  }
  for (bool s : seen)
    if (!s) throw DataError(path.string() + ": centrality file does not cover every node");
  return table;
}

}  // namespace sccdr
