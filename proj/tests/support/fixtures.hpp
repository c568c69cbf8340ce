#pragma once

#include <cmath>
#include <Eigen/LU>
#include <functional>
#include <string>
#include <vector>

#include "sccdr/centrality.hpp"
#include "sccdr/encoder.hpp"
#include "sccdr/graphstore.hpp"
#include "sccdr/losses.hpp"
#include "sccdr/synthdata.hpp"

namespace sccdr::testing {

inline std::vector<std::string> ids(const char* prefix, std::uint32_t n) {
  std::vector<std::string> v;
  for (std::uint32_t i = 0; i < n; ++i) v.push_back(prefix + std::to_string(i));
  return v;
}

inline DomainGraph make_graph(Domain d, std::uint32_t users, std::uint32_t items,
                              std::vector<DomainGraph::Edge> edges) {
  return DomainGraph(d, ids("u", users), ids("i", items), std::move(edges));
}

// Every user gets at least one item; other pairs appear with probability p.
inline DomainGraph random_graph(Domain d, std::uint32_t users, std::uint32_t items, double p,
                                SplitMix64& rng) {
  std::vector<DomainGraph::Edge> edges;
  for (std::uint32_t u = 0; u < users; ++u) {
    const auto forced = static_cast<std::uint32_t>(rng.below(items));
    for (std::uint32_t i = 0; i < items; ++i)
      if (i == forced || rng.uniform() < p) edges.emplace_back(u, i);
  }
  return make_graph(d, users, items, std::move(edges));
}

// Dense adjacency over slots.
inline Eigen::MatrixXd adjacency(const DomainGraph& g) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(g.num_nodes(), g.num_nodes());
  for (std::uint32_t s = 0; s < g.num_nodes(); ++s)
    for (auto t : g.neighbors(s)) a(s, t) = 1.0;
  return a;
}

// Unnormalized Katz by direct solve of (I - alpha A) x = beta 1.
inline Eigen::VectorXd katz_direct(const DomainGraph& g, double alpha, double beta) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - alpha * adjacency(g);
  return m.partialPivLu().solve(Eigen::VectorXd::Constant(n, beta));
}

// A few hundred nodes; fast enough for end-to-end tests.
inline SynthConfig small_synth(std::uint64_t seed) {
  SynthConfig c;
  c.clusters = 4;
  c.users_source = 120;
  c.users_target = 120;
  c.overlap = 40;
  c.items_source = 60;
  c.items_target = 40;
  c.degree_source = 6;
  c.degree_target = 4;
  c.seed = seed;
  return c;
}

// Elementwise check of `grad` for `param` under `f` against Richardson-
// extrapolated central differences (steps h and h/2).
// Returns the worst |g - fd| / max(|g|, |fd|, floor).
inline double fd_worst(Tensor& param, const Tensor& grad, const std::function<double()>& f,
                       double h = 1e-5, double floor = 1e-6) {
  double worst = 0;
  for (Eigen::Index r = 0; r < param.rows(); ++r)
    for (Eigen::Index c = 0; c < param.cols(); ++c) {
      const double keep = param(r, c);
      auto central = [&](double step) {
        param(r, c) = keep + step;
        const double up = f();
        param(r, c) = keep - step;
        const double down = f();
        param(r, c) = keep;
        return (up - down) / (2 * step);
      };
      const double fd = (4 * central(h / 2) - central(h)) / 3;
      const double g = grad(r, c);
      const double denom = std::max({std::abs(g), std::abs(fd), floor});
      worst = std::max(worst, std::abs(g - fd) / denom);
    }
  return worst;
}

}  // namespace sccdr::testing
