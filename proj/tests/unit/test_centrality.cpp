#include "../support/fixtures.hpp"
#include "doctest.h"

using namespace sccdr;
using namespace sccdr::testing;

namespace {

KatzConfig raw() {
  KatzConfig c;
  c.normalize = false;
  c.tol = 1e-13;
  c.max_iter = 10000;
  return c;
}

}  // namespace

TEST_CASE("edgeless graph: every score is beta") {
  auto t = katz_centrality(make_graph(Domain::Source, 3, 2, {}), raw());
  for (double v : t.scores) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("path and star closed forms") {
  auto path = katz_centrality(make_graph(Domain::Source, 2, 1, {{0, 0}, {1, 0}}), raw());
  CHECK(path[0] == doctest::Approx(1.122449).epsilon(1e-6));
  CHECK(path[1] == doctest::Approx(1.122449).epsilon(1e-6));
  CHECK(path[2] == doctest::Approx(1.224490).epsilon(1e-6));

  auto star = katz_centrality(make_graph(Domain::Source, 3, 1, {{0, 0}, {1, 0}, {2, 0}}), raw());
  CHECK(star[3] == doctest::Approx(1.340206).epsilon(1e-6));
  for (int s = 0; s < 3; ++s) CHECK(star[s] == doctest::Approx(1.134021).epsilon(1e-6));
}

TEST_CASE("power iteration agrees with a direct solve") {
  SplitMix64 rng(8);
  for (int t = 0; t < 10; ++t) {
    auto g = random_graph(Domain::Target, 5 + rng.below(10), 5 + rng.below(10), 0.3, rng);
    auto cfg = raw();
    cfg.alpha = 0.5 / spectral_radius(g);
    auto table = katz_centrality(g, cfg);
    auto direct = katz_direct(g, cfg.alpha, cfg.beta);
    for (std::uint32_t s = 0; s < g.num_nodes(); ++s) CHECK(std::abs(table[s] - direct(s)) < 1e-9);
  }
}

TEST_CASE("spectral radius of a star is sqrt(k)") {
  auto g = make_graph(Domain::Source, 4, 1, {{0, 0}, {1, 0}, {2, 0}, {3, 0}});
  CHECK(spectral_radius(g) == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("adding an edge never lowers its endpoints") {
  SplitMix64 rng(4);
  auto g = random_graph(Domain::Source, 8, 8, 0.25, rng);
  auto cfg = raw();
  cfg.alpha = 0.05;
  const auto before = katz_centrality(g, cfg);
  for (std::uint32_t u = 0; u < 8; ++u)
    for (std::uint32_t i = 0; i < 8; ++i) {
      if (g.adjacent(u, 8 + i)) continue;
      auto edges = g.edges();
      edges.emplace_back(u, i);
      auto after = katz_centrality(g.with_edges(edges), cfg);
      CHECK(after[u] >= before[u]);
      CHECK(after[8 + i] >= before[8 + i]);
    }
}

TEST_CASE("relabeling users permutes scores") {
  auto g = make_graph(Domain::Source, 3, 2, {{0, 0}, {1, 0}, {1, 1}, {2, 1}});
  // swap users 0 and 2
  auto h = make_graph(Domain::Source, 3, 2, {{2, 0}, {1, 0}, {1, 1}, {0, 1}});
  auto cfg = raw();
  auto a = katz_centrality(g, cfg), b = katz_centrality(h, cfg);
  CHECK(a[0] == doctest::Approx(b[2]));
  CHECK(a[1] == doctest::Approx(b[1]));
  CHECK(a[2] == doctest::Approx(b[0]));
}

TEST_CASE("normalized output has unit L2 norm") {
  SplitMix64 rng(5);
  auto g = random_graph(Domain::Source, 6, 6, 0.3, rng);
  KatzConfig cfg;
  auto t = katz_centrality(g, cfg);
  double ss = 0;
  for (double v : t.scores) ss += v * v;
  CHECK(ss == doctest::Approx(1.0));
}

TEST_CASE("divergent alpha is a numeric error") {
  auto g = make_graph(Domain::Source, 4, 4, {{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 2}, {3, 3}});
  KatzConfig cfg;
  cfg.alpha = 0.9;
  CHECK_THROWS_AS(katz_centrality(g, cfg), NumericError);
}

TEST_CASE("centrality file round trip") {
  auto g = make_graph(Domain::Target, 2, 1, {{0, 0}, {1, 0}});
  auto t = katz_centrality(g, KatzConfig{});
  const auto path = std::filesystem::temp_directory_path() / "sccdr_centrality_test.tsv";
  write_centrality(path, t);
  auto back = read_centrality(path, g);
  for (std::uint32_t s = 0; s < g.num_nodes(); ++s) CHECK(back[s] == doctest::Approx(t[s]).epsilon(1e-8));
  auto other = make_graph(Domain::Target, 3, 1, {{0, 0}});
  CHECK_THROWS_AS(read_centrality(path, other), DataError);
  std::filesystem::remove(path);
}
