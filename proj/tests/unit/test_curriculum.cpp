#include "../support/fixtures.hpp"
#include "doctest.h"
#include "sccdr/curriculum.hpp"

using namespace sccdr;
using namespace sccdr::testing;

namespace {

CurriculumState state(int n_epoch, int n_neg) {
  CurriculumState s;
  s.n_neg = n_neg;
  s.n_epoch = n_epoch;
  s.n_step = build_schedule(n_epoch, n_neg).n_step;
  return s;
}

}  // namespace

TEST_CASE("pair difficulty and easiest-first order") {
  CHECK(pair_difficulty(0.3, 0.9) == doctest::Approx(1.2));
  auto order = order_easiest_first({{7, pair_difficulty(0.3, 0.5)}, {3, pair_difficulty(0.3, 0.1)},
                                    {9, pair_difficulty(0.3, 0.9)}});
  CHECK(order[0].slot == 9);
  CHECK(order[1].slot == 7);
  CHECK(order[2].slot == 3);
  auto tie = order_easiest_first({{12, 0.4}, {4, 0.4}});
  CHECK(tie[0].slot == 4);
  CHECK(tie[1].slot == 12);
}

TEST_CASE("schedule table") {
  auto a = build_schedule(100, 20);
  CHECK(a.n_step == 10);
  CHECK(a.initial_active == 10);
  auto b = build_schedule(50, 10);
  CHECK(b.n_step == 10);
  CHECK(b.initial_active == 5);
  auto c = build_schedule(100, 2);
  CHECK(c.n_step == 100);
  CHECK(c.initial_active == 1);
  CHECK_THROWS_AS(build_schedule(100, 7), ConfigError);
}

TEST_CASE("active counts") {
  auto s = state(100, 20);
  CHECK(active_count(s, 0) == 10);
  CHECK(active_count(s, 25) == 12);
  CHECK(active_count(s, 95) == 19);
  int prev = 0;
  for (int e = 0; e < 100; ++e) {
    const int k = active_count(s, e);
    CHECK(k >= prev);
    CHECK(k <= 20);
    prev = k;
  }
  auto tiny = state(100, 2);
  for (int e = 0; e < 100; ++e) CHECK(active_count(tiny, e) == 1);
  CHECK_THROWS_AS(active_count(s, 100), std::out_of_range);
  s.enabled = false;
  CHECK(active_count(s, 0) == 20);
}

TEST_CASE("ordering is idempotent and scale invariant") {
  SplitMix64 rng(15);
  std::vector<RankedNegative> pool;
  for (std::uint32_t i = 0; i < 30; ++i) pool.push_back({i, static_cast<double>(rng.below(6))});
  auto once = order_easiest_first(pool);
  auto twice = order_easiest_first(once);
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(once[i].slot == twice[i].slot);
  auto scaled = pool;
  for (auto& p : scaled) p.difficulty *= 3.7;
  auto s = order_easiest_first(scaled);
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(once[i].slot == s[i].slot);
}

TEST_CASE("pools are frozen, ordered and valid") {
  const auto dir = std::filesystem::temp_directory_path() / "sccdr_curriculum_test";
  generate(small_synth(3), dir);
  auto ds = build_dataset(load_edges(dir / "source.tsv", Domain::Source),
                          load_edges(dir / "target.tsv", Domain::Target), dir / "overlap.tsv");
  KatzConfig kc;
  kc.alpha = 0.01;
  auto cs = katz_centrality(ds.source, kc), ct = katz_centrality(ds.target, kc);
  auto a = build_curriculum(ds, cs, ct, 20, 10, 5);
  auto b = build_curriculum(ds, cs, ct, 20, 10, 5);
  REQUIRE(a.anchors.size() == ds.overlap.size());
  for (std::size_t i = 0; i < a.anchors.size(); ++i) {
    const auto& pool = a.pools[i];
    REQUIRE(pool.size() == 20);
    for (std::size_t j = 0; j < pool.size(); ++j) {
      CHECK(pool[j].slot == b.pools[i][j].slot);
      CHECK(pool[j].slot != a.anchors[i].target_user);
      CHECK_FALSE(ds.target.adjacent(a.anchors[i].target_user, pool[j].slot));
      CHECK(pool[j].difficulty == doctest::Approx(cs[a.anchors[i].source_user] + ct[pool[j].slot]));
      if (j) CHECK(pool[j - 1].difficulty >= pool[j].difficulty);
    }
  }
  std::filesystem::remove_all(dir);
}
