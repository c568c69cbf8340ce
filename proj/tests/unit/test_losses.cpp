#include <cmath>
#include <set>

#include "../support/fixtures.hpp"
#include "doctest.h"

using namespace sccdr;
using namespace sccdr::testing;

namespace {

Tensor rows(std::initializer_list<std::initializer_list<double>> r) {
  Tensor t(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& row : r) {
    Eigen::Index j = 0;
    for (double v : row) t(i, j++) = v;
    ++i;
  }
  return t;
}

InterTerms one_anchor(std::vector<int> positives, std::vector<int> negatives) {
  InterTerms t;
  t.source_row = {0};
  t.target_self = {0};
  t.positives.push_back(std::move(positives));
  t.negatives.push_back(std::move(negatives));
  return t;
}

IntraTerms one_triple() { return {{0}, {{1}}, {{2}}}; }

// Unit vectors at the given cosines to (1, 0).
Tensor unit_rows(std::vector<double> cosines) {
  Tensor t(static_cast<Eigen::Index>(cosines.size()), 2);
  for (std::size_t i = 0; i < cosines.size(); ++i) {
    t(static_cast<Eigen::Index>(i), 0) = cosines[i];
    t(static_cast<Eigen::Index>(i), 1) = std::sqrt(1 - cosines[i] * cosines[i]);
  }
  return t;
}

double user_loss(const std::vector<double>& cosines, int k, const LossConfig& cfg) {
  Tape tape;
  auto s = tape.constant(rows({{1, 0}}));
  auto t = tape.constant(unit_rows(cosines));  // row 0 = self
  std::vector<int> neg;
  for (int i = 1; i < static_cast<int>(cosines.size()); ++i) neg.push_back(i);
  return inter_user_infonce(s, t, one_anchor({}, neg), k, cfg).scalar();
}

}  // namespace

TEST_CASE("intra BCE examples") {
  Tape tape;
  CHECK(intra_bce_loss(tape.constant(Tensor::Zero(3, 2)), one_triple()).scalar() == doctest::Approx(1.386294).epsilon(1e-6));
  CHECK(intra_bce_loss(tape.constant(rows({{1, 0}, {1, 0}, {0, 1}})), one_triple()).scalar() ==
        doctest::Approx(1.006409).epsilon(1e-6));
  const double big = intra_bce_loss(tape.constant(rows({{30, 0}, {30, 0}, {-30, 0}})), one_triple()).scalar();
  CHECK(big < 1e-12);
  CHECK(big >= 0);
}

TEST_CASE("intra BCE skips anchors without positives") {
  Tape tape;
  auto e = tape.constant(Tensor::Zero(3, 2));
  IntraTerms none{{0}, {{}}, {{2}}};
  CHECK(intra_bce_loss(e, none).id < 0);
  IntraTerms mixed{{0, 1}, {{}, {2}}, {{2}, {0}}};
  CHECK(intra_bce_loss(e, mixed).scalar() == doctest::Approx(2 * std::log(2.0)));
}

TEST_CASE("user InfoNCE examples") {
  LossConfig cfg;
  CHECK(user_loss({1, 1, 1, 1}, 3, cfg) == doctest::Approx(std::log(4.0)).epsilon(1e-6));
  CHECK(user_loss({1, 0, 0, 0}, 3, cfg) == doctest::Approx(0.340753).epsilon(1e-6));
  CHECK(user_loss({1, 0, 0, 0}, 3, cfg) == doctest::Approx(std::log((std::exp(2.0) + 3) / std::exp(2.0))));
  LossConfig hot = cfg;
  hot.tau = 1e6;
  CHECK(user_loss({0.9, -0.3, 0.4, 0.1}, 3, hot) == doctest::Approx(std::log(4.0)).epsilon(1e-5));
}

TEST_CASE("neighbor InfoNCE examples") {
  LossConfig cfg;
  Tape tape;
  auto s = tape.constant(rows({{1, 0}}));
  auto t = tape.constant(Tensor::Constant(9, 2, 1.0));
  CHECK(inter_neighbor_infonce(s, t, one_anchor({1}, {2, 3, 4, 5, 6, 7, 8}), 7, cfg).scalar() ==
        doctest::Approx(std::log(8.0)).epsilon(1e-6));
  const double one = inter_neighbor_infonce(s, t, one_anchor({1}, {3, 4}), 2, cfg).scalar();
  const double two = inter_neighbor_infonce(s, t, one_anchor({1, 2}, {3, 4}), 2, cfg).scalar();
  CHECK(one == doctest::Approx(two));

  auto geo = tape.constant(unit_rows({0.0, 0.8, 0.1, -0.2}));
  const double got = inter_neighbor_infonce(s, geo, one_anchor({1}, {2, 3}), 2, cfg).scalar();
  const double oracle = -std::log(std::exp(1.6) / (std::exp(1.6) + std::exp(0.2) + std::exp(-0.4)));
  CHECK(got == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(got == doctest::Approx(0.323483).epsilon(1e-6));
  CHECK(inter_neighbor_infonce(s, geo, one_anchor({}, {2, 3}), 2, cfg).id < 0);
}

TEST_CASE("negatives-only denominator") {
  LossConfig cfg;
  cfg.denominator_negatives_only = true;
  CHECK(user_loss({1, 1, 1, 1}, 3, cfg) == doctest::Approx(std::log(3.0)));
}

TEST_CASE("losses are non-negative and cosine losses are scale invariant") {
  SplitMix64 rng(12);
  LossConfig cfg;
  for (int trial = 0; trial < 20; ++trial) {
    Tensor s(2, 3), t(8, 3);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.uniform() * 2 - 1;
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform() * 2 - 1;
    InterTerms terms;
    terms.source_row = {0, 1};
    terms.target_self = {0, 1};
    terms.positives = {{2, 3}, {4}};
    terms.negatives = {{4, 5, 6, 7}, {2, 5, 6, 7}};
    Tape tape;
    auto vs = tape.constant(s), vt = tape.constant(t);
    const double lu = inter_user_infonce(vs, vt, terms, 4, cfg).scalar();
    const double ln = inter_neighbor_infonce(vs, vt, terms, 4, cfg).scalar();
    CHECK(lu >= 0);
    CHECK(ln >= 0);
    auto vs3 = tape.constant(s * 3.0), vt3 = tape.constant(t * 3.0);
    CHECK(inter_user_infonce(vs3, vt3, terms, 4, cfg).scalar() == doctest::Approx(lu).epsilon(1e-12));
    CHECK(inter_neighbor_infonce(vs3, vt3, terms, 4, cfg).scalar() == doctest::Approx(ln).epsilon(1e-12));

    IntraTerms intra{{0, 1}, {{2}, {3}}, {{4, 5}, {6}}};
    const double b = intra_bce_loss(vt, intra).scalar();
    CHECK(b >= 0);
    CHECK(intra_bce_loss(vt3, intra).scalar() != doctest::Approx(b));
  }
}

TEST_CASE("InfoNCE decreases in the positive and increases in each negative") {
  LossConfig cfg;
  double prev = 1e9;
  for (double pos : {-0.5, 0.0, 0.3, 0.7, 0.99}) {
    const double l = user_loss({pos, 0.2, -0.1, 0.4}, 3, cfg);
    CHECK(l < prev);
    prev = l;
  }
  prev = -1;
  for (double neg : {-0.9, -0.2, 0.3, 0.8}) {
    const double l = user_loss({0.5, 0.2, neg, 0.4}, 3, cfg);
    CHECK(l > prev);
    prev = l;
  }
}

TEST_CASE("negative pools exclude the anchor and its neighbors") {
  SplitMix64 rng(13);
  auto g = random_graph(Domain::Target, 10, 15, 0.3, rng);
  for (std::uint32_t u = 0; u < 10; ++u) {
    auto pool = sample_inter_negative_pool(g, u, 6, rng);
    CHECK(pool.size() == 6);
    CHECK(std::set<std::uint32_t>(pool.begin(), pool.end()).size() == 6);
    for (auto s : pool) {
      CHECK(s != u);
      CHECK_FALSE(g.adjacent(u, s));
    }
  }
}

TEST_CASE("negative pool forced and too-small cases") {
  auto g = make_graph(Domain::Target, 3, 3, {{0, 0}, {0, 1}});
  // eligible: users 1, 2 and item 2 (slot 5)
  SplitMix64 rng(1);
  auto pool = sample_inter_negative_pool(g, 0, 3, rng);
  CHECK(std::set<std::uint32_t>(pool.begin(), pool.end()) == std::set<std::uint32_t>{1, 2, 5});
  CHECK_THROWS_AS(sample_inter_negative_pool(g, 0, 4, rng), DataError);
}

TEST_CASE("negative pool inclusion is uniform") {
  SplitMix64 rng(14);
  auto g = random_graph(Domain::Target, 40, 60, 0.05, rng);
  const std::uint32_t anchor = 0;
  std::vector<int> counts(g.num_nodes(), 0);
  const int pools = 10000, n_neg = 10;
  for (int i = 0; i < pools; ++i)
    for (auto s : sample_inter_negative_pool(g, anchor, n_neg, rng)) ++counts[s];
  const double eligible = static_cast<double>(g.num_nodes() - 1 - g.degree(anchor));
  const double p = n_neg / eligible, mean = pools * p, sigma = std::sqrt(pools * p * (1 - p));
  for (std::uint32_t s = 0; s < g.num_nodes(); ++s) {
    if (s == anchor || g.adjacent(anchor, s)) {
      CHECK(counts[s] == 0);
    } else {
      CHECK(std::abs(counts[s] - mean) <= 3.5 * sigma);
    }
  }
}
