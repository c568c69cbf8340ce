#include "sccdr/losses.hpp"

#include <algorithm>
#include <stdexcept>

namespace sccdr {

void validate(const LossConfig& cfg) {
  if (!(cfg.tau > 0)) throw ConfigError("tau must be > 0");
  if (cfg.n_pos_intra < 1) throw ConfigError("n_pos_intra must be >= 1");
  if (cfg.n_neg_intra < 1) throw ConfigError("n_neg_intra must be >= 1");
  if (cfg.n_neg_inter < 2 || cfg.n_neg_inter % 2 != 0)
    throw ConfigError("n_neg_inter must be even and >= 2");
  if (cfg.lambda_intra < 0 || cfg.lambda_inter < 0) throw ConfigError("loss weights must be >= 0");
}

Var intra_bce_loss(Var embeddings, const IntraTerms& terms) {
  if (terms.positives.size() != terms.anchor.size() || terms.negatives.size() != terms.anchor.size())
    throw std::invalid_argument("intra_bce_loss: ragged terms");
  std::vector<int> pos_a, pos_b, neg_a, neg_b;
  std::vector<double> pos_w, neg_w;
  double total = 0;
  for (std::size_t i = 0; i < terms.anchor.size(); ++i) {
    const auto p = terms.positives[i].size(), q = terms.negatives[i].size();
    if (p == 0 || q == 0) continue;
    total += static_cast<double>(p * q);
    for (int r : terms.positives[i]) {
      pos_a.push_back(terms.anchor[i]);
      pos_b.push_back(r);
      pos_w.push_back(static_cast<double>(q));
    }
    for (int r : terms.negatives[i]) {
      neg_a.push_back(terms.anchor[i]);
      neg_b.push_back(r);
      neg_w.push_back(static_cast<double>(p));
    }
  }
  if (total == 0) return {};

  auto weights = [total](const std::vector<double>& w) {
    Tensor t(static_cast<Eigen::Index>(w.size()), 1);
    for (std::size_t k = 0; k < w.size(); ++k) t(static_cast<Eigen::Index>(k), 0) = -w[k] / total;
    return t;
  };
  Var pos_scores = row_dot(gather_rows(embeddings, std::move(pos_a)), gather_rows(embeddings, std::move(pos_b)));
  Var neg_scores = row_dot(gather_rows(embeddings, std::move(neg_a)), gather_rows(embeddings, std::move(neg_b)));
  // log(1 - sigmoid(s)) = log sigmoid(-s)
  return add(weighted_sum(log_sigmoid(pos_scores), weights(pos_w)),
             weighted_sum(log_sigmoid(scale(neg_scores, -1.0)), weights(neg_w)));
}

namespace {

void check_terms(const InterTerms& terms, int k_active) {
  const auto n = terms.source_row.size();
  if (terms.target_self.size() != n || terms.positives.size() != n || terms.negatives.size() != n)
    throw std::invalid_argument("inter terms: ragged arrays");
  if (k_active < 1) throw std::invalid_argument("inter loss: k_active must be >= 1");
  for (const auto& pool : terms.negatives)
    if (static_cast<int>(pool.size()) < k_active)
      throw std::invalid_argument("inter loss: k_active exceeds pool size");
}

// (n, k) cosine similarities between each anchor and its first k negatives.
Var negative_sims(Var source, Var target, const InterTerms& terms, int k) {
  const auto n = terms.source_row.size();
  std::vector<int> a, b;
  a.reserve(n * static_cast<std::size_t>(k));
  b.reserve(n * static_cast<std::size_t>(k));
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) {
      a.push_back(terms.source_row[i]);
      b.push_back(terms.negatives[i][static_cast<std::size_t>(j)]);
    }
  Var sims = row_cosine(gather_rows(source, std::move(a)), gather_rows(target, std::move(b)));
  return reshape(sims, static_cast<Eigen::Index>(n), k);
}

// Per-row -log(exp(pos) / denominator) on temperature-scaled logits.
Var infonce_rows(Var pos_logits, Var neg_logits, const LossConfig& cfg) {
  Var lse = cfg.denominator_negatives_only ? row_logsumexp(neg_logits)
                                           : row_logsumexp(concat_cols(pos_logits, neg_logits));
  return sub(lse, pos_logits);
}

}  // namespace

Var inter_user_infonce(Var source, Var target, const InterTerms& terms, int k_active,
                       const LossConfig& cfg) {
  check_terms(terms, k_active);
  if (terms.source_row.empty()) throw std::invalid_argument("inter_user_infonce: no anchors");
  const double inv_tau = 1.0 / cfg.tau;
  Var pos = row_cosine(gather_rows(source, terms.source_row), gather_rows(target, terms.target_self));
  Var neg = negative_sims(source, target, terms, k_active);
  return mean_all(infonce_rows(scale(pos, inv_tau), scale(neg, inv_tau), cfg));
}

Var inter_neighbor_infonce(Var source, Var target, const InterTerms& terms, int k_active,
                           const LossConfig& cfg) {
  check_terms(terms, k_active);
  std::vector<int> anchors;  // positions within terms with at least one positive
  for (std::size_t i = 0; i < terms.positives.size(); ++i)
    if (!terms.positives[i].empty()) anchors.push_back(static_cast<int>(i));
  if (anchors.empty()) return {};

  const double inv_tau = 1.0 / cfg.tau;
  std::vector<int> src_rows, pos_rows, anchor_of_pair;
  std::vector<double> w;
  const double per_anchor = 1.0 / static_cast<double>(anchors.size());
  for (std::size_t k = 0; k < anchors.size(); ++k) {
    const auto i = static_cast<std::size_t>(anchors[k]);
    const auto& ps = terms.positives[i];
    for (int p : ps) {
      src_rows.push_back(terms.source_row[i]);
      pos_rows.push_back(p);
      anchor_of_pair.push_back(static_cast<int>(k));
      w.push_back(per_anchor / static_cast<double>(ps.size()));
    }
  }
  InterTerms sub_terms;
  for (int i : anchors) {
    sub_terms.source_row.push_back(terms.source_row[static_cast<std::size_t>(i)]);
    sub_terms.target_self.push_back(terms.target_self[static_cast<std::size_t>(i)]);
    sub_terms.positives.emplace_back();
    sub_terms.negatives.push_back(terms.negatives[static_cast<std::size_t>(i)]);
  }
  Var neg = scale(negative_sims(source, target, sub_terms, k_active), inv_tau);
  Var pos = scale(row_cosine(gather_rows(source, std::move(src_rows)),
                             gather_rows(target, std::move(pos_rows))),
                  inv_tau);
  Var rows = infonce_rows(pos, gather_rows(neg, std::move(anchor_of_pair)), cfg);
  Tensor weights(static_cast<Eigen::Index>(w.size()), 1);
  for (std::size_t k = 0; k < w.size(); ++k) weights(static_cast<Eigen::Index>(k), 0) = w[k];
  return weighted_sum(rows, std::move(weights));
}

std::vector<std::uint32_t> sample_inter_negative_pool(const DomainGraph& target,
                                                      std::uint32_t target_user, int n_neg,
                                                      SplitMix64& rng) {
  if (target_user >= target.num_users()) throw DataError("negative pool: anchor is not a target user");
  if (n_neg < 1) throw ConfigError("negative pool: n_neg must be >= 1");
  const auto excluded = target.neighbors(target_user);
  auto is_excluded = [&](std::uint32_t s) {
    return s == target_user || std::binary_search(excluded.begin(), excluded.end(), s);
  };
  const std::size_t n = target.num_nodes();
  const std::size_t eligible = n - 1 - excluded.size();
  const auto want = static_cast<std::size_t>(n_neg);
  if (eligible < want)
    throw DataError("negative pool: target domain has only " + std::to_string(eligible) +
                    " eligible nodes, need " + std::to_string(n_neg));

  std::vector<std::uint32_t> pool;
  pool.reserve(want);
  if (eligible <= 2 * want) {
    std::vector<std::uint32_t> cands;
    cands.reserve(eligible);
    for (std::uint32_t s = 0; s < n; ++s)
      if (!is_excluded(s)) cands.push_back(s);
    for (std::size_t i = 0; i < want; ++i) {
      auto j = i + rng.below(cands.size() - i);
      std::swap(cands[i], cands[j]);
      pool.push_back(cands[i]);
    }
    return pool;
  }
  while (pool.size() < want) {
    auto s = static_cast<std::uint32_t>(rng.below(n));
    if (is_excluded(s) || std::find(pool.begin(), pool.end(), s) != pool.end()) continue;
    pool.push_back(s);
  }
  return pool;
}

}  // namespace sccdr
