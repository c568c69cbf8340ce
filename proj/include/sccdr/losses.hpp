#pragma once

#include <vector>

#include "sccdr/diffmath.hpp"
#include "sccdr/graphstore.hpp"

namespace sccdr {

struct LossConfig {
  double tau = 0.5;
  int n_pos_intra = 5;
  int n_neg_intra = 5;
  int n_neg_inter = 20;
  double lambda_intra = 1.0;
  double lambda_inter = 0.5;
  // Literal reading of the inter-domain denominators (negatives only).
  bool denominator_negatives_only = false;
};

void validate(const LossConfig& cfg);

// Neighbor-similarity BCE terms for a batch. All indices are rows of the
// embedding matrix handed to intra_bce_loss.
struct IntraTerms {
  std::vector<int> anchor;
  std::vector<std::vector<int>> positives;
  std::vector<std::vector<int>> negatives;
};

// Mean over every (anchor, positive, negative) triple of
// -[log sigmoid(a.p) + log(1 - sigmoid(a.n))]. Anchors without positives
// are skipped; the result is an empty Var (id -1) when none remain.
Var intra_bce_loss(Var embeddings, const IntraTerms& terms);

// Inter-domain terms for a batch of overlapping users. `source_row` indexes
// the source-side embedding matrix; the rest index the target-side one.
// `negatives` is each anchor's ordered pool; the first k_active are used.
struct InterTerms {
  std::vector<int> source_row;
  std::vector<int> target_self;
  std::vector<std::vector<int>> positives;
  std::vector<std::vector<int>> negatives;
};

// Aligned-user InfoNCE with cosine similarity, averaged over anchors.
Var inter_user_infonce(Var source, Var target, const InterTerms& terms, int k_active,
                       const LossConfig& cfg);

// Neighbor InfoNCE: per anchor, mean over its target neighbors; then mean
// over anchors that have neighbors. Empty Var (id -1) if none do.
Var inter_neighbor_infonce(Var source, Var target, const InterTerms& terms, int k_active,
                           const LossConfig& cfg);

// n_neg distinct target slots, uniform over nodes other than the anchor's
// own target user and its training neighbors.
std::vector<std::uint32_t> sample_inter_negative_pool(const DomainGraph& target,
                                                      std::uint32_t target_user, int n_neg,
                                                      SplitMix64& rng);

}  // namespace sccdr
