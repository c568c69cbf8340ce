#pragma once

#include <filesystem>
#include <vector>

#include "sccdr/diffmath.hpp"
#include "sccdr/graphstore.hpp"

namespace sccdr {

// One domain's encoder: ID embeddings plus the two SAGE layer weights.
// Rows of `embedding` are DomainGraph slots (users, then items).
struct EncoderParams {
  Tensor embedding;  // (num_nodes, d0)
  Tensor w1;         // (d0, d1)
  Tensor w2;         // (d1, d2)
  bool jk_include_input = false;

  Eigen::Index output_dim() const {
    return w1.cols() + w2.cols() + (jk_include_input ? embedding.cols() : 0);
  }
};

EncoderParams init_params(std::uint32_t num_nodes, std::uint64_t seed, int d0 = 64, int d1 = 64,
                          int d2 = 64);

// Anchors plus the sampled neighborhoods a two-layer forward pass reads:
// layer2[a] for each anchor, layer1[n] for each node in `hidden`
// (anchors and their layer-2 neighbors).
struct NodeBatch {
  std::vector<std::uint32_t> anchors;
  std::vector<std::vector<std::uint32_t>> layer2;
  std::vector<std::uint32_t> hidden;
  std::vector<std::vector<std::uint32_t>> layer1;
};

// Fanout 0 means "all neighbors" (inference).
NodeBatch make_batch(const DomainGraph& g, std::vector<std::uint32_t> anchors,
                     const SamplerConfig& cfg, std::uint64_t epoch);

// Parameters recorded on a tape, so gradients can be taken wrt them.
struct EncoderVars {
  Var embedding;
  Var w1;
  Var w2;
};

EncoderVars record_params(Tape& tape, const EncoderParams& params);

// h0 = lookup; h_l = ReLU((mean of sampled neighbor h_{l-1} + own h_{l-1}) W_l);
// output rows follow batch.anchors, columns concat(h1, h2).
Var encode(const EncoderParams& params, const EncoderVars& vars, const NodeBatch& batch);

// Forward pass for every node of the graph with full neighborhoods.
Tensor encode_all(const EncoderParams& params, const DomainGraph& g);

// Text checkpoint. Values use the shortest decimal form that parses back
// to the same double, so save -> load is exact.
void save_encoder(const std::filesystem::path& path, const EncoderParams& params,
                  const DomainGraph& g);
EncoderParams load_encoder(const std::filesystem::path& path, const DomainGraph& g);

}  // namespace sccdr
