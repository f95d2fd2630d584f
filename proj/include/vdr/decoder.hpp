#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "vdr/embedding.hpp"
#include "vdr/lease.hpp"
#include "vdr/rnn.hpp"

namespace vdr {

// How a context vector and a candidate-answer vector turn into a logit.
//   dot:          ctx · cand
//   gated:        w · (tanh(W_g p + b_g) ⊙ σ(W_s p + b_s)) + b, p = ctx ⊙ cand
//   gated_scalar: w · tanh(a · (ctx · cand) + b)
enum class DecoderVariant { dot, gated, gated_scalar };

std::string to_string(DecoderVariant v);
DecoderVariant decoder_variant_from_string(const std::string& s);

struct GatedScoreParams {
  Tensor w_g;  // [G, E]
  Tensor b_g;  // [G]
  Tensor w_s;  // [G, E]
  Tensor b_s;  // [G]
  Tensor w;    // [G]
  Tensor b;    // [1]
};

struct GatedScalarScoreParams {
  Tensor a;  // [1]
  Tensor b;  // [1]
  Tensor w;  // [1]
};

struct DecoderParams {
  DecoderVariant variant = DecoderVariant::dot;
  RnnParams cand_rnn;
  Tensor w_proj;  // [E, cand_rnn.output_dim()]
  Tensor b_proj;  // [E]
  GatedScoreParams gated;
  GatedScalarScoreParams gated_scalar;

  static DecoderParams init(DecoderVariant variant, const RnnConfig& cand_cfg,
                            std::size_t embed_dim, std::size_t e_dim, std::size_t gate_dim,
                            Rng& rng);
};

namespace ad {

struct RoundScores {
  Value logits;     // N_cand
  Value log_probs;  // log_softmax(logits)
};

// One E-dim vector per candidate answer: token RNN then affine projection.
std::vector<Value> encode_candidates(Lease& lease,
                                     const std::vector<std::vector<std::uint32_t>>& candidates,
                                     const EmbeddingInit& embed, const DecoderParams& params,
                                     bool train);

RoundScores score_dot(Lease& lease, Value context, std::span<const Value> candidates);
RoundScores score_gated(Lease& lease, Value context, std::span<const Value> candidates,
                        const GatedScoreParams& params, bool train);
RoundScores score_gated_scalar(Lease& lease, Value context, std::span<const Value> candidates,
                               const GatedScalarScoreParams& params, bool train);
RoundScores score_candidates(Lease& lease, Value context, std::span<const Value> candidates,
                             const DecoderParams& params, bool train);

// Cross-entropy on the ground-truth candidate: −log_probs[gt].
Value round_loss(Tape& tape, const RoundScores& scores, std::size_t gt_index);

}  // namespace ad

}  // namespace vdr
