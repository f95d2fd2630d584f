#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vdr/embedding.hpp"
#include "vdr/features.hpp"
#include "vdr/lease.hpp"
#include "vdr/rnn.hpp"

namespace vdr {

// Additive attention over region features:
//   score_k = w2 · tanh(W_q·query + W_f·f_k + b),  weights = softmax(scores).
struct AttendParams {
  Tensor w_q;  // [A, query_dim]
  Tensor w_f;  // [A, d_img]
  Tensor b;    // [A]
  Tensor w2;   // [A]

  static AttendParams init(std::size_t attn_dim, std::size_t query_dim, std::size_t d_img,
                           Rng& rng);
};

// Late-fusion encoder: question and concatenated history through their own
// two-layer LSTMs, question-guided attention over regions, then one fused
// projection.
struct LfEncoderParams {
  RnnParams q_rnn;
  RnnParams hist_rnn;
  AttendParams attn;
  Tensor w_fuse;  // [E, 2H + d_img]
  Tensor b_fuse;  // [E]

  static LfEncoderParams init(std::size_t hidden, std::size_t embed_dim, std::size_t d_img,
                              std::size_t attn_dim, Rng& rng);
};

// Memory-network encoder: bidirectional GRUs, per-round history memories
// attended by the question, image attention guided by question + caption.
struct MnEncoderParams {
  RnnParams q_rnn;     // biGRU for the question
  RnnParams hist_rnn;  // biGRU shared by caption and history memories
  Tensor w_mem;        // [2H, 2H] memory projection
  Tensor b_mem;        // [2H]
  Tensor w_gate;       // [2H, 4H] image-query fusion of [q ⊕ c], no bias
  AttendParams attn;   // query width 2H
  Tensor w_fuse;       // [E, 4H + d_img]
  Tensor b_fuse;       // [E]

  static MnEncoderParams init(std::size_t hidden, std::size_t embed_dim, std::size_t d_img,
                              std::size_t attn_dim, Rng& rng);
};

namespace ad {

struct AttendOut {
  Value attended;  // d_img
  Value weights;   // K, sums to 1
};

struct EncodedContext {
  Value vector;                         // E
  Value attn_weights;                   // K
  std::optional<Value> memory_weights;  // per history round (memory network)
};

// Region rows widened to double as non-differentiable leaves.
std::vector<Value> lease_regions(Tape& tape, const ObjectFeatureSet& features);

AttendOut attend_objects(Lease& lease, Value query, std::span<const Value> regions,
                         const AttendParams& params, bool train);

// Embedding lookup then run_rnn. An empty (or all-padding) sequence encodes
// as the single unknown token. The embedding matrix only receives gradients
// when training a model whose embeddings are trainable.
Value encode_tokens(Lease& lease, std::span<const std::uint32_t> ids, const EmbeddingInit& embed,
                    const RnnParams& rnn, bool train);

EncodedContext lf_encode(Lease& lease, std::span<const std::uint32_t> question_ids,
                         std::span<const std::uint32_t> history_concat_ids,
                         const EmbeddingInit& embed, const LfEncoderParams& params,
                         std::span<const Value> regions, bool train);

// history_rounds holds one token sequence (question ⊕ answer) per completed
// round; the caption is passed separately and becomes the first memory slot.
EncodedContext mn_encode(Lease& lease, std::span<const std::uint32_t> question_ids,
                         std::span<const std::uint32_t> caption_ids,
                         const std::vector<std::vector<std::uint32_t>>& history_rounds,
                         const EmbeddingInit& embed, const MnEncoderParams& params,
                         std::span<const Value> regions, bool train);

}  // namespace ad

}  // namespace vdr
