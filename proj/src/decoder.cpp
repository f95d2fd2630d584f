#include "vdr/decoder.hpp"

#include <cmath>

#include "vdr/encoder.hpp"

namespace vdr {

namespace {

Tensor uniform_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t = Tensor::matrix(rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

Tensor uniform_vector(std::size_t n, double bound, Rng& rng) {
  Tensor t = Tensor::vector(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

std::string to_string(DecoderVariant v) {
  switch (v) {
    case DecoderVariant::dot: return "dot";
    case DecoderVariant::gated: return "gated";
    case DecoderVariant::gated_scalar: return "gated_scalar";
  }
  fail("shape", "unknown decoder variant value");
}

DecoderVariant decoder_variant_from_string(const std::string& s) {
  if (s == "dot") return DecoderVariant::dot;
  if (s == "gated") return DecoderVariant::gated;
  if (s == "gated_scalar") return DecoderVariant::gated_scalar;
  fail("decoder-variant:" + s, "expected dot, gated, or gated_scalar");
}

DecoderParams DecoderParams::init(DecoderVariant variant, const RnnConfig& cand_cfg,
                                  std::size_t embed_dim, std::size_t e_dim, std::size_t gate_dim,
                                  Rng& rng) {
  DecoderParams p;
  p.variant = variant;
  p.cand_rnn = RnnParams::init(cand_cfg, embed_dim, rng);
  p.w_proj = uniform_matrix(e_dim, p.cand_rnn.output_dim(), rng);
  p.b_proj = Tensor::vector(e_dim);
  if (variant == DecoderVariant::gated) {
    require(gate_dim > 0, "shape", "gated decoder needs a positive gate width");
    p.gated.w_g = uniform_matrix(gate_dim, e_dim, rng);
    p.gated.b_g = Tensor::vector(gate_dim);
    p.gated.w_s = uniform_matrix(gate_dim, e_dim, rng);
    p.gated.b_s = Tensor::vector(gate_dim);
    p.gated.w = uniform_vector(gate_dim, 1.0 / std::sqrt(static_cast<double>(gate_dim)), rng);
    p.gated.b = Tensor::vector(1);
  } else if (variant == DecoderVariant::gated_scalar) {
    // Started at the identity-like point so the tanh has signal to learn from.
    p.gated_scalar.a = Tensor::scalar(1.0);
    p.gated_scalar.b = Tensor::scalar(0.0);
    p.gated_scalar.w = Tensor::scalar(1.0);
  }
  return p;
}

namespace ad {

std::vector<Value> encode_candidates(Lease& lease,
                                     const std::vector<std::vector<std::uint32_t>>& candidates,
                                     const EmbeddingInit& embed, const DecoderParams& params,
                                     bool train) {
  require(!candidates.empty(), "candidate-count", "no candidates to score");
  Tape& t = lease.tape();
  Value w_proj = lease.of(params.w_proj, train);
  Value b_proj = lease.of(params.b_proj, train);
  std::vector<Value> out;
  out.reserve(candidates.size());
  for (const auto& ids : candidates) {
    Value enc = encode_tokens(lease, ids, embed, params.cand_rnn, train);
    out.push_back(t.add(t.matvec(w_proj, enc), b_proj));
  }
  return out;
}

namespace {

RoundScores finish(Tape& t, std::span<const Value> logit_scalars) {
  Value logits = t.concat(logit_scalars);
  return {logits, t.log_softmax(logits)};
}

}  // namespace

RoundScores score_dot(Lease& lease, Value context, std::span<const Value> candidates) {
  require(!candidates.empty(), "candidate-count", "no candidates to score");
  Tape& t = lease.tape();
  std::vector<Value> logits;
  logits.reserve(candidates.size());
  for (Value cand : candidates) logits.push_back(t.dot(context, cand));
  return finish(t, logits);
}

RoundScores score_gated(Lease& lease, Value context, std::span<const Value> candidates,
                        const GatedScoreParams& params, bool train) {
  require(!candidates.empty(), "candidate-count", "no candidates to score");
  Tape& t = lease.tape();
  Value w_g = lease.of(params.w_g, train);
  Value b_g = lease.of(params.b_g, train);
  Value w_s = lease.of(params.w_s, train);
  Value b_s = lease.of(params.b_s, train);
  Value w = lease.of(params.w, train);
  Value b = lease.of(params.b, train);
  std::vector<Value> logits;
  logits.reserve(candidates.size());
  for (Value cand : candidates) {
    Value p = t.mul(context, cand);
    Value carrier = t.tanh(t.add(t.matvec(w_g, p), b_g));
    Value gate = t.sigmoid(t.add(t.matvec(w_s, p), b_s));
    logits.push_back(t.add(t.dot(w, t.mul(carrier, gate)), b));
  }
  return finish(t, logits);
}

RoundScores score_gated_scalar(Lease& lease, Value context, std::span<const Value> candidates,
                               const GatedScalarScoreParams& params, bool train) {
  require(!candidates.empty(), "candidate-count", "no candidates to score");
  Tape& t = lease.tape();
  Value a = lease.of(params.a, train);
  Value b = lease.of(params.b, train);
  Value w = lease.of(params.w, train);
  std::vector<Value> logits;
  logits.reserve(candidates.size());
  for (Value cand : candidates) {
    Value scaled = t.add(t.mul(a, t.dot(context, cand)), b);
    logits.push_back(t.mul(w, t.tanh(scaled)));
  }
  return finish(t, logits);
}

RoundScores score_candidates(Lease& lease, Value context, std::span<const Value> candidates,
                             const DecoderParams& params, bool train) {
  switch (params.variant) {
    case DecoderVariant::dot: return score_dot(lease, context, candidates);
    case DecoderVariant::gated: return score_gated(lease, context, candidates, params.gated, train);
    case DecoderVariant::gated_scalar:
      return score_gated_scalar(lease, context, candidates, params.gated_scalar, train);
  }
  fail("shape", "unknown decoder variant value");
}

Value round_loss(Tape& tape, const RoundScores& scores, std::size_t gt_index) {
  require(gt_index < tape.length(scores.log_probs), "gt-index",
          "ground-truth index outside the candidate list");
  return tape.neg(tape.pick(scores.log_probs, gt_index));
}

}  // namespace ad

}  // namespace vdr
