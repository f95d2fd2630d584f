#include "vdr/encoder.hpp"

#include <cmath>

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

AttendParams AttendParams::init(std::size_t attn_dim, std::size_t query_dim, std::size_t d_img,
                                Rng& rng) {
  require(attn_dim > 0 && query_dim > 0 && d_img > 0, "shape", "attention dims must be positive");
  AttendParams p;
  p.w_q = uniform_matrix(attn_dim, query_dim, rng);
  p.w_f = uniform_matrix(attn_dim, d_img, rng);
  p.b = Tensor::vector(attn_dim);
  p.w2 = uniform_vector(attn_dim, 1.0 / std::sqrt(static_cast<double>(attn_dim)), rng);
  return p;
}

LfEncoderParams LfEncoderParams::init(std::size_t hidden, std::size_t embed_dim, std::size_t d_img,
                                      std::size_t attn_dim, Rng& rng) {
  LfEncoderParams p;
  RnnConfig cfg{CellKind::lstm, hidden, 2, false};
  p.q_rnn = RnnParams::init(cfg, embed_dim, rng);
  p.hist_rnn = RnnParams::init(cfg, embed_dim, rng);
  p.attn = AttendParams::init(attn_dim, hidden, d_img, rng);
  p.w_fuse = uniform_matrix(hidden, 2 * hidden + d_img, rng);
  p.b_fuse = Tensor::vector(hidden);
  return p;
}

MnEncoderParams MnEncoderParams::init(std::size_t hidden, std::size_t embed_dim, std::size_t d_img,
                                      std::size_t attn_dim, Rng& rng) {
  MnEncoderParams p;
  RnnConfig cfg{CellKind::gru, hidden, 1, true};
  p.q_rnn = RnnParams::init(cfg, embed_dim, rng);
  p.hist_rnn = RnnParams::init(cfg, embed_dim, rng);
  const std::size_t h2 = 2 * hidden;
  p.w_mem = uniform_matrix(h2, h2, rng);
  p.b_mem = Tensor::vector(h2);
  p.w_gate = uniform_matrix(h2, 2 * h2, rng);
  p.attn = AttendParams::init(attn_dim, h2, d_img, rng);
  p.w_fuse = uniform_matrix(hidden, 2 * h2 + d_img, rng);
  p.b_fuse = Tensor::vector(hidden);
  return p;
}

namespace ad {

std::vector<Value> lease_regions(Tape& tape, const ObjectFeatureSet& features) {
  require(features.k > 0, "no-regions", "feature set has no regions");
  std::vector<Value> out;
  out.reserve(features.k);
  std::vector<double> widened(features.d_img);
  for (std::size_t k = 0; k < features.k; ++k) {
    auto region = features.region(k);
    for (std::size_t i = 0; i < widened.size(); ++i) widened[i] = region[i];
    out.push_back(tape.leaf(widened, widened.size(), 0, false));
  }
  return out;
}

AttendOut attend_objects(Lease& lease, Value query, std::span<const Value> regions,
                         const AttendParams& params, bool train) {
  require(!regions.empty(), "no-regions", "attention needs at least one region");
  Tape& t = lease.tape();
  Value wq = lease.of(params.w_q, train);
  Value wf = lease.of(params.w_f, train);
  Value b = lease.of(params.b, train);
  Value w2 = lease.of(params.w2, train);

  Value q_proj = t.matvec(wq, query);
  std::vector<Value> scores;
  scores.reserve(regions.size());
  for (Value region : regions) {
    Value pre = t.add(t.add(q_proj, t.matvec(wf, region)), b);
    scores.push_back(t.dot(w2, t.tanh(pre)));
  }
  Value weights = t.softmax(t.concat(scores));

  std::vector<Value> weighted;
  weighted.reserve(regions.size());
  for (std::size_t k = 0; k < regions.size(); ++k) {
    weighted.push_back(t.smul(t.pick(weights, k), regions[k]));
  }
  return {t.add_n(weighted), weights};
}

Value encode_tokens(Lease& lease, std::span<const std::uint32_t> ids, const EmbeddingInit& embed,
                    const RnnParams& rnn, bool train) {
  Tape& t = lease.tape();
  Value matrix = lease.of(embed.matrix, train && embed.trainable);
  std::vector<Value> inputs;
  inputs.reserve(ids.size());
  for (std::uint32_t id : ids) {
    if (id == Vocabulary::pad_id) continue;
    require(id < embed.matrix.rows(), "shape", "token id outside embedding table");
    inputs.push_back(t.row(matrix, id));
  }
  if (inputs.empty()) inputs.push_back(t.row(matrix, Vocabulary::unk_id));
  return run_rnn(lease, inputs, rnn, train);
}

EncodedContext lf_encode(Lease& lease, std::span<const std::uint32_t> question_ids,
                         std::span<const std::uint32_t> history_concat_ids,
                         const EmbeddingInit& embed, const LfEncoderParams& params,
                         std::span<const Value> regions, bool train) {
  Tape& t = lease.tape();
  Value q = encode_tokens(lease, question_ids, embed, params.q_rnn, train);
  Value h = encode_tokens(lease, history_concat_ids, embed, params.hist_rnn, train);
  AttendOut vision = attend_objects(lease, q, regions, params.attn, train);

  const Value parts[] = {q, h, vision.attended};
  Value fused = t.tanh(t.add(t.matvec(lease.of(params.w_fuse, train), t.concat(parts)),
                             lease.of(params.b_fuse, train)));
  return {fused, vision.weights, std::nullopt};
}

EncodedContext mn_encode(Lease& lease, std::span<const std::uint32_t> question_ids,
                         std::span<const std::uint32_t> caption_ids,
                         const std::vector<std::vector<std::uint32_t>>& history_rounds,
                         const EmbeddingInit& embed, const MnEncoderParams& params,
                         std::span<const Value> regions, bool train) {
  Tape& t = lease.tape();
  Value q = encode_tokens(lease, question_ids, embed, params.q_rnn, train);
  Value c = encode_tokens(lease, caption_ids, embed, params.hist_rnn, train);

  // Memory bank: caption plus one slot per completed round, each projected
  // through the shared memory map.
  Value w_mem = lease.of(params.w_mem, train);
  Value b_mem = lease.of(params.b_mem, train);
  std::vector<Value> memories;
  memories.reserve(history_rounds.size() + 1);
  memories.push_back(t.tanh(t.add(t.matvec(w_mem, c), b_mem)));
  for (const auto& round_ids : history_rounds) {
    Value m = encode_tokens(lease, round_ids, embed, params.hist_rnn, train);
    memories.push_back(t.tanh(t.add(t.matvec(w_mem, m), b_mem)));
  }

  const double inv_sqrt_dim = 1.0 / std::sqrt(static_cast<double>(params.w_mem.rows()));
  std::vector<Value> match;
  match.reserve(memories.size());
  for (Value m : memories) match.push_back(t.scale(t.dot(q, m), inv_sqrt_dim));
  Value mem_weights = t.softmax(t.concat(match));

  std::vector<Value> weighted;
  weighted.reserve(memories.size());
  for (std::size_t j = 0; j < memories.size(); ++j) {
    weighted.push_back(t.smul(t.pick(mem_weights, j), memories[j]));
  }
  Value recalled = t.add_n(weighted);

  // Image attention is guided by question and caption jointly.
  const Value qc[] = {q, c};
  Value gate = t.tanh(t.matvec(lease.of(params.w_gate, train), t.concat(qc)));
  AttendOut vision = attend_objects(lease, gate, regions, params.attn, train);

  const Value parts[] = {q, t.add(q, recalled), vision.attended};
  Value fused = t.tanh(t.add(t.matvec(lease.of(params.w_fuse, train), t.concat(parts)),
                             lease.of(params.b_fuse, train)));
  return {fused, vision.weights, mem_weights};
}

}  // namespace ad

}  // namespace vdr
