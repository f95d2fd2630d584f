#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "vdr/decoder.hpp"
#include "vdr/dialog.hpp"
#include "vdr/encoder.hpp"
#include "vdr/features.hpp"

namespace vdr {

enum class ModelKind { lf_rcnn, mn_rcnn, mn_rcnn_wt };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

// Defaults left at 0 / unset resolve per model kind: late fusion freezes its
// embeddings and scores by dot product; the memory networks fine-tune
// embeddings; the weighted variant swaps in the gated scorer.
struct ModelConfig {
  ModelKind kind = ModelKind::lf_rcnn;
  std::size_t hidden = 16;
  std::size_t embed_dim = 16;
  std::size_t d_img = 16;
  std::size_t attn_dim = 0;  // 0 resolves to hidden
  std::size_t gate_dim = 0;  // 0 resolves to hidden
  std::optional<bool> embed_trainable;
  std::optional<DecoderVariant> decoder;

  bool resolved_embed_trainable() const {
    return embed_trainable.value_or(kind != ModelKind::lf_rcnn);
  }
  DecoderVariant resolved_decoder() const {
    return decoder.value_or(kind == ModelKind::mn_rcnn_wt ? DecoderVariant::gated
                                                          : DecoderVariant::dot);
  }
  std::size_t resolved_attn_dim() const { return attn_dim ? attn_dim : hidden; }
  std::size_t resolved_gate_dim() const { return gate_dim ? gate_dim : hidden; }
  bool is_memory_network() const { return kind != ModelKind::lf_rcnn; }

  void validate() const;

  bool operator==(const ModelConfig&) const = default;
};

struct ModelParameters {
  ModelConfig config;
  EmbeddingInit embed;
  LfEncoderParams lf;  // sized only for lf_rcnn
  MnEncoderParams mn;  // sized only for the memory networks
  DecoderParams dec;

  // Builds every weight from one named stream of `seed`; `embed` arrives
  // already initialised and only has its trainable flag aligned with config.
  static ModelParameters init(const ModelConfig& config, EmbeddingInit embed, std::uint64_t seed);

  // Enumerates every parameter tensor in a fixed order as
  // f(name, tensor, trainable). The order is the checkpoint layout.
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

 private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f);
};

namespace ad {

struct RoundForward {
  RoundScores scores;
  Value loss;
  EncodedContext context;
};

// Runs one dialog round end to end. History for round r is the caption plus
// the r completed question/ground-truth-answer exchanges.
RoundForward forward_round(Lease& lease, const ModelParameters& params, const Dialog& dialog,
                           std::size_t round_index, const ObjectFeatureSet& features, bool train);

}  // namespace ad

template <typename Self, typename F>
void ModelParameters::visit_impl(Self& self, F& f) {
  const bool embed_trainable = self.config.resolved_embed_trainable();
  f("embed.matrix", self.embed.matrix, embed_trainable);

  auto visit_rnn = [&](const std::string& prefix, auto& rnn) {
    for (std::size_t i = 0; i < rnn.cells.size(); ++i) {
      auto& cell = rnn.cells[i];
      const std::string base = prefix + ".c" + std::to_string(i) + ".";
      f(base + "w_ih", cell.w_ih, true);
      f(base + "w_hh", cell.w_hh, true);
      f(base + "b_ih", cell.b_ih, true);
      f(base + "b_hh", cell.b_hh, true);
    }
  };
  auto visit_attn = [&](const std::string& prefix, auto& attn) {
    f(prefix + ".w_q", attn.w_q, true);
    f(prefix + ".w_f", attn.w_f, true);
    f(prefix + ".b", attn.b, true);
    f(prefix + ".w2", attn.w2, true);
  };

  if (self.config.kind == ModelKind::lf_rcnn) {
    visit_rnn("lf.q_rnn", self.lf.q_rnn);
    visit_rnn("lf.hist_rnn", self.lf.hist_rnn);
    visit_attn("lf.attn", self.lf.attn);
    f("lf.w_fuse", self.lf.w_fuse, true);
    f("lf.b_fuse", self.lf.b_fuse, true);
  } else {
    visit_rnn("mn.q_rnn", self.mn.q_rnn);
    visit_rnn("mn.hist_rnn", self.mn.hist_rnn);
    f("mn.w_mem", self.mn.w_mem, true);
    f("mn.b_mem", self.mn.b_mem, true);
    f("mn.w_gate", self.mn.w_gate, true);
    visit_attn("mn.attn", self.mn.attn);
    f("mn.w_fuse", self.mn.w_fuse, true);
    f("mn.b_fuse", self.mn.b_fuse, true);
  }

  visit_rnn("dec.cand_rnn", self.dec.cand_rnn);
  f("dec.w_proj", self.dec.w_proj, true);
  f("dec.b_proj", self.dec.b_proj, true);
  if (self.dec.variant == DecoderVariant::gated) {
    f("dec.gated.w_g", self.dec.gated.w_g, true);
    f("dec.gated.b_g", self.dec.gated.b_g, true);
    f("dec.gated.w_s", self.dec.gated.w_s, true);
    f("dec.gated.b_s", self.dec.gated.b_s, true);
    f("dec.gated.w", self.dec.gated.w, true);
    f("dec.gated.b", self.dec.gated.b, true);
  } else if (self.dec.variant == DecoderVariant::gated_scalar) {
    f("dec.gated_scalar.a", self.dec.gated_scalar.a, true);
    f("dec.gated_scalar.b", self.dec.gated_scalar.b, true);
    f("dec.gated_scalar.w", self.dec.gated_scalar.w, true);
  }
}

}  // namespace vdr
