#include "vdr/model.hpp"

namespace vdr {

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::lf_rcnn: return "lf_rcnn";
    case ModelKind::mn_rcnn: return "mn_rcnn";
    case ModelKind::mn_rcnn_wt: return "mn_rcnn_wt";
  }
  fail("shape", "unknown model kind value");
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "lf_rcnn") return ModelKind::lf_rcnn;
  if (s == "mn_rcnn") return ModelKind::mn_rcnn;
  if (s == "mn_rcnn_wt") return ModelKind::mn_rcnn_wt;
  fail("model-kind:" + s, "expected lf_rcnn, mn_rcnn, or mn_rcnn_wt");
}

void ModelConfig::validate() const {
  require(hidden > 0 && embed_dim > 0 && d_img > 0, "model-config",
          "hidden, embed_dim, and d_img must be positive");
}

ModelParameters ModelParameters::init(const ModelConfig& config, EmbeddingInit embed,
                                      std::uint64_t seed) {
  config.validate();
  require(embed.dim() == config.embed_dim, "model-config",
          "embedding width " + std::to_string(embed.dim()) + " does not match embed_dim " +
              std::to_string(config.embed_dim));

  ModelParameters p;
  p.config = config;
  p.embed = std::move(embed);
  p.embed.trainable = config.resolved_embed_trainable();

  Rng rng = named_rng(seed, "model-init");
  const std::size_t h = config.hidden;
  if (config.kind == ModelKind::lf_rcnn) {
    p.lf = LfEncoderParams::init(h, config.embed_dim, config.d_img, config.resolved_attn_dim(),
                                 rng);
    RnnConfig cand_cfg{CellKind::lstm, h, 2, false};
    p.dec = DecoderParams::init(config.resolved_decoder(), cand_cfg, config.embed_dim, h,
                                config.resolved_gate_dim(), rng);
  } else {
    p.mn = MnEncoderParams::init(h, config.embed_dim, config.d_img, config.resolved_attn_dim(),
                                 rng);
    RnnConfig cand_cfg{CellKind::gru, h, 1, true};
    p.dec = DecoderParams::init(config.resolved_decoder(), cand_cfg, config.embed_dim, h,
                                config.resolved_gate_dim(), rng);
  }
  return p;
}

namespace ad {

RoundForward forward_round(Lease& lease, const ModelParameters& params, const Dialog& dialog,
                           std::size_t round_index, const ObjectFeatureSet& features, bool train) {
  require(round_index < dialog.rounds.size(), "no-rounds",
          "round index outside dialog " + std::to_string(dialog.dialog_id));
  require(features.d_img == params.config.d_img, "shape",
          "feature width does not match the model's d_img");
  const Round& round = dialog.rounds[round_index];
  const bool is_lf = params.config.kind == ModelKind::lf_rcnn;

  std::vector<Value> regions = lease_regions(lease.tape(), features);

  EncodedContext context;
  if (is_lf) {
    std::vector<std::uint32_t> history = dialog.caption;
    for (std::size_t j = 0; j < round_index; ++j) {
      const Round& past = dialog.rounds[j];
      history.insert(history.end(), past.question.begin(), past.question.end());
      const auto& answer = past.candidates[past.gt_index];
      history.insert(history.end(), answer.begin(), answer.end());
    }
    context = lf_encode(lease, round.question, history, params.embed, params.lf, regions, train);
  } else {
    std::vector<std::vector<std::uint32_t>> exchanges;
    exchanges.reserve(round_index);
    for (std::size_t j = 0; j < round_index; ++j) {
      const Round& past = dialog.rounds[j];
      std::vector<std::uint32_t> ids = past.question;
      const auto& answer = past.candidates[past.gt_index];
      ids.insert(ids.end(), answer.begin(), answer.end());
      exchanges.push_back(std::move(ids));
    }
    context = mn_encode(lease, round.question, dialog.caption, exchanges, params.embed, params.mn,
                        regions, train);
  }

  std::vector<Value> cands = encode_candidates(lease, round.candidates, params.embed, params.dec,
                                               train);
  RoundScores scores = score_candidates(lease, context.vector, cands, params.dec, train);
  Value loss = round_loss(lease.tape(), scores, static_cast<std::size_t>(round.gt_index));
  return {scores, loss, std::move(context)};
}

}  // namespace ad

}  // namespace vdr
