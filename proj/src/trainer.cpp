#include <algorithm>
#include <cmath>
#include <map>

#include "vdr/batching.hpp"
#include "vdr/error.hpp"
#include "vdr/lease.hpp"
#include "vdr/metrics.hpp"
#include "vdr/rng.hpp"
#include "vdr/tape.hpp"
#include "vdr/trainer.hpp"

namespace vdr {

namespace {

Tensor same_shape(const Tensor& t) {
  return t.is_vector() ? Tensor::vector(t.rows()) : Tensor::matrix(t.rows(), t.cols());
}

// One trainable tensor with its gradient accumulator and moment estimates.
struct Slot {
  Tensor* param;
  Tensor grad;
  Tensor m;
  Tensor v;
};

bool row_order(const PredictionRow& a, const PredictionRow& b) {
  if (a.dialog_id != b.dialog_id) return a.dialog_id < b.dialog_id;
  return a.round < b.round;
}

}  // namespace

double clip_global_norm(std::span<Tensor* const> grads, double max_norm) {
  double sq = 0.0;
  for (const Tensor* g : grads) {
    for (double x : g->span()) sq += x * x;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (Tensor* g : grads) {
      for (double& x : g->span()) x *= scale;
    }
  }
  return norm;
}

Checkpoint train(const ModelConfig& model_config, const TrainConfig& config, const Dataset& data,
                 const FeatureStore& features, EmbeddingInit embed_init, const Vocabulary& vocab,
                 const std::string& checkpoint_path,
                 const std::function<void(const EpochStats&)>& on_epoch) {
  model_config.validate();
  config.validate();
  require(!data.dialogs.empty(), "empty-corpus", "cannot train on an empty dataset");

  Checkpoint ckpt;
  ckpt.params = ModelParameters::init(model_config, std::move(embed_init), config.seed);
  ckpt.vocab = vocab;
  ckpt.train = config;

  std::vector<Slot> slots;
  ckpt.params.visit([&](const std::string&, Tensor& t, bool trainable) {
    if (trainable) slots.push_back({&t, same_shape(t), same_shape(t), same_shape(t)});
  });
  std::vector<Tensor*> grad_ptrs;
  grad_ptrs.reserve(slots.size());
  for (Slot& s : slots) grad_ptrs.push_back(&s.grad);

  if (!checkpoint_path.empty()) save_checkpoint(ckpt, checkpoint_path);

  const std::size_t n_rounds = static_cast<std::size_t>(data.n_rounds);
  ad::Tape tape;
  std::uint64_t step = 0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const std::uint64_t shuffle_seed =
        config.seed ^ fnv1a("epoch-" + std::to_string(epoch));
    const auto batches = batch_iter(data.dialogs.size(), n_rounds, config.batch_size, shuffle_seed);

    double loss_sum = 0.0;
    for (const std::vector<RoundRef>& batch : batches) {
      ++step;
      tape.clear();
      ad::Lease lease(tape);
      std::vector<ad::Value> losses;
      losses.reserve(batch.size());
      for (const RoundRef& ref : batch) {
        const Dialog& dialog = data.dialogs[ref.dialog_index];
        const ObjectFeatureSet& feats = features.require_image(dialog.image_id);
        losses.push_back(ad::forward_round(lease, ckpt.params, dialog,
                                           static_cast<std::size_t>(ref.round_index), feats, true)
                             .loss);
      }
      const ad::Value total =
          tape.scale(tape.add_n(losses), 1.0 / static_cast<double>(losses.size()));
      const double loss = tape.scalar(total);
      if (!std::isfinite(loss)) {
        fail_runtime("diverged@" + std::to_string(step), "training loss is not finite");
      }
      tape.backward(total);

      for (Slot& s : slots) {
        s.grad.fill(0.0);
        if (const auto leaf = lease.find(*s.param)) {
          const auto g = tape.grad(*leaf);
          std::copy(g.begin(), g.end(), s.grad.span().begin());
        }
      }
      clip_global_norm(grad_ptrs, config.grad_clip_norm);

      const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
      for (Slot& s : slots) {
        auto p = s.param->span();
        auto g = s.grad.span();
        auto m = s.m.span();
        auto v = s.v.span();
        for (std::size_t i = 0; i < p.size(); ++i) {
          m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
          v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
          p[i] -= config.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + config.adam_eps);
        }
      }
      loss_sum += loss;
    }

    ckpt.epoch = epoch;
    ckpt.loss_history.push_back(loss_sum / static_cast<double>(batches.size()));
    if (!checkpoint_path.empty()) save_checkpoint(ckpt, checkpoint_path);

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = ckpt.loss_history.back();
    if (config.eval_every > 0 && (epoch % config.eval_every == 0 || epoch == config.epochs)) {
      stats.train_top1 = top1_accuracy(predict(ckpt.params, data, features), data);
    }
    if (on_epoch) on_epoch(stats);
  }
  return ckpt;
}

PredictionSet predict(const ModelParameters& params, const Dataset& data,
                      const FeatureStore& features) {
  PredictionSet out;
  ad::Tape tape;
  for (const Dialog& dialog : data.dialogs) {
    const ObjectFeatureSet& feats = features.require_image(dialog.image_id);
    for (std::size_t r = 0; r < dialog.rounds.size(); ++r) {
      tape.clear();
      ad::Lease lease(tape);
      const ad::RoundForward fwd = ad::forward_round(lease, params, dialog, r, feats, false);
      const auto lp = tape.data(fwd.scores.log_probs);
      PredictionRow row;
      row.dialog_id = dialog.dialog_id;
      row.round = static_cast<int>(r);
      row.log_probs.assign(lp.begin(), lp.end());
      out.push_back(std::move(row));
    }
  }
  std::sort(out.begin(), out.end(), row_order);
  round_to_file_precision(out);
  return out;
}

double top1_accuracy(const PredictionSet& preds, const Dataset& data) {
  std::map<std::pair<std::int64_t, int>, const PredictionRow*> by_key;
  for (const PredictionRow& row : preds) by_key.emplace(std::make_pair(row.dialog_id, row.round), &row);

  std::size_t hits = 0;
  std::size_t n = 0;
  for (const Dialog& dialog : data.dialogs) {
    for (std::size_t r = 0; r < dialog.rounds.size(); ++r) {
      const auto it = by_key.find({dialog.dialog_id, static_cast<int>(r)});
      require(it != by_key.end(),
              "prediction-mismatch:" + std::to_string(dialog.dialog_id) + ":" + std::to_string(r),
              "round has no prediction row");
      if (rank_of_gt(it->second->log_probs, dialog.rounds[r].gt_index) == 1) ++hits;
      ++n;
    }
  }
  require(n > 0, "no-rounds", "dataset has no rounds to score");
  return static_cast<double>(hits) / static_cast<double>(n);
}

}  // namespace vdr
