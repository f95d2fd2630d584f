#pragma once

#include <functional>
#include <optional>
#include <string>

#include "vdr/checkpoint.hpp"
#include "vdr/dialog.hpp"
#include "vdr/embedding.hpp"
#include "vdr/features.hpp"
#include "vdr/predictions.hpp"

namespace vdr {

struct EpochStats {
  int epoch = 0;  // 1-based, the epoch just finished
  double mean_loss = 0.0;
  std::optional<double> train_top1;  // filled every eval_every epochs
};

// The full optimization loop. Per step: mean round loss over the batch,
// backward, global-norm gradient clip, adaptive-moment update with bias
// correction. The file at checkpoint_path is rewritten after every epoch
// (empty path keeps everything in memory), so a non-finite loss — which
// aborts with "diverged@<step>" — leaves the last finished epoch on disk.
Checkpoint train(const ModelConfig& model_config, const TrainConfig& config, const Dataset& data,
                 const FeatureStore& features, EmbeddingInit embed_init, const Vocabulary& vocab,
                 const std::string& checkpoint_path = "",
                 const std::function<void(const EpochStats&)>& on_epoch = {});

// Forward-only scoring of every (dialog, round); rows sorted by
// (dialog_id, round) and rounded to file precision.
PredictionSet predict(const ModelParameters& params, const Dataset& data,
                      const FeatureStore& features);

// Fraction of rounds whose top-ranked candidate (descending score, ties by
// ascending index) is the ground truth.
double top1_accuracy(const PredictionSet& preds, const Dataset& data);

// Scales the gradient tensors so their joint norm is at most max_norm;
// returns the pre-clip norm.
double clip_global_norm(std::span<Tensor* const> grads, double max_norm);

}  // namespace vdr
