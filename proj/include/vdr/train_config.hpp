#pragma once

#include <cstdint>
#include <string>

namespace vdr {

// Optimization hyperparameters and run bookkeeping. The defaults are
// recorded in every checkpoint, so any reported number can be reproduced
// from the checkpoint header alone.
struct TrainConfig {
  int epochs = 200;
  std::size_t batch_size = 20;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double grad_clip_norm = 5.0;
  std::uint64_t seed = 0;
  int eval_every = 5;  // epochs between train-accuracy probes; 0 disables them

  // Provenance of a run's inputs and outputs; informational, never opened by
  // the trainer itself.
  std::string data_path;
  std::string features_path;
  std::string vocab_path;
  std::string vectors_path;
  std::string remap_path;
  std::string output_path;

  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

}  // namespace vdr
