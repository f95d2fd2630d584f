#pragma once

#include <string>
#include <vector>

#include "vdr/model.hpp"
#include "vdr/train_config.hpp"
#include "vdr/vocab.hpp"

namespace vdr {

// Everything needed to resume or serve a model: parameters with their
// architecture config, the vocabulary that indexes the embedding rows, the
// training setup, and the loss trace so far.
struct Checkpoint {
  ModelParameters params;
  Vocabulary vocab;
  TrainConfig train;
  int epoch = 0;
  std::vector<double> loss_history;  // mean batch loss per finished epoch
};

// Binary file: magic "VDCKPT1", u64 little-endian header length, JSON header
// (version, configs, vocab, embedding provenance, tensor shapes), then one
// float64 little-endian blob per tensor in the header's order.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Merged-config rendering for the CLI echo: {"model":{…},"train":{…}}.
std::string run_config_json(const ModelConfig& model, const TrainConfig& train);

// Applies the keys present in a {"model":{…},"train":{…}} file on top of the
// given configs; absent keys keep their values, unknown keys are rejected.
void load_run_config(const std::string& path, ModelConfig& model, TrainConfig& train);
void save_run_config(const std::string& path, const ModelConfig& model, const TrainConfig& train);

}  // namespace vdr
