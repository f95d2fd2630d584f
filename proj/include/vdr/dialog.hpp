#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vdr/embedding.hpp"
#include "vdr/vocab.hpp"

namespace vdr {

// Text-level records, exactly as the dataset file stores them.
struct RawRound {
  std::string question;
  std::vector<std::string> candidates;
  int gt_index = 0;
  std::optional<std::vector<double>> relevance;

  bool operator==(const RawRound&) const = default;
};

struct RawDialog {
  std::int64_t dialog_id = 0;
  std::int64_t image_id = 0;
  std::string caption;
  std::vector<RawRound> rounds;

  bool operator==(const RawDialog&) const = default;
};

struct RawDataset {
  int n_cand = 0;
  int n_rounds = 0;
  std::vector<RawDialog> dialogs;

  bool operator==(const RawDataset&) const = default;
};

// Token-id records the models consume.
struct Round {
  std::vector<std::uint32_t> question;
  std::vector<std::vector<std::uint32_t>> candidates;
  int gt_index = 0;
  std::optional<std::vector<double>> relevance;

  bool operator==(const Round&) const = default;
};

struct Dialog {
  std::int64_t dialog_id = 0;
  std::int64_t image_id = 0;
  std::vector<std::uint32_t> caption;
  std::vector<Round> rounds;

  bool operator==(const Dialog&) const = default;
};

struct Dataset {
  int n_cand = 0;
  int n_rounds = 0;
  std::vector<Dialog> dialogs;

  bool operator==(const Dataset&) const = default;
};

// JSON dataset file: {"version":1,"n_cand":…,"n_rounds":…,"dialogs":[…]}.
// Structural invariants (round counts, candidate counts, gt range, relevance
// shape) are validated on load.
RawDataset load_raw_dataset(const std::string& path);
void save_raw_dataset(const RawDataset& data, const std::string& path);

// Tokenizes every text field (OOV → <unk>). keep_verbatim protects remap
// keys from punctuation stripping; pass null for the bare tokenizer.
Dataset tokenize_dataset(const RawDataset& raw, const Vocabulary& vocab,
                         const std::unordered_set<std::string>* keep_verbatim);

Dataset load_dialogs(const std::string& path, const Vocabulary& vocab,
                     const std::unordered_set<std::string>* keep_verbatim);

}  // namespace vdr
