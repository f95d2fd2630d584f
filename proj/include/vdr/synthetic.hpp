#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "vdr/dialog.hpp"
#include "vdr/features.hpp"
#include "vdr/predictions.hpp"

namespace vdr {

// Planted-attribute corpus. Each image is drawn around one of n_clusters
// latent centers; every cluster owns one color word and one shape word.
// Captions state both attributes, each question asks for exactly one of them
// (the kind token "color"/"shape" carries the query), and candidates are
// single attribute words. A reader that uses the question can reach perfect
// accuracy; one that ignores it cannot tell which of the caption's two
// attributes is wanted.
struct SyntheticConfig {
  std::size_t n_dialogs = 20;
  std::size_t n_holdout = 8;
  std::size_t n_rounds = 10;
  std::size_t n_cand = 20;
  std::size_t vocab_size = 60;
  std::size_t d_img = 16;
  std::size_t k_min = 4;
  std::size_t k_max = 12;
  std::size_t n_clusters = 8;
  std::uint64_t seed = 0;

  void validate() const;
  static SyntheticConfig from_json_file(const std::string& path);
  void save_json(const std::string& path) const;
};

// Everything needed to score a round exactly: the ground-truth word gets
// 1.0, same-kind words of the two neighbouring clusters get 0.5, others 0.
struct OracleRound {
  std::vector<std::string> candidates;
  std::string gt_word;
  std::vector<std::string> adjacent_words;
};

struct SyntheticOracle {
  std::unordered_map<std::int64_t, std::vector<OracleRound>> dialogs;
};

std::vector<double> oracle_round_scores(const OracleRound& round);

// Scores for the generated candidate order; argmax is always the gt.
std::vector<double> oracle_scores(const SyntheticOracle& oracle, std::int64_t dialog_id,
                                  int round_index);

// The oracle rendered as a normalized prediction file (log-softmax of the
// scores — rank-preserving), covering every round it knows.
PredictionSet oracle_predictions(const SyntheticOracle& oracle);

struct SyntheticCorpus {
  RawDataset train;
  RawDataset holdout;   // empty when n_holdout = 0
  FeatureStore features;  // all images of both splits
  SyntheticOracle oracle;
};

SyntheticCorpus gen_synthetic(const SyntheticConfig& config);

}  // namespace vdr
