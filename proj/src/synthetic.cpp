#include <algorithm>
#include <fstream>

#include <json.hpp>

#include "vdr/error.hpp"
#include "vdr/numeric.hpp"
#include "vdr/rng.hpp"
#include "vdr/synthetic.hpp"

namespace vdr {

namespace {

using json = nlohmann::ordered_json;

const char* kColorWords[] = {"red",  "blue", "green", "gold",  "pink",  "gray",  "teal",  "plum",
                             "rust", "mint", "navy",  "ivory", "coral", "olive", "amber", "beige"};
const char* kShapeWords[] = {"cube", "disc", "star", "ring", "cone", "wedge", "prism", "arch",
                             "blob", "slab", "knot", "tube", "fork", "loop",  "dome",  "grid"};
const char* kDecoyWords[] = {"cloud", "storm", "river", "stone", "grass", "frost", "ember", "shade",
                             "dust",  "mist",  "bark",  "moss",  "dawn",  "dusk",  "tide",  "flame"};

std::string word_from(const char* const* table, std::size_t table_n, const char* fallback,
                      std::size_t i) {
  if (i < table_n) return table[i];
  return fallback + std::to_string(i);
}

std::string color_word(std::size_t i) { return word_from(kColorWords, 16, "hue", i); }
std::string shape_word(std::size_t i) { return word_from(kShapeWords, 16, "form", i); }
std::string decoy_word(std::size_t i) { return word_from(kDecoyWords, 16, "decoy", i); }

// what, is, the, object, ?, a  +  color, shape
constexpr std::size_t kScaffoldWords = 8;

}  // namespace

void SyntheticConfig::validate() const {
  auto check = [](bool ok, const std::string& why) { require(ok, "synthetic-config", why); };
  check(n_dialogs >= 1, "n_dialogs must be at least 1");
  check(n_rounds >= 1, "n_rounds must be at least 1");
  check(n_cand >= 2, "n_cand must be at least 2");
  check(d_img >= 1, "d_img must be at least 1");
  check(k_min >= 1 && k_min <= k_max, "need 1 <= k_min <= k_max");
  check(k_max <= 65535, "k_max must fit the feature file's u16 region count");
  check(n_clusters >= 1, "n_clusters must be at least 1");
  const std::size_t needed = kScaffoldWords + 3 * n_clusters;
  check(vocab_size >= needed, "vocab_size " + std::to_string(vocab_size) + " cannot encode " +
                                  std::to_string(n_clusters) + " clusters (needs " +
                                  std::to_string(needed) + ")");
}

SyntheticConfig SyntheticConfig::from_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "synthetic-config", "cannot open config file: " + path);
  json root;
  try {
    root = json::parse(in);
  } catch (const json::exception& e) {
    fail("synthetic-config", std::string("invalid JSON: ") + e.what());
  }
  SyntheticConfig c;
  try {
    for (const auto& [key, value] : root.items()) {
      if (key == "n_dialogs") c.n_dialogs = value.get<std::size_t>();
      else if (key == "n_holdout") c.n_holdout = value.get<std::size_t>();
      else if (key == "n_rounds") c.n_rounds = value.get<std::size_t>();
      else if (key == "n_cand") c.n_cand = value.get<std::size_t>();
      else if (key == "vocab_size") c.vocab_size = value.get<std::size_t>();
      else if (key == "d_img") c.d_img = value.get<std::size_t>();
      else if (key == "k_min") c.k_min = value.get<std::size_t>();
      else if (key == "k_max") c.k_max = value.get<std::size_t>();
      else if (key == "n_clusters") c.n_clusters = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else fail("synthetic-config", "unknown config key: " + key);
    }
  } catch (const json::exception& e) {
    fail("synthetic-config", std::string("mistyped config value: ") + e.what());
  }
  c.validate();
  return c;
}

void SyntheticConfig::save_json(const std::string& path) const {
  json root;
  root["n_dialogs"] = n_dialogs;
  root["n_holdout"] = n_holdout;
  root["n_rounds"] = n_rounds;
  root["n_cand"] = n_cand;
  root["vocab_size"] = vocab_size;
  root["d_img"] = d_img;
  root["k_min"] = k_min;
  root["k_max"] = k_max;
  root["n_clusters"] = n_clusters;
  root["seed"] = seed;
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "synthetic-config", "cannot open config file for writing: " + path);
  out << root.dump(2) << '\n';
}

std::vector<double> oracle_round_scores(const OracleRound& round) {
  std::vector<double> scores;
  scores.reserve(round.candidates.size());
  for (const std::string& cand : round.candidates) {
    if (cand == round.gt_word) {
      scores.push_back(1.0);
    } else if (std::find(round.adjacent_words.begin(), round.adjacent_words.end(), cand) !=
               round.adjacent_words.end()) {
      scores.push_back(0.5);
    } else {
      scores.push_back(0.0);
    }
  }
  return scores;
}

std::vector<double> oracle_scores(const SyntheticOracle& oracle, std::int64_t dialog_id,
                                  int round_index) {
  const auto it = oracle.dialogs.find(dialog_id);
  require(it != oracle.dialogs.end(), "oracle-miss",
          "oracle knows no dialog " + std::to_string(dialog_id));
  require(round_index >= 0 && round_index < static_cast<int>(it->second.size()), "oracle-miss",
          "oracle knows no round " + std::to_string(round_index) + " of dialog " +
              std::to_string(dialog_id));
  return oracle_round_scores(it->second[round_index]);
}

PredictionSet oracle_predictions(const SyntheticOracle& oracle) {
  std::vector<std::int64_t> ids;
  ids.reserve(oracle.dialogs.size());
  for (const auto& [id, rounds] : oracle.dialogs) {
    (void)rounds;
    ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());

  PredictionSet preds;
  for (std::int64_t id : ids) {
    const auto& rounds = oracle.dialogs.at(id);
    for (std::size_t r = 0; r < rounds.size(); ++r) {
      PredictionRow row;
      row.dialog_id = id;
      row.round = static_cast<int>(r);
      row.log_probs = log_softmax(oracle_round_scores(rounds[r]));
      preds.push_back(std::move(row));
    }
  }
  round_to_file_precision(preds);
  return preds;
}

SyntheticCorpus gen_synthetic(const SyntheticConfig& config) {
  config.validate();
  const std::size_t C = config.n_clusters;

  Rng rng = named_rng(config.seed, "synthetic");

  // Latent cluster centers, then the cluster→shape-word assignment. Color
  // words follow cluster index directly; decorrelating the shape labels keeps
  // one attribute from revealing the other's index.
  std::vector<std::vector<double>> centers(C, std::vector<double>(config.d_img));
  for (auto& center : centers) {
    for (double& x : center) x = rng.uniform(-1.0, 1.0);
  }
  std::vector<std::size_t> shape_perm(C);
  for (std::size_t i = 0; i < C; ++i) shape_perm[i] = i;
  rng.shuffle(shape_perm);

  auto value_word = [&](std::size_t kind, std::size_t cluster) {
    return kind == 0 ? color_word(cluster) : shape_word(shape_perm[cluster]);
  };

  SyntheticCorpus corpus;
  corpus.features.d_img = config.d_img;
  const std::size_t total = config.n_dialogs + config.n_holdout;

  for (std::size_t i = 0; i < total; ++i) {
    const std::int64_t id = static_cast<std::int64_t>(i + 1);
    const std::size_t cluster = rng.below(C);

    ObjectFeatureSet set;
    set.image_id = id;
    set.k = config.k_min + rng.below(config.k_max - config.k_min + 1);
    set.d_img = config.d_img;
    set.data.resize(set.k * config.d_img);
    for (std::size_t r = 0; r < set.k; ++r) {
      for (std::size_t c = 0; c < config.d_img; ++c) {
        set.data[r * config.d_img + c] =
            static_cast<float>(centers[cluster][c] + 0.05 * rng.normal());
      }
    }
    corpus.features.by_image.emplace(id, std::move(set));

    RawDialog dialog;
    dialog.dialog_id = id;
    dialog.image_id = id;
    dialog.caption = "a " + value_word(0, cluster) + " " + value_word(1, cluster) + " object";

    std::vector<OracleRound> oracle_rounds;
    for (std::size_t r = 0; r < config.n_rounds; ++r) {
      const std::size_t kind = rng.below(2);
      RawRound round;
      round.question = std::string("what ") + (kind == 0 ? "color" : "shape") + " is the object ?";

      const std::string gt = value_word(kind, cluster);
      std::vector<std::string> pool;  // same-kind words of other clusters, then decoys
      for (std::size_t c = 0; c < C; ++c) {
        if (c != cluster) pool.push_back(value_word(kind, c));
      }
      for (std::size_t c = 0; c < C; ++c) pool.push_back(decoy_word(c));

      round.gt_index = static_cast<int>(rng.below(config.n_cand));
      for (std::size_t j = 0; j < config.n_cand; ++j) {
        if (j == static_cast<std::size_t>(round.gt_index)) {
          round.candidates.push_back(gt);
        } else {
          round.candidates.push_back(pool[rng.below(pool.size())]);
        }
      }

      OracleRound orc;
      orc.candidates = round.candidates;
      orc.gt_word = gt;
      for (const std::size_t adj : {(cluster + 1) % C, (cluster + C - 1) % C}) {
        const std::string w = value_word(kind, adj);
        if (w == gt) continue;
        if (std::find(orc.adjacent_words.begin(), orc.adjacent_words.end(), w) ==
            orc.adjacent_words.end()) {
          orc.adjacent_words.push_back(w);
        }
      }

      round.relevance = oracle_round_scores(orc);
      oracle_rounds.push_back(std::move(orc));
      dialog.rounds.push_back(std::move(round));
    }
    corpus.oracle.dialogs.emplace(id, std::move(oracle_rounds));

    RawDataset& split = i < config.n_dialogs ? corpus.train : corpus.holdout;
    split.dialogs.push_back(std::move(dialog));
  }

  corpus.train.n_cand = static_cast<int>(config.n_cand);
  corpus.train.n_rounds = static_cast<int>(config.n_rounds);
  corpus.holdout.n_cand = static_cast<int>(config.n_cand);
  corpus.holdout.n_rounds = static_cast<int>(config.n_rounds);
  return corpus;
}

}  // namespace vdr
