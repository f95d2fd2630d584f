// Command-line front end: vocabulary building, synthetic-corpus generation,
// training, prediction, ensembling, evaluation, and the gradient self-check.
// Every run echoes its fully resolved configuration before doing work, so any
// output can be reproduced from the log alone. Exit codes: 0 success,
// 1 validation error, 2 runtime error.
#include <CLI11.hpp>

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "vdr/checkpoint.hpp"
#include "vdr/dialog.hpp"
#include "vdr/embedding.hpp"
#include "vdr/ensemble.hpp"
#include "vdr/error.hpp"
#include "vdr/features.hpp"
#include "vdr/grad_suite.hpp"
#include "vdr/metrics.hpp"
#include "vdr/model.hpp"
#include "vdr/predictions.hpp"
#include "vdr/synthetic.hpp"
#include "vdr/tokenize.hpp"
#include "vdr/train_config.hpp"
#include "vdr/trainer.hpp"
#include "vdr/vocab.hpp"

namespace {

using nlohmann::json;

// VDR_SEED supplies the default seed when neither a flag nor a config file
// sets one; an explicit source always wins.
std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("VDR_SEED");
  if (s == nullptr || *s == '\0') return std::nullopt;
  if (*s == '-') vdr::fail("seed-env", std::string("VDR_SEED must be non-negative: ") + s);
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(s, &end, 10);
  if (errno != 0 || end == s || *end != '\0') {
    vdr::fail("seed-env", std::string("VDR_SEED is not an unsigned integer: ") + s);
  }
  return v;
}

void echo(const std::string& section, const json& body) {
  json j;
  j[section] = body;
  std::cout << j.dump(2) << "\n";
}

struct BuildVocabArgs {
  std::vector<std::string> data;
  std::size_t min_count = 1;
  std::string remap_file;
  std::string out;
};

void run_build_vocab(const BuildVocabArgs& a) {
  echo("build_vocab", {{"data", a.data},
                       {"min_count", a.min_count},
                       {"remap_file", a.remap_file},
                       {"out", a.out}});
  const std::unordered_set<std::string>* keep = nullptr;
  vdr::RemapTable remap;
  if (!a.remap_file.empty()) {
    remap = a.remap_file == "builtin" ? vdr::RemapTable::builtin_default()
                                      : vdr::RemapTable::load_file(a.remap_file);
    keep = &remap.keys;
  }
  std::vector<std::vector<std::string>> corpus;
  for (const std::string& path : a.data) {
    vdr::RawDataset raw = vdr::load_raw_dataset(path);
    for (const auto& dialog : raw.dialogs) {
      corpus.push_back(vdr::normalize_tokenize(dialog.caption, keep));
      for (const auto& round : dialog.rounds) {
        corpus.push_back(vdr::normalize_tokenize(round.question, keep));
        for (const auto& cand : round.candidates) {
          corpus.push_back(vdr::normalize_tokenize(cand, keep));
        }
      }
    }
  }
  vdr::Vocabulary vocab = vdr::build_vocab(corpus, a.min_count);
  vdr::save_vocab(vocab, a.out);
  std::cout << "vocab: " << vocab.size() << " ids (" << vocab.size() - 2
            << " tokens + 2 specials) -> " << a.out << "\n";
}

struct GenSyntheticArgs {
  CLI::App* cmd = nullptr;
  std::string config;
  std::string out_dir;
  vdr::SyntheticConfig sc;
};

json synthetic_config_json(const vdr::SyntheticConfig& c) {
  return {{"n_dialogs", c.n_dialogs}, {"n_holdout", c.n_holdout}, {"n_rounds", c.n_rounds},
          {"n_cand", c.n_cand},       {"vocab_size", c.vocab_size}, {"d_img", c.d_img},
          {"k_min", c.k_min},         {"k_max", c.k_max},         {"n_clusters", c.n_clusters},
          {"seed", c.seed}};
}

bool json_file_has_key(const std::string& path, const std::string& key) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) return false;
  try {
    return json::parse(in).contains(key);
  } catch (const json::exception&) {
    return false;
  }
}

void run_gen_synthetic(GenSyntheticArgs& a) {
  vdr::SyntheticConfig sc;
  bool seed_from_file = false;
  if (!a.config.empty()) {
    sc = vdr::SyntheticConfig::from_json_file(a.config);
    seed_from_file = json_file_has_key(a.config, "seed");
  }
  auto apply = [&](const char* flag, auto& field, const auto& value) {
    if (a.cmd->count(flag) > 0) field = value;
  };
  apply("--dialogs", sc.n_dialogs, a.sc.n_dialogs);
  apply("--holdout", sc.n_holdout, a.sc.n_holdout);
  apply("--rounds", sc.n_rounds, a.sc.n_rounds);
  apply("--cand", sc.n_cand, a.sc.n_cand);
  apply("--vocab-size", sc.vocab_size, a.sc.vocab_size);
  apply("--d-img", sc.d_img, a.sc.d_img);
  apply("--k-min", sc.k_min, a.sc.k_min);
  apply("--k-max", sc.k_max, a.sc.k_max);
  apply("--clusters", sc.n_clusters, a.sc.n_clusters);
  if (a.cmd->count("--seed") > 0) {
    sc.seed = a.sc.seed;
  } else if (!seed_from_file) {
    if (auto s = env_seed()) sc.seed = *s;
  }
  sc.validate();

  echo("gen_synthetic", {{"config", synthetic_config_json(sc)}, {"out_dir", a.out_dir}});

  std::filesystem::create_directories(a.out_dir);
  auto in_dir = [&](const char* name) { return (std::filesystem::path(a.out_dir) / name).string(); };

  vdr::SyntheticCorpus corpus = vdr::gen_synthetic(sc);
  sc.save_json(in_dir("synthetic_config.json"));
  vdr::save_raw_dataset(corpus.train, in_dir("train.json"));
  vdr::save_features(corpus.features, in_dir("features.bin"));

  std::set<std::int64_t> train_ids;
  for (const auto& d : corpus.train.dialogs) train_ids.insert(d.dialog_id);
  vdr::PredictionSet oracle_all = vdr::oracle_predictions(corpus.oracle);
  vdr::PredictionSet oracle_train, oracle_holdout;
  for (auto& row : oracle_all) {
    (train_ids.count(row.dialog_id) ? oracle_train : oracle_holdout).push_back(std::move(row));
  }
  vdr::save_predictions(oracle_train, in_dir("oracle_train.jsonl"));

  std::cout << "wrote " << in_dir("train.json") << " (" << corpus.train.dialogs.size()
            << " dialogs)\n";
  if (sc.n_holdout > 0) {
    vdr::save_raw_dataset(corpus.holdout, in_dir("holdout.json"));
    vdr::save_predictions(oracle_holdout, in_dir("oracle_holdout.jsonl"));
    std::cout << "wrote " << in_dir("holdout.json") << " (" << corpus.holdout.dialogs.size()
              << " dialogs)\n";
  }
  std::cout << "wrote " << in_dir("features.bin") << " (" << corpus.features.by_image.size()
            << " images)\nwrote " << in_dir("oracle_train.jsonl")
            << (sc.n_holdout > 0 ? " and " + in_dir("oracle_holdout.jsonl") : std::string())
            << "\n";
}

struct TrainArgs {
  CLI::App* cmd = nullptr;
  std::string config;
  std::string model;
  std::size_t hidden = 0;
  std::size_t embed_dim = 0;
  std::size_t d_img = 0;
  std::string embed_trainable;
  int epochs = 0;
  std::size_t batch_size = 0;
  double learning_rate = 0;
  int eval_every = 0;
  std::uint64_t seed = 0;
  std::string data, features, vocab, vectors, remap_file, out;
};

// Precedence: flag > config file > VDR_SEED (seed only) > built-in default.
void resolve_train_config(TrainArgs& a, vdr::ModelConfig& mc, vdr::TrainConfig& tc) {
  if (auto s = env_seed()) tc.seed = *s;
  if (!a.config.empty()) vdr::load_run_config(a.config, mc, tc);

  CLI::App* cmd = a.cmd;
  if (cmd->count("--model") > 0) mc.kind = vdr::model_kind_from_string(a.model);
  if (cmd->count("--hidden") > 0) mc.hidden = a.hidden;
  if (cmd->count("--embed-dim") > 0) mc.embed_dim = a.embed_dim;
  if (cmd->count("--d-img") > 0) mc.d_img = a.d_img;
  if (cmd->count("--embed-trainable") > 0) {
    if (a.embed_trainable == "true") mc.embed_trainable = true;
    else if (a.embed_trainable == "false") mc.embed_trainable = false;
    else vdr::fail("model-config", "--embed-trainable takes true or false");
  }
  if (cmd->count("--epochs") > 0) tc.epochs = a.epochs;
  if (cmd->count("--batch-size") > 0) tc.batch_size = a.batch_size;
  if (cmd->count("--lr") > 0) tc.learning_rate = a.learning_rate;
  if (cmd->count("--eval-every") > 0) tc.eval_every = a.eval_every;
  if (cmd->count("--seed") > 0) tc.seed = a.seed;
  if (cmd->count("--data") > 0) tc.data_path = a.data;
  if (cmd->count("--features") > 0) tc.features_path = a.features;
  if (cmd->count("--vocab") > 0) tc.vocab_path = a.vocab;
  if (cmd->count("--vectors") > 0) tc.vectors_path = a.vectors;
  if (cmd->count("--remap-file") > 0) tc.remap_path = a.remap_file;
  if (cmd->count("--out") > 0) tc.output_path = a.out;

  mc.validate();
  tc.validate();
  vdr::require(!tc.data_path.empty(), "train-config", "--data (or paths.data) is required");
  vdr::require(!tc.features_path.empty(), "train-config",
               "--features (or paths.features) is required");
  vdr::require(!tc.vocab_path.empty(), "train-config", "--vocab (or paths.vocab) is required");
  vdr::require(!tc.output_path.empty(), "train-config", "--out (or paths.output) is required");
  vdr::require(tc.vectors_path.empty() ? tc.remap_path.empty() : true, "train-config",
               "--remap-file requires --vectors");
}

void run_train(TrainArgs& a) {
  vdr::ModelConfig mc;
  vdr::TrainConfig tc;
  resolve_train_config(a, mc, tc);
  std::cout << vdr::run_config_json(mc, tc) << "\n";

  vdr::Vocabulary vocab = vdr::load_vocab(tc.vocab_path);
  vdr::RemapTable remap;
  bool have_remap = false;
  vdr::EmbeddingInit embed;
  if (!tc.vectors_path.empty()) {
    vdr::PretrainedVectors vectors = vdr::PretrainedVectors::load_file(tc.vectors_path);
    vdr::require(vectors.dim == mc.embed_dim, "embed-dim",
                 "vector file dimension " + std::to_string(vectors.dim) +
                     " does not match embed_dim " + std::to_string(mc.embed_dim));
    vdr::LoadedEmbeddings loaded = vdr::load_pretrained(vectors, vocab, tc.seed);
    embed = std::move(loaded.init);
    if (!tc.remap_path.empty()) {
      remap = tc.remap_path == "builtin" ? vdr::RemapTable::builtin_default()
                                         : vdr::RemapTable::load_file(tc.remap_path);
      vdr::apply_remap(embed, vocab, remap, vectors);
      have_remap = true;
    }
    std::cout << "embeddings: " << vocab.size() - loaded.missing.size() << "/" << vocab.size()
              << " rows pretrained, " << loaded.missing.size() << " missing\n";
  } else {
    embed = vdr::random_embeddings(vocab, mc.embed_dim, tc.seed);
    std::cout << "embeddings: random init (no vector file)\n";
  }

  vdr::Dataset data = vdr::load_dialogs(tc.data_path, vocab, have_remap ? &remap.keys : nullptr);
  vdr::FeatureStore features = vdr::load_features(tc.features_path);

  auto on_epoch = [](const vdr::EpochStats& s) {
    char line[120];
    if (s.train_top1) {
      std::snprintf(line, sizeof(line), "epoch %4d  loss %.6f  train-r@1 %.4f", s.epoch,
                    s.mean_loss, *s.train_top1);
    } else {
      std::snprintf(line, sizeof(line), "epoch %4d  loss %.6f", s.epoch, s.mean_loss);
    }
    std::cout << line << "\n";
  };
  vdr::Checkpoint ckpt =
      vdr::train(mc, tc, data, features, std::move(embed), vocab, tc.output_path, on_epoch);
  std::cout << "checkpoint: " << tc.output_path << " (epoch " << ckpt.epoch << ")\n";
}

struct PredictArgs {
  std::string checkpoint, data, features, out;
};

void run_predict(const PredictArgs& a) {
  echo("predict", {{"checkpoint", a.checkpoint},
                   {"data", a.data},
                   {"features", a.features},
                   {"out", a.out}});
  vdr::Checkpoint ckpt = vdr::load_checkpoint(a.checkpoint);
  std::unordered_set<std::string> keep;
  const auto& embed = ckpt.params.embed;
  for (std::size_t i = 0; i < embed.provenance.size(); ++i) {
    if (embed.provenance[i] == vdr::Provenance::remapped) keep.insert(ckpt.vocab.id_to_token[i]);
  }
  vdr::Dataset data = vdr::load_dialogs(a.data, ckpt.vocab, keep.empty() ? nullptr : &keep);
  vdr::FeatureStore features = vdr::load_features(a.features);
  vdr::PredictionSet preds = vdr::predict(ckpt.params, data, features);
  vdr::save_predictions(preds, a.out);
  std::cout << "wrote " << preds.size() << " rows -> " << a.out << "\n";
}

struct EnsembleArgs {
  std::string mode = "mean";
  std::vector<std::string> inputs;
  std::string out;
};

void run_ensemble(const EnsembleArgs& a) {
  echo("ensemble", {{"mode", a.mode}, {"inputs", a.inputs}, {"out", a.out}});
  vdr::EnsembleMode mode = vdr::ensemble_mode_from_string(a.mode);
  vdr::PredictionSet combined = vdr::combine_files(a.inputs, mode);
  vdr::save_predictions(combined, a.out);
  std::cout << "wrote " << combined.size() << " rows -> " << a.out << "\n";
}

struct EvaluateArgs {
  std::vector<std::string> preds;
  std::vector<std::string> names;
  std::string data;
  std::string report;
};

void run_evaluate(const EvaluateArgs& a) {
  echo("evaluate",
       {{"pred", a.preds}, {"name", a.names}, {"data", a.data}, {"report", a.report}});
  vdr::require(a.names.empty() || a.names.size() == a.preds.size(), "evaluate-args",
               "--name must be given once per --pred or not at all");
  vdr::require(a.report.empty() || a.preds.size() == 1, "evaluate-args",
               "--report works with a single --pred");

  // Metrics depend only on scores, gt indices, and relevance, so the dataset
  // is tokenized against an empty vocabulary.
  vdr::RawDataset raw = vdr::load_raw_dataset(a.data);
  vdr::Vocabulary dummy = vdr::Vocabulary::from_tokens({});
  vdr::Dataset data = vdr::tokenize_dataset(raw, dummy, nullptr);

  std::vector<std::pair<std::string, vdr::RankingReport>> rows;
  for (std::size_t i = 0; i < a.preds.size(); ++i) {
    vdr::PredictionSet preds = vdr::load_predictions(a.preds[i]);
    vdr::RankingReport report = vdr::evaluate(preds, data);
    std::string name = i < a.names.size() ? a.names[i]
                                          : std::filesystem::path(a.preds[i]).stem().string();
    rows.emplace_back(std::move(name), report);
  }
  if (rows.size() == 1) {
    std::cout << vdr::format_report(rows[0].second);
    if (!a.report.empty()) {
      vdr::save_report(rows[0].second, a.report);
      std::cout << "report -> " << a.report << "\n";
    }
  } else {
    std::cout << vdr::format_report_table(rows);
  }
}

void run_grad_check(double tol) {
  echo("grad_check", {{"tol", tol}});
  std::vector<vdr::GradSuiteEntry> entries = vdr::run_grad_suite(tol);
  std::cout << vdr::format_grad_suite(entries);
  if (!vdr::all_pass(entries)) {
    vdr::fail_runtime("grad-check", "at least one gradient probe exceeded tolerance");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discriminative visual-dialog models: train, ensemble, evaluate"};
  app.require_subcommand(1);

  BuildVocabArgs bv;
  CLI::App* bv_cmd = app.add_subcommand("build-vocab", "Build a vocabulary from dataset files");
  bv_cmd->add_option("--data", bv.data, "Dataset JSON file (repeatable)")->required();
  bv_cmd->add_option("--min-count", bv.min_count, "Minimum token count");
  bv_cmd->add_option("--remap-file", bv.remap_file,
                     "Remap table whose keys are kept verbatim ('builtin' for the built-in table)");
  bv_cmd->add_option("--out", bv.out, "Output vocabulary file")->required();
  bv_cmd->callback([&] { run_build_vocab(bv); });

  GenSyntheticArgs gs;
  CLI::App* gs_cmd =
      app.add_subcommand("gen-synthetic", "Generate the planted-attribute synthetic corpus");
  gs.cmd = gs_cmd;
  gs_cmd->add_option("--config", gs.config, "Synthetic config JSON file");
  gs_cmd->add_option("--dialogs", gs.sc.n_dialogs, "Training dialogs");
  gs_cmd->add_option("--holdout", gs.sc.n_holdout, "Held-out dialogs");
  gs_cmd->add_option("--rounds", gs.sc.n_rounds, "Rounds per dialog");
  gs_cmd->add_option("--cand", gs.sc.n_cand, "Candidates per round");
  gs_cmd->add_option("--vocab-size", gs.sc.vocab_size, "Vocabulary budget");
  gs_cmd->add_option("--d-img", gs.sc.d_img, "Region feature dimension");
  gs_cmd->add_option("--k-min", gs.sc.k_min, "Minimum regions per image");
  gs_cmd->add_option("--k-max", gs.sc.k_max, "Maximum regions per image");
  gs_cmd->add_option("--clusters", gs.sc.n_clusters, "Latent clusters");
  gs_cmd->add_option("--seed", gs.sc.seed, "Generator seed");
  gs_cmd->add_option("--out-dir", gs.out_dir, "Output directory")->required();
  gs_cmd->callback([&] { run_gen_synthetic(gs); });

  TrainArgs tr;
  CLI::App* tr_cmd = app.add_subcommand("train", "Train one model and write its checkpoint");
  tr.cmd = tr_cmd;
  tr_cmd->add_option("--config", tr.config, "Run config JSON ({\"model\":{…},\"train\":{…}})");
  tr_cmd->add_option("--model", tr.model, "lf_rcnn | mn_rcnn | mn_rcnn_wt");
  tr_cmd->add_option("--hidden", tr.hidden, "RNN hidden size");
  tr_cmd->add_option("--embed-dim", tr.embed_dim, "Word embedding dimension");
  tr_cmd->add_option("--d-img", tr.d_img, "Region feature dimension");
  tr_cmd->add_option("--embed-trainable", tr.embed_trainable,
                     "Override the per-model embedding freeze (true|false)");
  tr_cmd->add_option("--epochs", tr.epochs, "Training epochs");
  tr_cmd->add_option("--batch-size", tr.batch_size, "Rounds per optimization step");
  tr_cmd->add_option("--lr", tr.learning_rate, "Learning rate");
  tr_cmd->add_option("--eval-every", tr.eval_every, "Epochs between train-accuracy probes");
  tr_cmd->add_option("--seed", tr.seed, "Run seed");
  tr_cmd->add_option("--data", tr.data, "Training dataset JSON");
  tr_cmd->add_option("--features", tr.features, "Region feature file");
  tr_cmd->add_option("--vocab", tr.vocab, "Vocabulary file");
  tr_cmd->add_option("--vectors", tr.vectors, "Pretrained vector file (optional)");
  tr_cmd->add_option("--remap-file", tr.remap_file,
                     "OOV remap table ('builtin' for the built-in table)");
  tr_cmd->add_option("--out", tr.out, "Checkpoint output path");
  tr_cmd->callback([&] { run_train(tr); });

  PredictArgs pr;
  CLI::App* pr_cmd = app.add_subcommand("predict", "Score a dataset with a trained checkpoint");
  pr_cmd->add_option("--checkpoint", pr.checkpoint, "Checkpoint file")->required();
  pr_cmd->add_option("--data", pr.data, "Dataset JSON")->required();
  pr_cmd->add_option("--features", pr.features, "Region feature file")->required();
  pr_cmd->add_option("--out", pr.out, "Prediction output file")->required();
  pr_cmd->callback([&] { run_predict(pr); });

  EnsembleArgs en;
  CLI::App* en_cmd = app.add_subcommand("ensemble", "Combine prediction files");
  en_cmd->add_option("--mode", en.mode, "mean | max");
  en_cmd->add_option("--in", en.inputs, "Prediction file (repeatable)")->required();
  en_cmd->add_option("--out", en.out, "Combined output file")->required();
  en_cmd->callback([&] { run_ensemble(en); });

  EvaluateArgs ev;
  CLI::App* ev_cmd = app.add_subcommand("evaluate", "Score prediction files against a dataset");
  ev_cmd->add_option("--pred", ev.preds, "Prediction file (repeatable)")->required();
  ev_cmd->add_option("--name", ev.names, "Row label, once per --pred");
  ev_cmd->add_option("--data", ev.data, "Dataset JSON with ground truth")->required();
  ev_cmd->add_option("--report", ev.report, "Write the report JSON here (single --pred only)");
  ev_cmd->callback([&] { run_evaluate(ev); });

  double tol = 1e-4;
  CLI::App* gc_cmd =
      app.add_subcommand("grad-check", "Compare analytic gradients against central differences");
  gc_cmd->add_option("--tol", tol, "Maximum allowed relative error");
  gc_cmd->callback([&] { run_grad_check(tol); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const vdr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == vdr::Error::Kind::validation ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
