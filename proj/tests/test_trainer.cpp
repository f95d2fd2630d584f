#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "vdr/ensemble.hpp"
#include "vdr/error.hpp"
#include "vdr/metrics.hpp"
#include "vdr/rng.hpp"
#include "vdr/synthetic.hpp"
#include "vdr/tokenize.hpp"
#include "vdr/trainer.hpp"

using namespace vdr;

namespace {

std::string error_id(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.id();
  }
  return "";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

struct TinyCorpus {
  Dataset data;
  FeatureStore features;
  Vocabulary vocab;
};

// Three dialogs, two rounds, four candidates — big enough to exercise every
// code path, small enough that multi-epoch cases stay fast.
const TinyCorpus& tiny_corpus() {
  static const TinyCorpus corpus = [] {
    SyntheticConfig config;
    config.n_dialogs = 3;
    config.n_holdout = 0;
    config.n_rounds = 2;
    config.n_cand = 4;
    config.vocab_size = 30;
    config.d_img = 4;
    config.k_min = 2;
    config.k_max = 3;
    config.n_clusters = 4;
    config.seed = 11;
    const SyntheticCorpus generated = gen_synthetic(config);

    std::vector<std::vector<std::string>> tokens;
    for (const RawDialog& d : generated.train.dialogs) {
      tokens.push_back(normalize_tokenize(d.caption));
      for (const RawRound& r : d.rounds) {
        tokens.push_back(normalize_tokenize(r.question));
        for (const std::string& c : r.candidates) tokens.push_back(normalize_tokenize(c));
      }
    }
    TinyCorpus out;
    out.vocab = build_vocab(tokens, 1);
    out.data = tokenize_dataset(generated.train, out.vocab, nullptr);
    out.features = generated.features;
    return out;
  }();
  return corpus;
}

ModelConfig tiny_model_config(ModelKind kind) {
  ModelConfig config;
  config.kind = kind;
  config.hidden = 4;
  config.embed_dim = 4;
  config.d_img = 4;
  return config;
}

TrainConfig tiny_train_config(int epochs) {
  TrainConfig config;
  config.epochs = epochs;
  config.batch_size = 3;
  config.eval_every = 0;
  config.seed = 5;
  return config;
}

EmbeddingInit tiny_embeddings() {
  return random_embeddings(tiny_corpus().vocab, 4, 99);
}

bool params_equal(const ModelParameters& a, const ModelParameters& b) {
  std::vector<const Tensor*> ta;
  std::vector<const Tensor*> tb;
  a.visit([&](const std::string&, const Tensor& t, bool) { ta.push_back(&t); });
  b.visit([&](const std::string&, const Tensor& t, bool) { tb.push_back(&t); });
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (!(*ta[i] == *tb[i])) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("a zero learning rate leaves every parameter bit-identical") {
  const TinyCorpus& corpus = tiny_corpus();
  const ModelConfig model_config = tiny_model_config(ModelKind::lf_rcnn);
  TrainConfig config = tiny_train_config(1);
  config.learning_rate = 0.0;

  const Checkpoint after = train(model_config, config, corpus.data, corpus.features,
                                 tiny_embeddings(), corpus.vocab);
  const ModelParameters reference =
      ModelParameters::init(model_config, tiny_embeddings(), config.seed);
  CHECK(params_equal(after.params, reference));
  CHECK(after.epoch == 1);
  CHECK(after.loss_history.size() == 1);
}

TEST_CASE("frozen embeddings never move while trainable embeddings do") {
  const TinyCorpus& corpus = tiny_corpus();
  const EmbeddingInit embed = tiny_embeddings();

  const Checkpoint frozen = train(tiny_model_config(ModelKind::lf_rcnn), tiny_train_config(2),
                                  corpus.data, corpus.features, embed, corpus.vocab);
  CHECK_FALSE(frozen.params.embed.trainable);
  CHECK(frozen.params.embed.matrix == embed.matrix);

  const Checkpoint tuned = train(tiny_model_config(ModelKind::mn_rcnn), tiny_train_config(2),
                                 corpus.data, corpus.features, embed, corpus.vocab);
  CHECK(tuned.params.embed.trainable);
  CHECK_FALSE(tuned.params.embed.matrix == embed.matrix);
}

TEST_CASE("identical seeds reproduce checkpoints and predictions byte for byte") {
  const TinyCorpus& corpus = tiny_corpus();
  const ModelConfig model_config = tiny_model_config(ModelKind::mn_rcnn_wt);
  const TrainConfig config = tiny_train_config(2);

  const Checkpoint a = train(model_config, config, corpus.data, corpus.features,
                             tiny_embeddings(), corpus.vocab, "tmp_det_a.ckpt");
  const Checkpoint b = train(model_config, config, corpus.data, corpus.features,
                             tiny_embeddings(), corpus.vocab, "tmp_det_b.ckpt");
  CHECK(read_file("tmp_det_a.ckpt") == read_file("tmp_det_b.ckpt"));
  CHECK(a.loss_history == b.loss_history);

  save_predictions(predict(a.params, corpus.data, corpus.features), "tmp_det_a.jsonl");
  save_predictions(predict(b.params, corpus.data, corpus.features), "tmp_det_b.jsonl");
  CHECK(read_file("tmp_det_a.jsonl") == read_file("tmp_det_b.jsonl"));

  TrainConfig reseeded = config;
  reseeded.seed = 6;
  const Checkpoint c = train(model_config, reseeded, corpus.data, corpus.features,
                             tiny_embeddings(), corpus.vocab);
  CHECK_FALSE(params_equal(a.params, c.params));
}

TEST_CASE("gradient clipping caps the global norm and spares small gradients") {
  Tensor a = Tensor::from({3.0, 4.0});
  Tensor b = Tensor::from({12.0});  // joint norm sqrt(9 + 16 + 144) = 13
  std::vector<Tensor*> grads{&a, &b};
  CHECK(clip_global_norm(grads, 5.0) == doctest::Approx(13.0));
  double sq = 0.0;
  for (const Tensor* g : grads) {
    for (double x : g->span()) sq += x * x;
  }
  CHECK(std::sqrt(sq) <= 5.0 + 1e-9);
  CHECK(std::sqrt(sq) == doctest::Approx(5.0));

  Tensor small = Tensor::from({0.3, -0.4});
  std::vector<Tensor*> tiny{&small};
  CHECK(clip_global_norm(tiny, 5.0) == doctest::Approx(0.5));
  CHECK(small.span()[0] == 0.3);
  CHECK(small.span()[1] == -0.4);
}

TEST_CASE("checkpoints round trip bitwise and feed identical predictions") {
  const TinyCorpus& corpus = tiny_corpus();
  TrainConfig config = tiny_train_config(2);
  config.data_path = "train.json";
  config.output_path = "tmp_rt.ckpt";
  const Checkpoint trained = train(tiny_model_config(ModelKind::mn_rcnn), config, corpus.data,
                                   corpus.features, tiny_embeddings(), corpus.vocab,
                                   "tmp_rt.ckpt");

  const Checkpoint loaded = load_checkpoint("tmp_rt.ckpt");
  CHECK(loaded.params.config == trained.params.config);
  CHECK(loaded.train == trained.train);
  CHECK(loaded.epoch == 2);
  CHECK(loaded.loss_history == trained.loss_history);
  CHECK(loaded.vocab.id_to_token == trained.vocab.id_to_token);
  CHECK(loaded.params.embed.trainable == trained.params.embed.trainable);
  CHECK(loaded.params.embed.provenance == trained.params.embed.provenance);
  CHECK(loaded.params.embed.remap_target == trained.params.embed.remap_target);
  CHECK(params_equal(loaded.params, trained.params));

  save_checkpoint(loaded, "tmp_rt2.ckpt");
  CHECK(read_file("tmp_rt.ckpt") == read_file("tmp_rt2.ckpt"));

  save_predictions(predict(trained.params, corpus.data, corpus.features), "tmp_rt_a.jsonl");
  save_predictions(predict(loaded.params, corpus.data, corpus.features), "tmp_rt_b.jsonl");
  CHECK(read_file("tmp_rt_a.jsonl") == read_file("tmp_rt_b.jsonl"));
}

TEST_CASE("corrupted checkpoint files are rejected") {
  CHECK(error_id([] { load_checkpoint("tmp_does_not_exist.ckpt"); }) == "checkpoint-parse");

  write_file("tmp_bad_magic.ckpt", "NOTACKPTxxxxxxxxxxxxxxxx");
  CHECK(error_id([] { load_checkpoint("tmp_bad_magic.ckpt"); }) == "checkpoint-parse");

  const std::string good = read_file("tmp_rt.ckpt");
  REQUIRE(good.size() > 64);
  write_file("tmp_truncated.ckpt", good.substr(0, good.size() - 16));
  CHECK(error_id([] { load_checkpoint("tmp_truncated.ckpt"); }) == "checkpoint-parse");

  write_file("tmp_trailing.ckpt", good + "xx");
  CHECK(error_id([] { load_checkpoint("tmp_trailing.ckpt"); }) == "checkpoint-parse");

  std::string broken_header = good;
  broken_header[sizeof("VDCKPT1") - 1 + 8 + 2] = '\x01';  // inside the header JSON
  write_file("tmp_broken_header.ckpt", broken_header);
  CHECK(error_id([] { load_checkpoint("tmp_broken_header.ckpt"); }) == "checkpoint-parse");
}

TEST_CASE("a non-finite loss aborts with the step number and keeps the last checkpoint") {
  const TinyCorpus& corpus = tiny_corpus();
  EmbeddingInit poisoned = tiny_embeddings();
  poisoned.matrix.fill(std::numeric_limits<double>::quiet_NaN());

  std::string id;
  try {
    train(tiny_model_config(ModelKind::lf_rcnn), tiny_train_config(1), corpus.data,
          corpus.features, poisoned, corpus.vocab, "tmp_diverged.ckpt");
  } catch (const Error& e) {
    id = e.id();
    CHECK(e.kind() == Error::Kind::runtime);
  }
  CHECK(id == "diverged@1");

  // The pre-training snapshot written before the loop is still loadable.
  const Checkpoint retained = load_checkpoint("tmp_diverged.ckpt");
  CHECK(retained.epoch == 0);
  CHECK(retained.loss_history.empty());
}

TEST_CASE("a short run drives the training loss down") {
  const TinyCorpus& corpus = tiny_corpus();
  TrainConfig config = tiny_train_config(8);
  config.eval_every = 4;
  std::vector<EpochStats> stats;
  const Checkpoint trained =
      train(tiny_model_config(ModelKind::lf_rcnn), config, corpus.data, corpus.features,
            tiny_embeddings(), corpus.vocab, "", [&](const EpochStats& s) { stats.push_back(s); });
  CHECK(trained.loss_history.size() == 8);
  CHECK(trained.loss_history.back() < trained.loss_history.front());
  REQUIRE(stats.size() == 8);
  CHECK(stats[3].train_top1.has_value());
  CHECK_FALSE(stats[0].train_top1.has_value());
  CHECK(stats[7].train_top1.has_value());
}

TEST_CASE("run config files layer over defaults and reject unknown keys") {
  ModelConfig model;
  TrainConfig train_config;
  write_file("tmp_run_config.json", R"({"train": {"epochs": 7}})");
  load_run_config("tmp_run_config.json", model, train_config);
  CHECK(train_config.epochs == 7);
  CHECK(train_config.batch_size == 20);
  CHECK(model.kind == ModelKind::lf_rcnn);

  write_file("tmp_run_config.json",
             R"({"model": {"kind": "mn_rcnn", "hidden": 8}, "train": {"adam_betas": [0.8, 0.99]}})");
  load_run_config("tmp_run_config.json", model, train_config);
  CHECK(model.kind == ModelKind::mn_rcnn);
  CHECK(model.hidden == 8);
  CHECK(train_config.beta1 == 0.8);
  CHECK(train_config.beta2 == 0.99);
  CHECK(train_config.epochs == 7);  // still layered from the earlier file

  write_file("tmp_run_config.json", R"({"train": {"momentum": 0.9}})");
  CHECK(error_id([&] { load_run_config("tmp_run_config.json", model, train_config); }) ==
        "train-config");
  write_file("tmp_run_config.json", R"({"model": {"width": 4}})");
  CHECK(error_id([&] { load_run_config("tmp_run_config.json", model, train_config); }) ==
        "model-config");
  write_file("tmp_run_config.json", R"({"optimizer": {}})");
  CHECK(error_id([&] { load_run_config("tmp_run_config.json", model, train_config); }) ==
        "train-config");
  write_file("tmp_run_config.json", "not json");
  CHECK(error_id([&] { load_run_config("tmp_run_config.json", model, train_config); }) ==
        "train-config");

  save_run_config("tmp_run_config.json", model, train_config);
  const std::string echoed = read_file("tmp_run_config.json");
  CHECK(echoed.find("adam_betas") != std::string::npos);
  CHECK(echoed.find("grad_clip_norm") != std::string::npos);
}

TEST_CASE("invalid training configurations are rejected up front") {
  TrainConfig config;
  config.epochs = 0;
  CHECK(error_id([&] { config.validate(); }) == "train-config");
  config = TrainConfig{};
  config.learning_rate = -1.0;
  CHECK(error_id([&] { config.validate(); }) == "train-config");
  config = TrainConfig{};
  config.beta2 = 1.0;
  CHECK(error_id([&] { config.validate(); }) == "train-config");
  config = TrainConfig{};
  config.grad_clip_norm = 0.0;
  CHECK(error_id([&] { config.validate(); }) == "train-config");
  config = TrainConfig{};
  CHECK(error_id([&] { config.validate(); }) == "");
}

TEST_CASE("predict emits sorted unit-mass rows and misses loudly") {
  const TinyCorpus& corpus = tiny_corpus();
  const ModelParameters params =
      ModelParameters::init(tiny_model_config(ModelKind::lf_rcnn), tiny_embeddings(), 3);

  const PredictionSet preds = predict(params, corpus.data, corpus.features);
  CHECK(preds.size() == corpus.data.dialogs.size() * 2);
  for (std::size_t i = 1; i < preds.size(); ++i) {
    const bool ordered = preds[i - 1].dialog_id < preds[i].dialog_id ||
                         (preds[i - 1].dialog_id == preds[i].dialog_id &&
                          preds[i - 1].round < preds[i].round);
    CHECK(ordered);
  }
  for (const PredictionRow& row : preds) {
    CHECK(row.log_probs.size() == 4);
    double mass = 0.0;
    for (double v : row.log_probs) mass += std::exp(v);
    CHECK(std::abs(mass - 1.0) < 1e-6);
  }
  const PredictionSet again = predict(params, corpus.data, corpus.features);
  REQUIRE(again.size() == preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    CHECK(again[i].log_probs == preds[i].log_probs);
  }

  FeatureStore missing = corpus.features;
  missing.by_image.erase(corpus.data.dialogs[0].image_id);
  const std::string id = error_id([&] { predict(params, corpus.data, missing); });
  CHECK(id == "feature-miss:" + std::to_string(corpus.data.dialogs[0].image_id));
}
