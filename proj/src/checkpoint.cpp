#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "vdr/checkpoint.hpp"
#include "vdr/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint files are little-endian and read without byte swapping");

namespace vdr {

namespace {

using json = nlohmann::ordered_json;

constexpr char kMagic[7] = {'V', 'D', 'C', 'K', 'P', 'T', '1'};
constexpr int kVersion = 1;

json model_config_json(const ModelConfig& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["hidden"] = c.hidden;
  j["embed_dim"] = c.embed_dim;
  j["d_img"] = c.d_img;
  j["attn_dim"] = c.attn_dim;
  j["gate_dim"] = c.gate_dim;
  j["embed_trainable"] = c.embed_trainable ? json(*c.embed_trainable) : json(nullptr);
  j["decoder"] = c.decoder ? json(to_string(*c.decoder)) : json(nullptr);
  return j;
}

// Applies only the keys present, so partial config files layer over defaults.
void apply_model_config(const json& j, ModelConfig& c) {
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "kind") {
        c.kind = model_kind_from_string(value.get<std::string>());
      } else if (key == "hidden") {
        c.hidden = value.get<std::size_t>();
      } else if (key == "embed_dim") {
        c.embed_dim = value.get<std::size_t>();
      } else if (key == "d_img") {
        c.d_img = value.get<std::size_t>();
      } else if (key == "attn_dim") {
        c.attn_dim = value.get<std::size_t>();
      } else if (key == "gate_dim") {
        c.gate_dim = value.get<std::size_t>();
      } else if (key == "embed_trainable") {
        if (value.is_null()) {
          c.embed_trainable.reset();
        } else {
          c.embed_trainable = value.get<bool>();
        }
      } else if (key == "decoder") {
        if (value.is_null()) {
          c.decoder.reset();
        } else {
          c.decoder = decoder_variant_from_string(value.get<std::string>());
        }
      } else {
        fail("model-config", "unknown model config key: " + key);
      }
    } catch (const json::exception& e) {
      fail("model-config", "bad value for model config key " + key + ": " + e.what());
    }
  }
}

json train_config_json(const TrainConfig& c) {
  json j;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["learning_rate"] = c.learning_rate;
  j["adam_betas"] = {c.beta1, c.beta2};
  j["adam_eps"] = c.adam_eps;
  j["grad_clip_norm"] = c.grad_clip_norm;
  j["seed"] = c.seed;
  j["eval_every"] = c.eval_every;
  j["paths"] = {{"data", c.data_path},     {"features", c.features_path},
                {"vocab", c.vocab_path},   {"vectors", c.vectors_path},
                {"remap", c.remap_path},   {"output", c.output_path}};
  return j;
}

void apply_train_paths(const json& j, TrainConfig& c) {
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "data") {
        c.data_path = value.get<std::string>();
      } else if (key == "features") {
        c.features_path = value.get<std::string>();
      } else if (key == "vocab") {
        c.vocab_path = value.get<std::string>();
      } else if (key == "vectors") {
        c.vectors_path = value.get<std::string>();
      } else if (key == "remap") {
        c.remap_path = value.get<std::string>();
      } else if (key == "output") {
        c.output_path = value.get<std::string>();
      } else {
        fail("train-config", "unknown path key: " + key);
      }
    } catch (const json::exception& e) {
      fail("train-config", "bad value for path key " + key + ": " + e.what());
    }
  }
}

void apply_train_config(const json& j, TrainConfig& c) {
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "epochs") {
        c.epochs = value.get<int>();
      } else if (key == "batch_size") {
        c.batch_size = value.get<std::size_t>();
      } else if (key == "learning_rate") {
        c.learning_rate = value.get<double>();
      } else if (key == "adam_betas") {
        require(value.is_array() && value.size() == 2, "train-config",
                "adam_betas must be a pair");
        c.beta1 = value[0].get<double>();
        c.beta2 = value[1].get<double>();
      } else if (key == "adam_eps") {
        c.adam_eps = value.get<double>();
      } else if (key == "grad_clip_norm") {
        c.grad_clip_norm = value.get<double>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "eval_every") {
        c.eval_every = value.get<int>();
      } else if (key == "paths") {
        apply_train_paths(value, c);
      } else {
        fail("train-config", "unknown train config key: " + key);
      }
    } catch (const json::exception& e) {
      fail("train-config", "bad value for train config key " + key + ": " + e.what());
    }
  }
}

std::string provenance_string(const EmbeddingInit& embed, std::size_t row) {
  switch (embed.provenance[row]) {
    case Provenance::pretrained:
      return "pretrained";
    case Provenance::remapped:
      return "remapped:" + embed.remap_target[row];
    case Provenance::random:
      return "random";
  }
  fail("checkpoint-parse", "unreachable provenance tag");
}

void apply_provenance(const std::string& s, EmbeddingInit& embed, std::size_t row) {
  if (s == "pretrained") {
    embed.provenance[row] = Provenance::pretrained;
  } else if (s == "random") {
    embed.provenance[row] = Provenance::random;
  } else if (s.rfind("remapped:", 0) == 0 && s.size() > 9) {
    embed.provenance[row] = Provenance::remapped;
    embed.remap_target[row] = s.substr(9);
  } else {
    fail("checkpoint-parse", "unknown provenance tag: " + s);
  }
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(in.gcount() == static_cast<std::streamsize>(sizeof(T)), "checkpoint-parse",
          "checkpoint file ends mid-record");
  return v;
}

}  // namespace

void TrainConfig::validate() const {
  require(epochs >= 1, "train-config", "epochs must be at least 1");
  require(batch_size >= 1, "train-config", "batch size must be at least 1");
  // Zero is allowed so a zero-step probe run can assert parameter identity.
  require(learning_rate >= 0.0, "train-config", "learning rate must not be negative");
  require(beta1 >= 0.0 && beta1 < 1.0, "train-config", "beta1 must lie in [0, 1)");
  require(beta2 >= 0.0 && beta2 < 1.0, "train-config", "beta2 must lie in [0, 1)");
  require(adam_eps > 0.0, "train-config", "adam_eps must be positive");
  require(grad_clip_norm > 0.0, "train-config", "grad_clip_norm must be positive");
  require(eval_every >= 0, "train-config", "eval_every must not be negative");
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  json header;
  header["version"] = kVersion;
  header["model"] = model_config_json(ckpt.params.config);
  header["train"] = train_config_json(ckpt.train);
  header["epoch"] = ckpt.epoch;
  header["loss_history"] = ckpt.loss_history;

  json vocab = json::array();
  for (std::size_t id = 2; id < ckpt.vocab.id_to_token.size(); ++id) {
    vocab.push_back(ckpt.vocab.id_to_token[id]);
  }
  header["vocab"] = std::move(vocab);

  const EmbeddingInit& embed = ckpt.params.embed;
  json prov = json::array();
  for (std::size_t row = 0; row < embed.matrix.rows(); ++row) {
    prov.push_back(provenance_string(embed, row));
  }
  header["embed"] = {{"trainable", embed.trainable}, {"provenance", std::move(prov)}};

  json shapes = json::array();
  ckpt.params.visit([&](const std::string& name, const Tensor& t, bool) {
    shapes.push_back({{"name", name}, {"rows", t.rows()}, {"cols", t.cols()}});
  });
  header["params"] = std::move(shapes);

  std::ofstream out(path, std::ios::binary);
  require(out.good(), "checkpoint-parse", "cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::string bytes = header.dump();
  const std::uint64_t len = bytes.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  ckpt.params.visit([&](const std::string&, const Tensor& t, bool) {
    const auto span = t.span();
    out.write(reinterpret_cast<const char*>(span.data()),
              static_cast<std::streamsize>(span.size() * sizeof(double)));
  });
  require(out.good(), "checkpoint-parse", "failed writing checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "checkpoint-parse", "cannot open checkpoint: " + path);

  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  require(in.gcount() == static_cast<std::streamsize>(sizeof(magic)) &&
              std::memcmp(magic, kMagic, sizeof(magic)) == 0,
          "checkpoint-parse", "not a checkpoint file (bad magic): " + path);

  const std::uint64_t len = read_pod<std::uint64_t>(in);
  std::string bytes(len, '\0');
  in.read(bytes.data(), static_cast<std::streamsize>(len));
  require(in.gcount() == static_cast<std::streamsize>(len), "checkpoint-parse",
          "checkpoint header shorter than its declared length");

  json header;
  try {
    header = json::parse(bytes);
  } catch (const json::exception& e) {
    fail("checkpoint-parse", std::string("checkpoint header is not valid JSON: ") + e.what());
  }

  Checkpoint ckpt;
  try {
    require(header.at("version").get<int>() == kVersion, "checkpoint-parse",
            "unsupported checkpoint version");

    ModelConfig config;
    apply_model_config(header.at("model"), config);
    config.validate();
    apply_train_config(header.at("train"), ckpt.train);
    ckpt.epoch = header.at("epoch").get<int>();
    ckpt.loss_history = header.at("loss_history").get<std::vector<double>>();
    ckpt.vocab = Vocabulary::from_tokens(header.at("vocab").get<std::vector<std::string>>());

    const json& embed_j = header.at("embed");
    EmbeddingInit embed;
    embed.matrix = Tensor::matrix(ckpt.vocab.size(), config.embed_dim);
    embed.provenance.assign(ckpt.vocab.size(), Provenance::random);
    embed.remap_target.assign(ckpt.vocab.size(), "");
    embed.trainable = embed_j.at("trainable").get<bool>();
    const json& prov = embed_j.at("provenance");
    require(prov.size() == ckpt.vocab.size(), "checkpoint-parse",
            "provenance list does not match the vocabulary size");
    for (std::size_t row = 0; row < prov.size(); ++row) {
      apply_provenance(prov[row].get<std::string>(), embed, row);
    }

    ckpt.params = ModelParameters::init(config, std::move(embed), 0);

    const json& shapes = header.at("params");
    std::size_t at = 0;
    ckpt.params.visit([&](const std::string& name, Tensor& t, bool) {
      require(at < shapes.size(), "checkpoint-parse", "checkpoint header lists too few tensors");
      const json& entry = shapes[at++];
      require(entry.at("name").get<std::string>() == name &&
                  entry.at("rows").get<std::size_t>() == t.rows() &&
                  entry.at("cols").get<std::size_t>() == t.cols(),
              "checkpoint-parse", "checkpoint tensor layout mismatch at " + name);
      auto span = t.span();
      in.read(reinterpret_cast<char*>(span.data()),
              static_cast<std::streamsize>(span.size() * sizeof(double)));
      require(in.gcount() == static_cast<std::streamsize>(span.size() * sizeof(double)),
              "checkpoint-parse", "checkpoint blob truncated at " + name);
    });
    require(at == shapes.size(), "checkpoint-parse", "checkpoint header lists too many tensors");
  } catch (const json::exception& e) {
    fail("checkpoint-parse", std::string("checkpoint header field missing or mistyped: ") +
                                 e.what());
  }
  require(in.peek() == std::ifstream::traits_type::eof(), "checkpoint-parse",
          "checkpoint has trailing bytes");
  return ckpt;
}

std::string run_config_json(const ModelConfig& model, const TrainConfig& train) {
  json j;
  j["model"] = model_config_json(model);
  j["train"] = train_config_json(train);
  return j.dump(2);
}

void load_run_config(const std::string& path, ModelConfig& model, TrainConfig& train) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "train-config", "cannot open run config: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail("train-config", std::string("run config is not valid JSON: ") + e.what());
  }
  for (const auto& [key, value] : j.items()) {
    if (key == "model") {
      apply_model_config(value, model);
    } else if (key == "train") {
      apply_train_config(value, train);
    } else {
      fail("train-config", "unknown run config section: " + key);
    }
  }
  model.validate();
  train.validate();
}

void save_run_config(const std::string& path, const ModelConfig& model, const TrainConfig& train) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "train-config", "cannot open run config for writing: " + path);
  out << run_config_json(model, train) << '\n';
  require(out.good(), "train-config", "failed writing run config: " + path);
}

}  // namespace vdr
