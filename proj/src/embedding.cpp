#include <cmath>
#include <fstream>
#include <sstream>

#include "vdr/embedding.hpp"
#include "vdr/error.hpp"
#include "vdr/rng.hpp"

namespace vdr {

void RemapTable::add(const std::string& missing, const std::string& target) {
  require(!missing.empty() && !target.empty(), "remap-chain:" + missing,
          "remap entries need both a missing token and a target");
  require(missing != target, "remap-chain:" + missing, "token cannot remap to itself");
  require(!entries.count(target), "remap-chain:" + target,
          "remap target is itself remapped: " + target);
  for (const auto& [m, t] : entries) {
    (void)m;
    require(t != missing, "remap-chain:" + missing,
            "token is already the target of another entry: " + missing);
  }
  entries[missing] = target;
  keys.insert(missing);
}

RemapTable RemapTable::builtin_default() {
  RemapTable t;
  for (const char* variant : {"*yes", "yesa", "yess", "ytes", "yes-", "yes3", "yyes", "yees"}) {
    t.add(variant, "yes");
  }
  return t;
}

RemapTable RemapTable::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "remap-target-missing:" + path, "cannot open remap table: " + path);
  RemapTable t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const std::size_t tab = line.find('\t');
    require(tab != std::string::npos, "remap-target-missing:line" + std::to_string(line_no),
            "remap line has no tab separator");
    auto trim = [](std::string s) {
      const std::size_t first = s.find_first_not_of(" \t");
      const std::size_t last = s.find_last_not_of(" \t");
      return first == std::string::npos ? std::string() : s.substr(first, last - first + 1);
    };
    t.add(trim(line.substr(0, tab)), trim(line.substr(tab + 1)));
  }
  return t;
}

PretrainedVectors PretrainedVectors::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "bad-vector-file:0", "cannot open vector file: " + path);
  PretrainedVectors v;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string token;
    ss >> token;
    std::vector<double> row;
    double x;
    while (ss >> x) row.push_back(x);
    const std::string where = "bad-vector-file:" + std::to_string(line_no);
    require(!token.empty() && !row.empty(), where, "vector line has no values");
    require(ss.eof(), where, "vector line has trailing garbage");
    if (v.dim == 0) v.dim = row.size();
    require(row.size() == v.dim, where, "inconsistent vector width");
    require(v.by_token.emplace(token, std::move(row)).second, where,
            "duplicate token in vector file: " + token);
  }
  require(v.dim > 0, "bad-vector-file:1", "vector file holds no vectors");
  return v;
}

namespace {

void fill_random_row(Tensor& matrix, std::size_t row, Rng& rng) {
  for (std::size_t c = 0; c < matrix.cols(); ++c) matrix.at(row, c) = rng.uniform(-0.1, 0.1);
}

}  // namespace

LoadedEmbeddings load_pretrained(const PretrainedVectors& vectors, const Vocabulary& vocab,
                                 std::uint64_t seed) {
  LoadedEmbeddings out;
  EmbeddingInit& init = out.init;
  init.matrix = Tensor::matrix(vocab.size(), vectors.dim);
  init.provenance.assign(vocab.size(), Provenance::random);
  init.remap_target.assign(vocab.size(), "");

  Rng rng = named_rng(seed, "embed-init");
  for (std::size_t id = 0; id < vocab.size(); ++id) {
    if (id == Vocabulary::pad_id) continue;  // padding row stays zero
    const std::string& token = vocab.id_to_token[id];
    const auto it = id == Vocabulary::unk_id ? vectors.by_token.end() : vectors.by_token.find(token);
    if (it != vectors.by_token.end()) {
      for (std::size_t c = 0; c < vectors.dim; ++c) init.matrix.at(id, c) = it->second[c];
      init.provenance[id] = Provenance::pretrained;
    } else {
      fill_random_row(init.matrix, id, rng);
      if (id >= 2) out.missing.push_back(token);
    }
  }
  return out;
}

EmbeddingInit random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed) {
  require(dim >= 1, "shape", "embedding width must be positive");
  EmbeddingInit init;
  init.matrix = Tensor::matrix(vocab.size(), dim);
  init.provenance.assign(vocab.size(), Provenance::random);
  init.remap_target.assign(vocab.size(), "");
  Rng rng = named_rng(seed, "embed-init");
  for (std::size_t id = 1; id < vocab.size(); ++id) fill_random_row(init.matrix, id, rng);
  return init;
}

void apply_remap(EmbeddingInit& init, const Vocabulary& vocab, const RemapTable& table,
                 const PretrainedVectors& vectors) {
  for (const auto& [missing, target] : table.entries) {
    (void)missing;
    require(vectors.by_token.count(target), "remap-target-missing:" + target,
            "remap target has no pretrained vector: " + target);
  }
  require(init.matrix.rows() == vocab.size() && init.matrix.cols() == vectors.dim, "shape",
          "embedding matrix does not match vocabulary and vector width");
  for (const auto& [missing, target] : table.entries) {
    const auto it = vocab.token_to_id.find(missing);
    if (it == vocab.token_to_id.end()) continue;
    const std::uint32_t id = it->second;
    if (init.provenance[id] != Provenance::random || id < 2) continue;
    const std::vector<double>& row = vectors.by_token.at(target);
    for (std::size_t c = 0; c < vectors.dim; ++c) init.matrix.at(id, c) = row[c];
    init.provenance[id] = Provenance::remapped;
    init.remap_target[id] = target;
  }
}

}  // namespace vdr
