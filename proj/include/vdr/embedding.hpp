#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "vdr/tensor.hpp"
#include "vdr/vocab.hpp"

namespace vdr {

// Where each embedding row came from: copied from the vector file, copied
// from another token's pretrained row, or drawn from the seeded generator.
enum class Provenance : std::uint8_t { pretrained, remapped, random };

struct EmbeddingInit {
  Tensor matrix;  // |V| x d
  std::vector<Provenance> provenance;
  std::vector<std::string> remap_target;  // per row; empty unless remapped
  bool trainable = true;

  std::size_t dim() const { return matrix.cols(); }
};

// Map missing-token → target-token. Targets may never themselves be keys
// (no chains), in either insertion order.
struct RemapTable {
  std::map<std::string, std::string> entries;
  std::unordered_set<std::string> keys;  // mirror of entries' key set

  void add(const std::string& missing, const std::string& target);

  // The known misspellings of "yes" that the pretrained vectors lack.
  static RemapTable builtin_default();

  // Lines "missing<TAB>target"; '#' starts a comment; blank lines ignored.
  static RemapTable load_file(const std::string& path);
};

// In-memory image of a vector file: "token v1 … vd" per line, uniform d.
struct PretrainedVectors {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<double>> by_token;

  static PretrainedVectors load_file(const std::string& path);
};

struct LoadedEmbeddings {
  EmbeddingInit init;
  std::vector<std::string> missing;  // vocab tokens absent from the file, id order
};

// Copies pretrained rows for tokens found in the file; rows for missing
// tokens are drawn uniform in [-0.1, 0.1] from the seeded stream and tagged
// random. The padding row stays zero.
LoadedEmbeddings load_pretrained(const PretrainedVectors& vectors, const Vocabulary& vocab,
                                 std::uint64_t seed);

// All-random initialization for training without a vector file.
EmbeddingInit random_embeddings(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed);

// Gives each still-random row whose token is in the table its target's
// pretrained row, bit for bit. Every target must resolve in the vectors.
// Applying twice is a no-op the second time.
void apply_remap(EmbeddingInit& init, const Vocabulary& vocab, const RemapTable& table,
                 const PretrainedVectors& vectors);

}  // namespace vdr
