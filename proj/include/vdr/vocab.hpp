#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace vdr {

// Token↔id map. Ids 0 and 1 are reserved for padding and unknown tokens;
// real tokens occupy the dense range [2, size).
struct Vocabulary {
  static constexpr std::uint32_t pad_id = 0;
  static constexpr std::uint32_t unk_id = 1;
  static constexpr const char* pad_token = "<pad>";
  static constexpr const char* unk_token = "<unk>";

  std::vector<std::string> id_to_token;  // [0]=<pad>, [1]=<unk>, then real tokens
  std::unordered_map<std::string, std::uint32_t> token_to_id;

  std::size_t size() const { return id_to_token.size(); }

  std::uint32_t id_of(const std::string& token) const {
    auto it = token_to_id.find(token);
    return it == token_to_id.end() ? unk_id : it->second;
  }

  bool contains(const std::string& token) const { return token_to_id.count(token) != 0; }

  // Builds the map from real tokens in id order (specials prepended here).
  static Vocabulary from_tokens(std::vector<std::string> tokens);
};

// Tokens with count ≥ min_count get ids ordered by (descending count,
// ascending lexicographic); everything else falls through to <unk> at lookup.
Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus, std::size_t min_count);

// One token per line, line number = id − 2; specials are implicit.
void save_vocab(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocab(const std::string& path);

}  // namespace vdr
