#include <algorithm>
#include <fstream>
#include <map>

#include "vdr/error.hpp"
#include "vdr/vocab.hpp"

namespace vdr {

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
  Vocabulary v;
  v.id_to_token.reserve(tokens.size() + 2);
  v.id_to_token.push_back(pad_token);
  v.id_to_token.push_back(unk_token);
  for (std::string& t : tokens) v.id_to_token.push_back(std::move(t));
  for (std::uint32_t id = 0; id < v.id_to_token.size(); ++id) {
    const auto [it, fresh] = v.token_to_id.emplace(v.id_to_token[id], id);
    (void)it;
    require(fresh, "vocab-parse:" + std::to_string(id), "duplicate vocabulary token");
  }
  return v;
}

Vocabulary build_vocab(const std::vector<std::vector<std::string>>& corpus, std::size_t min_count) {
  require(min_count >= 1, "empty-corpus", "min_count must be at least 1");
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& seq : corpus) {
    for (const auto& tok : seq) {
      if (tok == Vocabulary::pad_token || tok == Vocabulary::unk_token) continue;
      ++counts[tok];
      ++total;
    }
  }
  require(total > 0, "empty-corpus", "no tokens to build a vocabulary from");

  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [tok, n] : counts) {
    if (n >= min_count) kept.emplace_back(tok, n);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [tok, n] : kept) {
    (void)n;
    tokens.push_back(std::move(tok));
  }
  return Vocabulary::from_tokens(std::move(tokens));
}

void save_vocab(const Vocabulary& vocab, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "vocab-parse:0", "cannot open vocabulary file for writing: " + path);
  for (std::size_t id = 2; id < vocab.id_to_token.size(); ++id) {
    out << vocab.id_to_token[id] << '\n';
  }
  out.flush();
  require(out.good(), "vocab-parse:0", "failed writing vocabulary file: " + path);
}

Vocabulary load_vocab(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "vocab-parse:0", "cannot open vocabulary file: " + path);
  std::vector<std::string> tokens;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(!line.empty(), "vocab-parse:" + std::to_string(line_no), "blank vocabulary line");
    tokens.push_back(line);
  }
  return Vocabulary::from_tokens(std::move(tokens));
}

}  // namespace vdr
