#include <cctype>

#include "vdr/tokenize.hpp"

namespace vdr {

namespace {

bool strippable(char c) {
  return c == '.' || c == ',' || c == '?' || c == '!' || c == '"' || c == '\'' || c == '-';
}

void strip_word(const std::string& w, const std::unordered_set<std::string>* keep,
                std::vector<std::string>& out) {
  if (w.empty()) return;
  if (keep && keep->count(w)) {
    out.push_back(w);
    return;
  }
  if (w.size() > 1 && strippable(w.front())) {
    out.push_back(std::string(1, w.front()));
    strip_word(w.substr(1), keep, out);
    return;
  }
  if (w.size() > 1 && strippable(w.back())) {
    strip_word(w.substr(0, w.size() - 1), keep, out);
    out.push_back(std::string(1, w.back()));
    return;
  }
  out.push_back(w);
}

}  // namespace

std::vector<std::string> normalize_tokenize(std::string_view text,
                                            const std::unordered_set<std::string>* keep_verbatim) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) {
      strip_word(word, keep_verbatim, out);
      word.clear();
    }
  };
  for (char c : text) {
    const unsigned char uc = static_cast<unsigned char>(c);
    if (std::isspace(uc)) {
      flush();
    } else {
      word.push_back(static_cast<char>(std::tolower(uc)));
    }
  }
  flush();
  return out;
}

}  // namespace vdr
