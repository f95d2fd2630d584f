#pragma once

#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace vdr {

// Lowercases, splits on whitespace, and strips leading/trailing punctuation
// among .,?!"'- into separate tokens. Tokens listed in keep_verbatim survive
// untouched; the check runs before every strip step, so a protected token is
// recognized even after outer punctuation has been peeled away.
std::vector<std::string> normalize_tokenize(std::string_view text,
                                            const std::unordered_set<std::string>* keep_verbatim = nullptr);

}  // namespace vdr
