#pragma once

#include <cstdint>
#include <vector>

#include "vdr/error.hpp"
#include "vdr/rng.hpp"

namespace vdr {

struct RoundRef {
  std::size_t dialog_index = 0;
  int round_index = 0;

  bool operator==(const RoundRef&) const = default;
};

// One epoch's batches: every (dialog, round) pair exactly once, in a seeded
// permutation, chunked to batch_size with a possibly short last batch.
inline std::vector<std::vector<RoundRef>> batch_iter(std::size_t n_dialogs, std::size_t n_rounds,
                                                     std::size_t batch_size,
                                                     std::uint64_t shuffle_seed) {
  require(batch_size >= 1, "shape", "batch size must be at least 1");
  std::vector<RoundRef> flat;
  flat.reserve(n_dialogs * n_rounds);
  for (std::size_t d = 0; d < n_dialogs; ++d) {
    for (std::size_t r = 0; r < n_rounds; ++r) {
      flat.push_back({d, static_cast<int>(r)});
    }
  }
  Rng rng(shuffle_seed);
  rng.shuffle(flat);

  std::vector<std::vector<RoundRef>> batches;
  for (std::size_t at = 0; at < flat.size(); at += batch_size) {
    const std::size_t end = std::min(at + batch_size, flat.size());
    batches.emplace_back(flat.begin() + at, flat.begin() + end);
  }
  return batches;
}

}  // namespace vdr
