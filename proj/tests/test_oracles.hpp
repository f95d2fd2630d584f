#pragma once

// Brute-force rankers written straight from the formulas — full stable sorts
// and direct sums — so the fast implementations have something genuinely
// independent to disagree with.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

namespace brute {

inline std::vector<std::size_t> descending_order(const std::vector<double>& scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Stability keeps tied candidates in ascending index order.
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

inline int rank(const std::vector<double>& scores, int gt) {
  const auto order = descending_order(scores);
  for (std::size_t p = 0; p < order.size(); ++p) {
    if (order[p] == static_cast<std::size_t>(gt)) return static_cast<int>(p + 1);
  }
  return -1;
}

inline double mrr(const std::vector<int>& ranks) {
  double s = 0.0;
  for (int r : ranks) s += 1.0 / r;
  return s / static_cast<double>(ranks.size());
}

inline double recall(const std::vector<int>& ranks, int k) {
  double s = 0.0;
  for (int r : ranks) s += r <= k ? 1.0 : 0.0;
  return s / static_cast<double>(ranks.size());
}

inline double mean_rank(const std::vector<int>& ranks) {
  double s = 0.0;
  for (int r : ranks) s += r;
  return s / static_cast<double>(ranks.size());
}

inline double ndcg(const std::vector<double>& scores, const std::vector<double>& rel) {
  const auto order = descending_order(scores);
  std::size_t k = 0;
  for (double r : rel) {
    if (r > 0.0) ++k;
  }
  std::vector<double> ideal = rel;
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double dcg = 0.0;
  double idcg = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    dcg += rel[order[p]] / std::log2(static_cast<double>(p) + 2.0);
    idcg += ideal[p] / std::log2(static_cast<double>(p) + 2.0);
  }
  return dcg / idcg;
}

}  // namespace brute
