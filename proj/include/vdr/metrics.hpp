#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vdr/dialog.hpp"
#include "vdr/predictions.hpp"

namespace vdr {

// Rank of the ground-truth candidate under descending scores, ties broken by
// ascending candidate index: 1 + |{i : s_i > s_gt}| + |{i < gt : s_i = s_gt}|.
int rank_of_gt(std::span<const double> log_probs, int gt_index);

double mrr(std::span<const int> ranks);
double recall_at_k(std::span<const int> ranks, int k);
double mean_rank(std::span<const int> ranks);

// Truncation depth k = number of strictly positive relevance entries. DCG
// sums rel / log2(position+1) over the top-k candidates by score (same tie
// rule as rank_of_gt); normalized by the ideal ordering's DCG.
double ndcg(std::span<const double> log_probs, std::span<const double> relevance);

struct RankingReport {
  double ndcg = 0.0;
  double mrr = 0.0;
  std::map<int, double> recall_at;  // keys 1, 5, 10
  double mean_rank = 0.0;
  int n_rounds_scored = 0;
  int n_rounds_ndcg = 0;  // rounds carrying relevance annotations

  bool operator==(const RankingReport&) const = default;
};

// Scores every (dialog, round) of the dataset against its prediction row;
// the prediction file must cover exactly the dataset's rounds. NDCG averages
// over the subset of rounds that carry relevance annotations.
RankingReport evaluate(const PredictionSet& preds, const Dataset& data);

void save_report(const RankingReport& report, const std::string& path);
RankingReport load_report(const std::string& path);

// Two-line rendering of one report: the x100 convention beside raw values.
std::string format_report(const RankingReport& report);

// One table row per named report, x100 columns (mean rank stays raw).
std::string format_report_table(std::span<const std::pair<std::string, RankingReport>> rows);

}  // namespace vdr
