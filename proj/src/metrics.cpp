#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "vdr/error.hpp"
#include "vdr/metrics.hpp"

namespace vdr {

namespace {

using json = nlohmann::ordered_json;

void check_ranks(std::span<const int> ranks) {
  require(!ranks.empty(), "no-rounds", "metric over an empty rank list");
  for (int r : ranks) require(r >= 1, "shape", "ranks start at 1");
}

std::string round_key(std::int64_t dialog_id, int round) {
  return std::to_string(dialog_id) + ":" + std::to_string(round);
}

}  // namespace

int rank_of_gt(std::span<const double> log_probs, int gt_index) {
  require(gt_index >= 0 && static_cast<std::size_t>(gt_index) < log_probs.size(), "gt-index",
          "ground-truth index out of range");
  const double gt = log_probs[static_cast<std::size_t>(gt_index)];
  int rank = 1;
  for (std::size_t i = 0; i < log_probs.size(); ++i) {
    if (log_probs[i] > gt) {
      ++rank;
    } else if (log_probs[i] == gt && i < static_cast<std::size_t>(gt_index)) {
      ++rank;
    }
  }
  return rank;
}

double mrr(std::span<const int> ranks) {
  check_ranks(ranks);
  double sum = 0.0;
  for (int r : ranks) sum += 1.0 / r;
  return sum / static_cast<double>(ranks.size());
}

double recall_at_k(std::span<const int> ranks, int k) {
  require(k >= 1, "shape", "recall depth must be at least 1");
  check_ranks(ranks);
  std::size_t hits = 0;
  for (int r : ranks) {
    if (r <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double mean_rank(std::span<const int> ranks) {
  check_ranks(ranks);
  double sum = 0.0;
  for (int r : ranks) sum += r;
  return sum / static_cast<double>(ranks.size());
}

double ndcg(std::span<const double> log_probs, std::span<const double> relevance) {
  require(log_probs.size() == relevance.size(), "shape",
          "score and relevance vectors differ in length");
  std::size_t k = 0;
  for (double rel : relevance) {
    if (rel > 0.0) ++k;
  }
  require(k > 0, "no-relevant", "relevance has no positive entry");

  // Top-k candidate indices by descending score, ties by ascending index.
  std::vector<std::size_t> order(log_probs.size());
  std::iota(order.begin(), order.end(), 0u);
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (log_probs[a] != log_probs[b]) return log_probs[a] > log_probs[b];
                      return a < b;
                    });
  double dcg = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    dcg += relevance[order[p]] / std::log2(static_cast<double>(p + 2));
  }

  std::vector<double> ideal(relevance.begin(), relevance.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  double idcg = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    idcg += ideal[p] / std::log2(static_cast<double>(p + 2));
  }
  return dcg / idcg;
}

RankingReport evaluate(const PredictionSet& preds, const Dataset& data) {
  std::map<std::pair<std::int64_t, int>, const PredictionRow*> by_key;
  for (const PredictionRow& row : preds) {
    auto [it, inserted] = by_key.emplace(std::make_pair(row.dialog_id, row.round), &row);
    require(inserted, "prediction-mismatch:" + round_key(row.dialog_id, row.round),
            "duplicate prediction row");
  }

  double sum_recip = 0.0;
  double sum_rank = 0.0;
  double sum_ndcg = 0.0;
  std::map<int, std::size_t> hits = {{1, 0}, {5, 0}, {10, 0}};
  int n = 0;
  int n_ndcg = 0;
  for (const Dialog& dialog : data.dialogs) {
    for (std::size_t r = 0; r < dialog.rounds.size(); ++r) {
      const Round& round = dialog.rounds[r];
      auto it = by_key.find({dialog.dialog_id, static_cast<int>(r)});
      require(it != by_key.end(),
              "prediction-mismatch:" + round_key(dialog.dialog_id, static_cast<int>(r)),
              "round has no prediction row");
      const std::vector<double>& lp = it->second->log_probs;
      require(lp.size() == round.candidates.size(),
              "prediction-mismatch:" + round_key(dialog.dialog_id, static_cast<int>(r)),
              "prediction length differs from candidate count");
      by_key.erase(it);

      const int rank = rank_of_gt(lp, round.gt_index);
      sum_recip += 1.0 / rank;
      sum_rank += rank;
      for (auto& [k, count] : hits) {
        if (rank <= k) ++count;
      }
      if (round.relevance) {
        sum_ndcg += ndcg(lp, *round.relevance);
        ++n_ndcg;
      }
      ++n;
    }
  }
  if (!by_key.empty()) {
    const auto& key = by_key.begin()->first;
    fail("prediction-mismatch:" + round_key(key.first, key.second),
         "prediction row matches no dataset round");
  }
  require(n > 0, "no-rounds", "dataset has no rounds to score");

  RankingReport report;
  report.mrr = sum_recip / n;
  report.mean_rank = sum_rank / n;
  for (const auto& [k, count] : hits) {
    report.recall_at[k] = static_cast<double>(count) / n;
  }
  report.ndcg = n_ndcg > 0 ? sum_ndcg / n_ndcg : 0.0;
  report.n_rounds_scored = n;
  report.n_rounds_ndcg = n_ndcg;
  return report;
}

void save_report(const RankingReport& report, const std::string& path) {
  json j;
  j["ndcg"] = report.ndcg;
  j["mrr"] = report.mrr;
  json rec = json::object();
  for (const auto& [k, v] : report.recall_at) rec[std::to_string(k)] = v;
  j["recall_at"] = rec;
  j["mean_rank"] = report.mean_rank;
  j["n_rounds_scored"] = report.n_rounds_scored;
  j["n_rounds_ndcg"] = report.n_rounds_ndcg;

  std::ofstream out(path, std::ios::binary);
  require(out.good(), "report-io", "cannot open report file for writing: " + path);
  out << j.dump(2) << '\n';
  require(out.good(), "report-io", "failed writing report file: " + path);
}

RankingReport load_report(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "report-io", "cannot open report file: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail("report-io", std::string("report is not valid JSON: ") + e.what());
  }
  try {
    RankingReport report;
    report.ndcg = j.at("ndcg").get<double>();
    report.mrr = j.at("mrr").get<double>();
    for (const auto& [k, v] : j.at("recall_at").items()) {
      report.recall_at[std::stoi(k)] = v.get<double>();
    }
    report.mean_rank = j.at("mean_rank").get<double>();
    report.n_rounds_scored = j.at("n_rounds_scored").get<int>();
    report.n_rounds_ndcg = j.at("n_rounds_ndcg").get<int>();
    return report;
  } catch (const json::exception& e) {
    fail("report-io", std::string("report field missing or mistyped: ") + e.what());
  }
}

namespace {

double recall_or_zero(const RankingReport& report, int k) {
  auto it = report.recall_at.find(k);
  return it == report.recall_at.end() ? 0.0 : it->second;
}

std::string table_row(const std::string& name, const RankingReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-14s %7.2f %7.2f %7.2f %7.2f %7.2f %7.2f\n", name.c_str(),
                r.ndcg * 100.0, r.mrr * 100.0, recall_or_zero(r, 1) * 100.0,
                recall_or_zero(r, 5) * 100.0, recall_or_zero(r, 10) * 100.0, r.mean_rank);
  return buf;
}

const char* table_header() {
  return "model             NDCG     MRR     R@1     R@5    R@10    Mean\n";
}

}  // namespace

std::string format_report(const RankingReport& report) {
  std::string out = table_header();
  out += table_row("x100", report);
  char buf[200];
  std::snprintf(buf, sizeof(buf), "%-14s %7.4f %7.4f %7.4f %7.4f %7.4f %7.2f\n", "raw",
                report.ndcg, report.mrr, recall_or_zero(report, 1), recall_or_zero(report, 5),
                recall_or_zero(report, 10), report.mean_rank);
  out += buf;
  std::snprintf(buf, sizeof(buf), "rounds scored: %d (with relevance: %d)\n",
                report.n_rounds_scored, report.n_rounds_ndcg);
  out += buf;
  return out;
}

std::string format_report_table(std::span<const std::pair<std::string, RankingReport>> rows) {
  std::string out = table_header();
  for (const auto& [name, report] : rows) out += table_row(name, report);
  return out;
}

}  // namespace vdr
