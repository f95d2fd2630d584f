#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vdr {

struct PredictionRow {
  std::int64_t dialog_id = 0;
  int round = 0;  // zero-based round index
  std::vector<double> log_probs;
};

// Rows sorted by (dialog_id, round). Values are single-precision on disk and
// in memory (stored as the double image of the float), so save→load→save is
// byte-identical.
using PredictionSet = std::vector<PredictionRow>;

// Rounds each value through float. Applied by the writers; apply to fresh
// model output before comparing against loaded files.
double to_file_precision(double v);
void round_to_file_precision(PredictionSet& preds);

// JSON lines, one per round: {"dialog_id":…,"round":…,"log_probs":[…]}.
void save_predictions(const PredictionSet& preds, const std::string& path);
PredictionSet load_predictions(const std::string& path);

}  // namespace vdr
