#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>

#include "vdr/ensemble.hpp"
#include "vdr/error.hpp"
#include "vdr/numeric.hpp"
#include "vdr/rng.hpp"

namespace vdr {

namespace {

// FNV-1a over the rows' keys and score bit patterns; fixes the reduction
// order independently of how the inputs were listed.
std::uint64_t content_digest(const PredictionSet& preds) {
  std::vector<std::uint64_t> words;
  for (const PredictionRow& row : preds) {
    words.push_back(static_cast<std::uint64_t>(row.dialog_id));
    words.push_back(static_cast<std::uint64_t>(row.round));
    for (double v : row.log_probs) words.push_back(std::bit_cast<std::uint64_t>(v));
  }
  return fnv1a_bytes(words.data(), words.size() * sizeof(std::uint64_t));
}

bool row_order(const PredictionRow& a, const PredictionRow& b) {
  if (a.dialog_id != b.dialog_id) return a.dialog_id < b.dialog_id;
  return a.round < b.round;
}

}  // namespace

std::string to_string(EnsembleMode mode) {
  return mode == EnsembleMode::mean ? "mean" : "max";
}

EnsembleMode ensemble_mode_from_string(const std::string& s) {
  if (s == "mean") return EnsembleMode::mean;
  if (s == "max") return EnsembleMode::max;
  fail("ensemble-mode:" + s, "unknown ensemble mode (expected mean or max)");
}

PredictionSet combine(std::vector<PredictionSet> inputs, EnsembleMode mode) {
  require(!inputs.empty(), "no-inputs", "ensemble needs at least one prediction set");
  for (PredictionSet& p : inputs) std::sort(p.begin(), p.end(), row_order);

  const PredictionSet& first = inputs.front();
  for (const PredictionSet& p : inputs) {
    require(p.size() == first.size(), "ensemble-misalign", "inputs cover different round counts");
    for (std::size_t r = 0; r < p.size(); ++r) {
      require(p[r].dialog_id == first[r].dialog_id && p[r].round == first[r].round,
              "ensemble-misalign", "inputs cover different (dialog, round) sets");
      require(p[r].log_probs.size() == first[r].log_probs.size(), "ensemble-misalign",
              "inputs disagree on candidate count");
    }
  }
  for (const PredictionSet& p : inputs) {
    for (const PredictionRow& row : p) {
      double mass = 0.0;
      for (double v : row.log_probs) mass += std::exp(v);
      require(std::abs(mass - 1.0) <= 1e-4, "not-log-normalized",
              "input row does not exponentiate to probability mass 1");
    }
  }

  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), 0u);
  std::vector<std::uint64_t> digests(inputs.size());
  for (std::size_t m = 0; m < inputs.size(); ++m) digests[m] = content_digest(inputs[m]);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return digests[a] < digests[b]; });

  PredictionSet out;
  out.reserve(first.size());
  for (std::size_t r = 0; r < first.size(); ++r) {
    PredictionRow row;
    row.dialog_id = first[r].dialog_id;
    row.round = first[r].round;
    const std::size_t n = first[r].log_probs.size();
    row.log_probs.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (mode == EnsembleMode::mean) {
        double acc = 0.0;
        for (std::size_t m : order) acc += inputs[m][r].log_probs[i];
        row.log_probs[i] = acc / static_cast<double>(inputs.size());
      } else {
        double best = inputs[order.front()][r].log_probs[i];
        for (std::size_t m : order) best = std::max(best, inputs[m][r].log_probs[i]);
        row.log_probs[i] = best;
      }
    }
    row.log_probs = log_softmax(row.log_probs);
    out.push_back(std::move(row));
  }
  round_to_file_precision(out);
  return out;
}

PredictionSet combine_files(const std::vector<std::string>& paths, EnsembleMode mode) {
  std::vector<PredictionSet> inputs;
  inputs.reserve(paths.size());
  for (const std::string& path : paths) inputs.push_back(load_predictions(path));
  return combine(std::move(inputs), mode);
}

}  // namespace vdr
