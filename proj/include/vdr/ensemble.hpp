#pragma once

#include <string>
#include <vector>

#include "vdr/predictions.hpp"

namespace vdr {

enum class EnsembleMode { mean, max };

std::string to_string(EnsembleMode mode);
EnsembleMode ensemble_mode_from_string(const std::string& s);

// Per round, per candidate: mean mode averages the log-probabilities, max
// mode takes the elementwise maximum. Either way the result is re-normalized
// with log_softmax (rank-preserving) and rounded to file precision. Inputs
// must cover the identical (dialog, round) set with identical lengths and be
// log-normalized. The reduction order is fixed by sorting the inputs by a
// content digest, so the output is byte-identical under input reordering.
PredictionSet combine(std::vector<PredictionSet> inputs, EnsembleMode mode);

PredictionSet combine_files(const std::vector<std::string>& paths, EnsembleMode mode);

}  // namespace vdr
