#pragma once

#include <span>
#include <vector>

namespace vdr {

// Plain (non-differentiable) normalizers shared by the metrics and ensemble
// paths. Both subtract the max before exponentiating.
std::vector<double> softmax(std::span<const double> x);
std::vector<double> log_softmax(std::span<const double> x);

// log sum_i exp(x_i), max-shifted.
double logsumexp(std::span<const double> x);

}  // namespace vdr
