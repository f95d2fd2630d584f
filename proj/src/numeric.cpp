#include <algorithm>
#include <cmath>

#include "vdr/error.hpp"
#include "vdr/numeric.hpp"

namespace vdr {

double logsumexp(std::span<const double> x) {
  require(!x.empty(), "empty-logits", "logsumexp of an empty vector");
  const double m = *std::max_element(x.begin(), x.end());
  double acc = 0.0;
  for (double v : x) acc += std::exp(v - m);
  return m + std::log(acc);
}

std::vector<double> softmax(std::span<const double> x) {
  require(!x.empty(), "empty-logits", "softmax of an empty vector");
  const double m = *std::max_element(x.begin(), x.end());
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

std::vector<double> log_softmax(std::span<const double> x) {
  require(!x.empty(), "empty-logits", "log_softmax of an empty vector");
  const double lse = logsumexp(x);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - lse;
  return out;
}

}  // namespace vdr
