#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vdr/lease.hpp"
#include "vdr/tape.hpp"
#include "vdr/tensor.hpp"

namespace vdr {

struct NamedParam {
  std::string name;
  Tensor* tensor = nullptr;
};

struct GradCheckResult {
  double max_rel_err = 0.0;
  std::size_t n_checked = 0;
  std::string worst;  // "name[i]" of the element with the largest error
};

// Compares the tape gradient of a scalar loss against central differences for
// every element of every listed parameter. The builder is called with a fresh
// tape and lease each evaluation and must construct the loss from the current
// tensor contents, leasing each parameter with requires_grad=true.
GradCheckResult grad_check(std::span<const NamedParam> params,
                           const std::function<ad::Value(ad::Tape&, ad::Lease&)>& build_loss,
                           double step = 1e-5);

}  // namespace vdr
