#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace vdr {

// One probe from the gradient integrity suite: a scalar loss built on toy
// shapes whose analytic gradient is compared element-wise against central
// differences (or, for the *shift-zero* probes, asserted to vanish exactly).
struct GradSuiteEntry {
  std::string name;
  double value = 0.0;      // measured error (relative for fd probes, absolute for shift-zero)
  double tol = 0.0;        // pass threshold for `value`
  std::size_t n_checked = 0;
  std::string worst;       // "param[i]" of the worst element, empty for shift-zero probes
  bool pass = false;
};

// Runs every probe: rnn cell steps, full rnn runs, object attention, both
// encoders, all three scorers, and the end-to-end round losses of the three
// model kinds. The end-to-end probes also verify that the logit-shift
// parameter (projection bias / gate output bias) gets an exactly-zero
// gradient, since softmax cancels any constant added to every logit.
std::vector<GradSuiteEntry> run_grad_suite(double tol = 1e-4);

bool all_pass(const std::vector<GradSuiteEntry>& entries);

// Aligned table, one row per probe plus a summary line.
std::string format_grad_suite(const std::vector<GradSuiteEntry>& entries);

}  // namespace vdr
