#include <algorithm>
#include <cmath>

#include "vdr/error.hpp"
#include "vdr/grad_check.hpp"

namespace vdr {

namespace {

double evaluate(const std::function<ad::Value(ad::Tape&, ad::Lease&)>& build_loss) {
  ad::Tape tape;
  ad::Lease lease(tape);
  const ad::Value loss = build_loss(tape, lease);
  const double v = tape.scalar(loss);
  require(std::isfinite(v), "non-finite-loss", "loss is not finite during grad check");
  return v;
}

}  // namespace

GradCheckResult grad_check(std::span<const NamedParam> params,
                           const std::function<ad::Value(ad::Tape&, ad::Lease&)>& build_loss,
                           double step) {
  // One analytic pass; gradients are copied out before the tape goes away.
  std::vector<std::vector<double>> analytic(params.size());
  {
    ad::Tape tape;
    ad::Lease lease(tape);
    const ad::Value loss = build_loss(tape, lease);
    require(std::isfinite(tape.scalar(loss)), "non-finite-loss",
            "loss is not finite during grad check");
    tape.backward(loss);
    for (std::size_t p = 0; p < params.size(); ++p) {
      const auto leased = lease.find(*params[p].tensor);
      require(leased.has_value(), "shape",
              "grad check parameter \"" + params[p].name + "\" is not used by the loss");
      const auto g = tape.grad(*leased);
      analytic[p].assign(g.begin(), g.end());
    }
  }

  GradCheckResult result;
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p].tensor;
    require(analytic[p].size() == t.size(), "shape", "gradient size mismatch in grad check");
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double saved = t.data()[i];
      t.data()[i] = saved + step;
      const double up = evaluate(build_loss);
      t.data()[i] = saved - step;
      const double down = evaluate(build_loss);
      t.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[p][i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      ++result.n_checked;
      if (rel > result.max_rel_err) {
        result.max_rel_err = rel;
        result.worst = params[p].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

}  // namespace vdr
