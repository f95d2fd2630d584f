#pragma once

#include <optional>
#include <unordered_map>

#include "vdr/tape.hpp"
#include "vdr/tensor.hpp"

namespace vdr::ad {

// Binds persistent parameter tensors into one graph. Each tensor gets exactly
// one leaf per graph, so every use shares it and gradients accumulate there.
class Lease {
 public:
  explicit Lease(Tape& tape) : tape_(&tape) {}

  Value of(const Tensor& t, bool requires_grad) {
    auto it = map_.find(&t);
    if (it != map_.end()) return it->second;
    Value v = tape_->leaf(t, requires_grad);
    map_.emplace(&t, v);
    return v;
  }

  std::optional<Value> find(const Tensor& t) const {
    auto it = map_.find(&t);
    if (it == map_.end()) return std::nullopt;
    return it->second;
  }

  Tape& tape() { return *tape_; }

 private:
  Tape* tape_;
  std::unordered_map<const Tensor*, Value> map_;
};

}  // namespace vdr::ad
