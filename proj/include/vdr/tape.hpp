#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vdr/tensor.hpp"

namespace vdr::ad {

// Reverse-mode tape. Nodes are appended in evaluation order into a reusable
// arena; backward() walks them in reverse, which is a topological order by
// construction. All grad accumulation happens in fixed order, so a given
// graph always produces bit-identical gradients.
//
// Values are cheap handles into the tape that created them. Ops never mutate
// their inputs; leaves copy the caller's storage.

enum class Op : std::uint8_t {
  leaf,
  add,
  sub,
  mul,
  scale,
  neg,
  one_minus,
  tanh_fn,
  sigmoid_fn,
  matvec,
  matvec_t,
  dot,
  smul,
  concat,
  slice,
  softmax_fn,
  log_softmax_fn,
  pick,
  row,
  add_n,
  sum,
};

struct Value {
  std::uint32_t id = 0;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Drops all nodes but keeps the arena capacity for the next graph.
  void clear();

  std::size_t node_count() const { return nodes_.size(); }

  Value leaf(const Tensor& t, bool requires_grad);
  Value leaf(std::span<const double> data, std::size_t rows, std::size_t cols, bool requires_grad);

  Value add(Value a, Value b);
  Value sub(Value a, Value b);
  Value mul(Value a, Value b);  // elementwise
  Value scale(Value a, double c);
  Value neg(Value a);
  Value one_minus(Value a);
  Value tanh(Value a);
  Value sigmoid(Value a);
  Value matvec(Value m, Value x);    // M x
  Value matvec_t(Value m, Value x);  // M^T x
  Value dot(Value a, Value b);       // scalar (length-1) result
  Value smul(Value s, Value v);      // scalar * vector
  Value concat(std::span<const Value> parts);
  Value slice(Value a, std::size_t offset, std::size_t length);
  Value softmax(Value x);
  Value log_softmax(Value x);
  Value pick(Value a, std::size_t index);
  Value row(Value m, std::size_t index);
  Value add_n(std::span<const Value> terms);
  Value sum(Value a);

  // Seeds d(loss)/d(loss) = 1 and propagates to every requires_grad node.
  // loss must be scalar.
  void backward(Value loss);

  std::span<const double> data(Value v) const;
  std::span<const double> grad(Value v) const;
  bool requires_grad(Value v) const { return node(v).requires_grad; }
  std::size_t rows(Value v) const { return node(v).rows; }
  std::size_t cols(Value v) const { return node(v).cols; }
  std::size_t length(Value v) const { return node(v).len(); }
  double scalar(Value v) const;
  Tensor to_tensor(Value v) const;

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  struct Node {
    Op op;
    bool requires_grad;
    std::uint32_t rows;
    std::uint32_t cols;  // 0 marks a vector
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    std::uint32_t args_off = 0;
    std::uint32_t args_n = 0;
    std::uint64_t aux = 0;
    double caux = 0.0;
    std::size_t data_off = npos;
    std::size_t grad_off = npos;

    std::size_t len() const { return static_cast<std::size_t>(rows) * (cols ? cols : 1); }
  };

  const Node& node(Value v) const { return nodes_[v.id]; }
  Node& node(Value v) { return nodes_[v.id]; }

  std::size_t alloc(std::size_t n);
  Value push(Node n);
  double* ptr(std::size_t off) { return buf_.data() + off; }
  const double* ptr(std::size_t off) const { return buf_.data() + off; }

  Value unary(Op op, Value a);
  Value binary_same_shape(Op op, Value a, Value b);

  void backward_node(std::uint32_t id);
  void accumulate(std::size_t grad_off, std::span<const double> g);

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> args_;
  std::vector<double> buf_;
  std::vector<double> scratch_;
};

}  // namespace vdr::ad
