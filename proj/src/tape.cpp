#include <algorithm>
#include <cmath>

#include "vdr/error.hpp"
#include "vdr/kernels.hpp"
#include "vdr/tape.hpp"

namespace vdr::ad {

void Tape::clear() {
  nodes_.clear();
  args_.clear();
  buf_.clear();
}

std::size_t Tape::alloc(std::size_t n) {
  const std::size_t off = buf_.size();
  buf_.resize(off + n, 0.0);
  return off;
}

Value Tape::push(Node n) {
  n.data_off = alloc(n.len());
  if (n.requires_grad) n.grad_off = alloc(n.len());
  nodes_.push_back(n);
  return Value{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Value Tape::leaf(const Tensor& t, bool requires_grad) {
  return leaf(t.span(), t.rows(), t.is_matrix() ? t.cols() : 0, requires_grad);
}

Value Tape::leaf(std::span<const double> data, std::size_t rows, std::size_t cols, bool requires_grad) {
  require(data.size() == rows * (cols ? cols : 1), "shape", "leaf data does not match its shape");
  Node n{};
  n.op = Op::leaf;
  n.requires_grad = requires_grad;
  n.rows = static_cast<std::uint32_t>(rows);
  n.cols = static_cast<std::uint32_t>(cols);
  Value v = push(n);
  std::copy(data.begin(), data.end(), ptr(node(v).data_off));
  return v;
}

Value Tape::unary(Op op, Value a) {
  const Node& pa = node(a);
  Node n{};
  n.op = op;
  n.requires_grad = pa.requires_grad;
  n.rows = pa.rows;
  n.cols = pa.cols;
  n.a = a.id;
  return push(n);
}

Value Tape::binary_same_shape(Op op, Value a, Value b) {
  const Node& pa = node(a);
  const Node& pb = node(b);
  require(pa.rows == pb.rows && pa.cols == pb.cols, "shape", "elementwise operands differ in shape");
  Node n{};
  n.op = op;
  n.requires_grad = pa.requires_grad || pb.requires_grad;
  n.rows = pa.rows;
  n.cols = pa.cols;
  n.a = a.id;
  n.b = b.id;
  return push(n);
}

Value Tape::add(Value a, Value b) {
  Value v = binary_same_shape(Op::add, a, b);
  const Node& n = node(v);
  const double* pa = ptr(node(a).data_off);
  const double* pb = ptr(node(b).data_off);
  double* out = ptr(n.data_off);
  for (std::size_t i = 0; i < n.len(); ++i) out[i] = pa[i] + pb[i];
  return v;
}

Value Tape::sub(Value a, Value b) {
  Value v = binary_same_shape(Op::sub, a, b);
  const Node& n = node(v);
  const double* pa = ptr(node(a).data_off);
  const double* pb = ptr(node(b).data_off);
  double* out = ptr(n.data_off);
  for (std::size_t i = 0; i < n.len(); ++i) out[i] = pa[i] - pb[i];
  return v;
}

Value Tape::mul(Value a, Value b) {
  Value v = binary_same_shape(Op::mul, a, b);
  const Node& n = node(v);
  kernels::hadamard(n.len(), ptr(node(a).data_off), ptr(node(b).data_off), ptr(n.data_off));
  return v;
}

Value Tape::scale(Value a, double c) {
  Value v = unary(Op::scale, a);
  Node& n = node(v);
  n.caux = c;
  const double* pa = ptr(node(a).data_off);
  double* out = ptr(n.data_off);
  for (std::size_t i = 0; i < n.len(); ++i) out[i] = c * pa[i];
  return v;
}

Value Tape::neg(Value a) {
  Value v = unary(Op::neg, a);
  const Node& n = node(v);
  const double* pa = ptr(node(a).data_off);
  double* out = ptr(n.data_off);
  for (std::size_t i = 0; i < n.len(); ++i) out[i] = -pa[i];
  return v;
}

Value Tape::one_minus(Value a) {
  Value v = unary(Op::one_minus, a);
  const Node& n = node(v);
  const double* pa = ptr(node(a).data_off);
  double* out = ptr(n.data_off);
  for (std::size_t i = 0; i < n.len(); ++i) out[i] = 1.0 - pa[i];
  return v;
}

Value Tape::tanh(Value a) {
  Value v = unary(Op::tanh_fn, a);
  const Node& n = node(v);
  kernels::tanh_map(n.len(), ptr(node(a).data_off), ptr(n.data_off));
  return v;
}

Value Tape::sigmoid(Value a) {
  Value v = unary(Op::sigmoid_fn, a);
  const Node& n = node(v);
  kernels::sigmoid_map(n.len(), ptr(node(a).data_off), ptr(n.data_off));
  return v;
}

Value Tape::matvec(Value m, Value x) {
  const std::size_t mrows = node(m).rows;
  const std::size_t mcols = node(m).cols;
  require(mcols != 0 && node(x).cols == 0, "shape", "matvec expects (matrix, vector)");
  require(mcols == node(x).rows, "shape", "matvec width mismatch");
  Node n{};
  n.op = Op::matvec;
  n.requires_grad = node(m).requires_grad || node(x).requires_grad;
  n.rows = static_cast<std::uint32_t>(mrows);
  n.cols = 0;
  n.a = m.id;
  n.b = x.id;
  Value v = push(n);
  kernels::matvec(ptr(node(m).data_off), mrows, mcols, ptr(node(x).data_off), ptr(node(v).data_off));
  return v;
}

Value Tape::matvec_t(Value m, Value x) {
  const std::size_t mrows = node(m).rows;
  const std::size_t mcols = node(m).cols;
  require(mcols != 0 && node(x).cols == 0, "shape", "matvec_t expects (matrix, vector)");
  require(mrows == node(x).rows, "shape", "matvec_t height mismatch");
  Node n{};
  n.op = Op::matvec_t;
  n.requires_grad = node(m).requires_grad || node(x).requires_grad;
  n.rows = static_cast<std::uint32_t>(mcols);
  n.cols = 0;
  n.a = m.id;
  n.b = x.id;
  Value v = push(n);
  kernels::matvec_t(ptr(node(m).data_off), mrows, mcols, ptr(node(x).data_off), ptr(node(v).data_off));
  return v;
}

Value Tape::dot(Value a, Value b) {
  const std::size_t len = node(a).rows;
  require(node(a).cols == 0 && node(b).cols == 0 && len == node(b).rows, "shape",
          "dot operands differ in length");
  Node n{};
  n.op = Op::dot;
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  n.rows = 1;
  n.cols = 0;
  n.a = a.id;
  n.b = b.id;
  Value v = push(n);
  const double* x = ptr(node(a).data_off);
  const double* y = ptr(node(b).data_off);
  double acc = 0.0;
  for (std::size_t i = 0; i < len; ++i) acc += x[i] * y[i];
  *ptr(node(v).data_off) = acc;
  return v;
}

Value Tape::smul(Value s, Value v) {
  const Node& ps = node(s);
  const Node& pv = node(v);
  require(ps.cols == 0 && ps.rows == 1, "shape", "smul scale must be scalar");
  Node n{};
  n.op = Op::smul;
  n.requires_grad = ps.requires_grad || pv.requires_grad;
  n.rows = pv.rows;
  n.cols = pv.cols;
  n.a = s.id;
  n.b = v.id;
  Value out = push(n);
  const double c = *ptr(node(s).data_off);
  const double* src = ptr(node(v).data_off);
  double* dst = ptr(node(out).data_off);
  for (std::size_t i = 0; i < node(out).len(); ++i) dst[i] = c * src[i];
  return out;
}

Value Tape::concat(std::span<const Value> parts) {
  require(!parts.empty(), "shape", "concat of zero vectors");
  std::size_t total = 0;
  bool rg = false;
  for (Value p : parts) {
    require(node(p).cols == 0, "shape", "concat expects vectors");
    total += node(p).rows;
    rg = rg || node(p).requires_grad;
  }
  Node n{};
  n.op = Op::concat;
  n.requires_grad = rg;
  n.rows = static_cast<std::uint32_t>(total);
  n.cols = 0;
  n.args_off = static_cast<std::uint32_t>(args_.size());
  n.args_n = static_cast<std::uint32_t>(parts.size());
  for (Value p : parts) args_.push_back(p.id);
  Value v = push(n);
  double* out = ptr(node(v).data_off);
  std::size_t at = 0;
  for (Value p : parts) {
    const Node& pp = node(p);
    std::copy(ptr(pp.data_off), ptr(pp.data_off) + pp.rows, out + at);
    at += pp.rows;
  }
  return v;
}

Value Tape::slice(Value a, std::size_t offset, std::size_t length) {
  const Node& pa = node(a);
  require(pa.cols == 0, "shape", "slice expects a vector");
  require(offset + length <= pa.rows, "shape", "slice out of range");
  Node n{};
  n.op = Op::slice;
  n.requires_grad = pa.requires_grad;
  n.rows = static_cast<std::uint32_t>(length);
  n.cols = 0;
  n.a = a.id;
  n.aux = offset;
  Value v = push(n);
  const double* src = ptr(node(a).data_off) + offset;
  std::copy(src, src + length, ptr(node(v).data_off));
  return v;
}

Value Tape::softmax(Value x) {
  const Node& px = node(x);
  require(px.cols == 0, "shape", "softmax expects a vector");
  require(px.rows >= 1, "empty-logits", "softmax of an empty vector");
  Value v = unary(Op::softmax_fn, x);
  const Node& n = node(v);
  const double* in = ptr(node(x).data_off);
  double* out = ptr(n.data_off);
  const double m = *std::max_element(in, in + n.rows);
  double sum = 0.0;
  for (std::size_t i = 0; i < n.rows; ++i) {
    out[i] = std::exp(in[i] - m);
    sum += out[i];
  }
  for (std::size_t i = 0; i < n.rows; ++i) out[i] /= sum;
  return v;
}

Value Tape::log_softmax(Value x) {
  const Node& px = node(x);
  require(px.cols == 0, "shape", "log_softmax expects a vector");
  require(px.rows >= 1, "empty-logits", "log_softmax of an empty vector");
  Value v = unary(Op::log_softmax_fn, x);
  const Node& n = node(v);
  const double* in = ptr(node(x).data_off);
  double* out = ptr(n.data_off);
  const double m = *std::max_element(in, in + n.rows);
  double sum = 0.0;
  for (std::size_t i = 0; i < n.rows; ++i) sum += std::exp(in[i] - m);
  const double lse = m + std::log(sum);
  for (std::size_t i = 0; i < n.rows; ++i) out[i] = in[i] - lse;
  return v;
}

Value Tape::pick(Value a, std::size_t index) {
  const Node& pa = node(a);
  require(pa.cols == 0, "shape", "pick expects a vector");
  require(index < pa.rows, "shape", "pick index out of range");
  Node n{};
  n.op = Op::pick;
  n.requires_grad = pa.requires_grad;
  n.rows = 1;
  n.cols = 0;
  n.a = a.id;
  n.aux = index;
  Value v = push(n);
  *ptr(node(v).data_off) = ptr(node(a).data_off)[index];
  return v;
}

Value Tape::row(Value m, std::size_t index) {
  const std::size_t mcols = node(m).cols;
  require(mcols != 0, "shape", "row expects a matrix");
  require(index < node(m).rows, "shape", "row index out of range");
  Node n{};
  n.op = Op::row;
  n.requires_grad = node(m).requires_grad;
  n.rows = static_cast<std::uint32_t>(mcols);
  n.cols = 0;
  n.a = m.id;
  n.aux = index;
  Value v = push(n);
  const double* src = ptr(node(m).data_off) + index * mcols;
  std::copy(src, src + mcols, ptr(node(v).data_off));
  return v;
}

Value Tape::add_n(std::span<const Value> terms) {
  require(!terms.empty(), "shape", "add_n of zero terms");
  const Node& first = node(terms.front());
  bool rg = false;
  for (Value t : terms) {
    require(node(t).rows == first.rows && node(t).cols == first.cols, "shape", "add_n operands differ in shape");
    rg = rg || node(t).requires_grad;
  }
  Node n{};
  n.op = Op::add_n;
  n.requires_grad = rg;
  n.rows = first.rows;
  n.cols = first.cols;
  n.args_off = static_cast<std::uint32_t>(args_.size());
  n.args_n = static_cast<std::uint32_t>(terms.size());
  for (Value t : terms) args_.push_back(t.id);
  Value v = push(n);
  double* out = ptr(node(v).data_off);
  for (Value t : terms) {
    const double* src = ptr(node(t).data_off);
    for (std::size_t i = 0; i < node(v).len(); ++i) out[i] += src[i];
  }
  return v;
}

Value Tape::sum(Value a) {
  const std::size_t alen = node(a).len();
  Node n{};
  n.op = Op::sum;
  n.requires_grad = node(a).requires_grad;
  n.rows = 1;
  n.cols = 0;
  n.a = a.id;
  Value v = push(n);
  const double* src = ptr(node(a).data_off);
  double acc = 0.0;
  for (std::size_t i = 0; i < alen; ++i) acc += src[i];
  *ptr(node(v).data_off) = acc;
  return v;
}

std::span<const double> Tape::data(Value v) const {
  const Node& n = node(v);
  return {ptr(n.data_off), n.len()};
}

std::span<const double> Tape::grad(Value v) const {
  const Node& n = node(v);
  require(n.grad_off != npos, "shape", "grad requested for a non-differentiable value");
  return {ptr(n.grad_off), n.len()};
}

double Tape::scalar(Value v) const {
  require(node(v).len() == 1, "shape", "scalar read of a non-scalar value");
  return *ptr(node(v).data_off);
}

Tensor Tape::to_tensor(Value v) const {
  const Node& n = node(v);
  Tensor t = n.cols ? Tensor::matrix(n.rows, n.cols) : Tensor::vector(n.rows);
  std::copy(ptr(n.data_off), ptr(n.data_off) + n.len(), t.data());
  return t;
}

void Tape::accumulate(std::size_t grad_off, std::span<const double> g) {
  double* dst = ptr(grad_off);
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

void Tape::backward(Value loss) {
  Node& ln = node(loss);
  require(ln.len() == 1, "shape", "backward needs a scalar loss");
  require(ln.requires_grad, "shape", "backward needs a differentiable loss");
  *ptr(ln.grad_off) = 1.0;
  for (std::uint32_t id = loss.id + 1; id-- > 0;) {
    if (nodes_[id].requires_grad && nodes_[id].op != Op::leaf) backward_node(id);
  }
}

void Tape::backward_node(std::uint32_t id) {
  Node& n = nodes_[id];
  const double* g = ptr(n.grad_off);
  const std::size_t len = n.len();

  auto pgrad = [&](std::uint32_t pid) -> double* {
    Node& p = nodes_[pid];
    return p.requires_grad ? ptr(p.grad_off) : nullptr;
  };
  auto pdata = [&](std::uint32_t pid) -> const double* { return ptr(nodes_[pid].data_off); };

  switch (n.op) {
    case Op::leaf:
      break;
    case Op::add: {
      if (double* ga = pgrad(n.a)) kernels::axpy(len, 1.0, g, ga);
      if (double* gb = pgrad(n.b)) kernels::axpy(len, 1.0, g, gb);
      break;
    }
    case Op::sub: {
      if (double* ga = pgrad(n.a)) kernels::axpy(len, 1.0, g, ga);
      if (double* gb = pgrad(n.b)) kernels::axpy(len, -1.0, g, gb);
      break;
    }
    case Op::mul: {
      if (double* ga = pgrad(n.a)) {
        const double* b = pdata(n.b);
        for (std::size_t i = 0; i < len; ++i) ga[i] += g[i] * b[i];
      }
      if (double* gb = pgrad(n.b)) {
        const double* a = pdata(n.a);
        for (std::size_t i = 0; i < len; ++i) gb[i] += g[i] * a[i];
      }
      break;
    }
    case Op::scale: {
      if (double* ga = pgrad(n.a)) kernels::axpy(len, n.caux, g, ga);
      break;
    }
    case Op::neg: {
      if (double* ga = pgrad(n.a)) kernels::axpy(len, -1.0, g, ga);
      break;
    }
    case Op::one_minus: {
      if (double* ga = pgrad(n.a)) kernels::axpy(len, -1.0, g, ga);
      break;
    }
    case Op::tanh_fn: {
      if (double* ga = pgrad(n.a)) {
        const double* y = ptr(n.data_off);
        for (std::size_t i = 0; i < len; ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
      }
      break;
    }
    case Op::sigmoid_fn: {
      if (double* ga = pgrad(n.a)) {
        const double* y = ptr(n.data_off);
        for (std::size_t i = 0; i < len; ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
      }
      break;
    }
    case Op::matvec: {
      const Node& pm = nodes_[n.a];
      if (double* gm = pgrad(n.a)) kernels::outer_acc(gm, pm.rows, pm.cols, g, pdata(n.b));
      if (double* gx = pgrad(n.b)) {
        scratch_.resize(pm.cols);
        kernels::matvec_t(pdata(n.a), pm.rows, pm.cols, g, scratch_.data());
        kernels::axpy(pm.cols, 1.0, scratch_.data(), gx);
      }
      break;
    }
    case Op::matvec_t: {
      const Node& pm = nodes_[n.a];
      if (double* gm = pgrad(n.a)) kernels::outer_acc(gm, pm.rows, pm.cols, pdata(n.b), g);
      if (double* gx = pgrad(n.b)) {
        scratch_.resize(pm.rows);
        kernels::matvec(pdata(n.a), pm.rows, pm.cols, g, scratch_.data());
        kernels::axpy(pm.rows, 1.0, scratch_.data(), gx);
      }
      break;
    }
    case Op::dot: {
      const double g0 = g[0];
      const std::size_t nlen = nodes_[n.a].rows;
      if (double* ga = pgrad(n.a)) kernels::axpy(nlen, g0, pdata(n.b), ga);
      if (double* gb = pgrad(n.b)) kernels::axpy(nlen, g0, pdata(n.a), gb);
      break;
    }
    case Op::smul: {
      const double c = pdata(n.a)[0];
      if (double* gs = pgrad(n.a)) {
        const double* v = pdata(n.b);
        double acc = 0.0;
        for (std::size_t i = 0; i < len; ++i) acc += g[i] * v[i];
        gs[0] += acc;
      }
      if (double* gv = pgrad(n.b)) kernels::axpy(len, c, g, gv);
      break;
    }
    case Op::concat: {
      std::size_t at = 0;
      for (std::uint32_t k = 0; k < n.args_n; ++k) {
        const std::uint32_t pid = args_[n.args_off + k];
        const std::size_t plen = nodes_[pid].rows;
        if (double* gp = pgrad(pid)) kernels::axpy(plen, 1.0, g + at, gp);
        at += plen;
      }
      break;
    }
    case Op::slice: {
      if (double* ga = pgrad(n.a)) kernels::axpy(len, 1.0, g, ga + n.aux);
      break;
    }
    case Op::softmax_fn: {
      if (double* ga = pgrad(n.a)) {
        const double* y = ptr(n.data_off);
        double gy = 0.0;
        for (std::size_t i = 0; i < len; ++i) gy += g[i] * y[i];
        for (std::size_t i = 0; i < len; ++i) ga[i] += y[i] * (g[i] - gy);
      }
      break;
    }
    case Op::log_softmax_fn: {
      if (double* ga = pgrad(n.a)) {
        const double* y = ptr(n.data_off);
        double gsum = 0.0;
        for (std::size_t i = 0; i < len; ++i) gsum += g[i];
        for (std::size_t i = 0; i < len; ++i) ga[i] += g[i] - std::exp(y[i]) * gsum;
      }
      break;
    }
    case Op::pick: {
      if (double* ga = pgrad(n.a)) ga[n.aux] += g[0];
      break;
    }
    case Op::row: {
      const Node& pm = nodes_[n.a];
      if (double* gm = pgrad(n.a)) kernels::axpy(pm.cols, 1.0, g, gm + n.aux * pm.cols);
      break;
    }
    case Op::add_n: {
      for (std::uint32_t k = 0; k < n.args_n; ++k) {
        const std::uint32_t pid = args_[n.args_off + k];
        if (double* gp = pgrad(pid)) kernels::axpy(len, 1.0, g, gp);
      }
      break;
    }
    case Op::sum: {
      if (double* ga = pgrad(n.a)) {
        const double g0 = g[0];
        const std::size_t plen = nodes_[n.a].len();
        for (std::size_t i = 0; i < plen; ++i) ga[i] += g0;
      }
      break;
    }
  }
}

}  // namespace vdr::ad
