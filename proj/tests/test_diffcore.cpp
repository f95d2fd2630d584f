#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "vdr/error.hpp"
#include "vdr/grad_check.hpp"
#include "vdr/lease.hpp"
#include "vdr/numeric.hpp"
#include "vdr/rng.hpp"
#include "vdr/rnn.hpp"
#include "vdr/tape.hpp"

using namespace vdr;
using ad::Value;

namespace {

Tensor rand_vec(std::size_t n, Rng& rng) {
  Tensor t = Tensor::vector(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

Tensor rand_mat(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t = Tensor::matrix(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-1.0, 1.0);
  return t;
}

// Largest relative error over all elements of all params, against central
// differences of the same loss.
double max_err(std::vector<NamedParam> params,
               const std::function<Value(ad::Tape&, ad::Lease&)>& loss) {
  return grad_check(params, loss).max_rel_err;
}

}  // namespace

TEST_CASE("forward values of the basic ops") {
  ad::Tape t;
  Value a = t.leaf(Tensor::from({1.0, -2.0, 3.0}), false);
  Value b = t.leaf(Tensor::from({0.5, 4.0, -1.0}), false);

  CHECK(t.data(t.add(a, b))[1] == 2.0);
  CHECK(t.data(t.sub(a, b))[0] == 0.5);
  CHECK(t.data(t.mul(a, b))[2] == -3.0);
  CHECK(t.data(t.scale(a, -2.0))[0] == -2.0);
  CHECK(t.data(t.neg(a))[1] == 2.0);
  CHECK(t.data(t.one_minus(a))[2] == -2.0);
  CHECK(t.data(t.tanh(a))[0] == doctest::Approx(std::tanh(1.0)));
  CHECK(t.data(t.sigmoid(a))[1] == doctest::Approx(1.0 / (1.0 + std::exp(2.0))));
  CHECK(t.scalar(t.dot(a, b)) == doctest::Approx(1.0 * 0.5 - 2.0 * 4.0 - 3.0));
  CHECK(t.scalar(t.sum(a)) == 2.0);
  CHECK(t.scalar(t.pick(a, 2)) == 3.0);

  Value m = t.leaf(Tensor::from({1.0, 2.0, 3.0, 4.0, 5.0, 6.0}), false);
  // reshape through the span leaf: 2x3 matrix
  Value m2 = t.leaf(t.data(m), 2, 3, false);
  Value x = t.leaf(Tensor::from({1.0, 0.0, -1.0}), false);
  auto mv = t.data(t.matvec(m2, x));
  CHECK(mv[0] == doctest::Approx(-2.0));
  CHECK(mv[1] == doctest::Approx(-2.0));
  Value xr = t.leaf(Tensor::from({1.0, -1.0}), false);
  auto mt = t.data(t.matvec_t(m2, xr));
  CHECK(mt[0] == doctest::Approx(-3.0));
  CHECK(mt[1] == doctest::Approx(-3.0));
  CHECK(mt[2] == doctest::Approx(-3.0));
  CHECK(t.data(t.row(m2, 1))[0] == 4.0);

  const Value parts[] = {a, xr};
  Value cat = t.concat(parts);
  CHECK(t.length(cat) == 5);
  CHECK(t.data(cat)[4] == -1.0);
  CHECK(t.data(t.slice(cat, 1, 3))[2] == 1.0);

  Value s = t.leaf(Tensor::scalar(2.5), false);
  CHECK(t.data(t.smul(s, b))[1] == 10.0);

  const Value terms[] = {a, b, a};
  CHECK(t.data(t.add_n(terms))[0] == 2.5);
}

TEST_CASE("tape softmax agrees with the plain normalizers") {
  ad::Tape t;
  Tensor logits = Tensor::from({0.3, -1.2, 2.0, 0.0});
  Value x = t.leaf(logits, false);
  auto sm = t.data(t.softmax(x));
  auto lsm = t.data(t.log_softmax(x));
  auto sm_ref = softmax(logits.span());
  auto lsm_ref = log_softmax(logits.span());
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(sm[i] == doctest::Approx(sm_ref[i]).epsilon(1e-15));
    CHECK(lsm[i] == doctest::Approx(lsm_ref[i]).epsilon(1e-15));
    CHECK(std::exp(lsm[i]) == doctest::Approx(sm[i]).epsilon(1e-12));
  }
}

TEST_CASE("gradients of every op agree with central differences") {
  Rng rng = named_rng(21, "op-grads");
  Tensor a = rand_vec(5, rng);
  Tensor b = rand_vec(5, rng);
  Tensor w = rand_vec(5, rng);  // fixed weights make the reduction non-uniform
  Tensor m = rand_mat(4, 5, rng);
  Tensor w4 = rand_vec(4, rng);
  Tensor s = Tensor::scalar(0.7);

  auto reduce = [&](ad::Tape& t, ad::Lease& l, Value v, const Tensor& weights) {
    return t.dot(v, l.of(weights, false));
  };

  SUBCASE("elementwise and shape ops") {
    const double err = max_err(
        {{"a", &a}, {"b", &b}},
        [&](ad::Tape& t, ad::Lease& l) {
          Value va = l.of(a, true);
          Value vb = l.of(b, true);
          Value e1 = t.mul(t.add(va, vb), t.sub(va, vb));
          Value e2 = t.mul(t.tanh(va), t.sigmoid(vb));
          Value e3 = t.add(t.scale(t.neg(va), 0.3), t.one_minus(vb));
          const Value terms[] = {e1, e2, e3};
          Value mixed = t.add_n(terms);
          const Value parts[] = {t.slice(mixed, 0, 2), t.slice(mixed, 2, 3)};
          return reduce(t, l, t.concat(parts), w);
        });
    CHECK(err < 1e-6);
  }

  SUBCASE("matvec and matvec_t") {
    const double err = max_err(
        {{"m", &m}, {"a", &a}, {"w4", &w4}},
        [&](ad::Tape& t, ad::Lease& l) {
          Value vm = l.of(m, true);
          Value va = l.of(a, true);
          Value vw4 = l.of(w4, true);
          Value y = t.matvec(vm, va);        // 4
          Value z = t.matvec_t(vm, vw4);     // 5
          return t.add(reduce(t, l, y, w4), reduce(t, l, z, w));
        });
    CHECK(err < 1e-6);
  }

  SUBCASE("dot, smul, sum, pick, row") {
    const double err = max_err(
        {{"a", &a}, {"b", &b}, {"s", &s}, {"m", &m}},
        [&](ad::Tape& t, ad::Lease& l) {
          Value va = l.of(a, true);
          Value vb = l.of(b, true);
          Value vs = l.of(s, true);
          Value vm = l.of(m, true);
          Value d = t.dot(va, vb);
          Value sm = t.smul(vs, vb);
          Value r = t.row(vm, 2);
          return t.add(t.add(d, t.sum(t.mul(sm, r))), t.pick(t.tanh(va), 3));
        });
    CHECK(err < 1e-6);
  }

  SUBCASE("softmax and log_softmax") {
    const double err = max_err(
        {{"a", &a}},
        [&](ad::Tape& t, ad::Lease& l) {
          Value va = l.of(a, true);
          Value p = t.softmax(t.scale(va, 2.0));
          Value lp = t.log_softmax(va);
          return t.add(reduce(t, l, p, w), t.pick(lp, 1));
        });
    CHECK(err < 1e-6);
  }
}

TEST_CASE("gradient accumulates when one leaf is used twice") {
  Tensor a = Tensor::from({0.4, -0.3});
  ad::Tape t;
  ad::Lease l(t);
  Value va = l.of(a, true);
  CHECK(l.of(a, true).id == va.id);  // second lease returns the same leaf
  Value loss = t.sum(t.mul(va, va));
  t.backward(loss);
  auto g = t.grad(va);
  CHECK(g[0] == doctest::Approx(0.8));
  CHECK(g[1] == doctest::Approx(-0.6));
}

TEST_CASE("backward is bit-deterministic across runs") {
  Rng rng = named_rng(33, "determinism");
  Tensor m = rand_mat(8, 8, rng);
  Tensor x = rand_vec(8, rng);
  auto run = [&]() {
    ad::Tape t;
    ad::Lease l(t);
    Value vm = l.of(m, true);
    Value vx = l.of(x, true);
    Value h = t.tanh(t.matvec(vm, vx));
    Value loss = t.pick(t.log_softmax(h), 3);
    t.backward(loss);
    auto g = t.grad(vm);
    return std::vector<double>(g.begin(), g.end());
  };
  auto g1 = run();
  auto g2 = run();
  CHECK(g1 == g2);
}

TEST_CASE("lstm and gru steps match central differences") {
  Rng rng = named_rng(55, "cell-grads");
  const std::size_t in = 3, hidden = 4;

  RnnConfig lstm_cfg{CellKind::lstm, hidden, 1, false};
  RnnParams lstm = RnnParams::init(lstm_cfg, in, rng);
  Tensor x = rand_vec(in, rng);
  Tensor w = rand_vec(hidden, rng);

  auto& cell = lstm.cells[0];
  const double lstm_err = max_err(
      {{"w_ih", &cell.w_ih}, {"w_hh", &cell.w_hh}, {"b_ih", &cell.b_ih},
       {"b_hh", &cell.b_hh}, {"x", &x}},
      [&](ad::Tape& t, ad::Lease& l) {
        ad::CellValues cv = ad::lease_cell(l, cell, true);
        ad::RnnState s0 = ad::rnn_zero_state(t, CellKind::lstm, hidden);
        ad::RnnState s1 = ad::lstm_step(t, l.of(x, true), s0, cv);
        ad::RnnState s2 = ad::lstm_step(t, l.of(x, true), s1, cv);
        return t.dot(s2.hidden, l.of(w, false));
      });
  CHECK(lstm_err < 1e-6);

  RnnConfig gru_cfg{CellKind::gru, hidden, 1, false};
  RnnParams gru = RnnParams::init(gru_cfg, in, rng);
  auto& gcell = gru.cells[0];
  const double gru_err = max_err(
      {{"w_ih", &gcell.w_ih}, {"w_hh", &gcell.w_hh}, {"b_ih", &gcell.b_ih},
       {"b_hh", &gcell.b_hh}, {"x", &x}},
      [&](ad::Tape& t, ad::Lease& l) {
        ad::CellValues cv = ad::lease_cell(l, gcell, true);
        ad::RnnState s0 = ad::rnn_zero_state(t, CellKind::gru, hidden);
        ad::RnnState s1 = ad::gru_step(t, l.of(x, true), s0, cv);
        ad::RnnState s2 = ad::gru_step(t, l.of(x, true), s1, cv);
        return t.dot(s2.hidden, l.of(w, false));
      });
  CHECK(gru_err < 1e-6);
}

TEST_CASE("run_rnn output shapes") {
  Rng rng = named_rng(77, "rnn-shapes");
  const std::size_t in = 3, hidden = 4;

  RnnParams uni = RnnParams::init({CellKind::lstm, hidden, 2, false}, in, rng);
  RnnParams bi = RnnParams::init({CellKind::gru, hidden, 1, true}, in, rng);
  CHECK(uni.cells.size() == 2);
  CHECK(bi.cells.size() == 2);
  CHECK(uni.output_dim() == hidden);
  CHECK(bi.output_dim() == 2 * hidden);

  std::vector<Tensor> xs;
  for (int i = 0; i < 3; ++i) xs.push_back(rand_vec(in, rng));

  ad::Tape t;
  ad::Lease l(t);
  std::vector<Value> inputs;
  for (const Tensor& x : xs) inputs.push_back(l.of(x, false));
  CHECK(t.length(ad::run_rnn(l, inputs, uni, false)) == hidden);
  CHECK(t.length(ad::run_rnn(l, inputs, bi, false)) == 2 * hidden);

  CHECK_THROWS_AS(ad::run_rnn(l, std::span<const Value>{}, uni, false), Error);
}

TEST_CASE("run_rnn gradients match central differences") {
  Rng rng = named_rng(78, "rnn-grads");
  const std::size_t in = 2, hidden = 3;
  std::vector<Tensor> xs;
  for (int i = 0; i < 3; ++i) xs.push_back(rand_vec(in, rng));

  SUBCASE("two-layer unidirectional lstm") {
    RnnParams p = RnnParams::init({CellKind::lstm, hidden, 2, false}, in, rng);
    Tensor w = rand_vec(p.output_dim(), rng);
    std::vector<NamedParam> params;
    for (std::size_t c = 0; c < p.cells.size(); ++c) {
      const std::string tag = "c" + std::to_string(c);
      params.push_back({tag + ".w_ih", &p.cells[c].w_ih});
      params.push_back({tag + ".w_hh", &p.cells[c].w_hh});
      params.push_back({tag + ".b_ih", &p.cells[c].b_ih});
      params.push_back({tag + ".b_hh", &p.cells[c].b_hh});
    }
    params.push_back({"x0", &xs[0]});
    const double err = max_err(params, [&](ad::Tape& t, ad::Lease& l) {
      std::vector<Value> inputs;
      for (const Tensor& x : xs) inputs.push_back(l.of(x, true));
      return t.dot(ad::run_rnn(l, inputs, p, true), l.of(w, false));
    });
    CHECK(err < 1e-6);
  }

  SUBCASE("bidirectional gru") {
    RnnParams p = RnnParams::init({CellKind::gru, hidden, 1, true}, in, rng);
    Tensor w = rand_vec(p.output_dim(), rng);
    std::vector<NamedParam> params;
    for (std::size_t c = 0; c < p.cells.size(); ++c) {
      const std::string tag = "c" + std::to_string(c);
      params.push_back({tag + ".w_ih", &p.cells[c].w_ih});
      params.push_back({tag + ".w_hh", &p.cells[c].w_hh});
      params.push_back({tag + ".b_ih", &p.cells[c].b_ih});
      params.push_back({tag + ".b_hh", &p.cells[c].b_hh});
    }
    params.push_back({"x2", &xs[2]});
    const double err = max_err(params, [&](ad::Tape& t, ad::Lease& l) {
      std::vector<Value> inputs;
      for (const Tensor& x : xs) inputs.push_back(l.of(x, true));
      return t.dot(ad::run_rnn(l, inputs, p, true), l.of(w, false));
    });
    CHECK(err < 1e-6);
  }
}

TEST_CASE("plain normalizers") {
  Tensor logits = Tensor::from({2.0, 1.0, 0.5});
  auto p = softmax(logits.span());
  double total = 0.0;
  for (double v : p) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(logsumexp(logits.span()) ==
        doctest::Approx(std::log(std::exp(2.0) + std::exp(1.0) + std::exp(0.5))));
  CHECK_THROWS_AS(softmax(std::span<const double>{}), Error);
  CHECK_THROWS_AS(log_softmax(std::span<const double>{}), Error);
}
