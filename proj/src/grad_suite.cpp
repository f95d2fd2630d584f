#include "vdr/grad_suite.hpp"

#include <cmath>
#include <cstdio>
#include <utility>

#include "vdr/decoder.hpp"
#include "vdr/embedding.hpp"
#include "vdr/encoder.hpp"
#include "vdr/grad_check.hpp"
#include "vdr/model.hpp"
#include "vdr/rng.hpp"

namespace vdr {
namespace {

using ad::Lease;
using ad::Tape;
using ad::Value;

constexpr std::size_t kH = 2;
constexpr std::size_t kDImg = 2;

Tensor rand_vec(std::size_t n, Rng& rng) {
  Tensor t = Tensor::vector(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

Vocabulary toy_vocab() {
  return Vocabulary::from_tokens({"red", "blue", "cube", "disc", "what", "is"});
}

ModelParameters toy_model(ModelKind kind, std::uint64_t seed) {
  Vocabulary vocab = toy_vocab();
  ModelConfig cfg;
  cfg.kind = kind;
  cfg.hidden = kH;
  cfg.embed_dim = kH;
  cfg.d_img = kDImg;
  EmbeddingInit embed = random_embeddings(vocab, cfg.embed_dim, seed);
  return ModelParameters::init(cfg, std::move(embed), seed);
}

ObjectFeatureSet toy_features() {
  ObjectFeatureSet f;
  f.image_id = 21;
  f.k = 2;
  f.d_img = kDImg;
  f.data = {0.5f, -0.25f, 0.125f, 1.0f};
  return f;
}

// Three rounds with mixed candidate lengths; exercises every model path.
Dialog rich_dialog() {
  Dialog d;
  d.dialog_id = 11;
  d.image_id = 21;
  d.caption = {2, 4, 7};
  Round r0;
  r0.question = {6, 7, 2};
  r0.candidates = {{2, 4}, {3, 4}, {5, 3}};
  r0.gt_index = 1;
  Round r1;
  r1.question = {6, 7, 5, 3};
  r1.candidates = {{4, 6}, {2, 3, 4}, {3, 7}};
  r1.gt_index = 0;
  Round r2;
  r2.question = {5, 2, 6};
  r2.candidates = {{7, 4}, {6, 3}, {2, 5}};
  r2.gt_index = 2;
  d.rounds = {r0, r1, r2};
  return d;
}

ObjectFeatureSet rich_features() {
  ObjectFeatureSet f;
  f.image_id = 21;
  f.k = 3;
  f.d_img = kDImg;
  f.data = {0.5f, -0.25f, 0.125f, 1.0f, -0.625f, 0.375f};
  return f;
}

GradSuiteEntry fd_entry(std::string name, double tol, std::span<const NamedParam> params,
                        const std::function<Value(Tape&, Lease&)>& build_loss) {
  GradCheckResult r = grad_check(params, build_loss);
  GradSuiteEntry e;
  e.name = std::move(name);
  e.value = r.max_rel_err;
  e.tol = tol;
  e.n_checked = r.n_checked;
  e.worst = r.worst;
  e.pass = r.max_rel_err < tol;
  return e;
}

GradSuiteEntry lstm_probe(double tol) {
  Rng rng = named_rng(55, "cell-grads");
  const std::size_t in = 3, hidden = 4;
  RnnParams p = RnnParams::init({CellKind::lstm, hidden, 1, false}, in, rng);
  Tensor x = rand_vec(in, rng);
  Tensor w = rand_vec(hidden, rng);
  auto& cell = p.cells[0];
  std::vector<NamedParam> params = {{"w_ih", &cell.w_ih},
                                    {"w_hh", &cell.w_hh},
                                    {"b_ih", &cell.b_ih},
                                    {"b_hh", &cell.b_hh},
                                    {"x", &x}};
  return fd_entry("lstm_step", tol, params, [&](Tape& t, Lease& l) {
    ad::CellValues cv = ad::lease_cell(l, cell, true);
    ad::RnnState s0 = ad::rnn_zero_state(t, CellKind::lstm, hidden);
    ad::RnnState s1 = ad::lstm_step(t, l.of(x, true), s0, cv);
    ad::RnnState s2 = ad::lstm_step(t, l.of(x, true), s1, cv);
    return t.dot(s2.hidden, l.of(w, false));
  });
}

GradSuiteEntry gru_probe(double tol) {
  Rng rng = named_rng(56, "cell-grads");
  const std::size_t in = 3, hidden = 4;
  RnnParams p = RnnParams::init({CellKind::gru, hidden, 1, false}, in, rng);
  Tensor x = rand_vec(in, rng);
  Tensor w = rand_vec(hidden, rng);
  auto& cell = p.cells[0];
  std::vector<NamedParam> params = {{"w_ih", &cell.w_ih},
                                    {"w_hh", &cell.w_hh},
                                    {"b_ih", &cell.b_ih},
                                    {"b_hh", &cell.b_hh},
                                    {"x", &x}};
  return fd_entry("gru_step", tol, params, [&](Tape& t, Lease& l) {
    ad::CellValues cv = ad::lease_cell(l, cell, true);
    ad::RnnState s0 = ad::rnn_zero_state(t, CellKind::gru, hidden);
    ad::RnnState s1 = ad::gru_step(t, l.of(x, true), s0, cv);
    ad::RnnState s2 = ad::gru_step(t, l.of(x, true), s1, cv);
    return t.dot(s2.hidden, l.of(w, false));
  });
}

GradSuiteEntry run_rnn_probe(const std::string& name, const RnnConfig& cfg, double tol) {
  Rng rng = named_rng(78, "rnn-grads");
  const std::size_t in = 2;
  std::vector<Tensor> xs;
  for (int i = 0; i < 3; ++i) xs.push_back(rand_vec(in, rng));
  RnnParams p = RnnParams::init(cfg, in, rng);
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
  params.push_back({"x2", &xs[2]});
  return fd_entry(name, tol, params, [&](Tape& t, Lease& l) {
    std::vector<Value> inputs;
    for (const Tensor& x : xs) inputs.push_back(l.of(x, true));
    return t.dot(ad::run_rnn(l, inputs, p, true), l.of(w, false));
  });
}

GradSuiteEntry attend_probe(double tol) {
  Rng rng = named_rng(12, "part-grads");
  Tensor query = rand_vec(kH, rng);
  ObjectFeatureSet f = toy_features();
  AttendParams p = AttendParams::init(3, kH, kDImg, rng);
  std::vector<NamedParam> params = {
      {"w_q", &p.w_q}, {"w_f", &p.w_f}, {"b", &p.b}, {"w2", &p.w2}, {"query", &query}};
  return fd_entry("attend_objects", tol, params, [&](Tape& t, Lease& l) {
    auto out = ad::attend_objects(l, l.of(query, true), ad::lease_regions(t, f), p, true);
    Tensor probe = Tensor::from({0.3, -1.1});
    return t.dot(l.of(probe, false), out.attended);
  });
}

GradSuiteEntry encode_probe(ModelKind kind, double tol) {
  ModelParameters m = toy_model(kind, 21);
  m.embed.trainable = true;  // cover the embedding-row path for both encoders
  Rng prng = named_rng(21, "enc-point");
  m.visit([&](const std::string&, Tensor& t, bool) {
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = prng.uniform(-1.0, 1.0);
  });
  ObjectFeatureSet f = toy_features();
  std::vector<NamedParam> params;
  m.visit([&](const std::string& name, Tensor& t, bool) {
    if (name.rfind("dec.", 0) != 0) params.push_back({name, &t});
  });
  Tensor probe = Tensor::from({0.7, -1.3});
  std::vector<std::uint32_t> question = {6, 7, 5};
  std::vector<std::uint32_t> caption = {2, 4};
  std::vector<std::vector<std::uint32_t>> exchanges = {{6, 7, 2, 3, 4}};
  std::vector<std::uint32_t> history = {2, 4, 6, 7, 2, 3, 4};
  const std::string name = kind == ModelKind::lf_rcnn ? "lf_encode" : "mn_encode";
  return fd_entry(name, tol, params, [&](Tape& t, Lease& l) {
    auto regions = ad::lease_regions(t, f);
    ad::EncodedContext ctx;
    if (kind == ModelKind::lf_rcnn) {
      ctx = ad::lf_encode(l, question, history, m.embed, m.lf, regions, true);
    } else {
      ctx = ad::mn_encode(l, question, caption, exchanges, m.embed, m.mn, regions, true);
    }
    return t.dot(l.of(probe, false), ctx.vector);
  });
}

GradSuiteEntry score_dot_probe(double tol) {
  Rng rng = named_rng(14, "dot-grads");
  Tensor ctx = rand_vec(kH, rng);
  Tensor cand_a = rand_vec(kH, rng);
  Tensor cand_b = rand_vec(kH, rng);
  Tensor cand_c = rand_vec(kH, rng);
  std::vector<NamedParam> params = {
      {"ctx", &ctx}, {"cand_a", &cand_a}, {"cand_b", &cand_b}, {"cand_c", &cand_c}};
  return fd_entry("score_dot", tol, params, [&](Tape& t, Lease& l) {
    std::vector<Value> cands = {l.of(cand_a, true), l.of(cand_b, true), l.of(cand_c, true)};
    auto scores = ad::score_dot(l, l.of(ctx, true), cands);
    return ad::round_loss(t, scores, 2);
  });
}

GradSuiteEntry score_gated_probe(double tol) {
  Rng rng = named_rng(13, "gated");
  Tensor ctx = rand_vec(kH, rng);
  Tensor cand_a = rand_vec(kH, rng);
  Tensor cand_b = rand_vec(kH, rng);
  GatedScoreParams p;
  p.w_g = Tensor::matrix(3, kH);
  p.w_s = Tensor::matrix(3, kH);
  for (std::size_t i = 0; i < p.w_g.size(); ++i) p.w_g.data()[i] = rng.uniform(-0.7, 0.7);
  for (std::size_t i = 0; i < p.w_s.size(); ++i) p.w_s.data()[i] = rng.uniform(-0.7, 0.7);
  p.b_g = rand_vec(3, rng);
  p.b_s = rand_vec(3, rng);
  p.w = rand_vec(3, rng);
  p.b = rand_vec(1, rng);
  std::vector<NamedParam> params = {{"ctx", &ctx}, {"cand_a", &cand_a}, {"cand_b", &cand_b},
                                    {"w_g", &p.w_g}, {"b_g", &p.b_g},   {"w_s", &p.w_s},
                                    {"b_s", &p.b_s}, {"w", &p.w},       {"b", &p.b}};
  return fd_entry("score_gated", tol, params, [&](Tape& t, Lease& l) {
    std::vector<Value> cands = {l.of(cand_a, true), l.of(cand_b, true)};
    auto scores = ad::score_gated(l, l.of(ctx, true), cands, p, true);
    return ad::round_loss(t, scores, 0);
  });
}

GradSuiteEntry score_gated_scalar_probe(double tol) {
  Rng rng = named_rng(15, "gated-scalar");
  Tensor ctx = rand_vec(kH, rng);
  Tensor cand_a = rand_vec(kH, rng);
  Tensor cand_b = rand_vec(kH, rng);
  GatedScalarScoreParams p;
  p.a = Tensor::scalar(0.8);
  p.b = Tensor::scalar(-0.2);
  p.w = Tensor::scalar(1.3);
  std::vector<NamedParam> params = {{"ctx", &ctx}, {"cand_a", &cand_a}, {"cand_b", &cand_b},
                                    {"a", &p.a},   {"b", &p.b},         {"w", &p.w}};
  return fd_entry("score_gated_scalar", tol, params, [&](Tape& t, Lease& l) {
    std::vector<Value> cands = {l.of(cand_a, true), l.of(cand_b, true)};
    auto scores = ad::score_gated_scalar(l, l.of(ctx, true), cands, p, true);
    return ad::round_loss(t, scores, 1);
  });
}

void round_loss_probes(ModelKind kind, double tol, std::vector<GradSuiteEntry>& out) {
  Dialog d = rich_dialog();
  ObjectFeatureSet f = rich_features();
  ModelParameters m = toy_model(kind, 44);
  Rng rng = named_rng(44, "grad-point");
  m.visit([&](const std::string&, Tensor& t, bool) {
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-1.2, 1.2);
  });

  // Adding a constant to every candidate logit leaves log_softmax unchanged, so
  // the pure-shift parameter of each scorer must get an exactly-zero gradient.
  // It is excluded from the finite-difference list (0/0 is meaningless there)
  // and asserted to vanish analytically instead.
  const std::string shift_param =
      m.dec.variant == DecoderVariant::dot ? "dec.b_proj" : "dec.gated.b";
  std::vector<NamedParam> params;
  Tensor* shifted = nullptr;
  m.visit([&](const std::string& name, Tensor& t, bool trainable) {
    if (!trainable) return;
    if (name == shift_param) {
      shifted = &t;
    } else {
      params.push_back({name, &t});
    }
  });

  auto build_loss = [&](Tape& tape, Lease& lease) {
    Value l0 = ad::forward_round(lease, m, d, 0, f, true).loss;
    Value l1 = ad::forward_round(lease, m, d, 1, f, true).loss;
    Value l2 = ad::forward_round(lease, m, d, 2, f, true).loss;
    const Value parts[] = {l0, l1, l2};
    return tape.add_n(parts);
  };
  out.push_back(fd_entry("round_loss(" + to_string(kind) + ")", tol, params, build_loss));

  GradSuiteEntry shift;
  shift.name = "round_loss(" + to_string(kind) + ") shift-zero";
  shift.tol = 1e-12;
  Tape tape;
  Lease lease(tape);
  tape.backward(build_loss(tape, lease));
  for (double g : tape.grad(*lease.find(*shifted))) {
    shift.value = std::max(shift.value, std::fabs(g));
    ++shift.n_checked;
  }
  shift.pass = shift.value < shift.tol;
  out.push_back(std::move(shift));
}

}  // namespace

std::vector<GradSuiteEntry> run_grad_suite(double tol) {
  std::vector<GradSuiteEntry> entries;
  entries.push_back(lstm_probe(tol));
  entries.push_back(gru_probe(tol));
  entries.push_back(run_rnn_probe("run_rnn(lstm,2-layer)", {CellKind::lstm, 3, 2, false}, tol));
  entries.push_back(run_rnn_probe("run_rnn(gru,bidir)", {CellKind::gru, 3, 1, true}, tol));
  entries.push_back(attend_probe(tol));
  entries.push_back(encode_probe(ModelKind::lf_rcnn, tol));
  entries.push_back(encode_probe(ModelKind::mn_rcnn, tol));
  entries.push_back(score_dot_probe(tol));
  entries.push_back(score_gated_probe(tol));
  entries.push_back(score_gated_scalar_probe(tol));
  for (ModelKind kind : {ModelKind::lf_rcnn, ModelKind::mn_rcnn, ModelKind::mn_rcnn_wt}) {
    round_loss_probes(kind, tol, entries);
  }
  return entries;
}

bool all_pass(const std::vector<GradSuiteEntry>& entries) {
  for (const auto& e : entries) {
    if (!e.pass) return false;
  }
  return true;
}

std::string format_grad_suite(const std::vector<GradSuiteEntry>& entries) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-34s %12s %12s %8s  %s\n", "probe", "error", "tol",
                "checked", "status");
  out += line;
  std::size_t n_fail = 0;
  for (const auto& e : entries) {
    std::snprintf(line, sizeof(line), "%-34s %12.3e %12.0e %8zu  %s\n", e.name.c_str(), e.value,
                  e.tol, e.n_checked, e.pass ? "ok" : "FAIL");
    out += line;
    if (!e.pass) ++n_fail;
  }
  std::snprintf(line, sizeof(line), "%zu probes, %zu failed\n", entries.size(), n_fail);
  out += line;
  return out;
}

}  // namespace vdr
