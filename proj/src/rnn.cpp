#include <cmath>

#include "vdr/error.hpp"
#include "vdr/rnn.hpp"

namespace vdr {

namespace {

Tensor uniform_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  Tensor t = Tensor::matrix(rows, cols);
  const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
  for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

RnnParams RnnParams::init(const RnnConfig& config, std::size_t input_dim, Rng& rng) {
  require(config.hidden >= 1, "shape", "rnn hidden width must be positive");
  require(config.layers >= 1, "shape", "rnn needs at least one layer");
  RnnParams p;
  p.config = config;
  p.input_dim = input_dim;
  const std::size_t gates = config.cell == CellKind::lstm ? 4 : 3;
  const std::size_t dirs = p.directions();
  for (std::size_t layer = 0; layer < config.layers; ++layer) {
    const std::size_t in = layer == 0 ? input_dim : config.hidden * dirs;
    for (std::size_t dir = 0; dir < dirs; ++dir) {
      RnnCellParams cell;
      cell.w_ih = uniform_matrix(gates * config.hidden, in, rng);
      cell.w_hh = uniform_matrix(gates * config.hidden, config.hidden, rng);
      cell.b_ih = Tensor::vector(gates * config.hidden);
      cell.b_hh = Tensor::vector(gates * config.hidden);
      p.cells.push_back(std::move(cell));
    }
  }
  return p;
}

namespace ad {

CellValues lease_cell(Lease& lease, const RnnCellParams& params, bool trainable) {
  return CellValues{
      lease.of(params.w_ih, trainable),
      lease.of(params.w_hh, trainable),
      lease.of(params.b_ih, trainable),
      lease.of(params.b_hh, trainable),
  };
}

RnnState rnn_zero_state(Tape& tape, CellKind kind, std::size_t hidden) {
  RnnState s;
  s.hidden = tape.leaf(Tensor::vector(hidden), false);
  if (kind == CellKind::lstm) s.cell = tape.leaf(Tensor::vector(hidden), false);
  return s;
}

RnnState lstm_step(Tape& t, Value x, const RnnState& state, const CellValues& p) {
  const std::size_t h = t.cols(p.w_hh);
  require(t.length(state.hidden) == h && t.length(state.cell) == h, "shape",
          "lstm state width does not match parameters");
  Value gates = t.add(t.add(t.matvec(p.w_ih, x), p.b_ih), t.add(t.matvec(p.w_hh, state.hidden), p.b_hh));
  Value gi = t.sigmoid(t.slice(gates, 0, h));
  Value gf = t.sigmoid(t.slice(gates, h, h));
  Value gg = t.tanh(t.slice(gates, 2 * h, h));
  Value go = t.sigmoid(t.slice(gates, 3 * h, h));
  RnnState out;
  out.cell = t.add(t.mul(gf, state.cell), t.mul(gi, gg));
  out.hidden = t.mul(go, t.tanh(out.cell));
  return out;
}

RnnState gru_step(Tape& t, Value x, const RnnState& state, const CellValues& p) {
  const std::size_t h = t.cols(p.w_hh);
  require(t.length(state.hidden) == h, "shape", "gru state width does not match parameters");
  Value gx = t.add(t.matvec(p.w_ih, x), p.b_ih);
  Value gh = t.add(t.matvec(p.w_hh, state.hidden), p.b_hh);
  Value gr = t.sigmoid(t.add(t.slice(gx, 0, h), t.slice(gh, 0, h)));
  Value gz = t.sigmoid(t.add(t.slice(gx, h, h), t.slice(gh, h, h)));
  Value gn = t.tanh(t.add(t.slice(gx, 2 * h, h), t.mul(gr, t.slice(gh, 2 * h, h))));
  RnnState out;
  out.hidden = t.add(t.mul(t.one_minus(gz), gn), t.mul(gz, state.hidden));
  return out;
}

namespace {

// Hidden sequence of one direction over the given inputs. reverse=true walks
// the inputs back to front; out[i] stays aligned with inputs[i].
std::vector<Value> direction_pass(Tape& t, std::span<const Value> inputs, const CellValues& cell,
                                  CellKind kind, std::size_t hidden, bool reverse) {
  std::vector<Value> out(inputs.size());
  RnnState state = rnn_zero_state(t, kind, hidden);
  for (std::size_t step = 0; step < inputs.size(); ++step) {
    const std::size_t i = reverse ? inputs.size() - 1 - step : step;
    state = kind == CellKind::lstm ? lstm_step(t, inputs[i], state, cell)
                                   : gru_step(t, inputs[i], state, cell);
    out[i] = state.hidden;
  }
  return out;
}

}  // namespace

Value run_rnn(Lease& lease, std::span<const Value> inputs, const RnnParams& params, bool trainable) {
  require(!inputs.empty(), "empty-sequence", "run_rnn over an empty sequence");
  Tape& t = lease.tape();
  const RnnConfig& cfg = params.config;
  const std::size_t dirs = params.directions();

  std::vector<Value> seq(inputs.begin(), inputs.end());
  std::vector<Value> fwd, bwd;
  for (std::size_t layer = 0; layer < cfg.layers; ++layer) {
    const CellValues fwd_cell = lease_cell(lease, params.cells[layer * dirs], trainable);
    fwd = direction_pass(t, seq, fwd_cell, cfg.cell, cfg.hidden, false);
    if (cfg.bidirectional) {
      const CellValues bwd_cell = lease_cell(lease, params.cells[layer * dirs + 1], trainable);
      bwd = direction_pass(t, seq, bwd_cell, cfg.cell, cfg.hidden, true);
      for (std::size_t i = 0; i < seq.size(); ++i) {
        const Value parts[] = {fwd[i], bwd[i]};
        seq[i] = t.concat(parts);
      }
    } else {
      seq = fwd;
    }
  }
  if (cfg.bidirectional) {
    const Value parts[] = {fwd.back(), bwd.front()};
    return t.concat(parts);
  }
  return fwd.back();
}

}  // namespace ad

}  // namespace vdr
