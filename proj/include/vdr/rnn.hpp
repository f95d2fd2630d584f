#pragma once

#include <span>
#include <vector>

#include "vdr/lease.hpp"
#include "vdr/rng.hpp"
#include "vdr/tape.hpp"
#include "vdr/tensor.hpp"

namespace vdr {

enum class CellKind { lstm, gru };

// Gate blocks are packed PyTorch-style: LSTM rows are (input, forget,
// candidate, output) x H, GRU rows are (reset, update, candidate) x H.
struct RnnCellParams {
  Tensor w_ih;  // [gates*H, in]
  Tensor w_hh;  // [gates*H, H]
  Tensor b_ih;  // [gates*H]
  Tensor b_hh;  // [gates*H]
};

struct RnnConfig {
  CellKind cell = CellKind::lstm;
  std::size_t hidden = 0;
  std::size_t layers = 1;
  bool bidirectional = false;
};

struct RnnParams {
  RnnConfig config;
  std::size_t input_dim = 0;
  // Layer-major, forward direction first: l0 fwd, l0 bwd, l1 fwd, ...
  std::vector<RnnCellParams> cells;

  std::size_t directions() const { return config.bidirectional ? 2 : 1; }
  std::size_t output_dim() const { return config.hidden * directions(); }

  static RnnParams init(const RnnConfig& config, std::size_t input_dim, Rng& rng);
};

namespace ad {

struct RnnState {
  Value hidden;
  Value cell;  // LSTM only; GRU states leave it defaulted
};

struct CellValues {
  Value w_ih, w_hh, b_ih, b_hh;
};

CellValues lease_cell(Lease& lease, const RnnCellParams& params, bool trainable);

RnnState rnn_zero_state(Tape& tape, CellKind kind, std::size_t hidden);

// One recurrence step; the input state is left untouched.
RnnState lstm_step(Tape& tape, Value x, const RnnState& state, const CellValues& p);
RnnState gru_step(Tape& tape, Value x, const RnnState& state, const CellValues& p);

// Encodes a token sequence to one vector: the final hidden of the last layer,
// or the concatenated final forward/backward hiddens when bidirectional.
Value run_rnn(Lease& lease, std::span<const Value> inputs, const RnnParams& params, bool trainable);

}  // namespace ad

}  // namespace vdr
