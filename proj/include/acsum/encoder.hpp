#pragma once

#include <span>
#include <vector>

#include "acsum/autograd.hpp"
#include "acsum/model.hpp"

namespace acsum {

/// Hidden/cell pair. A default-constructed (unbound) member stands for the
/// zero vector.
struct CellState {
  Var h;
  Var c;
};

/// Sequential LSTM update: the arity-1 tree cell with `prev` as its only child.
CellState lstm_step(Tape& tape, LstmCell& cell, Var x, const CellState& prev);

/// N-ary tree LSTM update. Up to `cell.arity` children; missing slots and
/// unbound members contribute zeros.
CellState tree_lstm_step(Tape& tape, LstmCell& cell, Var x, std::span<const CellState> children);

std::vector<CellState> encode_sequence(Tape& tape, LstmCell& cell, Tensor& embedding,
                                       std::span<const int> ids);
/// Children before parents, in the tree's post-order.
std::vector<CellState> encode_tree(Tape& tape, LstmCell& cell, Tensor& embedding, const IndexedTree& tree);

struct EncodedCode {
  std::vector<CellState> seq_states;
  std::vector<CellState> tree_states;
  Var final_txt;
  Var root_str;
};

EncodedCode encode(Tape& tape, ModelParams& params, const EncodedSample& sample);

}  // namespace acsum
