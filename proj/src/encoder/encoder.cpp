#include "acsum/encoder.hpp"

#include "acsum/error.hpp"

namespace acsum {

namespace {

// W x + sum_l U[l] h_l + b over the bound child states.
Var gate_input(Tape& tape, Tensor& W, Var x, std::span<Tensor* const> U, std::span<const CellState> children,
               Tensor& b) {
  Var acc = matmul(tape.param(W), x);
  for (std::size_t l = 0; l < children.size(); ++l) {
    if (children[l].h.valid()) acc = acc + matmul(tape.param(*U[l]), children[l].h);
  }
  return acc + tape.param(b);
}

}  // namespace

CellState tree_lstm_step(Tape& tape, LstmCell& cell, Var x, std::span<const CellState> children) {
  if (children.size() > cell.arity) {
    throw DimensionError("tree_lstm_step: " + std::to_string(children.size()) + " children for a cell of arity " +
                         std::to_string(cell.arity));
  }
  if (x.size() != cell.input) {
    throw DimensionError("tree_lstm_step: input of size " + std::to_string(x.size()) + ", expected " +
                         std::to_string(cell.input));
  }
  auto slots = [&](std::vector<Tensor>& us) {
    std::vector<Tensor*> out;
    for (std::size_t l = 0; l < children.size(); ++l) out.push_back(&us[l]);
    return out;
  };
  auto ui = slots(cell.U_i);
  auto uo = slots(cell.U_o);
  auto uu = slots(cell.U_u);
  Var i = sigmoid(gate_input(tape, cell.W_i, x, ui, children, cell.b_i));
  Var o = sigmoid(gate_input(tape, cell.W_o, x, uo, children, cell.b_o));
  Var u = tanh(gate_input(tape, cell.W_u, x, uu, children, cell.b_u));
  Var c = i * u;
  for (std::size_t k = 0; k < children.size(); ++k) {
    if (!children[k].c.valid()) continue;
    std::vector<Tensor*> uf;
    for (std::size_t l = 0; l < children.size(); ++l) uf.push_back(&cell.forget_u(k, l));
    Var f = sigmoid(gate_input(tape, cell.W_f, x, uf, children, cell.b_f));
    c = c + f * children[k].c;
  }
  Var h = o * tanh(c);
  return {h, c};
}

CellState lstm_step(Tape& tape, LstmCell& cell, Var x, const CellState& prev) {
  if (cell.arity != 1) throw DimensionError("lstm_step needs an arity-1 cell");
  return tree_lstm_step(tape, cell, x, std::span<const CellState>(&prev, 1));
}

std::vector<CellState> encode_sequence(Tape& tape, LstmCell& cell, Tensor& embedding, std::span<const int> ids) {
  std::vector<CellState> states;
  states.reserve(ids.size());
  CellState prev;
  for (int id : ids) {
    prev = lstm_step(tape, cell, tape.row(embedding, static_cast<std::size_t>(id)), prev);
    states.push_back(prev);
  }
  return states;
}

std::vector<CellState> encode_tree(Tape& tape, LstmCell& cell, Tensor& embedding, const IndexedTree& tree) {
  std::vector<CellState> states;
  states.reserve(tree.size());
  std::vector<CellState> kids;
  for (std::size_t j = 0; j < tree.size(); ++j) {
    kids.clear();
    for (int child : tree.children[j]) {
      if (child < 0 || static_cast<std::size_t>(child) >= j) throw DataError("indexed tree is not in post-order");
      kids.push_back(states[static_cast<std::size_t>(child)]);
    }
    Var x = tape.row(embedding, static_cast<std::size_t>(tree.keys[j]));
    states.push_back(tree_lstm_step(tape, cell, x, kids));
  }
  return states;
}

EncodedCode encode(Tape& tape, ModelParams& params, const EncodedSample& sample) {
  if (sample.code.empty() || sample.tree.size() == 0) throw DataError("sample '" + sample.id + "' has no code");
  EncodedCode out;
  out.seq_states = encode_sequence(tape, params.seq_cell, params.code_embedding, sample.code);
  out.tree_states = encode_tree(tape, params.tree_cell, params.node_embedding, sample.tree);
  out.final_txt = out.seq_states.back().h;
  out.root_str = out.tree_states.back().h;
  return out;
}

}  // namespace acsum
