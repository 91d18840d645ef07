#pragma once

// Independent reference computations for tests. Nothing here goes through the
// autograd tape: gradients come from central differences and LSTM states from
// plain scalar loops.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "acsum/ast.hpp"
#include "acsum/model.hpp"
#include "acsum/rng.hpp"

namespace acsum::oracle {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;
  std::size_t checked = 0;
};

/// Central differences of `loss` against the analytic gradient already
/// accumulated in each tensor's grad buffer. Relative error is
/// |a - n| / max(|a|, |n|, floor).
inline GradCheckResult finite_difference_check(std::vector<NamedTensor> params, const std::function<double()>& loss,
                                               double h = 1e-5, double floor = 1e-6) {
  GradCheckResult out;
  for (auto& [name, t] : params) {
    for (std::size_t i = 0; i < t->size(); ++i) {
      double saved = (*t)[i];
      (*t)[i] = saved + h;
      double up = loss();
      (*t)[i] = saved - h;
      double down = loss();
      (*t)[i] = saved;
      double numeric = (up - down) / (2 * h);
      double analytic = t->grad()[i];
      double denom = std::max({std::abs(numeric), std::abs(analytic), floor});
      double rel = std::abs(numeric - analytic) / denom;
      ++out.checked;
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        char buf[96];
        std::snprintf(buf, sizeof buf, "] analytic %.6e numeric %.6e", analytic, numeric);
        out.worst = name + "[" + std::to_string(i) + buf;
      }
    }
  }
  return out;
}

using Vec = std::vector<double>;

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline Vec matvec(const Tensor& m, const Vec& x) {
  Vec out(m.rows(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out[r] += m.at(r, c) * x[c];
  }
  return out;
}

struct PlainState {
  Vec h;
  Vec c;
};

/// Gate-by-gate N-ary LSTM update on plain vectors. Children beyond the list
/// are zero.
inline PlainState lstm_oracle(const LstmCell& cell, const Vec& x, const std::vector<PlainState>& kids) {
  const std::size_t H = cell.hidden;
  auto pre = [&](const Tensor& W, const Tensor& b, auto&& U) {
    Vec acc = matvec(W, x);
    for (std::size_t l = 0; l < kids.size(); ++l) {
      Vec u = matvec(U(l), kids[l].h);
      for (std::size_t r = 0; r < H; ++r) acc[r] += u[r];
    }
    for (std::size_t r = 0; r < H; ++r) acc[r] += b[r];
    return acc;
  };
  Vec i = pre(cell.W_i, cell.b_i, [&](std::size_t l) -> const Tensor& { return cell.U_i[l]; });
  Vec o = pre(cell.W_o, cell.b_o, [&](std::size_t l) -> const Tensor& { return cell.U_o[l]; });
  Vec u = pre(cell.W_u, cell.b_u, [&](std::size_t l) -> const Tensor& { return cell.U_u[l]; });
  PlainState out{Vec(H), Vec(H)};
  for (std::size_t r = 0; r < H; ++r) out.c[r] = sig(i[r]) * std::tanh(u[r]);
  for (std::size_t k = 0; k < kids.size(); ++k) {
    Vec f = pre(cell.W_f, cell.b_f, [&](std::size_t l) -> const Tensor& { return cell.forget_u(k, l); });
    for (std::size_t r = 0; r < H; ++r) out.c[r] += sig(f[r]) * kids[k].c[r];
  }
  for (std::size_t r = 0; r < H; ++r) out.h[r] = sig(o[r]) * std::tanh(out.c[r]);
  return out;
}

inline void fill_uniform(Tensor& t, Rng& rng, double scale) {
  for (double& v : t.data()) v = rng.uniform(-scale, scale);
}

inline void randomize_cell(LstmCell& cell, Rng& rng, double scale) {
  cell.for_each("", [&](const std::string&, Tensor& t) { fill_uniform(t, rng, scale); });
}

/// Random tree with at most `max_nodes` nodes and arity at most `max_arity`.
/// Leaves carry distinct tokens so order checks are meaningful.
inline AstNode random_tree(Rng& rng, std::size_t max_nodes, std::size_t max_arity) {
  std::size_t budget = 1 + rng.below(max_nodes);
  int counter = 0;
  std::function<AstNode(std::size_t)> grow = [&](std::size_t depth) -> AstNode {
    --budget;
    std::size_t want = (budget == 0 || depth > 12) ? 0 : rng.below(max_arity + 1);
    if (want == 0) {
      return AstNode::leaf("L" + std::to_string(rng.below(3)), "tok" + std::to_string(counter++));
    }
    std::vector<AstNode> kids;
    for (std::size_t k = 0; k < want && budget > 0; ++k) kids.push_back(grow(depth + 1));
    return AstNode::node("N" + std::to_string(rng.below(4)), std::move(kids));
  };
  return grow(0);
}

/// One training pair with the given code and comment token indices and a
/// hand-built tree over node keys.
inline EncodedSample tiny_sample(std::vector<int> code, IndexedTree tree, std::vector<int> target) {
  EncodedSample s;
  s.id = "tiny";
  s.code = std::move(code);
  for (int c : s.code) s.code_tokens.push_back("c" + std::to_string(c));
  s.tree = std::move(tree);
  s.target = std::move(target);
  for (int t : s.target) {
    if (t != 2) s.reference.push_back("w" + std::to_string(t));
  }
  return s;
}

/// Three nodes: two leaves under one root.
inline IndexedTree three_node_tree(int left, int right, int root) {
  IndexedTree t;
  t.keys = {left, right, root};
  t.labels = {"l", "r", "root"};
  t.children = {{}, {}, {0, 1}};
  return t;
}

}  // namespace acsum::oracle
