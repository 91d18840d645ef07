#include "acsum/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "acsum/error.hpp"

namespace acsum {

namespace {

void require_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) throw NumericError(std::string(op) + ": non-finite value in forward pass");
}

Tape& common_tape(Var a, Var b, const char* op) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) {
    throw Error(std::string(op) + ": operands must live on the same tape");
  }
  return a.tape();
}

double sigmoid_scalar(double v) {
  if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
  double e = std::exp(v);
  return e / (1.0 + e);
}

enum class Broadcast { kEqual, kLeftScalar, kRightScalar };

Broadcast broadcast_kind(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return Broadcast::kEqual;
  if (a.size() == 1) return Broadcast::kLeftScalar;
  if (b.size() == 1) return Broadcast::kRightScalar;
  throw DimensionError(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) +
                       " and " + shape_string(b.shape()));
}

// Binary elementwise op with scalar broadcast. `fwd(x, y)` computes the value,
// `dx(x, y)` / `dy(x, y)` the local partials.
template <class Fwd, class Dx, class Dy>
Var binary(Var a, Var b, const char* op, Fwd fwd, Dx dx, Dy dy) {
  Tape& tape = common_tape(a, b, op);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Broadcast kind = broadcast_kind(av, bv, op);
  const Tensor& big = kind == Broadcast::kLeftScalar ? bv : av;
  Tensor out(big.shape());
  auto xa = [&](std::size_t i) { return kind == Broadcast::kLeftScalar ? av[0] : av[i]; };
  auto xb = [&](std::size_t i) { return kind == Broadcast::kRightScalar ? bv[0] : bv[i]; };
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xa(i), xb(i));
  require_finite(out, op);
  std::uint32_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), [ia, ib, kind, dx, dy](Tape& t, std::uint32_t self) {
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    std::vector<double> g(t.grad(self).begin(), t.grad(self).end());
    auto ga = t.grad(ia);
    auto gb = t.grad(ib);
    for (std::size_t i = 0; i < g.size(); ++i) {
      double x = kind == Broadcast::kLeftScalar ? av[0] : av[i];
      double y = kind == Broadcast::kRightScalar ? bv[0] : bv[i];
      ga[kind == Broadcast::kLeftScalar ? 0 : i] += g[i] * dx(x, y);
      gb[kind == Broadcast::kRightScalar ? 0 : i] += g[i] * dy(x, y);
    }
  });
}

// Unary elementwise op whose derivative is expressed through input x and
// output y.
template <class Fwd, class Deriv>
Var unary(Var x, const char* op, Fwd fwd, Deriv deriv) {
  Tape& tape = x.tape();
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(xv[i]);
  require_finite(out, op);
  std::uint32_t ix = x.id();
  return tape.record(std::move(out), [ix, deriv](Tape& t, std::uint32_t self) {
    const Tensor& xv = t.value(ix);
    const Tensor& yv = t.value(self);
    auto g = t.grad(self);
    auto gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * deriv(xv[i], yv[i]);
  });
}

}  // namespace

const Tensor& Var::value() const {
  if (!tape_) throw Error("use of an unbound Var");
  return tape_->value(id_);
}

double Var::item() const {
  const Tensor& v = value();
  if (v.size() != 1) throw DimensionError("item() on non-scalar of shape " + shape_string(v.shape()));
  return v[0];
}

Var Tape::record(Tensor value, BackwardFn backward) {
  if (backward_done_) throw Error("cannot record on a tape after backward()");
  Node node;
  node.value = std::move(value);
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

Var Tape::constant(Tensor value) {
  require_finite(value, "constant");
  return record(std::move(value), nullptr);
}

Var Tape::param(Tensor& p) {
  if (auto it = bound_.find(&p); it != bound_.end()) return Var(this, it->second);
  require_finite(p, "param");
  Node node;
  node.param = &p;
  nodes_.push_back(std::move(node));
  auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  bound_.emplace(&p, id);
  return Var(this, id);
}

Var Tape::row(Tensor& table, std::size_t index) {
  if (table.rank() != 2) throw DimensionError("row lookup needs a rank-2 table, got " + shape_string(table.shape()));
  if (index >= table.rows()) {
    throw DimensionError("row index " + std::to_string(index) + " out of range for " + shape_string(table.shape()));
  }
  std::size_t width = table.cols();
  auto first = table.data().begin() + static_cast<std::ptrdiff_t>(index * width);
  Tensor value({width}, std::vector<double>(first, first + static_cast<std::ptrdiff_t>(width)));
  require_finite(value, "row");
  Node node;
  node.value = std::move(value);
  node.param = &table;
  node.is_row = true;
  node.row_index = index;
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<std::uint32_t>(nodes_.size() - 1));
}

const Tensor& Tape::value(std::uint32_t id) const {
  const Node& n = nodes_[id];
  return (n.param && !n.is_row) ? *n.param : n.value;
}

std::span<double> Tape::grad(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(value(id).size(), 0.0);
  return n.grad;
}

std::span<const double> Tape::grad_of(Var v) const {
  if (!owns(v)) throw Error("grad_of: tensor not on this tape");
  return nodes_[v.id()].grad;
}

void Tape::backward(Var loss) {
  if (!owns(loss)) throw Error("backward: loss tensor not on this tape");
  if (loss.value().size() != 1) {
    throw DimensionError("backward: loss must be scalar, got shape " + shape_string(loss.value().shape()));
  }
  if (backward_done_) throw Error("backward: already run on this tape");
  backward_done_ = true;
  grad(loss.id())[0] = 1.0;
  for (std::uint32_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    for (double g : n.grad) {
      if (!std::isfinite(g)) throw NumericError("backward: non-finite gradient");
    }
    if (n.backward) {
      n.backward(*this, id);
    } else if (n.param && n.param->has_grad()) {
      auto dst = n.param->grad();
      if (n.is_row) {
        std::size_t width = n.param->cols();
        for (std::size_t j = 0; j < width; ++j) dst[n.row_index * width + j] += n.grad[j];
      } else {
        for (std::size_t j = 0; j < n.grad.size(); ++j) dst[j] += n.grad[j];
      }
    }
  }
}

Var add(Var a, Var b) {
  return binary(a, b, "add", [](double x, double y) { return x + y; },
                [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Var sub(Var a, Var b) {
  return binary(a, b, "subtract", [](double x, double y) { return x - y; },
                [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Var mul(Var a, Var b) {
  return binary(a, b, "multiply", [](double x, double y) { return x * y; },
                [](double, double y) { return y; }, [](double x, double) { return x; });
}

Var sigmoid(Var x) {
  return unary(x, "sigmoid", sigmoid_scalar, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var x) {
  return unary(x, "tanh", [](double v) { return std::tanh(v); },
               [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var x) {
  return unary(x, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(Var x) {
  for (double v : x.value().data()) {
    if (!(v > 0.0)) throw NumericError("log: non-positive input " + std::to_string(v));
  }
  return unary(x, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var scale(Var x, double k) {
  return unary(x, "scale", [k](double v) { return k * v; }, [k](double, double) { return k; });
}

Var pointwise(PointwiseOp op, std::span<const Var> inputs) {
  auto need = [&](std::size_t n) {
    if (inputs.size() != n) {
      throw Error("pointwise: expected " + std::to_string(n) + " inputs, got " + std::to_string(inputs.size()));
    }
  };
  switch (op) {
    case PointwiseOp::kAdd: need(2); return add(inputs[0], inputs[1]);
    case PointwiseOp::kSubtract: need(2); return sub(inputs[0], inputs[1]);
    case PointwiseOp::kMultiply: need(2); return mul(inputs[0], inputs[1]);
    case PointwiseOp::kSigmoid: need(1); return sigmoid(inputs[0]);
    case PointwiseOp::kTanh: need(1); return tanh(inputs[0]);
    case PointwiseOp::kExp: need(1); return exp(inputs[0]);
    case PointwiseOp::kLog: need(1); return log(inputs[0]);
  }
  throw Error("pointwise: unknown op");
}

Var matmul(Var a, Var b) {
  Tape& tape = common_tape(a, b, "matmul");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || (bv.rank() != 1 && bv.rank() != 2) || av.cols() != bv.rows()) {
    throw DimensionError("matmul: cannot multiply " + shape_string(av.shape()) + " by " +
                         shape_string(bv.shape()));
  }
  std::size_t m = av.rows(), k = av.cols(), n = bv.rank() == 1 ? 1 : bv.cols();
  Tensor out(bv.rank() == 1 ? Shape{m} : Shape{m, n});
  const double* A = av.data().data();
  const double* B = bv.data().data();
  double* C = out.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      double aip = A[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = B + p * n;
      double* crow = C + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
  require_finite(out, "matmul");
  std::uint32_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), [ia, ib, m, k, n](Tape& t, std::uint32_t self) {
    const double* A = t.value(ia).data().data();
    const double* B = t.value(ib).data().data();
    std::vector<double> G(t.grad(self).begin(), t.grad(self).end());
    double* gA = t.grad(ia).data();
    double* gB = t.grad(ib).data();
    // dA = G . B^T
    for (std::size_t i = 0; i < m; ++i) {
      const double* grow = G.data() + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        const double* brow = B + p * n;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
        gA[i * k + p] += acc;
      }
    }
    // dB = A^T . G
    for (std::size_t i = 0; i < m; ++i) {
      const double* grow = G.data() + i * n;
      for (std::size_t p = 0; p < k; ++p) {
        double aip = A[i * k + p];
        if (aip == 0.0) continue;
        double* gbrow = gB + p * n;
        for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
      }
    }
  });
}

Var transpose(Var a) {
  const Tensor& av = a.value();
  if (av.rank() != 2) throw DimensionError("transpose: needs rank 2, got " + shape_string(av.shape()));
  std::size_t m = av.rows(), n = av.cols();
  Tensor out({n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out.at(j, i) = av.at(i, j);
  std::uint32_t ia = a.id();
  return a.tape().record(std::move(out), [ia, m, n](Tape& t, std::uint32_t self) {
    std::vector<double> g(t.grad(self).begin(), t.grad(self).end());
    auto ga = t.grad(ia);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
  });
}

Var softmax(Var x) {
  const Tensor& xv = x.value();
  if (xv.size() == 0) throw DimensionError("softmax: empty input");
  if (xv.rank() != 1) throw DimensionError("softmax: needs rank 1, got " + shape_string(xv.shape()));
  Tensor out(xv.shape());
  double mx = *std::max_element(xv.data().begin(), xv.data().end());
  double z = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) z += (out[i] = std::exp(xv[i] - mx));
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] /= z;
  require_finite(out, "softmax");
  std::uint32_t ix = x.id();
  return x.tape().record(std::move(out), [ix](Tape& t, std::uint32_t self) {
    const Tensor& y = t.value(self);
    std::vector<double> g(t.grad(self).begin(), t.grad(self).end());
    double inner = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) inner += g[i] * y[i];
    auto gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += y[i] * (g[i] - inner);
  });
}

Var log_softmax(Var x) {
  const Tensor& xv = x.value();
  if (xv.size() == 0) throw DimensionError("log_softmax: empty input");
  if (xv.rank() != 1) throw DimensionError("log_softmax: needs rank 1, got " + shape_string(xv.shape()));
  Tensor out(xv.shape());
  double mx = *std::max_element(xv.data().begin(), xv.data().end());
  double z = 0.0;
  for (double v : xv.data()) z += std::exp(v - mx);
  double lse = mx + std::log(z);
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] - lse;
  require_finite(out, "log_softmax");
  std::uint32_t ix = x.id();
  return x.tape().record(std::move(out), [ix](Tape& t, std::uint32_t self) {
    const Tensor& y = t.value(self);
    std::vector<double> g(t.grad(self).begin(), t.grad(self).end());
    double total = 0.0;
    for (double v : g) total += v;
    auto gx = t.grad(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] - std::exp(y[i]) * total;
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  Tensor out = Tensor::scalar(s);
  require_finite(out, "sum");
  std::uint32_t ix = x.id();
  return x.tape().record(std::move(out), [ix](Tape& t, std::uint32_t self) {
    double g = t.grad(self)[0];
    for (double& gx : t.grad(ix)) gx += g;
  });
}

Var dot(Var a, Var b) {
  Tape& tape = common_tape(a, b, "dot");
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.size() != bv.size()) {
    throw DimensionError("dot: size mismatch " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) s += av[i] * bv[i];
  Tensor out = Tensor::scalar(s);
  require_finite(out, "dot");
  std::uint32_t ia = a.id(), ib = b.id();
  return tape.record(std::move(out), [ia, ib](Tape& t, std::uint32_t self) {
    double g = t.grad(self)[0];
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    auto ga = t.grad(ia);
    auto gb = t.grad(ib);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      ga[i] += g * bv[i];
      gb[i] += g * av[i];
    }
  });
}

Var pick(Var x, std::size_t index) {
  const Tensor& xv = x.value();
  if (index >= xv.size()) {
    throw DimensionError("pick: index " + std::to_string(index) + " out of range for " + shape_string(xv.shape()));
  }
  std::uint32_t ix = x.id();
  return x.tape().record(Tensor::scalar(xv[index]), [ix, index](Tape& t, std::uint32_t self) {
    t.grad(ix)[index] += t.grad(self)[0];
  });
}

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  Tape& tape = parts[0].tape();
  std::vector<double> data;
  std::vector<std::uint32_t> ids;
  std::vector<std::size_t> sizes;
  for (Var p : parts) {
    if (&p.tape() != &tape) throw Error("concat: operands must live on the same tape");
    const Tensor& v = p.value();
    data.insert(data.end(), v.data().begin(), v.data().end());
    ids.push_back(p.id());
    sizes.push_back(v.size());
  }
  const std::size_t total = data.size();
  Tensor out({total}, std::move(data));
  return tape.record(std::move(out), [ids, sizes](Tape& t, std::uint32_t self) {
    std::vector<double> g(t.grad(self).begin(), t.grad(self).end());
    std::size_t offset = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      auto gp = t.grad(ids[k]);
      for (std::size_t i = 0; i < sizes[k]; ++i) gp[i] += g[offset + i];
      offset += sizes[k];
    }
  });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no inputs");
  Tape& tape = rows[0].tape();
  std::size_t width = rows[0].value().size();
  std::vector<double> data;
  data.reserve(rows.size() * width);
  std::vector<std::uint32_t> ids;
  for (Var r : rows) {
    if (&r.tape() != &tape) throw Error("stack_rows: operands must live on the same tape");
    const Tensor& v = r.value();
    if (v.size() != width) {
      throw DimensionError("stack_rows: row of size " + std::to_string(v.size()) + ", expected " +
                           std::to_string(width));
    }
    data.insert(data.end(), v.data().begin(), v.data().end());
    ids.push_back(r.id());
  }
  Tensor out({rows.size(), width}, std::move(data));
  return tape.record(std::move(out), [ids, width](Tape& t, std::uint32_t self) {
    std::vector<double> g(t.grad(self).begin(), t.grad(self).end());
    for (std::size_t k = 0; k < ids.size(); ++k) {
      auto gr = t.grad(ids[k]);
      for (std::size_t i = 0; i < width; ++i) gr[i] += g[k * width + i];
    }
  });
}

Var detach(Var x) { return x.tape().record(x.value(), nullptr); }

}  // namespace acsum
