#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "acsum/tensor.hpp"

namespace acsum {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid only while its
/// tape is alive.
class Var {
 public:
  Var() = default;

  bool valid() const { return tape_ != nullptr; }
  Tape& tape() const { return *tape_; }
  std::uint32_t id() const { return id_; }

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t size() const { return value().size(); }
  double item() const;

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

/// Dynamic reverse-mode tape. Operations append nodes in execution order;
/// backward() replays them in reverse, each exactly once, and finally adds
/// the accumulated leaf gradients into the grad() buffers of the parameter
/// tensors that were bound with param() or row().
///
/// A tape is single-threaded. Build a fresh one per forward pass.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::uint32_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor value);
  /// Binds a trainable tensor. Binding the same tensor twice yields the same
  /// node. The tensor must outlive the tape and must not change until
  /// backward() has run.
  Var param(Tensor& p);
  /// Embedding lookup: row `index` of a rank-2 parameter table.
  Var row(Tensor& table, std::size_t index);

  /// Seeds d(loss)/d(loss) = 1 and propagates. Parameter tensors with
  /// enabled gradients accumulate (+=) into their grad buffers.
  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  bool owns(Var v) const { return v.valid() && &v.tape() == this && v.id() < nodes_.size(); }

  const Tensor& value(std::uint32_t id) const;
  /// Gradient buffer of a node, allocated on first use.
  std::span<double> grad(std::uint32_t id);
  /// Gradient of a node after backward(); empty if no gradient reached it.
  std::span<const double> grad_of(Var v) const;

  Var record(Tensor value, BackwardFn backward);

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    BackwardFn backward;
    Tensor* param = nullptr;
    bool is_row = false;
    std::size_t row_index = 0;
  };

  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, std::uint32_t> bound_;
  bool backward_done_ = false;
};

// Elementwise arithmetic. Shapes must match, or one side must hold a single
// element (scalar broadcast).
enum class PointwiseOp { kAdd, kSubtract, kMultiply, kSigmoid, kTanh, kExp, kLog };

Var pointwise(PointwiseOp op, std::span<const Var> inputs);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var sigmoid(Var x);
Var tanh(Var x);
Var exp(Var x);
Var log(Var x);
Var scale(Var x, double k);

/// [m x k] . [k x n] -> [m x n]; a rank-1 right operand is a column and
/// yields a rank-1 result of length m.
Var matmul(Var a, Var b);
Var transpose(Var a);

Var softmax(Var x);
Var log_softmax(Var x);

Var sum(Var x);
Var dot(Var a, Var b);
Var pick(Var x, std::size_t index);
Var concat(std::span<const Var> parts);
/// Stacks equal-length rank-1 values into an [n x d] matrix.
Var stack_rows(std::span<const Var> rows);
/// Same value, no gradient flows back through it.
Var detach(Var x);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }

}  // namespace acsum
