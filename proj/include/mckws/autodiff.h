// mckws/autodiff.h

// Copyright 2026  The mckws Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef MCKWS_AUTODIFF_H_
#define MCKWS_AUTODIFF_H_

// Dense row-major tensors of doubles and a reverse-mode gradient tape.
//
// A Tape owns every value produced during one forward pass. Ops are free
// functions taking Var handles and recording a node (value plus backward
// closure) on the tape of their first operand. Nodes are appended in
// evaluation order, so walking the tape in reverse is a valid reverse
// topological order; Backward() visits each node exactly once and gradients
// of values consumed by several ops accumulate additively.

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <new>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace mckws {
namespace ad {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape &shape);
std::string ShapeString(const Shape &shape);

// Storage is aligned to 64 bytes so vectorised kernels see the same
// alignment on every run, which keeps floating-point reduction order (and so
// results) independent of where the allocator places a buffer.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t kAlign{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U> &) {}

  T *allocate(std::size_t n) {
    return static_cast<T *>(::operator new(n * sizeof(T), kAlign));
  }
  void deallocate(T *p, std::size_t) { ::operator delete(p, kAlign); }

  template <typename U>
  bool operator==(const AlignedAllocator<U> &) const { return true; }
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  static Tensor Scalar(double value) { return Tensor({1}, {value}); }

  const Shape &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  double *raw() { return data_.data(); }
  const double *raw() const { return data_.data(); }

  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  // 2-D element access.
  double &at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const {
    return data_[r * shape_[1] + c];
  }

  // Same data, new shape with the same element count.
  Tensor Reshaped(Shape shape) const;
  bool AllFinite() const;

  // Bitwise equality of shape and values.
  bool operator==(const Tensor &other) const = default;

 private:
  Shape shape_;
  std::vector<double, AlignedAllocator<double>> data_;
};

class Tape;

class Var {
 public:
  Var() = default;

  const Tensor &value() const;
  const Shape &shape() const { return value().shape(); }
  bool requires_grad() const;
  Tape *tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape *tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape *tape_ = nullptr;
  std::size_t id_ = 0;
};

class Tape {
 public:
  // Called with the node's output value and the gradient flowing into it.
  using BackwardFn =
      std::function<void(const Tensor &out_value, const Tensor &out_grad)>;

  Tape();
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  /// Registers a named trainable leaf; its gradient is reported by Backward().
  Var Param(const std::string &name, Tensor value);
  Var Constant(Tensor value);

  /// Runs reverse accumulation from a scalar loss. Returns the gradient of
  /// every Param() leaf (zeros for leaves the loss does not depend on).
  /// A tape can be back-propagated once; Reset() starts a new forward pass.
  std::map<std::string, Tensor> Backward(const Var &loss);

  void Reset();
  std::size_t size() const { return nodes_.size(); }

  // When set, every op output is scanned for NaN/Inf and a NumericError is
  // raised at the op that produced it. On by default.
  void set_check_finite(bool on) { check_finite_ = on; }
  bool check_finite() const { return check_finite_; }

  // Op-implementation interface.
  Var Record(Tensor value, const std::vector<Var> &inputs, BackwardFn backward,
             const char *op_name);
  const Tensor &ValueOf(std::size_t id) const { return nodes_[id].value; }
  bool RequiresGrad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient buffer for accumulation, zero-initialised on first use.
  Tensor &GradOf(std::size_t id);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::string name;  // non-empty for Param() leaves
    BackwardFn backward;
  };

  // deque: references to existing nodes stay valid as the tape grows.
  std::deque<Node> nodes_;
  bool consumed_ = false;
  bool check_finite_ = true;
};

// ---- ops ----
//
// Binary elementwise ops broadcast their second operand: its shape, aligned
// to the trailing dimensions of the first, must match or be 1 in each
// dimension. The result has the first operand's shape.

Var MatMul(const Var &a, const Var &b);  // [m,k] x [k,n] -> [m,n]
Var Add(const Var &a, const Var &b);
Var Sub(const Var &a, const Var &b);
Var Mul(const Var &a, const Var &b);
/// scale * x + shift with constant scale and shift.
Var Affine(const Var &x, double scale, double shift);
Var Tanh(const Var &x);
Var Sigmoid(const Var &x);
Var Exp(const Var &x);
Var Log(const Var &x);
/// base^exponent elementwise; base must be >= 0. At base == 0 both partial
/// derivatives are taken as 0.
Var Pow(const Var &base, const Var &exponent);
/// Clamps to [lo, hi]; gradient passes only where the input is inside.
Var Clamp(const Var &x, double lo, double hi);
/// Max-subtracted softmax along `axis`.
Var Softmax(const Var &x, std::size_t axis);
Var Sum(const Var &x);  // -> shape {1}
Var SumAxis(const Var &x, std::size_t axis);  // removes `axis`
Var Reshape(const Var &x, Shape shape);
/// Concatenates along the leading axis; trailing dims must agree.
Var ConcatRows(const std::vector<Var> &parts);
/// Rows [begin, end) of the leading axis.
Var SliceRows(const Var &x, std::size_t begin, std::size_t end);
/// Columns [begin, end) of a 2-D tensor.
Var SliceCols(const Var &x, std::size_t begin, std::size_t end);
/// Inverted dropout: in training keeps each element with probability `keep`
/// and scales survivors by 1/keep. Identity when !training or keep == 1.
Var Dropout(const Var &x, double keep, bool training, std::mt19937_64 &rng);

}  // namespace ad
}  // namespace mckws

#endif  // MCKWS_AUTODIFF_H_
