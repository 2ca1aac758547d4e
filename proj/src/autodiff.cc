// src/autodiff.cc

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

#include "mckws/autodiff.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Core>

#include "mckws/errors.h"

namespace mckws {
namespace ad {

namespace {

using RowMat =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

Tape &TapeOf(const Var &v, const char *op) {
  if (!v.valid())
    throw std::invalid_argument(std::string(op) + ": unbound Var");
  return *v.tape();
}

void CheckSameTape(const Var &a, const Var &b, const char *op) {
  if (a.tape() != b.tape())
    throw std::invalid_argument(std::string(op) +
                                ": operands recorded on different tapes");
}

// Maps every flat index of the first operand onto the broadcast second one.
class Broadcast {
 public:
  Broadcast(const Shape &a, const Shape &b, const char *op)
      : n_(NumElements(b)), total_(NumElements(a)) {
    if (a == b) {
      kind_ = kSame;
      return;
    }
    if (b.size() > a.size()) Fail(a, b, op);
    const std::size_t off = a.size() - b.size();
    for (std::size_t i = 0; i < b.size(); ++i)
      if (b[i] != 1 && b[i] != a[off + i]) Fail(a, b, op);
    if (n_ == 1) {
      kind_ = kScalar;
      return;
    }
    if (b.back() == a.back() && n_ == b.back()) {
      kind_ = kRow;
      return;
    }
    kind_ = kGeneral;
    std::vector<std::size_t> bstride(a.size(), 0);
    std::size_t s = 1;
    for (std::size_t i = b.size(); i-- > 0;) {
      if (b[i] != 1) bstride[off + i] = s;
      s *= b[i];
    }
    // The last axis is walked inline; precompute the base index of each
    // outer row.
    inner_ = a.back();
    inner_stride_ = bstride.back();
    const std::size_t outer = inner_ ? total_ / inner_ : 0;
    row_base_.resize(outer);
    std::vector<std::size_t> counter(a.size() - 1, 0);
    std::size_t bi = 0;
    for (std::size_t r = 0; r < outer; ++r) {
      row_base_[r] = bi;
      for (std::size_t d = a.size() - 1; d-- > 0;) {
        ++counter[d];
        bi += bstride[d];
        if (counter[d] < a[d]) break;
        bi -= bstride[d] * counter[d];
        counter[d] = 0;
      }
    }
  }

  // Calls f(i, j) for every flat index i of the first operand, with j the
  // matching index of the second.
  template <typename F>
  void ForEach(F &&f) const {
    switch (kind_) {
      case kSame:
        for (std::size_t i = 0; i < total_; ++i) f(i, i);
        break;
      case kScalar:
        for (std::size_t i = 0; i < total_; ++i) f(i, std::size_t{0});
        break;
      case kRow:
        for (std::size_t r = 0; r < total_; r += n_)
          for (std::size_t c = 0; c < n_; ++c) f(r + c, c);
        break;
      case kGeneral:
        for (std::size_t r = 0; r < row_base_.size(); ++r) {
          const std::size_t base = row_base_[r], start = r * inner_;
          if (inner_stride_ == 0) {
            for (std::size_t c = 0; c < inner_; ++c) f(start + c, base);
          } else {
            for (std::size_t c = 0; c < inner_; ++c) f(start + c, base + c);
          }
        }
        break;
    }
  }

 private:
  [[noreturn]] static void Fail(const Shape &a, const Shape &b,
                                const char *op) {
    throw std::invalid_argument(std::string(op) + ": cannot broadcast " +
                                ShapeString(b) + " onto " + ShapeString(a));
  }

  enum Kind { kSame, kScalar, kRow, kGeneral } kind_ = kSame;
  std::size_t n_;
  std::size_t total_;
  std::size_t inner_ = 0, inner_stride_ = 0;
  std::vector<std::size_t> row_base_;
};

// Elementwise unary op; `forward(in, out, n)` fills the output and
// `dydx(x, y)` is the local derivative.
template <typename F, typename D>
Var UnaryBulk(const Var &x, const char *name, F forward, D dydx) {
  Tape &tape = TapeOf(x, name);
  const Tensor &xv = x.value();
  Tensor out(xv.shape());
  forward(xv.raw(), out.raw(), xv.size());
  Tape *tp = &tape;
  const std::size_t xid = x.id();
  return tape.Record(
      std::move(out), {x},
      [tp, xid, dydx](const Tensor &y, const Tensor &g) {
        const double *xv = tp->ValueOf(xid).raw();
        const double *yv = y.raw();
        const double *gv = g.raw();
        double *gx = tp->GradOf(xid).raw();
        for (std::size_t i = 0, n = g.size(); i < n; ++i)
          gx[i] += gv[i] * dydx(xv[i], yv[i]);
      },
      name);
}

template <typename F, typename D>
Var Unary(const Var &x, const char *name, F f, D dydx) {
  return UnaryBulk(
      x, name,
      [f](const double *in, double *out, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) out[i] = f(in[i]);
      },
      dydx);
}

using ArrayMap = Eigen::Map<Eigen::ArrayXd>;
using ConstArrayMap = Eigen::Map<const Eigen::ArrayXd>;

// Strides around `axis`: outer * n * inner == size.
struct AxisSplit {
  std::size_t outer = 1, n = 1, inner = 1;
};

AxisSplit SplitAt(const Shape &shape, std::size_t axis, const char *op) {
  if (axis >= shape.size())
    throw std::invalid_argument(std::string(op) + ": axis " +
                                std::to_string(axis) + " invalid for shape " +
                                ShapeString(shape));
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.n = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

}  // namespace

std::size_t NumElements(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string ShapeString(const Shape &shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i)
    os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(NumElements(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(values.begin(), values.end()) {
  if (NumElements(shape_) != data_.size())
    throw std::invalid_argument("Tensor: shape " + ShapeString(shape_) +
                                " does not hold " +
                                std::to_string(data_.size()) + " values");
}

Tensor Tensor::Reshaped(Shape shape) const {
  if (NumElements(shape) != data_.size())
    throw std::invalid_argument("Reshape: " + ShapeString(shape_) + " -> " +
                                ShapeString(shape));
  Tensor out;
  out.shape_ = std::move(shape);
  out.data_ = data_;
  return out;
}

bool Tensor::AllFinite() const {
  // NaN and Inf are exactly the values whose exponent bits are all set.
  constexpr std::uint64_t kExponent = 0x7ff0000000000000ULL;
  std::uint64_t bad = 0;
  for (double v : data_)
    bad |= (std::bit_cast<std::uint64_t>(v) & kExponent) == kExponent;
  return bad == 0;
}

const Tensor &Var::value() const { return tape_->ValueOf(id_); }
bool Var::requires_grad() const { return tape_->RequiresGrad(id_); }

// ---- Tape ----

Tape::Tape() = default;

Var Tape::Param(const std::string &name, Tensor value) {
  if (name.empty()) throw std::invalid_argument("Tape::Param: empty name");
  nodes_.push_back(Node{std::move(value), Tensor(), true, name, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::Constant(Tensor value) {
  nodes_.push_back(Node{std::move(value), Tensor(), false, {}, nullptr});
  return Var(this, nodes_.size() - 1);
}

Var Tape::Record(Tensor value, const std::vector<Var> &inputs,
                 BackwardFn backward, const char *op_name) {
  if (consumed_)
    throw std::logic_error(std::string(op_name) +
                           ": tape already back-propagated; call Reset()");
  if (check_finite_ && !value.AllFinite())
    throw NumericError(std::string(op_name) + " produced a non-finite value");
  bool needs = false;
  for (const Var &in : inputs) needs = needs || in.requires_grad();
  nodes_.push_back(Node{std::move(value), Tensor(), needs, {},
                        needs ? std::move(backward) : nullptr});
  return Var(this, nodes_.size() - 1);
}

Tensor &Tape::GradOf(std::size_t id) {
  Node &node = nodes_[id];
  if (node.grad.empty() && !node.value.empty())
    node.grad = Tensor(node.value.shape(), 0.0);
  return node.grad;
}

std::map<std::string, Tensor> Tape::Backward(const Var &loss) {
  if (loss.tape() != this)
    throw std::invalid_argument("Backward: loss is not on this tape");
  if (consumed_)
    throw std::logic_error(
        "Backward: tape already back-propagated; run a new forward pass");
  if (loss.value().size() != 1)
    throw std::invalid_argument("Backward: loss must be scalar, got shape " +
                                ShapeString(loss.shape()));
  consumed_ = true;
  std::map<std::string, Tensor> grads;
  if (loss.requires_grad()) {
    GradOf(loss.id())[0] = 1.0;
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
      Node &node = nodes_[id];
      if (!node.requires_grad || node.grad.empty() || !node.backward) continue;
      node.backward(node.value, node.grad);
      // Interior gradients are dead once propagated.
      if (id != loss.id()) node.grad = Tensor();
    }
  }
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    Node &node = nodes_[id];
    if (node.name.empty()) continue;
    grads[node.name] =
        node.grad.empty() ? Tensor(node.value.shape(), 0.0) : node.grad;
  }
  return grads;
}

void Tape::Reset() {
  nodes_.clear();
  consumed_ = false;
}

// ---- ops ----

Var MatMul(const Var &a, const Var &b) {
  Tape &tape = TapeOf(a, "MatMul");
  CheckSameTape(a, b, "MatMul");
  const Shape &sa = a.shape(), &sb = b.shape();
  if (sa.size() != 2 || sb.size() != 2 || sa[1] != sb[0])
    throw std::invalid_argument("MatMul: dimension mismatch " +
                                ShapeString(sa) + " x " + ShapeString(sb));
  const std::size_t m = sa[0], k = sa[1], n = sb[1];
  Tensor out({m, n});
  MutMap(out.raw(), m, n).noalias() =
      ConstMap(a.value().raw(), m, k) * ConstMap(b.value().raw(), k, n);
  Tape *tp = &tape;
  const std::size_t aid = a.id(), bid = b.id();
  return tape.Record(
      std::move(out), {a, b},
      [tp, aid, bid, m, k, n](const Tensor &, const Tensor &g) {
        ConstMap dc(g.raw(), m, n);
        if (tp->RequiresGrad(aid))
          MutMap(tp->GradOf(aid).raw(), m, k).noalias() +=
              dc * ConstMap(tp->ValueOf(bid).raw(), k, n).transpose();
        if (tp->RequiresGrad(bid))
          MutMap(tp->GradOf(bid).raw(), k, n).noalias() +=
              ConstMap(tp->ValueOf(aid).raw(), m, k).transpose() * dc;
      },
      "MatMul");
}

namespace {

enum class BinOp { kAdd, kSub, kMul };

Var Binary(const Var &a, const Var &b, BinOp op, const char *name) {
  Tape &tape = TapeOf(a, name);
  CheckSameTape(a, b, name);
  auto bc = std::make_shared<Broadcast>(a.shape(), b.shape(), name);
  const double *av = a.value().raw(), *bv = b.value().raw();
  Tensor out(a.shape());
  double *ov = out.raw();
  switch (op) {
    case BinOp::kAdd:
      bc->ForEach([&](std::size_t i, std::size_t j) { ov[i] = av[i] + bv[j]; });
      break;
    case BinOp::kSub:
      bc->ForEach([&](std::size_t i, std::size_t j) { ov[i] = av[i] - bv[j]; });
      break;
    case BinOp::kMul:
      bc->ForEach([&](std::size_t i, std::size_t j) { ov[i] = av[i] * bv[j]; });
      break;
  }
  Tape *tp = &tape;
  const std::size_t aid = a.id(), bid = b.id();
  return tape.Record(
      std::move(out), {a, b},
      [tp, aid, bid, bc, op](const Tensor &, const Tensor &grad) {
        const double *g = grad.raw();
        if (tp->RequiresGrad(aid)) {
          double *ga = tp->GradOf(aid).raw();
          if (op == BinOp::kMul) {
            const double *bv = tp->ValueOf(bid).raw();
            bc->ForEach([&](std::size_t i, std::size_t j) { ga[i] += g[i] * bv[j]; });
          } else {
            for (std::size_t i = 0, n = grad.size(); i < n; ++i) ga[i] += g[i];
          }
        }
        if (tp->RequiresGrad(bid)) {
          double *gb = tp->GradOf(bid).raw();
          switch (op) {
            case BinOp::kAdd:
              bc->ForEach([&](std::size_t i, std::size_t j) { gb[j] += g[i]; });
              break;
            case BinOp::kSub:
              bc->ForEach([&](std::size_t i, std::size_t j) { gb[j] -= g[i]; });
              break;
            case BinOp::kMul: {
              const double *av = tp->ValueOf(aid).raw();
              bc->ForEach([&](std::size_t i, std::size_t j) { gb[j] += g[i] * av[i]; });
              break;
            }
          }
        }
      },
      name);
}

}  // namespace

Var Add(const Var &a, const Var &b) { return Binary(a, b, BinOp::kAdd, "Add"); }
Var Sub(const Var &a, const Var &b) { return Binary(a, b, BinOp::kSub, "Sub"); }
Var Mul(const Var &a, const Var &b) { return Binary(a, b, BinOp::kMul, "Mul"); }

Var Affine(const Var &x, double scale, double shift) {
  return Unary(
      x, "Affine", [=](double v) { return scale * v + shift; },
      [=](double, double) { return scale; });
}

Var Tanh(const Var &x) {
  return UnaryBulk(
      x, "Tanh",
      [](const double *in, double *out, std::size_t n) {
        // 1 - 2 / (exp(2x) + 1): saturates cleanly to +-1 at both ends
        ConstArrayMap a(in, Eigen::Index(n));
        ArrayMap(out, Eigen::Index(n)) = 1.0 - 2.0 / ((2.0 * a).exp() + 1.0);
      },
      [](double, double y) { return 1.0 - y * y; });
}

Var Sigmoid(const Var &x) {
  return UnaryBulk(
      x, "Sigmoid",
      [](const double *in, double *out, std::size_t n) {
        // exp(-x) overflows to a huge value, never NaN, for very negative x
        ConstArrayMap a(in, Eigen::Index(n));
        ArrayMap(out, Eigen::Index(n)) = 1.0 / (1.0 + (-a).exp());
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var Exp(const Var &x) {
  return UnaryBulk(
      x, "Exp",
      [](const double *in, double *out, std::size_t n) {
        ArrayMap(out, Eigen::Index(n)) = ConstArrayMap(in, Eigen::Index(n)).exp();
      },
      [](double, double y) { return y; });
}

Var Log(const Var &x) {
  return UnaryBulk(
      x, "Log",
      [](const double *in, double *out, std::size_t n) {
        ArrayMap(out, Eigen::Index(n)) = ConstArrayMap(in, Eigen::Index(n)).log();
      },
      [](double v, double) { return 1.0 / v; });
}

Var Clamp(const Var &x, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("Clamp: lo > hi");
  return Unary(
      x, "Clamp", [=](double v) { return std::clamp(v, lo, hi); },
      [=](double v, double) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
}

Var Pow(const Var &base, const Var &exponent) {
  Tape &tape = TapeOf(base, "Pow");
  CheckSameTape(base, exponent, "Pow");
  auto bc = std::make_shared<Broadcast>(base.shape(), exponent.shape(), "Pow");
  const double *bv = base.value().raw(), *ev = exponent.value().raw();
  for (std::size_t i = 0, n = base.value().size(); i < n; ++i)
    if (bv[i] < 0.0) throw NumericError("Pow: negative base " + std::to_string(bv[i]));
  Tensor out(base.shape());
  double *ov = out.raw();
  bc->ForEach([&](std::size_t i, std::size_t j) { ov[i] = std::pow(bv[i], ev[j]); });
  Tape *tp = &tape;
  const std::size_t bid = base.id(), eid = exponent.id();
  return tape.Record(
      std::move(out), {base, exponent},
      [tp, bid, eid, bc](const Tensor &y, const Tensor &grad) {
        const double *bv = tp->ValueOf(bid).raw();
        const double *ev = tp->ValueOf(eid).raw();
        const double *yv = y.raw(), *g = grad.raw();
        if (tp->RequiresGrad(bid)) {
          double *gb = tp->GradOf(bid).raw();
          bc->ForEach([&](std::size_t i, std::size_t j) {
            if (bv[i] > 0.0) gb[i] += g[i] * ev[j] * yv[i] / bv[i];
          });
        }
        if (tp->RequiresGrad(eid)) {
          double *ge = tp->GradOf(eid).raw();
          bc->ForEach([&](std::size_t i, std::size_t j) {
            if (bv[i] > 0.0) ge[j] += g[i] * yv[i] * std::log(bv[i]);
          });
        }
      },
      "Pow");
}

Var Softmax(const Var &x, std::size_t axis) {
  Tape &tape = TapeOf(x, "Softmax");
  const AxisSplit s = SplitAt(x.shape(), axis, "Softmax");
  if (s.n == 0) throw std::invalid_argument("Softmax: empty axis");
  const Tensor &xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t o = 0; o < s.outer; ++o) {
    for (std::size_t in = 0; in < s.inner; ++in) {
      const std::size_t base = o * s.n * s.inner + in;
      double mx = xv[base];
      for (std::size_t j = 1; j < s.n; ++j)
        mx = std::max(mx, xv[base + j * s.inner]);
      double total = 0.0;
      for (std::size_t j = 0; j < s.n; ++j) {
        const double e = std::exp(xv[base + j * s.inner] - mx);
        out[base + j * s.inner] = e;
        total += e;
      }
      for (std::size_t j = 0; j < s.n; ++j) out[base + j * s.inner] /= total;
    }
  }
  Tape *tp = &tape;
  const std::size_t xid = x.id();
  return tape.Record(
      std::move(out), {x},
      [tp, xid, s](const Tensor &y, const Tensor &g) {
        Tensor &gx = tp->GradOf(xid);
        for (std::size_t o = 0; o < s.outer; ++o) {
          for (std::size_t in = 0; in < s.inner; ++in) {
            const std::size_t base = o * s.n * s.inner + in;
            double dot = 0.0;
            for (std::size_t j = 0; j < s.n; ++j)
              dot += g[base + j * s.inner] * y[base + j * s.inner];
            for (std::size_t j = 0; j < s.n; ++j) {
              const std::size_t k = base + j * s.inner;
              gx[k] += y[k] * (g[k] - dot);
            }
          }
        }
      },
      "Softmax");
}

Var Sum(const Var &x) {
  Tape &tape = TapeOf(x, "Sum");
  const Tensor &xv = x.value();
  double total = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) total += xv[i];
  Tape *tp = &tape;
  const std::size_t xid = x.id();
  return tape.Record(
      Tensor::Scalar(total), {x},
      [tp, xid](const Tensor &, const Tensor &g) {
        Tensor &gx = tp->GradOf(xid);
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[0];
      },
      "Sum");
}

Var SumAxis(const Var &x, std::size_t axis) {
  Tape &tape = TapeOf(x, "SumAxis");
  const AxisSplit s = SplitAt(x.shape(), axis, "SumAxis");
  Shape out_shape;
  for (std::size_t i = 0; i < x.shape().size(); ++i)
    if (i != axis) out_shape.push_back(x.shape()[i]);
  if (out_shape.empty()) out_shape = {1};
  const Tensor &xv = x.value();
  Tensor out(out_shape, 0.0);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t j = 0; j < s.n; ++j) {
      const double *src = xv.raw() + (o * s.n + j) * s.inner;
      double *dst = out.raw() + o * s.inner;
      for (std::size_t in = 0; in < s.inner; ++in) dst[in] += src[in];
    }
  Tape *tp = &tape;
  const std::size_t xid = x.id();
  return tape.Record(
      std::move(out), {x},
      [tp, xid, s](const Tensor &, const Tensor &g) {
        Tensor &gx = tp->GradOf(xid);
        for (std::size_t o = 0; o < s.outer; ++o)
          for (std::size_t j = 0; j < s.n; ++j) {
            double *dst = gx.raw() + (o * s.n + j) * s.inner;
            const double *src = g.raw() + o * s.inner;
            for (std::size_t in = 0; in < s.inner; ++in) dst[in] += src[in];
          }
      },
      "SumAxis");
}

Var Reshape(const Var &x, Shape shape) {
  Tape &tape = TapeOf(x, "Reshape");
  Tensor out = x.value().Reshaped(std::move(shape));
  Tape *tp = &tape;
  const std::size_t xid = x.id();
  return tape.Record(
      std::move(out), {x},
      [tp, xid](const Tensor &, const Tensor &g) {
        Tensor &gx = tp->GradOf(xid);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      },
      "Reshape");
}

Var ConcatRows(const std::vector<Var> &parts) {
  if (parts.empty()) throw std::invalid_argument("ConcatRows: no inputs");
  Tape &tape = TapeOf(parts[0], "ConcatRows");
  const Shape &first = parts[0].shape();
  if (first.empty()) throw std::invalid_argument("ConcatRows: rank-0 input");
  Shape out_shape = first;
  out_shape[0] = 0;
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> ids;
  std::size_t total = 0;
  for (const Var &p : parts) {
    CheckSameTape(parts[0], p, "ConcatRows");
    const Shape &sp = p.shape();
    if (sp.size() != first.size() ||
        !std::equal(sp.begin() + 1, sp.end(), first.begin() + 1))
      throw std::invalid_argument("ConcatRows: shape " + ShapeString(sp) +
                                  " incompatible with " + ShapeString(first));
    out_shape[0] += sp[0];
    offsets.push_back(total);
    ids.push_back(p.id());
    total += p.value().size();
  }
  Tensor out(out_shape);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor &v = parts[k].value();
    std::copy(v.raw(), v.raw() + v.size(), out.raw() + offsets[k]);
  }
  Tape *tp = &tape;
  return tape.Record(
      std::move(out), parts,
      [tp, ids, offsets](const Tensor &, const Tensor &g) {
        for (std::size_t k = 0; k < ids.size(); ++k) {
          if (!tp->RequiresGrad(ids[k])) continue;
          Tensor &gk = tp->GradOf(ids[k]);
          const double *src = g.raw() + offsets[k];
          for (std::size_t i = 0; i < gk.size(); ++i) gk[i] += src[i];
        }
      },
      "ConcatRows");
}

Var SliceRows(const Var &x, std::size_t begin, std::size_t end) {
  Tape &tape = TapeOf(x, "SliceRows");
  const Shape &sx = x.shape();
  if (sx.empty() || begin > end || end > sx[0])
    throw std::invalid_argument("SliceRows: [" + std::to_string(begin) + "," +
                                std::to_string(end) + ") out of range for " +
                                ShapeString(sx));
  const std::size_t row = sx[0] ? x.value().size() / sx[0] : 0;
  Shape out_shape = sx;
  out_shape[0] = end - begin;
  Tensor out(out_shape);
  const double *src = x.value().raw() + begin * row;
  std::copy(src, src + out.size(), out.raw());
  Tape *tp = &tape;
  const std::size_t xid = x.id();
  return tape.Record(
      std::move(out), {x},
      [tp, xid, begin, row](const Tensor &, const Tensor &g) {
        double *dst = tp->GradOf(xid).raw() + begin * row;
        for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
      },
      "SliceRows");
}

Var SliceCols(const Var &x, std::size_t begin, std::size_t end) {
  Tape &tape = TapeOf(x, "SliceCols");
  const Shape &sx = x.shape();
  if (sx.size() != 2 || begin > end || end > sx[1])
    throw std::invalid_argument("SliceCols: [" + std::to_string(begin) + "," +
                                std::to_string(end) + ") out of range for " +
                                ShapeString(sx));
  const std::size_t rows = sx[0], cols = sx[1], w = end - begin;
  Tensor out({rows, w});
  const Tensor &xv = x.value();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < w; ++c) out[r * w + c] = xv[r * cols + begin + c];
  Tape *tp = &tape;
  const std::size_t xid = x.id();
  return tape.Record(
      std::move(out), {x},
      [tp, xid, rows, cols, begin, w](const Tensor &, const Tensor &g) {
        Tensor &gx = tp->GradOf(xid);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < w; ++c)
            gx[r * cols + begin + c] += g[r * w + c];
      },
      "SliceCols");
}

Var Dropout(const Var &x, double keep, bool training, std::mt19937_64 &rng) {
  if (!(keep > 0.0 && keep <= 1.0))
    throw std::invalid_argument("Dropout: keep probability must be in (0,1]");
  if (!training || keep == 1.0) return x;
  Tape &tape = TapeOf(x, "Dropout");
  const Tensor &xv = x.value();
  auto mask = std::make_shared<std::vector<double>>(xv.size());
  std::bernoulli_distribution coin(keep);
  const double scale = 1.0 / keep;
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) {
    (*mask)[i] = coin(rng) ? scale : 0.0;
    out[i] = xv[i] * (*mask)[i];
  }
  Tape *tp = &tape;
  const std::size_t xid = x.id();
  return tape.Record(
      std::move(out), {x},
      [tp, xid, mask](const Tensor &, const Tensor &g) {
        Tensor &gx = tp->GradOf(xid);
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*mask)[i];
      },
      "Dropout");
}

}  // namespace ad
}  // namespace mckws
