#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
// A Tape records one forward computation; backward() then propagates
// gradients to every node that depends on a parameter.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "webvln/error.hpp"
#include "webvln/tensor.hpp"

namespace webvln::ad {

struct Var {
  std::int32_t id = -1;
  bool valid() const { return id >= 0; }
};

template <class T>
class Tape {
 public:
  using Mat = Matrix<T>;
  using Index = Eigen::Index;

  explicit Tape(std::size_t param_count = 0) : param_vars_(param_count) {}

  Var constant(Mat value) { return push(std::move(value), false, {}); }

  // Registers parameter `index` (once per tape) and returns its leaf.
  Var parameter(std::size_t index, const Mat& value) {
    if (index >= param_vars_.size()) param_vars_.resize(index + 1);
    if (param_vars_[index].valid()) return param_vars_[index];
    Var v = push(value, true, {});
    nodes_[v.id].param = static_cast<std::int32_t>(index);
    param_vars_[index] = v;
    return v;
  }

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }
  T scalar(Var v) const { return nodes_[v.id].value(0, 0); }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(out)/d(out) = seed and runs all recorded backward functions.
  void backward(Var out, T seed = T(1)) {
    Node& o = nodes_[out.id];
    if (o.value.size() != 1) fail(ErrorCode::kInternal, "InternalError", "backward() needs a scalar output");
    ensure_grad(out.id);
    o.grad(0, 0) += seed;
    for (std::int32_t i = out.id; i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.back && n.grad.size() != 0) n.back();
    }
  }

  // Calls fn(param_index, grad) for every parameter reached by backward().
  template <class Fn>
  void for_each_param_grad(Fn&& fn) const {
    for (std::size_t p = 0; p < param_vars_.size(); ++p) {
      const Var v = param_vars_[p];
      if (v.valid() && nodes_[v.id].grad.size() != 0) fn(p, nodes_[v.id].grad);
    }
  }

  // ---- operations ----

  Var matmul(Var a, Var b) {
    Mat out = value(a) * value(b);
    return op(std::move(out), {a, b}, [this, a, b](std::int32_t self) {
      const Mat& g = nodes_[self].grad;
      if (wants(a)) acc(a, g * value(b).transpose());
      if (wants(b)) acc(b, value(a).transpose() * g);
    });
  }

  // a * b^T
  Var matmul_nt(Var a, Var b) {
    Mat out = value(a) * value(b).transpose();
    return op(std::move(out), {a, b}, [this, a, b](std::int32_t self) {
      const Mat& g = nodes_[self].grad;
      if (wants(a)) acc(a, g * value(b));
      if (wants(b)) acc(b, g.transpose() * value(a));
    });
  }

  Var add(Var a, Var b) {
    Mat out = value(a) + value(b);
    return op(std::move(out), {a, b}, [this, a, b](std::int32_t self) {
      const Mat& g = nodes_[self].grad;
      if (wants(a)) acc(a, g);
      if (wants(b)) acc(b, g);
    });
  }

  // Adds a 1 x n row to every row of a.
  Var add_row(Var a, Var row) {
    Mat out = value(a).rowwise() + value(row).row(0);
    return op(std::move(out), {a, row}, [this, a, row](std::int32_t self) {
      const Mat& g = nodes_[self].grad;
      if (wants(a)) acc(a, g);
      if (wants(row)) acc(row, g.colwise().sum());
    });
  }

  Var scale(Var a, T s) {
    Mat out = value(a) * s;
    return op(std::move(out), {a}, [this, a, s](std::int32_t self) { acc(a, nodes_[self].grad * s); });
  }

  Var gelu(Var a) {
    const Mat& x = value(a);
    Mat out = x.unaryExpr([](T v) { return gelu_value(v); });
    return op(std::move(out), {a}, [this, a](std::int32_t self) {
      Mat d = value(a).unaryExpr([](T v) { return gelu_derivative(v); });
      acc(a, nodes_[self].grad.cwiseProduct(d));
    });
  }

  // Row-wise layer normalisation with 1 x n gain and bias.
  Var layer_norm(Var x, Var gain, Var bias, T eps = T(1e-5)) {
    const Mat& xv = value(x);
    const Index rows = xv.rows(), cols = xv.cols();
    Mat xhat(rows, cols);
    Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std(rows);
    for (Index r = 0; r < rows; ++r) {
      const T mean = xv.row(r).mean();
      const T var = (xv.row(r).array() - mean).square().mean();
      inv_std(r) = T(1) / std::sqrt(var + eps);
      xhat.row(r) = (xv.row(r).array() - mean) * inv_std(r);
    }
    Mat out = (xhat.array().rowwise() * value(gain).row(0).array()).matrix();
    out.rowwise() += value(bias).row(0);
    return op(std::move(out), {x, gain, bias},
              [this, x, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](std::int32_t self) {
                const Mat& g = nodes_[self].grad;
                if (wants(gain)) acc(gain, g.cwiseProduct(xhat).colwise().sum());
                if (wants(bias)) acc(bias, g.colwise().sum());
                if (wants(x)) {
                  const Mat gh = (g.array().rowwise() * value(gain).row(0).array()).matrix();
                  const T n = static_cast<T>(gh.cols());
                  Mat dx(gh.rows(), gh.cols());
                  for (Index r = 0; r < gh.rows(); ++r) {
                    const T mean_g = gh.row(r).mean();
                    const T mean_gx = gh.row(r).cwiseProduct(xhat.row(r)).sum() / n;
                    dx.row(r) = ((gh.row(r).array() - mean_g) - xhat.row(r).array() * mean_gx) * inv_std(r);
                  }
                  acc(x, dx);
                }
              });
  }

  // Row-wise softmax. `mask` (optional, same shape) holds 0 for allowed and
  // -inf for blocked entries; every row needs at least one allowed entry.
  Var softmax(Var a, const Mat* mask = nullptr) {
    Mat z = value(a);
    if (mask) z += *mask;
    Mat out = softmax_rows(z);
    return op(std::move(out), {a}, [this, a](std::int32_t self) {
      const Mat& p = nodes_[self].value;
      const Mat& g = nodes_[self].grad;
      Mat d = p.cwiseProduct(g);
      const auto dots = d.rowwise().sum();
      d -= (p.array().colwise() * dots.array()).matrix();
      acc(a, d);
    });
  }

  // Sum over rows r of -log softmax(logits[r])[targets[r]] (1 x 1).
  Var nll(Var logits, std::span<const int> targets) {
    const Mat& z = value(logits);
    if (static_cast<Index>(targets.size()) != z.rows()) {
      fail(ErrorCode::kInternal, "InternalError", "nll: one target per row required");
    }
    Mat p = softmax_rows(z);
    T loss = 0;
    for (Index r = 0; r < z.rows(); ++r) {
      const int t = targets[r];
      if (t < 0 || t >= z.cols()) fail(ErrorCode::kInvalidArgument, "IndexOutOfRange", "target index out of range");
      const T m = z.row(r).maxCoeff();
      const T lse = m + std::log((z.row(r).array() - m).exp().sum());
      loss += lse - z(r, t);
    }
    std::vector<int> tg(targets.begin(), targets.end());
    Mat out(1, 1);
    out(0, 0) = loss;
    return op(std::move(out), {logits}, [this, logits, p = std::move(p), tg = std::move(tg)](std::int32_t self) {
      Mat d = p;
      for (std::size_t r = 0; r < tg.size(); ++r) d(static_cast<Index>(r), tg[r]) -= T(1);
      acc(logits, d * nodes_[self].grad(0, 0));
    });
  }

  Var rows(Var a, Index begin, Index count) {
    Mat out = value(a).middleRows(begin, count);
    return op(std::move(out), {a}, [this, a, begin, count](std::int32_t self) {
      Mat d = Mat::Zero(value(a).rows(), value(a).cols());
      d.middleRows(begin, count) = nodes_[self].grad;
      acc(a, d);
    });
  }

  Var cols(Var a, Index begin, Index count) {
    Mat out = value(a).middleCols(begin, count);
    return op(std::move(out), {a}, [this, a, begin, count](std::int32_t self) {
      Mat d = Mat::Zero(value(a).rows(), value(a).cols());
      d.middleCols(begin, count) = nodes_[self].grad;
      acc(a, d);
    });
  }

  Var concat_rows(std::span<const Var> parts) {
    Index total = 0, width = value(parts[0]).cols();
    for (Var p : parts) total += value(p).rows();
    Mat out(total, width);
    Index r = 0;
    for (Var p : parts) {
      out.middleRows(r, value(p).rows()) = value(p);
      r += value(p).rows();
    }
    std::vector<Var> ps(parts.begin(), parts.end());
    return op(std::move(out), ps, [this, ps](std::int32_t self) {
      Index r0 = 0;
      for (Var p : ps) {
        const Index n = value(p).rows();
        if (wants(p)) acc(p, nodes_[self].grad.middleRows(r0, n));
        r0 += n;
      }
    });
  }

  Var concat_cols(std::span<const Var> parts) {
    Index total = 0, height = value(parts[0]).rows();
    for (Var p : parts) total += value(p).cols();
    Mat out(height, total);
    Index c = 0;
    for (Var p : parts) {
      out.middleCols(c, value(p).cols()) = value(p);
      c += value(p).cols();
    }
    std::vector<Var> ps(parts.begin(), parts.end());
    return op(std::move(out), ps, [this, ps](std::int32_t self) {
      Index c0 = 0;
      for (Var p : ps) {
        const Index n = value(p).cols();
        if (wants(p)) acc(p, nodes_[self].grad.middleCols(c0, n));
        c0 += n;
      }
    });
  }

  // Rows of `table` selected by ids (embedding lookup).
  Var gather(Var table, std::span<const int> ids) {
    const Mat& t = value(table);
    Mat out(static_cast<Index>(ids.size()), t.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Index>(i)) = t.row(ids[i]);
    std::vector<int> idx(ids.begin(), ids.end());
    return op(std::move(out), {table}, [this, table, idx = std::move(idx)](std::int32_t self) {
      ensure_grad(table.id);
      Mat& tg = nodes_[table.id].grad;
      const Mat& g = nodes_[self].grad;
      for (std::size_t i = 0; i < idx.size(); ++i) tg.row(idx[i]) += g.row(static_cast<Index>(i));
    });
  }

  Var mean_rows(Var a) {
    Mat out = value(a).colwise().mean();
    return op(std::move(out), {a}, [this, a](std::int32_t self) {
      const Index n = value(a).rows();
      Mat d = nodes_[self].grad.replicate(n, 1) / static_cast<T>(n);
      acc(a, d);
    });
  }

  Var sum(std::span<const Var> scalars) {
    Mat out = Mat::Zero(1, 1);
    for (Var s : scalars) out(0, 0) += value(s)(0, 0);
    std::vector<Var> ss(scalars.begin(), scalars.end());
    return op(std::move(out), ss, [this, ss](std::int32_t self) {
      for (Var s : ss) {
        if (wants(s)) acc(s, nodes_[self].grad);
      }
    });
  }

  static Mat softmax_rows(const Mat& z) {
    Mat out(z.rows(), z.cols());
    for (Index r = 0; r < z.rows(); ++r) {
      const T m = z.row(r).maxCoeff();
      // Vectorised exp clamps -inf to a denormal; masked entries must be exactly 0.
      const auto blocked = z.row(r).array() == -std::numeric_limits<T>::infinity();
      const auto e = blocked.select(T(0), (z.row(r).array() - m).exp()).eval();
      out.row(r) = e / e.sum();
    }
    return out;
  }

  static T gelu_value(T v) {
    const T c = T(0.7978845608028654);  // sqrt(2/pi)
    return T(0.5) * v * (T(1) + std::tanh(c * (v + T(0.044715) * v * v * v)));
  }
  static T gelu_derivative(T v) {
    const T c = T(0.7978845608028654);
    const T u = c * (v + T(0.044715) * v * v * v);
    const T th = std::tanh(u);
    const T du = c * (T(1) + T(3) * T(0.044715) * v * v);
    return T(0.5) * (T(1) + th) + T(0.5) * v * (T(1) - th * th) * du;
  }

 private:
  struct Node {
    Mat value;
    Mat grad;  // empty until something flows into it
    std::function<void()> back;
    bool needs_grad = false;
    std::int32_t param = -1;
  };

  Var push(Mat value, bool needs_grad, std::function<void()> back) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
  }

  template <class Back>
  Var op(Mat value, std::initializer_list<Var> inputs, Back&& back) {
    return op(std::move(value), std::vector<Var>(inputs), std::forward<Back>(back));
  }

  template <class Back>
  Var op(Mat value, const std::vector<Var>& inputs, Back&& back) {
    bool needs = false;
    for (Var v : inputs) needs = needs || nodes_[v.id].needs_grad;
    Var out = push(std::move(value), needs, {});
    if (needs) {
      const std::int32_t self = out.id;
      nodes_[self].back = [b = std::forward<Back>(back), self]() { b(self); };
    }
    return out;
  }

  bool wants(Var v) const { return nodes_[v.id].needs_grad; }

  void ensure_grad(std::int32_t id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
  }

  template <class Expr>
  void acc(Var v, const Expr& g) {
    if (!wants(v)) return;
    ensure_grad(v.id);
    nodes_[v.id].grad += g;
  }

  std::vector<Node> nodes_;
  std::vector<Var> param_vars_;
};

}  // namespace webvln::ad
