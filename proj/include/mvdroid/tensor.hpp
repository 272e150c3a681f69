#pragma once

// Dense reverse-mode autodiff over Eigen buffers. Tensors are row-major,
// templated on the scalar so the same model code runs in float for training
// and in double for finite-difference checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "mvdroid/error.hpp"

namespace mvd::ad {

using Index = Eigen::Index;
using Shape = std::vector<Index>;

template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename S>
using MatMap = Eigen::Map<Mat<S>>;
template <typename S>
using ConstMatMap = Eigen::Map<const Mat<S>>;
template <typename S>
using SparseMat = Eigen::SparseMatrix<S, Eigen::RowMajor>;

inline Index numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), Index{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < s.size(); ++i) out << (i ? "," : "") << s[i];
  out << ']';
  return out.str();
}

[[noreturn]] inline void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": " + shape_str(a) + " vs " + shape_str(b));
}

template <typename S>
struct Node {
  Shape shape;
  Vec<S> value;
  Vec<S> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  Vec<S>& grad_buffer() {
    if (grad.size() != value.size()) grad = Vec<S>::Zero(value.size());
    return grad;
  }
  // Leading dimensions collapse into rows; the last dimension is columns.
  Index cols() const { return shape.empty() ? 1 : shape.back(); }
  Index rows() const { return cols() == 0 ? 0 : value.size() / cols(); }
  ConstMatMap<S> mat() const { return ConstMatMap<S>(value.data(), rows(), cols()); }
  MatMap<S> grad_mat() { return MatMap<S>(grad_buffer().data(), rows(), cols()); }
};

template <typename S>
class Tensor {
 public:
  using Scalar = S;

  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<S>> node) : node_(std::move(node)) {}

  static Tensor from(Shape shape, Vec<S> values, bool requires_grad = false) {
    if (numel(shape) != values.size())
      throw Error(ErrorCode::ShapeMismatch,
                  "shape " + shape_str(shape) + " needs " + std::to_string(numel(shape)) + " values, got " +
                      std::to_string(values.size()));
    auto n = std::make_shared<Node<S>>();
    n->shape = std::move(shape);
    n->value = std::move(values);
    n->requires_grad = requires_grad;
    return Tensor(std::move(n));
  }
  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const Index n = numel(shape);
    return from(std::move(shape), Vec<S>::Zero(n), requires_grad);
  }
  static Tensor from_matrix(const Mat<S>& m, bool requires_grad = false) {
    return from({m.rows(), m.cols()}, Eigen::Map<const Vec<S>>(m.data(), m.size()), requires_grad);
  }
  static Tensor vector(std::initializer_list<S> v, bool requires_grad = false) {
    Vec<S> values(static_cast<Index>(v.size()));
    std::copy(v.begin(), v.end(), values.data());
    const Index n = values.size();
    return from({n}, std::move(values), requires_grad);
  }
  static Tensor scalar(S v) { return from({}, Vec<S>::Constant(1, v)); }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  Index rank() const { return static_cast<Index>(node_->shape.size()); }
  Index dim(std::size_t i) const { return node_->shape.at(i); }
  Index size() const { return node_->value.size(); }
  Index rows() const { return node_->rows(); }
  Index cols() const { return node_->cols(); }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }

  const Vec<S>& value() const { return node_->value; }
  Vec<S>& mutable_value() { return node_->value; }
  const Vec<S>& grad() const { return node_->grad_buffer(); }
  ConstMatMap<S> mat() const { return node_->mat(); }
  S item() const {
    if (size() != 1) throw Error(ErrorCode::ShapeMismatch, "item() on " + shape_str(shape()));
    return node_->value[0];
  }
  void zero_grad() {
    if (node_->grad.size() != 0) node_->grad.setZero();
  }

  Node<S>* node() const { return node_.get(); }
  const std::shared_ptr<Node<S>>& node_ptr() const { return node_; }

  /// Seeds d(self)/d(self) = 1 and runs every recorded backward closure in
  /// reverse topological order. Gradients accumulate into leaves.
  void backward() const {
    if (size() != 1) throw Error(ErrorCode::ShapeMismatch, "backward() needs a scalar, got " + shape_str(shape()));
    if (!requires_grad()) return;
    std::vector<Node<S>*> order;
    std::unordered_set<Node<S>*> seen;
    std::vector<std::pair<Node<S>*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
      auto& [n, next] = stack.back();
      if (next < n->parents.size()) {
        Node<S>* p = n->parents[next++].get();
        if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
      } else {
        order.push_back(n);
        stack.pop_back();
      }
    }
    node_->grad_buffer().setOnes();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      Node<S>* n = *it;
      if (n->backward) {
        n->grad_buffer();
        n->backward(*n);
      }
    }
  }

 private:
  mutable std::shared_ptr<Node<S>> node_;
};

/// Builds an op result; records parents and the backward closure only when
/// some parent is tracked.
template <typename S>
Tensor<S> make_result(Shape shape, Vec<S> value, std::initializer_list<Tensor<S>> parents,
                      std::function<void(Node<S>&)> backward) {
  Tensor<S> out = Tensor<S>::from(std::move(shape), std::move(value));
  bool tracked = false;
  for (const auto& p : parents) tracked = tracked || p.requires_grad();
  if (tracked) {
    Node<S>* n = out.node();
    n->requires_grad = true;
    for (const auto& p : parents) n->parents.push_back(p.node_ptr());
    n->backward = std::move(backward);
  }
  return out;
}

template <typename S>
Tensor<S> make_result(Shape shape, Vec<S> value, const std::vector<Tensor<S>>& parents,
                      std::function<void(Node<S>&)> backward) {
  Tensor<S> out = Tensor<S>::from(std::move(shape), std::move(value));
  bool tracked = false;
  for (const auto& p : parents) tracked = tracked || p.requires_grad();
  if (tracked) {
    Node<S>* n = out.node();
    n->requires_grad = true;
    for (const auto& p : parents) n->parents.push_back(p.node_ptr());
    n->backward = std::move(backward);
  }
  return out;
}

template <typename S>
inline Vec<S> flat(const Mat<S>& m) {
  return Eigen::Map<const Vec<S>>(m.data(), m.size());
}

// ---------------------------------------------------------------------------
// Linear algebra and elementwise ops

/// [m,k] x [k,n] -> [m,n]; a rank-1 left operand [k] gives [n].
template <typename S>
Tensor<S> matmul(const Tensor<S>& a, const Tensor<S>& b) {
  if (b.rank() != 2 || a.rank() < 1 || a.rank() > 2 || a.cols() != b.rows()) shape_error("matmul", a.shape(), b.shape());
  const Mat<S> c = a.mat() * b.mat();
  Shape shape = a.rank() == 1 ? Shape{b.cols()} : Shape{a.rows(), b.cols()};
  return make_result<S>(std::move(shape), flat<S>(c), {a, b}, [](Node<S>& out) {
    auto& pa = *out.parents[0];
    auto& pb = *out.parents[1];
    const ConstMatMap<S> g(out.grad.data(), pa.rows(), pb.cols());
    if (pa.requires_grad) pa.grad_mat().noalias() += g * pb.mat().transpose();
    if (pb.requires_grad) pb.grad_mat().noalias() += pa.mat().transpose() * g;
  });
}

template <typename S>
Tensor<S> add(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape()) shape_error("add", a.shape(), b.shape());
  return make_result<S>(a.shape(), a.value() + b.value(), {a, b}, [](Node<S>& out) {
    for (auto& p : out.parents)
      if (p->requires_grad) p->grad_buffer() += out.grad;
  });
}

/// Adds a [n] bias to every row of a [..., n] tensor.
template <typename S>
Tensor<S> add_bias(const Tensor<S>& a, const Tensor<S>& bias) {
  if (bias.rank() != 1 || bias.size() != a.cols()) shape_error("add_bias", a.shape(), bias.shape());
  Mat<S> v = a.mat();
  v.rowwise() += bias.value().transpose();
  return make_result<S>(a.shape(), flat<S>(v), {a, bias}, [](Node<S>& out) {
    auto& pa = *out.parents[0];
    auto& pb = *out.parents[1];
    if (pa.requires_grad) pa.grad_buffer() += out.grad;
    if (pb.requires_grad) pb.grad_buffer() += out.grad_mat().colwise().sum().transpose();
  });
}

template <typename S>
Tensor<S> mul(const Tensor<S>& a, const Tensor<S>& b) {
  if (a.shape() != b.shape()) shape_error("mul", a.shape(), b.shape());
  return make_result<S>(a.shape(), a.value().cwiseProduct(b.value()), {a, b}, [](Node<S>& out) {
    auto& pa = *out.parents[0];
    auto& pb = *out.parents[1];
    if (pa.requires_grad) pa.grad_buffer() += out.grad.cwiseProduct(pb.value);
    if (pb.requires_grad) pb.grad_buffer() += out.grad.cwiseProduct(pa.value);
  });
}

template <typename S>
Tensor<S> scale(const Tensor<S>& a, S factor) {
  return make_result<S>(a.shape(), a.value() * factor, {a}, [factor](Node<S>& out) {
    out.parents[0]->grad_buffer() += out.grad * factor;
  });
}

template <typename S>
Tensor<S> relu(const Tensor<S>& a) {
  return make_result<S>(a.shape(), a.value().cwiseMax(S(0)), {a}, [](Node<S>& out) {
    auto& p = *out.parents[0];
    // Subgradient at 0 is taken as 0.
    p.grad_buffer() += (p.value.array() > S(0)).select(out.grad, S(0)).matrix();
  });
}

/// Softmax along the last axis.
template <typename S>
Tensor<S> softmax(const Tensor<S>& a) {
  Mat<S> y = a.mat();
  for (Index r = 0; r < y.rows(); ++r) {
    y.row(r).array() -= y.row(r).maxCoeff();
    y.row(r) = y.row(r).array().exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  return make_result<S>(a.shape(), flat<S>(y), {a}, [](Node<S>& out) {
    auto& p = *out.parents[0];
    const ConstMatMap<S> yv = out.mat();
    const ConstMatMap<S> g(out.grad.data(), yv.rows(), yv.cols());
    MatMap<S> pg = p.grad_mat();
    for (Index r = 0; r < yv.rows(); ++r) {
      const S dot = yv.row(r).dot(g.row(r));
      pg.row(r).array() += yv.row(r).array() * (g.row(r).array() - dot);
    }
  });
}

/// Inverted dropout: kept units are scaled by 1/(1-p) in training; eval mode
/// returns the input unchanged.
template <typename S, typename Rng>
Tensor<S> dropout(const Tensor<S>& a, double p, bool training, Rng& rng) {
  if (!training || p <= 0.0) return a;
  std::bernoulli_distribution keep(1.0 - p);
  const S factor = S(1.0 / (1.0 - p));
  Vec<S> mask(a.size());
  for (Index i = 0; i < mask.size(); ++i) mask[i] = keep(rng) ? factor : S(0);
  return make_result<S>(a.shape(), a.value().cwiseProduct(mask), {a}, [mask](Node<S>& out) {
    out.parents[0]->grad_buffer() += out.grad.cwiseProduct(mask);
  });
}

template <typename S>
Tensor<S> sum(const Tensor<S>& a) {
  return make_result<S>({}, Vec<S>::Constant(1, a.value().sum()), {a}, [](Node<S>& out) {
    out.parents[0]->grad_buffer().array() += out.grad[0];
  });
}

/// Mean over axis 0 ([m,n] -> [n]) or axis 1 ([m,n] -> [m]).
template <typename S>
Tensor<S> mean_over_axis(const Tensor<S>& a, int axis) {
  if (a.rank() != 2 || (axis != 0 && axis != 1)) shape_error("mean_over_axis", a.shape(), {axis});
  const Index m = a.rows(), n = a.cols();
  if ((axis == 0 && m == 0) || (axis == 1 && n == 0)) shape_error("mean_over_axis(empty)", a.shape(), {axis});
  Vec<S> v = axis == 0 ? Vec<S>(a.mat().colwise().mean().transpose()) : Vec<S>(a.mat().rowwise().mean());
  Shape shape{axis == 0 ? n : m};
  return make_result<S>(std::move(shape), std::move(v), {a}, [axis, m, n](Node<S>& out) {
    MatMap<S> pg = out.parents[0]->grad_mat();
    if (axis == 0) {
      pg.rowwise() += (out.grad / S(m)).transpose();
    } else {
      pg.colwise() += out.grad / S(n);
    }
  });
}

/// Sums each non-overlapping window of k consecutive entries: [n] -> [n/k].
template <typename S>
Tensor<S> sum_pool_1d(const Tensor<S>& a, Index k) {
  if (a.rank() != 1 || k < 1 || a.size() % k != 0) shape_error("sum_pool_1d", a.shape(), {k});
  const Index n = a.size() / k;
  const Vec<S> v = ConstMatMap<S>(a.value().data(), n, k).rowwise().sum();
  return make_result<S>({n}, v, {a}, [k, n](Node<S>& out) {
    MatMap<S> pg(out.parents[0]->grad_buffer().data(), n, k);
    pg.colwise() += out.grad;
  });
}

/// sign(z) * sqrt(|z|). The derivative at exactly zero is taken as 0.
template <typename S>
Tensor<S> sqrt_signed(const Tensor<S>& a) {
  const Vec<S> y = a.value().unaryExpr([](S z) { return z < S(0) ? -std::sqrt(-z) : std::sqrt(z); });
  return make_result<S>(a.shape(), y, {a}, [](Node<S>& out) {
    auto& p = *out.parents[0];
    p.grad_buffer() += out.grad.binaryExpr(
        out.value, [](S g, S y) { return y == S(0) ? S(0) : g / (S(2) * std::abs(y)); });
  });
}

/// Scales the whole tensor to unit L2 norm; an exactly-zero input maps to
/// zero with zero gradient.
template <typename S>
Tensor<S> l2_normalize(const Tensor<S>& a) {
  const S norm = a.value().norm();
  Vec<S> y = norm > S(0) ? Vec<S>(a.value() / norm) : Vec<S>(Vec<S>::Zero(a.size()));
  return make_result<S>(a.shape(), std::move(y), {a}, [norm](Node<S>& out) {
    if (norm == S(0)) return;
    const S proj = out.value.dot(out.grad);
    out.parents[0]->grad_buffer() += (out.grad - out.value * proj) / norm;
  });
}

template <typename S>
Tensor<S> transpose(const Tensor<S>& a) {
  if (a.rank() != 2) shape_error("transpose", a.shape(), {});
  const Mat<S> t = a.mat().transpose();
  return make_result<S>({a.cols(), a.rows()}, flat<S>(t), {a}, [](Node<S>& out) {
    auto& p = *out.parents[0];
    p.grad_mat() += ConstMatMap<S>(out.grad.data(), p.cols(), p.rows()).transpose();
  });
}

template <typename S>
Tensor<S> reshape(const Tensor<S>& a, Shape shape) {
  if (numel(shape) != a.size()) shape_error("reshape", a.shape(), shape);
  return make_result<S>(std::move(shape), a.value(), {a},
                        [](Node<S>& out) { out.parents[0]->grad_buffer() += out.grad; });
}

template <typename S>
Tensor<S> flatten(const Tensor<S>& a) {
  return reshape(a, {a.size()});
}

/// Columns [start, start+count) of a [m,n] tensor.
template <typename S>
Tensor<S> slice_cols(const Tensor<S>& a, Index start, Index count) {
  if (a.rank() != 2 || start < 0 || count < 0 || start + count > a.cols())
    shape_error("slice_cols", a.shape(), {start, count});
  const Mat<S> s = a.mat().middleCols(start, count);
  return make_result<S>({a.rows(), count}, flat<S>(s), {a}, [start, count](Node<S>& out) {
    auto& p = *out.parents[0];
    p.grad_mat().middleCols(start, count) += ConstMatMap<S>(out.grad.data(), p.rows(), count);
  });
}

/// Concatenates rank-1 tensors end to end.
template <typename S>
Tensor<S> concat(const std::vector<Tensor<S>>& parts) {
  Index total = 0;
  for (const auto& p : parts) {
    if (p.rank() != 1) shape_error("concat", p.shape(), {});
    total += p.size();
  }
  Vec<S> v(total);
  Index off = 0;
  for (const auto& p : parts) {
    v.segment(off, p.size()) = p.value();
    off += p.size();
  }
  return make_result<S>({total}, std::move(v), parts, [](Node<S>& out) {
    Index o = 0;
    for (auto& p : out.parents) {
      const Index n = p->value.size();
      if (p->requires_grad) p->grad_buffer() += out.grad.segment(o, n);
      o += n;
    }
  });
}

/// Concatenates [m, n_i] tensors along columns.
template <typename S>
Tensor<S> concat_cols(const std::vector<Tensor<S>>& parts) {
  if (parts.empty()) throw Error(ErrorCode::ShapeMismatch, "concat_cols of nothing");
  const Index m = parts.front().rows();
  Index total = 0;
  for (const auto& p : parts) {
    if (p.rank() != 2 || p.rows() != m) shape_error("concat_cols", parts.front().shape(), p.shape());
    total += p.cols();
  }
  Mat<S> v(m, total);
  Index off = 0;
  for (const auto& p : parts) {
    v.middleCols(off, p.cols()) = p.mat();
    off += p.cols();
  }
  return make_result<S>({m, total}, flat<S>(v), parts, [m, total](Node<S>& out) {
    const ConstMatMap<S> g(out.grad.data(), m, total);
    Index o = 0;
    for (auto& p : out.parents) {
      const Index n = p->cols();
      if (p->requires_grad) p->grad_mat() += g.middleCols(o, n);
      o += n;
    }
  });
}

/// Stacks equally sized rank-1 tensors as the rows of a [k, n] tensor.
template <typename S>
Tensor<S> stack_rows(const std::vector<Tensor<S>>& rows) {
  if (rows.empty()) throw Error(ErrorCode::ShapeMismatch, "stack_rows of nothing");
  const Index n = rows.front().size();
  for (const auto& r : rows)
    if (r.rank() != 1 || r.size() != n) shape_error("stack_rows", rows.front().shape(), r.shape());
  Tensor<S> flat_all = concat(rows);
  return reshape(flat_all, {static_cast<Index>(rows.size()), n});
}

/// Sparse [n,n] constant times dense [n,f].
template <typename S>
Tensor<S> spmm(std::shared_ptr<const SparseMat<S>> a, const Tensor<S>& h) {
  if (h.rank() != 2 || a->cols() != h.rows()) shape_error("spmm", {a->rows(), a->cols()}, h.shape());
  const Mat<S> y = (*a) * h.mat();
  return make_result<S>({a->rows(), h.cols()}, flat<S>(y), {h}, [a](Node<S>& out) {
    auto& p = *out.parents[0];
    const ConstMatMap<S> g(out.grad.data(), a->rows(), p.cols());
    p.grad_mat().noalias() += a->transpose() * g;
  });
}

// ---------------------------------------------------------------------------
// Convolution and pooling

/// Convolution over rows with a full-width kernel: x [L, w], kernel
/// [kh*w, F], bias [F] -> [L-kh+1, F]. Window i is rows i..i+kh-1
/// flattened row-major.
template <typename S>
Tensor<S> conv1d(const Tensor<S>& x, const Tensor<S>& kernel, const Tensor<S>& bias, Index kernel_height) {
  const Index L = x.rows(), w = x.cols();
  if (x.rank() != 2 || kernel.rank() != 2 || kernel.rows() != kernel_height * w || bias.size() != kernel.cols() ||
      L < kernel_height)
    shape_error("conv1d", x.shape(), kernel.shape());
  const Index lout = L - kernel_height + 1;
  using WindowMap = Eigen::Map<const Mat<S>, 0, Eigen::OuterStride<>>;
  const WindowMap windows(x.value().data(), lout, kernel_height * w, Eigen::OuterStride<>(w));
  Mat<S> y = windows * kernel.mat();
  y.rowwise() += bias.value().transpose();
  return make_result<S>({lout, kernel.cols()}, flat<S>(y), {x, kernel, bias},
                        [lout, kernel_height, w](Node<S>& out) {
                          auto& px = *out.parents[0];
                          auto& pk = *out.parents[1];
                          auto& pb = *out.parents[2];
                          const ConstMatMap<S> g(out.grad.data(), lout, pk.cols());
                          const WindowMap win(px.value.data(), lout, kernel_height * w, Eigen::OuterStride<>(w));
                          if (pk.requires_grad) pk.grad_mat().noalias() += win.transpose() * g;
                          if (pb.requires_grad) pb.grad_buffer() += g.colwise().sum().transpose();
                          if (px.requires_grad) {
                            const Mat<S> dwin = g * pk.mat().transpose();
                            Vec<S>& gx = px.grad_buffer();
                            for (Index i = 0; i < lout; ++i) gx.segment(i * w, kernel_height * w) += dwin.row(i).transpose();
                          }
                        });
}

/// Column-wise max over rows: [L, F] -> [F]; gradient flows to the first
/// arg-max row of each column.
template <typename S>
Tensor<S> max_over_rows(const Tensor<S>& x) {
  if (x.rank() != 2 || x.rows() == 0) shape_error("max_over_rows", x.shape(), {});
  const auto m = x.mat();
  std::vector<Index> arg(static_cast<std::size_t>(m.cols()));
  Vec<S> y(m.cols());
  for (Index c = 0; c < m.cols(); ++c) {
    Index r = 0;
    y[c] = m.col(c).maxCoeff(&r);
    arg[static_cast<std::size_t>(c)] = r;
  }
  return make_result<S>({m.cols()}, std::move(y), {x}, [arg](Node<S>& out) {
    MatMap<S> pg = out.parents[0]->grad_mat();
    for (std::size_t c = 0; c < arg.size(); ++c) pg(arg[c], static_cast<Index>(c)) += out.grad[static_cast<Index>(c)];
  });
}

/// Stride-1 2-D convolution with zero padding: x [C,H,W], kernel
/// [Co, C*kh*kw], bias [Co] -> [Co, H+2p-kh+1, W+2p-kw+1].
template <typename S>
Tensor<S> conv2d(const Tensor<S>& x, const Tensor<S>& kernel, const Tensor<S>& bias, Index kh, Index kw, Index pad) {
  if (x.rank() != 3 || kernel.rank() != 2) shape_error("conv2d", x.shape(), kernel.shape());
  const Index C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const Index Co = kernel.rows();
  const Index Ho = H + 2 * pad - kh + 1, Wo = W + 2 * pad - kw + 1;
  if (kernel.cols() != C * kh * kw || bias.size() != Co || Ho < 1 || Wo < 1)
    shape_error("conv2d", x.shape(), kernel.shape());

  auto cols = std::make_shared<Mat<S>>(Mat<S>::Zero(C * kh * kw, Ho * Wo));
  const S* xv = x.value().data();
  for (Index c = 0; c < C; ++c)
    for (Index ki = 0; ki < kh; ++ki)
      for (Index kj = 0; kj < kw; ++kj) {
        const Index row = (c * kh + ki) * kw + kj;
        for (Index oy = 0; oy < Ho; ++oy) {
          const Index iy = oy + ki - pad;
          if (iy < 0 || iy >= H) continue;
          for (Index ox = 0; ox < Wo; ++ox) {
            const Index ix = ox + kj - pad;
            if (ix >= 0 && ix < W) (*cols)(row, oy * Wo + ox) = xv[(c * H + iy) * W + ix];
          }
        }
      }
  Mat<S> y = kernel.mat() * (*cols);
  y.colwise() += bias.value();
  return make_result<S>({Co, Ho, Wo}, flat<S>(y), {x, kernel, bias},
                        [cols, C, H, W, Co, Ho, Wo, kh, kw, pad](Node<S>& out) {
                          auto& px = *out.parents[0];
                          auto& pk = *out.parents[1];
                          auto& pb = *out.parents[2];
                          const ConstMatMap<S> g(out.grad.data(), Co, Ho * Wo);
                          if (pk.requires_grad) pk.grad_mat().noalias() += g * cols->transpose();
                          if (pb.requires_grad) pb.grad_buffer() += g.rowwise().sum();
                          if (!px.requires_grad) return;
                          const Mat<S> dcols = pk.mat().transpose() * g;
                          S* gx = px.grad_buffer().data();
                          for (Index c = 0; c < C; ++c)
                            for (Index ki = 0; ki < kh; ++ki)
                              for (Index kj = 0; kj < kw; ++kj) {
                                const Index row = (c * kh + ki) * kw + kj;
                                for (Index oy = 0; oy < Ho; ++oy) {
                                  const Index iy = oy + ki - pad;
                                  if (iy < 0 || iy >= H) continue;
                                  for (Index ox = 0; ox < Wo; ++ox) {
                                    const Index ix = ox + kj - pad;
                                    if (ix >= 0 && ix < W) gx[(c * H + iy) * W + ix] += dcols(row, oy * Wo + ox);
                                  }
                                }
                              }
                        });
}

/// 2x2 mean pooling with stride 2 on [C,H,W]; odd trailing rows/cols are
/// dropped.
template <typename S>
Tensor<S> mean_pool2d(const Tensor<S>& x) {
  if (x.rank() != 3 || x.dim(1) < 2 || x.dim(2) < 2) shape_error("mean_pool2d", x.shape(), {2, 2});
  const Index C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const Index Ho = H / 2, Wo = W / 2;
  Vec<S> y(C * Ho * Wo);
  const S* xv = x.value().data();
  for (Index c = 0; c < C; ++c)
    for (Index i = 0; i < Ho; ++i)
      for (Index j = 0; j < Wo; ++j) {
        const S* base = xv + (c * H + 2 * i) * W + 2 * j;
        y[(c * Ho + i) * Wo + j] = (base[0] + base[1] + base[W] + base[W + 1]) / S(4);
      }
  return make_result<S>({C, Ho, Wo}, std::move(y), {x}, [C, H, W, Ho, Wo](Node<S>& out) {
    S* gx = out.parents[0]->grad_buffer().data();
    for (Index c = 0; c < C; ++c)
      for (Index i = 0; i < Ho; ++i)
        for (Index j = 0; j < Wo; ++j) {
          const S g = out.grad[(c * Ho + i) * Wo + j] / S(4);
          S* base = gx + (c * H + 2 * i) * W + 2 * j;
          base[0] += g;
          base[1] += g;
          base[W] += g;
          base[W + 1] += g;
        }
  });
}

// ---------------------------------------------------------------------------
// Loss

inline constexpr double kProbabilityClamp = 1e-7;

/// J = -sum_i [t_i log p_i + (1 - t_i) log(1 - p_i)] over all entries, with
/// p clamped to [1e-7, 1 - 1e-7] (the clamp passes no gradient).
template <typename S>
Tensor<S> cross_entropy(const Tensor<S>& probs, const Vec<S>& target) {
  if (probs.rank() != 1 || target.size() != probs.size()) shape_error("cross_entropy", probs.shape(), {target.size()});
  const S lo = S(kProbabilityClamp), hi = S(1) - S(kProbabilityClamp);
  S loss = 0;
  for (Index i = 0; i < probs.size(); ++i) {
    const S p = std::clamp(probs.value()[i], lo, hi);
    loss -= target[i] * std::log(p) + (S(1) - target[i]) * std::log(S(1) - p);
  }
  return make_result<S>({}, Vec<S>::Constant(1, loss), {probs}, [target, lo, hi](Node<S>& out) {
    auto& p = *out.parents[0];
    Vec<S>& g = p.grad_buffer();
    for (Index i = 0; i < p.value.size(); ++i) {
      const S v = p.value[i];
      if (v <= lo || v >= hi) continue;
      g[i] += out.grad[0] * (-target[i] / v + (S(1) - target[i]) / (S(1) - v));
    }
  });
}

}  // namespace mvd::ad
