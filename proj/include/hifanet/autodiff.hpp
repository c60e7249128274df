#pragma once

// Tape-based reverse-mode differentiation over num::Tensor.
//
// A Tape is built fresh for every forward pass. Each op appends one node that
// owns its output value and a closure that pushes the node's gradient back to
// its inputs. Parameter nodes copy their value out of a ParamStore and, after
// backward(), add their gradient into the store tensor's grad buffer.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hifanet/errors.hpp"
#include "hifanet/tensor.hpp"

namespace hifanet::num {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor t) { return push(std::move(t), false, nullptr, {}); }

  /// Differentiable input that is not part of any ParamStore (op tests).
  Var leaf(Tensor t) { return push(std::move(t), true, nullptr, {}); }

  /// View of a stored parameter; repeated calls with the same name share a node.
  Var param(ParamStore& store, const std::string& name) {
    auto it = param_ids_.find(name);
    if (it != param_ids_.end()) return Var{this, it->second};
    Tensor& t = store.at(name);
    Var v = push(t, true, &t, {});
    param_ids_.emplace(name, v.id);
    return v;
  }

  Var record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn) {
    bool needs = false;
    for (const Var& in : inputs) needs = needs || nodes_[in.id].needs_grad;
    return push(std::move(value), needs, nullptr, needs ? std::move(fn) : BackwardFn{});
  }
  Var record(Tensor value, const std::vector<Var>& inputs, BackwardFn fn) {
    bool needs = false;
    for (const Var& in : inputs) needs = needs || nodes_[in.id].needs_grad;
    return push(std::move(value), needs, nullptr, needs ? std::move(fn) : BackwardFn{});
  }

  const Tensor& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }

  /// Gradient accumulator of a node; empty when the node does not need one.
  std::span<double> grad_buffer(std::size_t id) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return {};
    if (n.grad.size() != n.value.size()) n.grad.assign(n.value.size(), 0.0);
    return n.grad;
  }
  std::span<double> grad_buffer(Var v) { return grad_buffer(v.id); }

  std::span<const double> grad(Var v) const { return nodes_[v.id].grad; }

  /// Runs the recorded closures in reverse order starting from a scalar loss
  /// and adds parameter gradients into their ParamStore tensors.
  void backward(Var loss) {
    if (nodes_[loss.id].value.size() != 1)
      throw NotScalar("backward() needs a scalar loss, got shape " +
                      to_string(nodes_[loss.id].value.shape()));
    if (!nodes_[loss.id].needs_grad) return;
    grad_buffer(loss)[0] += 1.0;
    for (std::size_t id = loss.id + 1; id-- > 0;) {
      Node& n = nodes_[id];
      if (n.backward && !n.grad.empty()) n.backward(*this, id);
    }
    for (auto& [_, id] : param_ids_) {
      Node& n = nodes_[id];
      n.param->ensure_grad();
      if (n.grad.empty()) continue;
      auto dst = n.param->grad();
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i];
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Buffer grad;
    bool needs_grad = false;
    Tensor* param = nullptr;
    BackwardFn backward;
  };

  Var push(Tensor value, bool needs, Tensor* param, BackwardFn fn) {
    nodes_.push_back(Node{std::move(value), {}, needs, param, std::move(fn)});
    return Var{this, nodes_.size() - 1};
  }

  std::deque<Node> nodes_;
  std::map<std::string, std::size_t> param_ids_;
};

inline const Tensor& Var::value() const { return tape->value(id); }

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeMismatch(std::string(op) + ": shapes " + to_string(a.shape()) + " and " +
                        to_string(b.shape()) + " differ");
}

inline void add_into(std::span<double> dst, std::span<const double> src, double alpha = 1.0) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += alpha * src[i];
}

// Splits a shape around one axis into (outer, length, inner) strides.
struct AxisSplit {
  std::size_t outer = 1, length = 1, inner = 1;
};

inline AxisSplit split_axis(const Shape& shape, std::size_t axis) {
  if (axis >= shape.size())
    throw ShapeMismatch("axis " + std::to_string(axis) + " out of range for shape " + to_string(shape));
  AxisSplit s;
  for (std::size_t i = 0; i < axis; ++i) s.outer *= shape[i];
  s.length = shape[axis];
  for (std::size_t i = axis + 1; i < shape.size(); ++i) s.inner *= shape[i];
  return s;
}

inline Shape drop_axis(const Shape& shape, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < shape.size(); ++i)
    if (i != axis) out.push_back(shape[i]);
  return out;
}

}  // namespace detail

inline Var add(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  detail::require_same_shape(av, bv, "add");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    auto g = t.grad(Var{&t, self});
    if (auto ga = t.grad_buffer(a); !ga.empty()) detail::add_into(ga, g);
    if (auto gb = t.grad_buffer(b); !gb.empty()) detail::add_into(gb, g);
  });
}

inline Var mul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  detail::require_same_shape(av, bv, "mul");
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& t, std::size_t self) {
    auto g = t.grad(Var{&t, self});
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (auto ga = t.grad_buffer(a); !ga.empty())
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
    if (auto gb = t.grad_buffer(b); !gb.empty())
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
  });
}

inline Var scale(Var a, double s) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s * av[i];
  return a.tape->record(std::move(out), {a}, [a, s](Tape& t, std::size_t self) {
    if (auto ga = t.grad_buffer(a); !ga.empty()) detail::add_into(ga, t.grad(Var{&t, self}), s);
  });
}

inline Var sum(Var a) {
  const Tensor& av = a.value();
  double s = 0.0;
  for (double v : av.values()) s += v;
  return a.tape->record(Tensor::scalar(s), {a}, [a](Tape& t, std::size_t self) {
    const double g = t.grad(Var{&t, self})[0];
    if (auto ga = t.grad_buffer(a); !ga.empty())
      for (double& v : ga) v += g;
  });
}

inline Var relu(Var a) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > 0.0 ? av[i] : 0.0;
  return a.tape->record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
    auto g = t.grad(Var{&t, self});
    const Tensor& av = t.value(a);
    if (auto ga = t.grad_buffer(a); !ga.empty())
      for (std::size_t i = 0; i < ga.size(); ++i)
        if (av[i] > 0.0) ga[i] += g[i];
  });
}

inline Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.tape->record(std::move(out), {a}, [a](Tape& t, std::size_t self) {
    if (auto ga = t.grad_buffer(a); !ga.empty()) detail::add_into(ga, t.grad(Var{&t, self}));
  });
}

/// Plain 2-D matrix product.
inline Var matmul(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0))
    throw ShapeMismatch("matmul: incompatible shapes " + to_string(av.shape()) + " x " +
                        to_string(bv.shape()));
  const auto m = static_cast<Eigen::Index>(av.dim(0));
  const auto k = static_cast<Eigen::Index>(av.dim(1));
  const auto n = static_cast<Eigen::Index>(bv.dim(1));
  Tensor out(Shape{av.dim(0), bv.dim(1)});
  detail::MatMap(out.data(), m, n).noalias() =
      detail::ConstMatMap(av.data(), m, k) * detail::ConstMatMap(bv.data(), k, n);
  return a.tape->record(std::move(out), {a, b}, [a, b, m, k, n](Tape& t, std::size_t self) {
    detail::ConstMatMap g(t.grad(Var{&t, self}).data(), m, n);
    if (auto ga = t.grad_buffer(a); !ga.empty())
      detail::MatMap(ga.data(), m, k).noalias() +=
          g * detail::ConstMatMap(t.value(b).data(), k, n).transpose();
    if (auto gb = t.grad_buffer(b); !gb.empty())
      detail::MatMap(gb.data(), k, n).noalias() +=
          detail::ConstMatMap(t.value(a).data(), m, k).transpose() * g;
  });
}

/// y = x W + b over the trailing dimension of x. A 1x1 convolution over patch
/// pixels is exactly this map applied per pixel.
inline Var linear(Var x, Var weight, Var bias) {
  const Tensor& xv = x.value();
  const Tensor& wv = weight.value();
  const Tensor& bv = bias.value();
  if (wv.rank() != 2 || xv.rank() == 0 || xv.shape().back() != wv.dim(0))
    throw ShapeMismatch("linear: input " + to_string(xv.shape()) + " vs weight " +
                        to_string(wv.shape()));
  if (bv.rank() != 1 || bv.dim(0) != wv.dim(1))
    throw ShapeMismatch("linear: bias " + to_string(bv.shape()) + " vs weight " +
                        to_string(wv.shape()));
  const auto in = static_cast<Eigen::Index>(wv.dim(0));
  const auto outw = static_cast<Eigen::Index>(wv.dim(1));
  const auto rows = static_cast<Eigen::Index>(xv.size()) / in;
  Shape shape = xv.shape();
  shape.back() = wv.dim(1);
  Tensor out(shape);
  {
    detail::MatMap y(out.data(), rows, outw);
    y.noalias() = detail::ConstMatMap(xv.data(), rows, in) * detail::ConstMatMap(wv.data(), in, outw);
    y.rowwise() += detail::ConstVecMap(bv.data(), outw).transpose();
  }
  return x.tape->record(std::move(out), {x, weight, bias},
                        [x, weight, bias, in, outw, rows](Tape& t, std::size_t self) {
    detail::ConstMatMap g(t.grad(Var{&t, self}).data(), rows, outw);
    if (auto gx = t.grad_buffer(x); !gx.empty())
      detail::MatMap(gx.data(), rows, in).noalias() +=
          g * detail::ConstMatMap(t.value(weight).data(), in, outw).transpose();
    if (auto gw = t.grad_buffer(weight); !gw.empty())
      detail::MatMap(gw.data(), in, outw).noalias() +=
          detail::ConstMatMap(t.value(x).data(), rows, in).transpose() * g;
    if (auto gb = t.grad_buffer(bias); !gb.empty())
      Eigen::Map<Eigen::VectorXd>(gb.data(), outw) += g.colwise().sum().transpose();
  });
}

/// Numerically stable softmax along one axis (max subtracted before exp).
inline Var softmax(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  const auto s = detail::split_axis(xv.shape(), axis);
  Tensor out(xv.shape());
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t i = 0; i < s.inner; ++i) {
      const std::size_t base = o * s.length * s.inner + i;
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < s.length; ++j) mx = std::max(mx, xv[base + j * s.inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < s.length; ++j) {
        const double e = std::exp(xv[base + j * s.inner] - mx);
        out[base + j * s.inner] = e;
        z += e;
      }
      for (std::size_t j = 0; j < s.length; ++j) out[base + j * s.inner] /= z;
    }
  return x.tape->record(std::move(out), {x}, [x, s](Tape& t, std::size_t self) {
    auto gx = t.grad_buffer(x);
    if (gx.empty()) return;
    auto g = t.grad(Var{&t, self});
    const Tensor& y = t.value(self);
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < s.inner; ++i) {
        const std::size_t base = o * s.length * s.inner + i;
        double dot = 0.0;
        for (std::size_t j = 0; j < s.length; ++j) {
          const std::size_t p = base + j * s.inner;
          dot += g[p] * y[p];
        }
        for (std::size_t j = 0; j < s.length; ++j) {
          const std::size_t p = base + j * s.inner;
          gx[p] += y[p] * (g[p] - dot);
        }
      }
  });
}

inline Var mean_over_axis(Var x, std::size_t axis) {
  const Tensor& xv = x.value();
  const auto s = detail::split_axis(xv.shape(), axis);
  Tensor out(detail::drop_axis(xv.shape(), axis));
  const double inv = 1.0 / static_cast<double>(s.length);
  for (std::size_t o = 0; o < s.outer; ++o)
    for (std::size_t j = 0; j < s.length; ++j) {
      const double* src = xv.data() + (o * s.length + j) * s.inner;
      double* dst = out.data() + o * s.inner;
      for (std::size_t i = 0; i < s.inner; ++i) dst[i] += src[i];
    }
  for (double& v : out.values()) v *= inv;
  return x.tape->record(std::move(out), {x}, [x, s, inv](Tape& t, std::size_t self) {
    auto gx = t.grad_buffer(x);
    if (gx.empty()) return;
    auto g = t.grad(Var{&t, self});
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t j = 0; j < s.length; ++j)
        for (std::size_t i = 0; i < s.inner; ++i)
          gx[(o * s.length + j) * s.inner + i] += inv * g[o * s.inner + i];
  });
}

/// Picks one index along an axis and drops that axis.
inline Var select(Var x, std::size_t axis, std::size_t index) {
  const Tensor& xv = x.value();
  const auto s = detail::split_axis(xv.shape(), axis);
  if (index >= s.length)
    throw ShapeMismatch("select: index " + std::to_string(index) + " out of range for axis of length " +
                        std::to_string(s.length));
  Tensor out(detail::drop_axis(xv.shape(), axis));
  for (std::size_t o = 0; o < s.outer; ++o)
    std::copy_n(xv.data() + (o * s.length + index) * s.inner, s.inner, out.data() + o * s.inner);
  return x.tape->record(std::move(out), {x}, [x, s, index](Tape& t, std::size_t self) {
    auto gx = t.grad_buffer(x);
    if (gx.empty()) return;
    auto g = t.grad(Var{&t, self});
    for (std::size_t o = 0; o < s.outer; ++o)
      for (std::size_t i = 0; i < s.inner; ++i)
        gx[(o * s.length + index) * s.inner + i] += g[o * s.inner + i];
  });
}

inline Var concat(const std::vector<Var>& parts, std::size_t axis) {
  if (parts.empty()) throw ShapeMismatch("concat: no inputs");
  const Shape& first = parts.front().shape();
  if (axis >= first.size()) throw ShapeMismatch("concat: axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  for (const Var& p : parts) {
    const Shape& sh = p.shape();
    if (sh.size() != first.size()) throw ShapeMismatch("concat: rank mismatch");
    for (std::size_t i = 0; i < sh.size(); ++i)
      if (i != axis && sh[i] != first[i])
        throw ShapeMismatch("concat: shapes " + to_string(first) + " and " + to_string(sh) + " differ off-axis");
    out_shape[axis] += sh[axis];
  }
  const auto so = detail::split_axis(out_shape, axis);
  Tensor out(out_shape);
  std::vector<std::size_t> offsets;
  std::size_t offset = 0;
  for (const Var& p : parts) {
    offsets.push_back(offset);
    const Tensor& pv = p.value();
    const std::size_t chunk = pv.dim(axis) * so.inner;
    for (std::size_t o = 0; o < so.outer; ++o)
      std::copy_n(pv.data() + o * chunk, chunk, out.data() + o * so.length * so.inner + offset * so.inner);
    offset += pv.dim(axis);
  }
  Tape* tape = parts.front().tape;
  return tape->record(std::move(out), parts, [parts, offsets, so, axis](Tape& t, std::size_t self) {
    auto g = t.grad(Var{&t, self});
    for (std::size_t p = 0; p < parts.size(); ++p) {
      auto gp = t.grad_buffer(parts[p]);
      if (gp.empty()) continue;
      const std::size_t chunk = t.value(parts[p]).dim(axis) * so.inner;
      for (std::size_t o = 0; o < so.outer; ++o) {
        const double* src = g.data() + o * so.length * so.inner + offsets[p] * so.inner;
        double* dst = gp.data() + o * chunk;
        for (std::size_t i = 0; i < chunk; ++i) dst[i] += src[i];
      }
    }
  });
}

/// Batched multi-head scaled dot-product attention.
///
///   query [B, Lq, H*dk], key [B, Lk, H*dk], value [B, Lk, Dv] -> [B, Lq, Dv]
///
/// Head h compares query/key slice h*dk..(h+1)*dk and mixes value slice
/// h*(Dv/H)..(h+1)*(Dv/H). When `weights` is given it receives the attention
/// weights with shape [B, H, Lq, Lk].
inline Var multihead_attention(Var query, Var key, Var value, std::size_t heads, double scale_factor,
                               Tensor* weights = nullptr) {
  const Tensor& q = query.value();
  const Tensor& k = key.value();
  const Tensor& v = value.value();
  if (q.rank() != 3 || k.rank() != 3 || v.rank() != 3)
    throw ShapeMismatch("attention: query/key/value must be rank 3");
  const std::size_t B = q.dim(0), Lq = q.dim(1), Lk = k.dim(1);
  const std::size_t qk = q.dim(2), dv = v.dim(2);
  if (heads == 0 || k.dim(0) != B || v.dim(0) != B || v.dim(1) != Lk || k.dim(2) != qk ||
      qk % heads != 0 || dv % heads != 0)
    throw ShapeMismatch("attention: incompatible shapes " + to_string(q.shape()) + ", " +
                        to_string(k.shape()) + ", " + to_string(v.shape()) + " for " +
                        std::to_string(heads) + " heads");
  const std::size_t dk = qk / heads, dh = dv / heads;

  auto w = std::make_shared<std::vector<double>>(B * heads * Lq * Lk);
  Tensor out(Shape{B, Lq, dv});
  std::vector<double> logits(Lk);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t h = 0; h < heads; ++h)
      for (std::size_t i = 0; i < Lq; ++i) {
        const double* qi = q.data() + (b * Lq + i) * qk + h * dk;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < Lk; ++j) {
          const double* kj = k.data() + (b * Lk + j) * qk + h * dk;
          double dot = 0.0;
          for (std::size_t c = 0; c < dk; ++c) dot += qi[c] * kj[c];
          logits[j] = dot * scale_factor;
          mx = std::max(mx, logits[j]);
        }
        double* wrow = w->data() + ((b * heads + h) * Lq + i) * Lk;
        double z = 0.0;
        for (std::size_t j = 0; j < Lk; ++j) {
          wrow[j] = std::exp(logits[j] - mx);
          z += wrow[j];
        }
        double* oi = out.data() + (b * Lq + i) * dv + h * dh;
        for (std::size_t j = 0; j < Lk; ++j) {
          wrow[j] /= z;
          const double* vj = v.data() + (b * Lk + j) * dv + h * dh;
          for (std::size_t c = 0; c < dh; ++c) oi[c] += wrow[j] * vj[c];
        }
      }
  if (weights) *weights = Tensor(Shape{B, heads, Lq, Lk}, *w);

  return query.tape->record(
      std::move(out), {query, key, value},
      [query, key, value, w, B, Lq, Lk, qk, dv, heads, dk, dh, scale_factor](Tape& t, std::size_t self) {
        auto g = t.grad(Var{&t, self});
        const Tensor& q = t.value(query);
        const Tensor& k = t.value(key);
        const Tensor& v = t.value(value);
        auto gq = t.grad_buffer(query);
        auto gk = t.grad_buffer(key);
        auto gv = t.grad_buffer(value);
        std::vector<double> dw(Lk);
        for (std::size_t b = 0; b < B; ++b)
          for (std::size_t h = 0; h < heads; ++h)
            for (std::size_t i = 0; i < Lq; ++i) {
              const double* wrow = w->data() + ((b * heads + h) * Lq + i) * Lk;
              const double* gi = g.data() + (b * Lq + i) * dv + h * dh;
              double dot = 0.0;
              for (std::size_t j = 0; j < Lk; ++j) {
                const double* vj = v.data() + (b * Lk + j) * dv + h * dh;
                double acc = 0.0;
                for (std::size_t c = 0; c < dh; ++c) acc += gi[c] * vj[c];
                dw[j] = acc;
                dot += acc * wrow[j];
                if (!gv.empty()) {
                  double* gvj = gv.data() + (b * Lk + j) * dv + h * dh;
                  for (std::size_t c = 0; c < dh; ++c) gvj[c] += wrow[j] * gi[c];
                }
              }
              const double* qi = q.data() + (b * Lq + i) * qk + h * dk;
              for (std::size_t j = 0; j < Lk; ++j) {
                const double ds = wrow[j] * (dw[j] - dot) * scale_factor;
                if (ds == 0.0) continue;
                const double* kj = k.data() + (b * Lk + j) * qk + h * dk;
                if (!gq.empty()) {
                  double* gqi = gq.data() + (b * Lq + i) * qk + h * dk;
                  for (std::size_t c = 0; c < dk; ++c) gqi[c] += ds * kj[c];
                }
                if (!gk.empty()) {
                  double* gkj = gk.data() + (b * Lk + j) * qk + h * dk;
                  for (std::size_t c = 0; c < dk; ++c) gkj[c] += ds * qi[c];
                }
              }
            }
      });
}

/// Mean over rows of -log softmax(logits)[label], via log-sum-exp.
inline Var cross_entropy(Var logits, std::span<const int> labels) {
  const Tensor& lv = logits.value();
  if (lv.rank() != 2 || lv.dim(0) != labels.size())
    throw ShapeMismatch("cross_entropy: logits " + to_string(lv.shape()) + " vs " +
                        std::to_string(labels.size()) + " labels");
  const std::size_t rows = lv.dim(0), classes = lv.dim(1);
  std::vector<int> owned(labels.begin(), labels.end());
  double total = 0.0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (owned[r] < 0 || static_cast<std::size_t>(owned[r]) >= classes)
      throw LabelOutOfRange("label " + std::to_string(owned[r]) + " outside [0, " +
                            std::to_string(classes) + ")");
    const double* row = lv.data() + r * classes;
    const double mx = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - mx);
    total += mx + std::log(z) - row[owned[r]];
  }
  const double inv = 1.0 / static_cast<double>(rows);
  return logits.tape->record(
      Tensor::scalar(total * inv), {logits},
      [logits, owned = std::move(owned), rows, classes, inv](Tape& t, std::size_t self) {
        auto gl = t.grad_buffer(logits);
        if (gl.empty()) return;
        const double g = t.grad(Var{&t, self})[0] * inv;
        const Tensor& lv = t.value(logits);
        for (std::size_t r = 0; r < rows; ++r) {
          const double* row = lv.data() + r * classes;
          const double mx = *std::max_element(row, row + classes);
          double z = 0.0;
          for (std::size_t c = 0; c < classes; ++c) z += std::exp(row[c] - mx);
          for (std::size_t c = 0; c < classes; ++c) {
            const double p = std::exp(row[c] - mx) / z;
            gl[r * classes + c] += g * (p - (static_cast<int>(c) == owned[r] ? 1.0 : 0.0));
          }
        }
      });
}

}  // namespace hifanet::num
