#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ocn/rng.hpp"

namespace ocn {

class Tensor;

namespace detail {

struct TensorNode {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;
  std::vector<double> grad;  // allocated on first use, same extent as values
  bool requires_grad = false;
  std::vector<Tensor> parents;
  std::function<void(TensorNode&)> backward_fn;  // reads this->grad, adds into parents
};

}  // namespace detail

// Dense row-major matrix of 64-bit floats with an optional gradient buffer.
// Tensor is a cheap handle; ops build a reverse-mode graph on the side.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int rows, int cols) : node_(std::make_shared<detail::TensorNode>()) {
    check_dims(rows, cols);
    node_->rows = rows;
    node_->cols = cols;
    node_->values.assign(static_cast<std::size_t>(rows) * cols, 0.0);
  }

  static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }

  static Tensor full(int rows, int cols, double v) {
    Tensor t(rows, cols);
    std::fill(t.values().begin(), t.values().end(), v);
    return t;
  }

  static Tensor identity(int n) {
    Tensor t(n, n);
    for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
  }

  static Tensor from(int rows, int cols, std::initializer_list<double> v) {
    Tensor t(rows, cols);
    if (static_cast<std::size_t>(rows) * cols != v.size())
      throw std::invalid_argument("Tensor::from: value count does not match shape");
    std::copy(v.begin(), v.end(), t.values().begin());
    return t;
  }

  static Tensor from_values(int rows, int cols, std::vector<double> v) {
    if (static_cast<std::size_t>(rows) * cols != v.size())
      throw std::invalid_argument("Tensor::from_values: value count does not match shape");
    Tensor t(rows, cols);
    t.node_->values = std::move(v);
    return t;
  }

  static Tensor uniform(int rows, int cols, Rng& rng, double lo, double hi) {
    Tensor t(rows, cols);
    for (auto& x : t.values()) x = rng.uniform(lo, hi);
    return t;
  }

  bool defined() const { return node_ != nullptr; }
  int rows() const { return node_->rows; }
  int cols() const { return node_->cols; }
  std::size_t size() const { return node_->values.size(); }

  std::vector<double>& values() { return node_->values; }
  const std::vector<double>& values() const { return node_->values; }

  double at(int r, int c) const { return node_->values[idx(r, c)]; }
  double& at(int r, int c) { return node_->values[idx(r, c)]; }

  bool requires_grad() const { return node_->requires_grad; }
  Tensor& set_requires_grad(bool b = true) {
    node_->requires_grad = b;
    return *this;
  }

  // Gradient buffer, zero-initialized on first access.
  std::vector<double>& grad() {
    if (node_->grad.empty()) node_->grad.assign(node_->values.size(), 0.0);
    return node_->grad;
  }
  const std::vector<double>& grad() const {
    if (node_->grad.empty()) node_->grad.assign(node_->values.size(), 0.0);
    return node_->grad;
  }
  bool has_grad() const { return !node_->grad.empty(); }
  void zero_grad() {
    if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
  }

  double item() const {
    if (rows() != 1 || cols() != 1)
      throw std::invalid_argument("Tensor::item: tensor is " + shape_str() + ", expected 1x1");
    return node_->values[0];
  }

  std::string shape_str() const {
    return std::to_string(rows()) + "x" + std::to_string(cols());
  }

  bool same_shape(const Tensor& o) const { return rows() == o.rows() && cols() == o.cols(); }

  bool all_finite() const {
    for (double v : node_->values)
      if (!std::isfinite(v)) return false;
    return true;
  }

  detail::TensorNode* node() const { return node_.get(); }
  const std::shared_ptr<detail::TensorNode>& node_ptr() const { return node_; }

  // Used by op implementations to attach the recorded backward step.
  void record(std::vector<Tensor> parents, std::function<void(detail::TensorNode&)> fn) {
    bool need = false;
    for (const auto& p : parents) need = need || p.requires_grad();
    if (!need) return;
    node_->requires_grad = true;
    node_->parents = std::move(parents);
    node_->backward_fn = std::move(fn);
  }

 private:
  static void check_dims(int rows, int cols) {
    if (rows <= 0 || cols <= 0)
      throw std::invalid_argument("Tensor: dimensions must be positive, got " +
                                  std::to_string(rows) + "x" + std::to_string(cols));
  }
  std::size_t idx(int r, int c) const {
    return static_cast<std::size_t>(r) * node_->cols + c;
  }
  mutable std::shared_ptr<detail::TensorNode> node_;
};

inline void accumulate(Tensor& t, int r, int c, double v) {
  t.grad()[static_cast<std::size_t>(r) * t.cols() + c] += v;
}

// ---------------------------------------------------------------------------
// Tape: topological record of the graph under a root, traversed once in
// reverse for the backward pass. Gradients accumulate additively on fan-out.
// ---------------------------------------------------------------------------
class Tape {
 public:
  static Tape build(const Tensor& root) {
    Tape tape;
    if (!root.defined()) return tape;
    std::unordered_set<const detail::TensorNode*> seen;
    // iterative post-order DFS; parent order fixed by each node's parent list
    std::vector<std::pair<Tensor, std::size_t>> stack;
    stack.emplace_back(root, 0);
    seen.insert(root.node());
    while (!stack.empty()) {
      auto& [t, next] = stack.back();
      const auto& parents = t.node()->parents;
      if (next < parents.size()) {
        Tensor p = parents[next++];
        if (!seen.count(p.node())) {
          seen.insert(p.node());
          stack.emplace_back(p, 0);
        }
      } else {
        tape.order_.push_back(t);
        stack.pop_back();
      }
    }
    return tape;
  }

  // Seeds the root (last recorded node, must be 1x1) with grad 1 and pulls
  // gradients back through every recorded operation exactly once.
  void backward() {
    if (order_.empty()) return;
    Tensor root = order_.back();
    if (root.rows() != 1 || root.cols() != 1)
      throw std::invalid_argument("backward: root must be scalar (1x1), got " + root.shape_str());
    root.grad()[0] += 1.0;
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
      auto* n = it->node();
      if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
    }
  }

  const std::vector<Tensor>& order() const { return order_; }

 private:
  std::vector<Tensor> order_;
};

inline void backward(const Tensor& loss) { Tape::build(loss).backward(); }

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("matmul: inner dimensions disagree, " + a.shape_str() + " * " +
                                b.shape_str());
  const int n = a.rows(), k = a.cols(), m = b.cols();
  Tensor out(n, m);
  const double* av = a.values().data();
  const double* bv = b.values().data();
  double* ov = out.values().data();
  for (int i = 0; i < n; ++i) {
    const double* arow = av + static_cast<std::size_t>(i) * k;
    double* orow = ov + static_cast<std::size_t>(i) * m;
    for (int p = 0; p < k; ++p) {
      const double aval = arow[p];
      if (aval == 0.0) continue;
      const double* brow = bv + static_cast<std::size_t>(p) * m;
      for (int j = 0; j < m; ++j) orow[j] += aval * brow[j];
    }
  }
  Tensor ga = a, gb = b;
  out.record({a, b}, [ga, gb, n, k, m](detail::TensorNode& o) mutable {
    const double* g = o.grad.data();
    if (ga.requires_grad()) {
      // grad_a = g * b^T
      double* d = ga.grad().data();
      const double* bv = gb.values().data();
      for (int i = 0; i < n; ++i)
        for (int p = 0; p < k; ++p) {
          double s = 0.0;
          const double* grow = g + static_cast<std::size_t>(i) * m;
          const double* brow = bv + static_cast<std::size_t>(p) * m;
          for (int j = 0; j < m; ++j) s += grow[j] * brow[j];
          d[static_cast<std::size_t>(i) * k + p] += s;
        }
    }
    if (gb.requires_grad()) {
      // grad_b = a^T * g
      double* d = gb.grad().data();
      const double* av = ga.values().data();
      for (int p = 0; p < k; ++p)
        for (int i = 0; i < n; ++i) {
          const double aval = av[static_cast<std::size_t>(i) * k + p];
          if (aval == 0.0) continue;
          const double* grow = g + static_cast<std::size_t>(i) * m;
          double* drow = d + static_cast<std::size_t>(p) * m;
          for (int j = 0; j < m; ++j) drow[j] += aval * grow[j];
        }
    }
  });
  return out;
}

namespace detail {

// Binary elementwise shapes: equal, or b a 1xd row broadcast across a's rows.
inline bool broadcast_row(const Tensor& a, const Tensor& b) {
  return b.rows() == 1 && a.cols() == b.cols() && a.rows() != 1;
}

inline void check_binary(const Tensor& a, const Tensor& b, const char* op) {
  if (a.same_shape(b) || broadcast_row(a, b)) return;
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " +
                              b.shape_str() + " (only a 1xd row broadcasts across rows)");
}

template <class Fwd, class Bwd>
Tensor binary_op(const Tensor& a, const Tensor& b, const char* name, Fwd fwd, Bwd bwd) {
  check_binary(a, b, name);
  const bool bc = broadcast_row(a, b);
  Tensor out(a.rows(), a.cols());
  const int rows = a.rows(), cols = a.cols();
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) {
      const std::size_t ia = static_cast<std::size_t>(i) * cols + j;
      const std::size_t ib = bc ? static_cast<std::size_t>(j) : ia;
      out.values()[ia] = fwd(a.values()[ia], b.values()[ib]);
    }
  Tensor ta = a, tb = b;
  out.record({a, b}, [ta, tb, bc, rows, cols, bwd](detail::TensorNode& o) mutable {
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) {
        const std::size_t ia = static_cast<std::size_t>(i) * cols + j;
        const std::size_t ib = bc ? static_cast<std::size_t>(j) : ia;
        const double g = o.grad[ia];
        if (g == 0.0) continue;
        double da, db;
        bwd(ta.values()[ia], tb.values()[ib], g, da, db);
        if (ta.requires_grad()) ta.grad()[ia] += da;
        if (tb.requires_grad()) tb.grad()[ib] += db;
      }
  });
  return out;
}

template <class Fwd, class Bwd>
Tensor unary_op(const Tensor& a, Fwd fwd, Bwd bwd) {
  Tensor out(a.rows(), a.cols());
  const std::size_t n = a.size();
  for (std::size_t i = 0; i < n; ++i) out.values()[i] = fwd(a.values()[i]);
  Tensor ta = a;
  out.record({a}, [ta, n, bwd](detail::TensorNode& o) mutable {
    if (!ta.requires_grad()) return;
    for (std::size_t i = 0; i < n; ++i)
      ta.grad()[i] += bwd(ta.values()[i], o.values[i]) * o.grad[i];
  });
  return out;
}

}  // namespace detail

inline Tensor add(const Tensor& a, const Tensor& b) {
  return detail::binary_op(
      a, b, "add", [](double x, double y) { return x + y; },
      [](double, double, double g, double& da, double& db) {
        da = g;
        db = g;
      });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  return detail::binary_op(
      a, b, "sub", [](double x, double y) { return x - y; },
      [](double, double, double g, double& da, double& db) {
        da = g;
        db = -g;
      });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  return detail::binary_op(
      a, b, "mul", [](double x, double y) { return x * y; },
      [](double x, double y, double g, double& da, double& db) {
        da = g * y;
        db = g * x;
      });
}

inline Tensor tanh(const Tensor& a) {
  return detail::unary_op(
      a,
      [](double x) {
        // clamped to the open interval (-1,1) where rounding would saturate
        const double y = std::tanh(x);
        const double lim = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
        return std::clamp(y, -lim, lim);
      },
      [](double, double y) { return 1.0 - y * y; });
}

inline Tensor sigmoid(const Tensor& a) {
  return detail::unary_op(
      a,
      [](double x) {
        // symmetric form, never exponentiates a large positive argument;
        // clamped to the open interval (0,1) where rounding would saturate
        double y;
        if (x >= 0.0) {
          y = 1.0 / (1.0 + std::exp(-x));
        } else {
          const double e = std::exp(x);
          y = e / (1.0 + e);
        }
        if (y >= 1.0) y = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
        if (y <= 0.0) y = std::numeric_limits<double>::min();
        return y;
      },
      [](double, double y) { return y * (1.0 - y); });
}

inline Tensor relu(const Tensor& a) {
  return detail::unary_op(
      a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

inline Tensor log(const Tensor& a) {
  return detail::unary_op(
      a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

// 1/sqrt(x + eps); the eps keeps variance-normalization away from the pole
inline Tensor rsqrt(const Tensor& a, double eps = 0.0) {
  return detail::unary_op(
      a, [eps](double x) { return 1.0 / std::sqrt(x + eps); },
      [eps](double x, double) {
        const double s = x + eps;
        return -0.5 / (s * std::sqrt(s));
      });
}

inline Tensor scale(const Tensor& a, double c) {
  return detail::unary_op(
      a, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

// Spec surface for pointwise ops: dispatch by kind.
enum class EwOp { Add, Sub, Mul, Tanh, Sigmoid, Relu };

inline Tensor elementwise(EwOp op, const Tensor& a, const Tensor& b) {
  switch (op) {
    case EwOp::Add: return add(a, b);
    case EwOp::Sub: return sub(a, b);
    case EwOp::Mul: return mul(a, b);
    default: throw std::invalid_argument("elementwise: kind takes one argument");
  }
}

inline Tensor elementwise(EwOp op, const Tensor& a) {
  switch (op) {
    case EwOp::Tanh: return tanh(a);
    case EwOp::Sigmoid: return sigmoid(a);
    case EwOp::Relu: return relu(a);
    default: throw std::invalid_argument("elementwise: kind takes two arguments");
  }
}

inline Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
inline Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }

inline Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw std::invalid_argument("concat: empty part list");
  if (axis != 0 && axis != 1) throw std::invalid_argument("concat: axis must be 0 or 1");
  int rows = parts[0].rows(), cols = parts[0].cols();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    const Tensor& p = parts[i];
    if (axis == 0) {
      if (p.cols() != cols)
        throw std::invalid_argument("concat: column mismatch " + parts[0].shape_str() + " vs " +
                                    p.shape_str());
      rows += p.rows();
    } else {
      if (p.rows() != rows)
        throw std::invalid_argument("concat: row mismatch " + parts[0].shape_str() + " vs " +
                                    p.shape_str());
      cols += p.cols();
    }
  }
  Tensor out(rows, cols);
  int off = 0;
  for (const Tensor& p : parts) {
    if (axis == 0) {
      std::copy(p.values().begin(), p.values().end(),
                out.values().begin() + static_cast<std::size_t>(off) * cols);
      off += p.rows();
    } else {
      for (int i = 0; i < rows; ++i)
        std::copy(p.values().begin() + static_cast<std::size_t>(i) * p.cols(),
                  p.values().begin() + static_cast<std::size_t>(i + 1) * p.cols(),
                  out.values().begin() + static_cast<std::size_t>(i) * cols + off);
      off += p.cols();
    }
  }
  std::vector<Tensor> ps = parts;
  out.record(parts, [ps, axis, rows, cols](detail::TensorNode& o) mutable {
    int off = 0;
    for (Tensor& p : ps) {
      if (p.requires_grad()) {
        if (axis == 0) {
          for (std::size_t i = 0; i < p.size(); ++i)
            p.grad()[i] += o.grad[static_cast<std::size_t>(off) * cols + i];
        } else {
          for (int i = 0; i < rows; ++i)
            for (int j = 0; j < p.cols(); ++j)
              p.grad()[static_cast<std::size_t>(i) * p.cols() + j] +=
                  o.grad[static_cast<std::size_t>(i) * cols + off + j];
        }
      }
      off += (axis == 0) ? p.rows() : p.cols();
    }
  });
  return out;
}

inline Tensor slice_rows(const Tensor& a, int r0, int r1) {
  if (r0 < 0 || r1 > a.rows() || r0 >= r1)
    throw std::invalid_argument("slice_rows: bad range [" + std::to_string(r0) + "," +
                                std::to_string(r1) + ") for " + a.shape_str());
  const int cols = a.cols();
  Tensor out(r1 - r0, cols);
  std::copy(a.values().begin() + static_cast<std::size_t>(r0) * cols,
            a.values().begin() + static_cast<std::size_t>(r1) * cols, out.values().begin());
  Tensor ta = a;
  out.record({a}, [ta, r0, cols](detail::TensorNode& o) mutable {
    if (!ta.requires_grad()) return;
    for (std::size_t i = 0; i < o.values.size(); ++i)
      ta.grad()[static_cast<std::size_t>(r0) * cols + i] += o.grad[i];
  });
  return out;
}

inline Tensor slice_cols(const Tensor& a, int c0, int c1) {
  if (c0 < 0 || c1 > a.cols() || c0 >= c1)
    throw std::invalid_argument("slice_cols: bad range [" + std::to_string(c0) + "," +
                                std::to_string(c1) + ") for " + a.shape_str());
  const int rows = a.rows(), cols = a.cols(), w = c1 - c0;
  Tensor out(rows, w);
  for (int i = 0; i < rows; ++i)
    std::copy(a.values().begin() + static_cast<std::size_t>(i) * cols + c0,
              a.values().begin() + static_cast<std::size_t>(i) * cols + c1,
              out.values().begin() + static_cast<std::size_t>(i) * w);
  Tensor ta = a;
  out.record({a}, [ta, c0, rows, cols, w](detail::TensorNode& o) mutable {
    if (!ta.requires_grad()) return;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < w; ++j)
        ta.grad()[static_cast<std::size_t>(i) * cols + c0 + j] +=
            o.grad[static_cast<std::size_t>(i) * w + j];
  });
  return out;
}

inline Tensor transpose(const Tensor& a) {
  const int rows = a.rows(), cols = a.cols();
  Tensor out(cols, rows);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out.at(j, i) = a.at(i, j);
  Tensor ta = a;
  out.record({a}, [ta, rows, cols](detail::TensorNode& o) mutable {
    if (!ta.requires_grad()) return;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        ta.grad()[static_cast<std::size_t>(i) * cols + j] +=
            o.grad[static_cast<std::size_t>(j) * rows + i];
  });
  return out;
}

// Broadcasts a 1xd row to n identical rows (backward: column sums).
inline Tensor broadcast_rows(const Tensor& a, int n) {
  if (a.rows() != 1)
    throw std::invalid_argument("broadcast_rows: input must be 1xd, got " + a.shape_str());
  const int cols = a.cols();
  Tensor out(n, cols);
  for (int i = 0; i < n; ++i)
    std::copy(a.values().begin(), a.values().end(),
              out.values().begin() + static_cast<std::size_t>(i) * cols);
  Tensor ta = a;
  out.record({a}, [ta, n, cols](detail::TensorNode& o) mutable {
    if (!ta.requires_grad()) return;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < cols; ++j)
        ta.grad()[j] += o.grad[static_cast<std::size_t>(i) * cols + j];
  });
  return out;
}

namespace detail {

// Shared forward/backward for (masked) row softmax. An empty mask means all
// columns are live; masked columns get exactly zero weight and zero gradient.
inline Tensor row_softmax_impl(const Tensor& a, std::vector<std::uint8_t> mask) {
  const int rows = a.rows(), cols = a.cols();
  if (!mask.empty() && static_cast<int>(mask.size()) != cols)
    throw std::invalid_argument("row_softmax: mask length " + std::to_string(mask.size()) +
                                " does not match " + a.shape_str());
  bool any = mask.empty();
  for (auto m : mask) any = any || m;
  if (!any) throw std::invalid_argument("row_softmax: mask excludes every column");
  Tensor out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < cols; ++j)
      if (mask.empty() || mask[j]) mx = std::max(mx, a.at(i, j));
    double z = 0.0;
    for (int j = 0; j < cols; ++j) {
      const double e = (mask.empty() || mask[j]) ? std::exp(a.at(i, j) - mx) : 0.0;
      out.at(i, j) = e;
      z += e;
    }
    for (int j = 0; j < cols; ++j) out.at(i, j) /= z;
  }
  Tensor ta = a;
  out.record({a}, [ta, rows, cols](detail::TensorNode& o) mutable {
    if (!ta.requires_grad()) return;
    for (int i = 0; i < rows; ++i) {
      const double* y = o.values.data() + static_cast<std::size_t>(i) * cols;
      const double* g = o.grad.data() + static_cast<std::size_t>(i) * cols;
      double dot = 0.0;
      for (int j = 0; j < cols; ++j) dot += y[j] * g[j];
      double* d = ta.grad().data() + static_cast<std::size_t>(i) * cols;
      for (int j = 0; j < cols; ++j) d[j] += y[j] * (g[j] - dot);
    }
  });
  return out;
}

}  // namespace detail

// Softmax along the last axis, max-subtracted for stability.
inline Tensor row_softmax(const Tensor& a) { return detail::row_softmax_impl(a, {}); }

// Softmax over the columns flagged live in `mask`; dead columns get weight 0.
inline Tensor row_softmax_masked(const Tensor& a, const std::vector<std::uint8_t>& mask) {
  return detail::row_softmax_impl(a, mask);
}

// log(softmax(row)); used for losses so tiny probabilities stay representable.
inline Tensor row_log_softmax(const Tensor& a) {
  const int rows = a.rows(), cols = a.cols();
  Tensor out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < cols; ++j) mx = std::max(mx, a.at(i, j));
    double z = 0.0;
    for (int j = 0; j < cols; ++j) z += std::exp(a.at(i, j) - mx);
    const double lse = mx + std::log(z);
    for (int j = 0; j < cols; ++j) out.at(i, j) = a.at(i, j) - lse;
  }
  Tensor ta = a;
  out.record({a}, [ta, rows, cols](detail::TensorNode& o) mutable {
    if (!ta.requires_grad()) return;
    for (int i = 0; i < rows; ++i) {
      const double* y = o.values.data() + static_cast<std::size_t>(i) * cols;
      const double* g = o.grad.data() + static_cast<std::size_t>(i) * cols;
      double gsum = 0.0;
      for (int j = 0; j < cols; ++j) gsum += g[j];
      double* d = ta.grad().data() + static_cast<std::size_t>(i) * cols;
      for (int j = 0; j < cols; ++j) d[j] += g[j] - std::exp(y[j]) * gsum;
    }
  });
  return out;
}

// Per-feature max over the sequence (row) dimension, restricted to rows
// flagged live in `mask` when given. Gradient goes to the lowest argmax row.
inline Tensor max_pool_seq(const Tensor& a, const std::vector<std::uint8_t>& mask = {}) {
  const int rows = a.rows(), cols = a.cols();
  if (rows < 1) throw std::invalid_argument("max_pool_seq: empty sequence");
  if (!mask.empty() && static_cast<int>(mask.size()) != rows)
    throw std::invalid_argument("max_pool_seq: mask length " + std::to_string(mask.size()) +
                                " does not match " + a.shape_str());
  bool any = mask.empty();
  for (auto m : mask) any = any || m;
  if (!any) throw std::invalid_argument("max_pool_seq: mask excludes every row");
  Tensor out(1, cols);
  std::vector<int> arg(cols, -1);
  for (int j = 0; j < cols; ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < rows; ++i) {
      if (!mask.empty() && !mask[i]) continue;
      if (a.at(i, j) > best) {
        best = a.at(i, j);
        arg[j] = i;
      }
    }
    out.at(0, j) = best;
  }
  Tensor ta = a;
  out.record({a}, [ta, arg, cols](detail::TensorNode& o) mutable {
    if (!ta.requires_grad()) return;
    for (int j = 0; j < cols; ++j)
      ta.grad()[static_cast<std::size_t>(arg[j]) * cols + j] += o.grad[j];
  });
  return out;
}

// Gathers rows of `table` by id; backward scatter-adds into the table.
inline Tensor embedding_rows(const Tensor& table, const std::vector<int>& ids) {
  if (ids.empty()) throw std::invalid_argument("embedding_rows: empty id list");
  const int cols = table.cols();
  for (int id : ids)
    if (id < 0 || id >= table.rows())
      throw std::invalid_argument("embedding_rows: id " + std::to_string(id) +
                                  " out of range for table " + table.shape_str());
  Tensor out(static_cast<int>(ids.size()), cols);
  for (std::size_t i = 0; i < ids.size(); ++i)
    std::copy(table.values().begin() + static_cast<std::size_t>(ids[i]) * cols,
              table.values().begin() + static_cast<std::size_t>(ids[i] + 1) * cols,
              out.values().begin() + i * cols);
  Tensor tt = table;
  out.record({table}, [tt, ids, cols](detail::TensorNode& o) mutable {
    if (!tt.requires_grad()) return;
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (int j = 0; j < cols; ++j)
        tt.grad()[static_cast<std::size_t>(ids[i]) * cols + j] += o.grad[i * cols + j];
  });
  return out;
}

inline Tensor pick(const Tensor& a, int r, int c) {
  if (r < 0 || r >= a.rows() || c < 0 || c >= a.cols())
    throw std::invalid_argument("pick: (" + std::to_string(r) + "," + std::to_string(c) +
                                ") out of range for " + a.shape_str());
  Tensor out(1, 1);
  out.values()[0] = a.at(r, c);
  Tensor ta = a;
  out.record({a}, [ta, r, c](detail::TensorNode& o) mutable {
    if (ta.requires_grad()) accumulate(ta, r, c, o.grad[0]);
  });
  return out;
}

inline Tensor sum_all(const Tensor& a) {
  Tensor out(1, 1);
  double s = 0.0;
  for (double v : a.values()) s += v;
  out.values()[0] = s;
  Tensor ta = a;
  out.record({a}, [ta](detail::TensorNode& o) mutable {
    if (!ta.requires_grad()) return;
    for (auto& g : ta.grad()) g += o.grad[0];
  });
  return out;
}

// Inverted-dropout; identity when rate == 0. Draws one mask per element.
inline Tensor dropout(const Tensor& a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
  const double keep = 1.0 - rate;
  std::vector<double> m(a.size());
  for (auto& x : m) x = rng.next_double() < rate ? 0.0 : 1.0 / keep;
  Tensor out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out.values()[i] = a.values()[i] * m[i];
  Tensor ta = a;
  out.record({a}, [ta, m](detail::TensorNode& o) mutable {
    if (!ta.requires_grad()) return;
    for (std::size_t i = 0; i < m.size(); ++i) ta.grad()[i] += o.grad[i] * m[i];
  });
  return out;
}

}  // namespace ocn
