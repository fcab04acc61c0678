#pragma once

// Reverse-mode differentiation over dense Eigen matrices. A Tape owns the
// nodes of one forward computation; ops are free functions that append a
// node and a pull-back closure. Node creation order is a topological order
// of the graph, so backward() is a single reverse sweep.
//
// Everything is templated on the scalar so the same loss code runs in
// float for training and in double under grad_check.

#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace sgt {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using MatF = Mat<float>;
using MatD = Mat<double>;

// Named trainable value with a persistent gradient accumulator of the same
// shape.
template <typename Scalar>
struct Parameter {
  std::string name;
  Mat<Scalar> value;
  Mat<Scalar> grad;

  Parameter() = default;
  Parameter(std::string n, Mat<Scalar> v)
      : name(std::move(n)), value(std::move(v)) {
    grad = Mat<Scalar>::Zero(value.rows(), value.cols());
  }
  void zero_grad() { grad.setZero(); }
};

template <typename Scalar>
void check_finite(const Mat<Scalar>& m, const char* context) {
  if (!m.allFinite())
    throw std::runtime_error(std::string("non-finite values in ") + context);
}

namespace ad {

template <typename Scalar>
class Tape;

template <typename Scalar>
struct Var {
  int id = -1;
  Tape<Scalar>* tape = nullptr;

  bool valid() const { return tape != nullptr; }
  const Mat<Scalar>& value() const;
  Scalar scalar() const;
};

template <typename Scalar>
class Tape {
 public:
  struct Node {
    Mat<Scalar> value;
    Mat<Scalar> grad;  // empty until touched by backward
    bool requires_grad = false;
    Parameter<Scalar>* bound = nullptr;
    std::function<void(Tape&, const Node&)> backprop;
  };

  Var<Scalar> constant(Mat<Scalar> v) { return push(std::move(v), false); }

  // Leaf with gradient tracking (e.g. an input we differentiate against).
  Var<Scalar> leaf(Mat<Scalar> v) { return push(std::move(v), true); }

  // Leaf bound to an external parameter: value is copied in now, gradient is
  // accumulated into p.grad by backward().
  Var<Scalar> param(Parameter<Scalar>& p) {
    Var<Scalar> v = push(p.value, true);
    nodes_[v.id].bound = &p;
    return v;
  }

  Var<Scalar> make(Mat<Scalar> v, bool requires_grad,
                   std::function<void(Tape&, const Node&)> backprop) {
    Var<Scalar> out = push(std::move(v), requires_grad);
    if (requires_grad) nodes_[out.id].backprop = std::move(backprop);
    return out;
  }

  const Mat<Scalar>& value(int id) const { return nodes_[id].value; }
  const Node& node(int id) const { return nodes_[id]; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  // Gradient accumulator for a node, zero-allocated on first touch.
  Mat<Scalar>& grad_buf(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0)
      n.grad = Mat<Scalar>::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  // Gradient of a node after backward(); zeros if the node was off-path.
  Mat<Scalar> grad(Var<Scalar> v) {
    return grad_buf(v.id);
  }

  // Reverse sweep from a 1x1 root. Parameter-bound leaves flush into their
  // Parameter::grad.
  void backward(Var<Scalar> root) {
    if (root.tape != this) throw std::logic_error("backward: foreign var");
    const Node& r = nodes_[root.id];
    if (r.value.size() != 1)
      throw std::logic_error("backward: root must be scalar");
    grad_buf(root.id)(0, 0) = Scalar(1);
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.requires_grad || n.grad.size() == 0) continue;
      if (n.backprop) n.backprop(*this, n);
      if (n.bound) n.bound->grad += n.grad;
    }
  }

  size_t size() const { return nodes_.size(); }

 private:
  Var<Scalar> push(Mat<Scalar> v, bool requires_grad) {
    nodes_.push_back(Node{std::move(v), {}, requires_grad, nullptr, {}});
    return Var<Scalar>{static_cast<int>(nodes_.size()) - 1, this};
  }

  std::deque<Node> nodes_;
};

template <typename Scalar>
const Mat<Scalar>& Var<Scalar>::value() const {
  return tape->value(id);
}

template <typename Scalar>
Scalar Var<Scalar>::scalar() const {
  const Mat<Scalar>& v = value();
  if (v.size() != 1) throw std::logic_error("scalar(): var is not 1x1");
  return v(0, 0);
}

namespace detail {

template <typename Scalar>
void require_same_shape(const Mat<Scalar>& a, const Mat<Scalar>& b,
                        const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic
// ---------------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> add(Var<Scalar> a, Var<Scalar> b) {
  Tape<Scalar>& t = *a.tape;
  detail::require_same_shape(a.value(), b.value(), "add");
  const bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
  return t.make(a.value() + b.value(), rg,
                [a, b](Tape<Scalar>& t, const auto& n) {
                  if (t.requires_grad(a.id)) t.grad_buf(a.id) += n.grad;
                  if (t.requires_grad(b.id)) t.grad_buf(b.id) += n.grad;
                });
}

template <typename Scalar>
Var<Scalar> sub(Var<Scalar> a, Var<Scalar> b) {
  Tape<Scalar>& t = *a.tape;
  detail::require_same_shape(a.value(), b.value(), "sub");
  const bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
  return t.make(a.value() - b.value(), rg,
                [a, b](Tape<Scalar>& t, const auto& n) {
                  if (t.requires_grad(a.id)) t.grad_buf(a.id) += n.grad;
                  if (t.requires_grad(b.id)) t.grad_buf(b.id) -= n.grad;
                });
}

template <typename Scalar>
Var<Scalar> mul(Var<Scalar> a, Var<Scalar> b) {
  Tape<Scalar>& t = *a.tape;
  detail::require_same_shape(a.value(), b.value(), "mul");
  const bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
  return t.make(a.value().cwiseProduct(b.value()), rg,
                [a, b](Tape<Scalar>& t, const auto& n) {
                  if (t.requires_grad(a.id))
                    t.grad_buf(a.id) += n.grad.cwiseProduct(t.value(b.id));
                  if (t.requires_grad(b.id))
                    t.grad_buf(b.id) += n.grad.cwiseProduct(t.value(a.id));
                });
}

template <typename Scalar>
Var<Scalar> div(Var<Scalar> a, Var<Scalar> b) {
  Tape<Scalar>& t = *a.tape;
  detail::require_same_shape(a.value(), b.value(), "div");
  const bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
  return t.make(a.value().cwiseQuotient(b.value()), rg,
                [a, b](Tape<Scalar>& t, const auto& n) {
                  const Mat<Scalar>& bv = t.value(b.id);
                  if (t.requires_grad(a.id))
                    t.grad_buf(a.id) += n.grad.cwiseQuotient(bv);
                  if (t.requires_grad(b.id))
                    t.grad_buf(b.id) -=
                        n.grad.cwiseProduct(n.value).cwiseQuotient(bv);
                });
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> a, Scalar s) {
  Tape<Scalar>& t = *a.tape;
  return t.make(a.value() * s, t.requires_grad(a.id),
                [a, s](Tape<Scalar>& t, const auto& n) {
                  t.grad_buf(a.id) += n.grad * s;
                });
}

template <typename Scalar>
Var<Scalar> add_scalar(Var<Scalar> a, Scalar s) {
  Tape<Scalar>& t = *a.tape;
  return t.make(a.value().array() + s, t.requires_grad(a.id),
                [a](Tape<Scalar>& t, const auto& n) {
                  t.grad_buf(a.id) += n.grad;
                });
}

template <typename Scalar>
Var<Scalar> neg(Var<Scalar> a) {
  return scale(a, Scalar(-1));
}

// ---------------------------------------------------------------------------
// Elementwise nonlinearities
// ---------------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> exp(Var<Scalar> a) {
  Tape<Scalar>& t = *a.tape;
  return t.make(a.value().array().exp(), t.requires_grad(a.id),
                [a](Tape<Scalar>& t, const auto& n) {
                  t.grad_buf(a.id) += n.grad.cwiseProduct(n.value);
                });
}

template <typename Scalar>
Var<Scalar> log(Var<Scalar> a) {
  Tape<Scalar>& t = *a.tape;
  return t.make(a.value().array().log(), t.requires_grad(a.id),
                [a](Tape<Scalar>& t, const auto& n) {
                  t.grad_buf(a.id) += n.grad.cwiseQuotient(t.value(a.id));
                });
}

template <typename Scalar>
Var<Scalar> square(Var<Scalar> a) {
  Tape<Scalar>& t = *a.tape;
  return t.make(a.value().array().square(), t.requires_grad(a.id),
                [a](Tape<Scalar>& t, const auto& n) {
                  t.grad_buf(a.id) +=
                      Scalar(2) * n.grad.cwiseProduct(t.value(a.id));
                });
}

// Square root; the pull-back floors the denominator to keep a gradient spike
// at 0 from poisoning the whole step with inf.
template <typename Scalar>
Var<Scalar> sqrt(Var<Scalar> a) {
  Tape<Scalar>& t = *a.tape;
  return t.make(a.value().array().sqrt(), t.requires_grad(a.id),
                [a](Tape<Scalar>& t, const auto& n) {
                  const Scalar floor_v = Scalar(1e-30);
                  t.grad_buf(a.id) +=
                      (n.grad.array() /
                       (Scalar(2) * n.value.array().max(floor_v)))
                          .matrix();
                });
}

// |x| with subgradient 0 at x = 0.
template <typename Scalar>
Var<Scalar> abs(Var<Scalar> a) {
  Tape<Scalar>& t = *a.tape;
  return t.make(a.value().array().abs(), t.requires_grad(a.id),
                [a](Tape<Scalar>& t, const auto& n) {
                  const auto& av = t.value(a.id).array();
                  Mat<Scalar> sign = ((av > Scalar(0)).template cast<Scalar>() -
                                      (av < Scalar(0)).template cast<Scalar>())
                                         .matrix();
                  t.grad_buf(a.id) += n.grad.cwiseProduct(sign);
                });
}

// Gaussian error linear unit (tanh approximation). Smooth everywhere, so
// finite-difference checks of composed losses behave at any step size.
template <typename Scalar>
Var<Scalar> gelu(Var<Scalar> a) {
  Tape<Scalar>& t = *a.tape;
  const Scalar k = static_cast<Scalar>(std::sqrt(2.0 / M_PI));
  const Scalar c = static_cast<Scalar>(0.044715);
  const auto& x = a.value().array();
  Mat<Scalar> inner = (k * (x + c * x.cube())).tanh();
  Mat<Scalar> y = Scalar(0.5) * x * (Scalar(1) + inner.array());
  return t.make(std::move(y), t.requires_grad(a.id),
                [a, inner, k, c](Tape<Scalar>& t, const auto& n) {
                  const auto& x = t.value(a.id).array();
                  const auto& th = inner.array();
                  const auto du = k * (Scalar(1) + Scalar(3) * c * x.square());
                  Mat<Scalar> dydx =
                      Scalar(0.5) * (Scalar(1) + th) +
                      Scalar(0.5) * x * (Scalar(1) - th.square()) * du;
                  t.grad_buf(a.id) += n.grad.cwiseProduct(dydx);
                });
}

template <typename Scalar>
Var<Scalar> relu(Var<Scalar> a) {
  Tape<Scalar>& t = *a.tape;
  return t.make(a.value().array().max(Scalar(0)), t.requires_grad(a.id),
                [a](Tape<Scalar>& t, const auto& n) {
                  const auto mask =
                      (t.value(a.id).array() > Scalar(0)).template cast<Scalar>();
                  t.grad_buf(a.id) += n.grad.cwiseProduct(mask.matrix());
                });
}

// Clamp to [lo, hi]; gradient passes only through the interior.
template <typename Scalar>
Var<Scalar> clamp(Var<Scalar> a, Scalar lo, Scalar hi) {
  Tape<Scalar>& t = *a.tape;
  return t.make(a.value().array().max(lo).min(hi), t.requires_grad(a.id),
                [a, lo, hi](Tape<Scalar>& t, const auto& n) {
                  const auto& av = t.value(a.id).array();
                  const auto mask = ((av > lo) && (av < hi)).template cast<Scalar>();
                  t.grad_buf(a.id) += n.grad.cwiseProduct(mask.matrix());
                });
}

// max(a, lo) elementwise; gradient passes where a > lo.
template <typename Scalar>
Var<Scalar> clamp_min(Var<Scalar> a, Scalar lo) {
  Tape<Scalar>& t = *a.tape;
  return t.make(a.value().array().max(lo), t.requires_grad(a.id),
                [a, lo](Tape<Scalar>& t, const auto& n) {
                  const auto mask =
                      (t.value(a.id).array() > lo).template cast<Scalar>();
                  t.grad_buf(a.id) += n.grad.cwiseProduct(mask.matrix());
                });
}

// ---------------------------------------------------------------------------
// Linear algebra and shape ops
// ---------------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  Tape<Scalar>& t = *a.tape;
  if (a.value().cols() != b.value().rows())
    throw std::invalid_argument("matmul: inner dimensions differ");
  const bool rg = t.requires_grad(a.id) || t.requires_grad(b.id);
  return t.make(a.value() * b.value(), rg,
                [a, b](Tape<Scalar>& t, const auto& n) {
                  if (t.requires_grad(a.id))
                    t.grad_buf(a.id) += n.grad * t.value(b.id).transpose();
                  if (t.requires_grad(b.id))
                    t.grad_buf(b.id) += t.value(a.id).transpose() * n.grad;
                });
}

template <typename Scalar>
Var<Scalar> transpose(Var<Scalar> a) {
  Tape<Scalar>& t = *a.tape;
  return t.make(a.value().transpose(), t.requires_grad(a.id),
                [a](Tape<Scalar>& t, const auto& n) {
                  t.grad_buf(a.id) += n.grad.transpose();
                });
}

// Adds a 1xC row vector to every row of a RxC matrix.
template <typename Scalar>
Var<Scalar> add_rowvec(Var<Scalar> m, Var<Scalar> row) {
  Tape<Scalar>& t = *m.tape;
  if (row.value().rows() != 1 || row.value().cols() != m.value().cols())
    throw std::invalid_argument("add_rowvec: row must be 1 x cols(m)");
  const bool rg = t.requires_grad(m.id) || t.requires_grad(row.id);
  Mat<Scalar> v = m.value();
  v.rowwise() += Eigen::RowVector<Scalar, Eigen::Dynamic>(row.value().row(0));
  return t.make(std::move(v), rg, [m, row](Tape<Scalar>& t, const auto& n) {
    if (t.requires_grad(m.id)) t.grad_buf(m.id) += n.grad;
    if (t.requires_grad(row.id))
      t.grad_buf(row.id) += n.grad.colwise().sum();
  });
}

template <typename Scalar>
Var<Scalar> slice_cols(Var<Scalar> a, Eigen::Index start, Eigen::Index n) {
  Tape<Scalar>& t = *a.tape;
  if (start < 0 || n <= 0 || start + n > a.value().cols())
    throw std::invalid_argument("slice_cols: out of range");
  return t.make(a.value().middleCols(start, n), t.requires_grad(a.id),
                [a, start, n](Tape<Scalar>& t, const auto& g) {
                  t.grad_buf(a.id).middleCols(start, n) += g.grad;
                });
}

template <typename Scalar>
Var<Scalar> hstack(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw std::invalid_argument("hstack: empty");
  Tape<Scalar>& t = *parts[0].tape;
  Eigen::Index rows = parts[0].value().rows(), cols = 0;
  bool rg = false;
  for (const auto& p : parts) {
    if (p.value().rows() != rows)
      throw std::invalid_argument("hstack: row mismatch");
    cols += p.value().cols();
    rg = rg || t.requires_grad(p.id);
  }
  Mat<Scalar> v(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleCols(at, p.value().cols()) = p.value();
    at += p.value().cols();
  }
  return t.make(std::move(v), rg,
                [parts](Tape<Scalar>& t, const auto& n) {
                  Eigen::Index at = 0;
                  for (const auto& p : parts) {
                    const Eigen::Index c = t.value(p.id).cols();
                    if (t.requires_grad(p.id))
                      t.grad_buf(p.id) += n.grad.middleCols(at, c);
                    at += c;
                  }
                });
}

template <typename Scalar>
Var<Scalar> vstack(const std::vector<Var<Scalar>>& parts) {
  if (parts.empty()) throw std::invalid_argument("vstack: empty");
  Tape<Scalar>& t = *parts[0].tape;
  Eigen::Index cols = parts[0].value().cols(), rows = 0;
  bool rg = false;
  for (const auto& p : parts) {
    if (p.value().cols() != cols)
      throw std::invalid_argument("vstack: col mismatch");
    rows += p.value().rows();
    rg = rg || t.requires_grad(p.id);
  }
  Mat<Scalar> v(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    v.middleRows(at, p.value().rows()) = p.value();
    at += p.value().rows();
  }
  return t.make(std::move(v), rg,
                [parts](Tape<Scalar>& t, const auto& n) {
                  Eigen::Index at = 0;
                  for (const auto& p : parts) {
                    const Eigen::Index r = t.value(p.id).rows();
                    if (t.requires_grad(p.id))
                      t.grad_buf(p.id) += n.grad.middleRows(at, r);
                    at += r;
                  }
                });
}

// Row gather: out.row(i) = table.row(ids[i]). Backward scatter-adds.
template <typename Scalar>
Var<Scalar> gather_rows(Var<Scalar> table, std::vector<int> ids) {
  Tape<Scalar>& t = *table.tape;
  const Mat<Scalar>& tv = table.value();
  Mat<Scalar> v(static_cast<Eigen::Index>(ids.size()), tv.cols());
  for (size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= tv.rows())
      throw std::out_of_range("gather_rows: id out of range");
    v.row(static_cast<Eigen::Index>(i)) = tv.row(ids[i]);
  }
  return t.make(std::move(v), t.requires_grad(table.id),
                [table, ids = std::move(ids)](Tape<Scalar>& t, const auto& n) {
                  Mat<Scalar>& g = t.grad_buf(table.id);
                  for (size_t i = 0; i < ids.size(); ++i)
                    g.row(ids[i]) += n.grad.row(static_cast<Eigen::Index>(i));
                });
}

// ---------------------------------------------------------------------------
// Reductions (forward accumulation in double per the numerics contract)
// ---------------------------------------------------------------------------

template <typename Scalar>
Var<Scalar> sum_all(Var<Scalar> a) {
  Tape<Scalar>& t = *a.tape;
  Mat<Scalar> v(1, 1);
  v(0, 0) = static_cast<Scalar>(a.value().template cast<double>().sum());
  return t.make(std::move(v), t.requires_grad(a.id),
                [a](Tape<Scalar>& t, const auto& n) {
                  t.grad_buf(a.id).array() += n.grad(0, 0);
                });
}

template <typename Scalar>
Var<Scalar> mean_all(Var<Scalar> a) {
  const auto sz = static_cast<Scalar>(a.value().size());
  return scale(sum_all(a), Scalar(1) / sz);
}

// Row sums as a column vector (R x 1).
template <typename Scalar>
Var<Scalar> rowwise_sum(Var<Scalar> a) {
  Tape<Scalar>& t = *a.tape;
  Mat<Scalar> v = a.value()
                      .template cast<double>()
                      .rowwise()
                      .sum()
                      .template cast<Scalar>();
  return t.make(std::move(v), t.requires_grad(a.id),
                [a](Tape<Scalar>& t, const auto& n) {
                  t.grad_buf(a.id).colwise() +=
                      Eigen::Vector<Scalar, Eigen::Dynamic>(n.grad.col(0));
                });
}

// ---------------------------------------------------------------------------
// Softmax family
// ---------------------------------------------------------------------------

// Row-wise softmax; with causal=true entry (i, j) is masked out for j > i
// (square score matrices only).
template <typename Scalar>
Var<Scalar> softmax_rows(Var<Scalar> a, bool causal = false) {
  Tape<Scalar>& t = *a.tape;
  const Mat<Scalar>& z = a.value();
  if (causal && z.rows() != z.cols())
    throw std::invalid_argument("softmax_rows: causal mask needs square input");
  Mat<Scalar> p(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Eigen::Index n = causal ? i + 1 : z.cols();
    const auto row = z.row(i).head(n);
    const Scalar m = row.maxCoeff();
    Eigen::RowVector<Scalar, Eigen::Dynamic> e =
        (row.array() - m).exp().matrix();
    p.row(i).setZero();
    p.row(i).head(n) = e / e.sum();
  }
  return t.make(std::move(p), t.requires_grad(a.id),
                [a](Tape<Scalar>& t, const auto& n) {
                  const Mat<Scalar>& p = n.value;
                  Mat<Scalar> gp = n.grad.cwiseProduct(p);
                  Eigen::Vector<Scalar, Eigen::Dynamic> dot =
                      gp.rowwise().sum();
                  Mat<Scalar> row_scaled = p.array().colwise() * dot.array();
                  t.grad_buf(a.id) += gp - row_scaled;
                });
}

// Mean cross-entropy of rows of `logits` against integer targets, skipping
// rows whose target equals ignore_id (pass -1 to use every row).
template <typename Scalar>
Var<Scalar> softmax_xent_rows(Var<Scalar> logits, std::vector<int> targets,
                              int ignore_id = -1) {
  Tape<Scalar>& t = *logits.tape;
  const Mat<Scalar>& z = logits.value();
  if (static_cast<Eigen::Index>(targets.size()) != z.rows())
    throw std::invalid_argument("softmax_xent_rows: target count mismatch");
  double loss = 0.0;
  int valid = 0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const int y = targets[i];
    if (y == ignore_id) continue;
    if (y < 0 || y >= z.cols())
      throw std::out_of_range("softmax_xent_rows: target out of range");
    const Scalar m = z.row(i).maxCoeff();
    const double lse =
        std::log((z.row(i).array() - m).exp().template cast<double>().sum()) +
        static_cast<double>(m);
    loss += lse - static_cast<double>(z(i, y));
    ++valid;
  }
  if (valid == 0)
    throw std::invalid_argument("softmax_xent_rows: no valid targets");
  Mat<Scalar> v(1, 1);
  v(0, 0) = static_cast<Scalar>(loss / valid);
  return t.make(
      std::move(v), t.requires_grad(logits.id),
      [logits, targets = std::move(targets), ignore_id,
       valid](Tape<Scalar>& t, const auto& n) {
        const Mat<Scalar>& z = t.value(logits.id);
        Mat<Scalar>& g = t.grad_buf(logits.id);
        const Scalar w = n.grad(0, 0) / static_cast<Scalar>(valid);
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
          if (targets[i] == ignore_id) continue;
          const Scalar m = z.row(i).maxCoeff();
          Eigen::RowVector<Scalar, Eigen::Dynamic> p =
              (z.row(i).array() - m).exp().matrix();
          p /= p.sum();
          p(targets[i]) -= Scalar(1);
          g.row(i) += w * p;
        }
      });
}

// Mean over rows of CE(p_row || softmax(z_row)) where p is a constant
// row-stochastic matrix. Gradient is (softmax(z) - p) / rows.
template <typename Scalar>
Var<Scalar> xent_vs_probs(Var<Scalar> logits, const Mat<Scalar>& target_probs) {
  Tape<Scalar>& t = *logits.tape;
  const Mat<Scalar>& z = logits.value();
  detail::require_same_shape(z, target_probs, "xent_vs_probs");
  double loss = 0.0;
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Scalar m = z.row(i).maxCoeff();
    const double lse =
        std::log((z.row(i).array() - m).exp().template cast<double>().sum()) +
        static_cast<double>(m);
    loss += lse - target_probs.row(i)
                      .template cast<double>()
                      .dot(z.row(i).template cast<double>());
  }
  Mat<Scalar> v(1, 1);
  v(0, 0) = static_cast<Scalar>(loss / z.rows());
  return t.make(std::move(v), t.requires_grad(logits.id),
                [logits, target_probs](Tape<Scalar>& t, const auto& n) {
                  const Mat<Scalar>& z = t.value(logits.id);
                  Mat<Scalar>& g = t.grad_buf(logits.id);
                  const Scalar w = n.grad(0, 0) / static_cast<Scalar>(z.rows());
                  for (Eigen::Index i = 0; i < z.rows(); ++i) {
                    const Scalar m = z.row(i).maxCoeff();
                    Eigen::RowVector<Scalar, Eigen::Dynamic> p =
                        (z.row(i).array() - m).exp().matrix();
                    p /= p.sum();
                    g.row(i) += w * (p - target_probs.row(i));
                  }
                });
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

// Row-wise RMS normalization: y = x / sqrt(mean(x^2) + eps).
template <typename Scalar>
Var<Scalar> rmsnorm_rows(Var<Scalar> a, Scalar eps = Scalar(1e-5)) {
  Tape<Scalar>& t = *a.tape;
  const Mat<Scalar>& x = a.value();
  const Eigen::Index d = x.cols();
  Eigen::Vector<Scalar, Eigen::Dynamic> inv_rms =
      (x.array().square().rowwise().sum() / static_cast<Scalar>(d) + eps)
          .rsqrt();
  Mat<Scalar> y = x.array().colwise() * inv_rms.array();
  return t.make(std::move(y), t.requires_grad(a.id),
                [a, inv_rms, d](Tape<Scalar>& t, const auto& n) {
                  // dx = (g - y * mean(g .* y)) * inv_rms
                  const Mat<Scalar>& y = n.value;
                  Eigen::Vector<Scalar, Eigen::Dynamic> dot =
                      n.grad.cwiseProduct(y).rowwise().sum() /
                      static_cast<Scalar>(d);
                  Mat<Scalar> dx =
                      (n.grad.array() - y.array().colwise() * dot.array())
                          .colwise() *
                      inv_rms.array();
                  t.grad_buf(a.id) += dx.matrix();
                });
}

}  // namespace ad
}  // namespace sgt
