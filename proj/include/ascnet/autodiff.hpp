#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "ascnet/core.hpp"

namespace ascnet {

template <typename Scalar>
class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape<Scalar>& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Matrix<Scalar>& value() const { return tape_->value(*this); }
  const Matrix<Scalar>& grad() const { return tape_->grad(*this); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }

 private:
  Tape<Scalar>* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Linear record of a forward computation, replayed in reverse by backward().
///
/// Each node keeps its forward value, its accumulated gradient and a closure
/// that pushes the node's gradient into its parents. Nodes are created in
/// topological order, so reverse creation order is a valid backward schedule.
template <typename Scalar>
class Tape {
 public:
  using Mat = Matrix<Scalar>;
  using Backward = std::function<void(Tape&, const Mat& upstream)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<Scalar> constant(Mat value) { return push(std::move(value), false, nullptr); }

  /// Leaf whose gradient is accumulated by backward().
  Var<Scalar> variable(Mat value) { return push(std::move(value), true, nullptr); }

  /// Records an op result. The node requires a gradient iff any parent does;
  /// otherwise the closure is dropped.
  Var<Scalar> record(Mat value, std::initializer_list<Var<Scalar>> parents, Backward backward) {
    bool needs = false;
    for (const auto& p : parents) needs = needs || nodes_[p.id()].requires_grad;
    return push(std::move(value), needs, needs ? std::move(backward) : nullptr);
  }

  const Mat& value(Var<Scalar> v) const { return nodes_[v.id()].value; }

  /// Accumulated gradient; a zero matrix when nothing reached the node.
  const Mat& grad(Var<Scalar> v) const {
    auto& node = nodes_[v.id()];
    if (!node.has_grad) {
      node.grad.setZero(node.value.rows(), node.value.cols());
      node.has_grad = true;
    }
    return node.grad;
  }

  bool requires_grad(Var<Scalar> v) const { return nodes_[v.id()].requires_grad; }

  template <typename Derived>
  void accumulate(Var<Scalar> v, const Eigen::MatrixBase<Derived>& g) {
    auto& node = nodes_[v.id()];
    if (!node.requires_grad) return;
    if (node.has_grad) {
      node.grad += g;
    } else {
      node.grad = g;
      node.has_grad = true;
    }
  }

  /// Seeds d(root)/d(root) = 1 for a 1x1 root and runs every closure in reverse order.
  void backward(Var<Scalar> root) {
    if (root.rows() != 1 || root.cols() != 1) {
      throw ShapeError("backward() needs a 1x1 root, got " + shape_string(root.rows(), root.cols()));
    }
    accumulate(root, Mat::Ones(1, 1));
    for (std::size_t i = root.id() + 1; i-- > 0;) {
      auto& node = nodes_[i];
      if (!node.backward || !node.has_grad) continue;
      node.backward(*this, node.grad);
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    mutable Mat grad;
    mutable bool has_grad = false;
    bool requires_grad = false;
    Backward backward;
  };

  Var<Scalar> push(Mat value, bool requires_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), Mat(), false, requires_grad, std::move(backward)});
    return Var<Scalar>(this, nodes_.size() - 1);
  }

  std::vector<Node> nodes_;
};

namespace detail {

template <typename Scalar>
void require_same_shape(const char* op, const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.rows(), a.cols()) + " vs " +
                     shape_string(b.rows(), b.cols()));
  }
}

template <typename Scalar>
void require_blocks(const char* op, const Var<Scalar>& x, Index block_rows) {
  if (block_rows <= 0 || x.rows() % block_rows != 0) {
    throw ShapeError(std::string(op) + ": " + std::to_string(x.rows()) + " rows do not split into blocks of " +
                     std::to_string(block_rows));
  }
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> matmul(const Var<Scalar>& a, const Var<Scalar>& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ, " + shape_string(a.rows(), a.cols()) + " * " +
                     shape_string(b.rows(), b.cols()));
  }
  Matrix<Scalar> out = a.value() * b.value();
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    if (t.requires_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.requires_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

template <typename Scalar>
Var<Scalar> hadamard(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape("hadamard", a, b);
  Matrix<Scalar> out = a.value().cwiseProduct(b.value());
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    if (t.requires_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
    if (t.requires_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape("add", a, b);
  Matrix<Scalar> out = a.value() + b.value();
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

template <typename Scalar>
Var<Scalar> operator-(const Var<Scalar>& a, const Var<Scalar>& b) {
  detail::require_same_shape("subtract", a, b);
  Matrix<Scalar> out = a.value() - b.value();
  return a.tape().record(std::move(out), {a, b}, [a, b](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar s) {
  Matrix<Scalar> out = a.value() * s;
  return a.tape().record(std::move(out), {a}, [a, s](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    t.accumulate(a, g * s);
  });
}

/// x + bias with a 1xC bias broadcast over every row.
template <typename Scalar>
Var<Scalar> add_row_broadcast(const Var<Scalar>& x, const Var<Scalar>& bias) {
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw ShapeError("add_row_broadcast: bias " + shape_string(bias.rows(), bias.cols()) + " does not fit " +
                     shape_string(x.rows(), x.cols()));
  }
  Matrix<Scalar> out = x.value().rowwise() + bias.value().row(0);
  return x.tape().record(std::move(out), {x, bias}, [x, bias](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    t.accumulate(x, g);
    if (t.requires_grad(bias)) t.accumulate(bias, g.colwise().sum());
  });
}

/// Identity on the forward pass; blocks every gradient.
template <typename Scalar>
Var<Scalar> detach(const Var<Scalar>& a) {
  return a.tape().constant(a.value());
}

template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& a) {
  Matrix<Scalar> out = a.value().cwiseMax(Scalar(0));
  return a.tape().record(std::move(out), {a}, [a](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    // Subgradient at exactly 0 is 0.
    t.accumulate(a, (a.value().array() > Scalar(0)).select(g, Scalar(0)));
  });
}

template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a) {
  Matrix<Scalar> out(1, 1);
  out(0, 0) = a.value().sum();
  return a.tape().record(std::move(out), {a}, [a](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    t.accumulate(a, Matrix<Scalar>::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

/// Frobenius norm as a 1x1 node. The gradient at the zero matrix is taken as 0.
template <typename Scalar>
Var<Scalar> frobenius_norm(const Var<Scalar>& a) {
  Matrix<Scalar> out(1, 1);
  out(0, 0) = a.value().norm();
  return a.tape().record(std::move(out), {a}, [a](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    const Scalar n = a.value().norm();
    if (n > Scalar(0)) t.accumulate(a, a.value() * (g(0, 0) / n));
  });
}

/// Row-wise softmax with max subtraction.
template <typename Scalar>
Var<Scalar> softmax_rows(const Var<Scalar>& a) {
  Matrix<Scalar> out = (a.value().colwise() - a.value().rowwise().maxCoeff()).array().exp().matrix();
  out.array().colwise() /= out.rowwise().sum().array();
  return a.tape().record(out, {a}, [a, out](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dot = g.cwiseProduct(out).rowwise().sum();
    t.accumulate(a, out.cwiseProduct(g - dot.replicate(1, g.cols())));
  });
}

/// Sum over rows of -log softmax(scores)[row, label[row]], as a 1x1 node.
template <typename Scalar>
Var<Scalar> cross_entropy_rows(const Var<Scalar>& scores, const std::vector<int>& labels) {
  const auto& s = scores.value();
  if (static_cast<Index>(labels.size()) != s.rows()) {
    throw ShapeError("cross_entropy_rows: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(s.rows()) + " rows");
  }
  Matrix<Scalar> prob(s.rows(), s.cols());
  Scalar total = 0;
  for (Index r = 0; r < s.rows(); ++r) {
    const int y = labels[static_cast<std::size_t>(r)];
    if (y < 0 || y >= s.cols()) {
      throw ParameterError("cross_entropy_rows: label " + std::to_string(y) + " outside [0, " +
                           std::to_string(s.cols()) + ")");
    }
    const Scalar m = s.row(r).maxCoeff();
    prob.row(r) = (s.row(r).array() - m).exp().matrix();
    const Scalar z = prob.row(r).sum();
    prob.row(r) /= z;
    total += std::log(z) + m - s(r, y);
  }
  Matrix<Scalar> out(1, 1);
  out(0, 0) = total;
  return scores.tape().record(std::move(out), {scores},
                              [scores, labels, prob](Tape<Scalar>& t, const Matrix<Scalar>& g) {
                                Matrix<Scalar> d = prob;
                                for (Index r = 0; r < d.rows(); ++r) d(r, labels[static_cast<std::size_t>(r)]) -= 1;
                                t.accumulate(scores, d * g(0, 0));
                              });
}

/// Scales every row to unit L2 norm; rows with norm below zero_tol map to zero rows.
template <typename Scalar>
Var<Scalar> normalize_rows(const Var<Scalar>& a, Scalar zero_tol = Scalar(1e-12)) {
  const auto& x = a.value();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> norms = x.rowwise().norm();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    if (norms(r) >= zero_tol) out.row(r) = x.row(r) / norms(r);
  }
  return a.tape().record(out, {a}, [a, out, norms, zero_tol](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    Matrix<Scalar> d = Matrix<Scalar>::Zero(g.rows(), g.cols());
    for (Index r = 0; r < g.rows(); ++r) {
      if (norms(r) < zero_tol) continue;
      const Scalar proj = out.row(r).dot(g.row(r));
      d.row(r) = (g.row(r) - proj * out.row(r)) / norms(r);
    }
    t.accumulate(a, d);
  });
}

/// Stacks `times` copies of a vertically.
template <typename Scalar>
Var<Scalar> tile_rows(const Var<Scalar>& a, Index times) {
  if (times < 1) throw ParameterError("tile_rows: times must be >= 1");
  Matrix<Scalar> out = a.value().replicate(times, 1);
  return a.tape().record(std::move(out), {a}, [a, times](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    Matrix<Scalar> d = Matrix<Scalar>::Zero(a.rows(), a.cols());
    for (Index b = 0; b < times; ++b) d += g.middleRows(b * a.rows(), a.rows());
    t.accumulate(a, d);
  });
}

/// For x stacked as B blocks of n rows, returns the stacked per-block Gram
/// matrices x_b x_b^T, shape (B*n) x n.
template <typename Scalar>
Var<Scalar> block_gram(const Var<Scalar>& x, Index n) {
  detail::require_blocks("block_gram", x, n);
  const Index blocks = x.rows() / n;
  Matrix<Scalar> out(x.rows(), n);
  for (Index b = 0; b < blocks; ++b) {
    const auto xb = x.value().middleRows(b * n, n);
    out.middleRows(b * n, n).noalias() = xb * xb.transpose();
  }
  return x.tape().record(std::move(out), {x}, [x, n, blocks](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    Matrix<Scalar> d(x.rows(), x.cols());
    for (Index b = 0; b < blocks; ++b) {
      const auto gb = g.middleRows(b * n, n);
      d.middleRows(b * n, n).noalias() = (gb + gb.transpose()) * x.value().middleRows(b * n, n);
    }
    t.accumulate(x, d);
  });
}

/// Per-block product a_b x_b where a is (B*n) x n and x is (B*n) x d.
template <typename Scalar>
Var<Scalar> block_matmul(const Var<Scalar>& a, const Var<Scalar>& x) {
  const Index n = a.cols();
  detail::require_blocks("block_matmul", a, n);
  if (a.rows() != x.rows()) {
    throw ShapeError("block_matmul: " + shape_string(a.rows(), a.cols()) + " blocks do not match " +
                     shape_string(x.rows(), x.cols()));
  }
  const Index blocks = a.rows() / n;
  Matrix<Scalar> out(x.rows(), x.cols());
  for (Index b = 0; b < blocks; ++b) {
    out.middleRows(b * n, n).noalias() = a.value().middleRows(b * n, n) * x.value().middleRows(b * n, n);
  }
  return a.tape().record(std::move(out), {a, x}, [a, x, n, blocks](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    if (t.requires_grad(a)) {
      Matrix<Scalar> d(a.rows(), a.cols());
      for (Index b = 0; b < blocks; ++b) {
        d.middleRows(b * n, n).noalias() = g.middleRows(b * n, n) * x.value().middleRows(b * n, n).transpose();
      }
      t.accumulate(a, d);
    }
    if (t.requires_grad(x)) {
      Matrix<Scalar> d(x.rows(), x.cols());
      for (Index b = 0; b < blocks; ++b) {
        d.middleRows(b * n, n).noalias() = a.value().middleRows(b * n, n).transpose() * g.middleRows(b * n, n);
      }
      t.accumulate(x, d);
    }
  });
}

/// Frobenius norm of every n-row block, returned as a Bx1 column.
template <typename Scalar>
Var<Scalar> block_frobenius(const Var<Scalar>& x, Index n) {
  detail::require_blocks("block_frobenius", x, n);
  const Index blocks = x.rows() / n;
  Matrix<Scalar> out(blocks, 1);
  for (Index b = 0; b < blocks; ++b) out(b, 0) = x.value().middleRows(b * n, n).norm();
  return x.tape().record(out, {x}, [x, n, blocks, out](Tape<Scalar>& t, const Matrix<Scalar>& g) {
    Matrix<Scalar> d = Matrix<Scalar>::Zero(x.rows(), x.cols());
    for (Index b = 0; b < blocks; ++b) {
      if (out(b, 0) > Scalar(0)) d.middleRows(b * n, n) = x.value().middleRows(b * n, n) * (g(b, 0) / out(b, 0));
    }
    t.accumulate(x, d);
  });
}

}  // namespace ascnet
