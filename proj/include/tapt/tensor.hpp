#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace tapt {

/// Row-major dense matrix; every tensor in the model is two-dimensional.
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Index = Eigen::Index;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

std::string shape_string(Index rows, Index cols);

template <typename Derived>
std::string shape_of(const Eigen::EigenBase<Derived>& m) {
  return shape_string(m.rows(), m.cols());
}

/// A trainable tensor. The gradient buffer is allocated on first accumulation
/// and persists until zero_grad().
template <typename Scalar>
struct Parameter {
  Matrix<Scalar> value;
  Matrix<Scalar> grad;

  Parameter() = default;
  explicit Parameter(Matrix<Scalar> v) : value(std::move(v)) {}

  void zero_grad() { grad.resize(0, 0); }
  bool has_grad() const { return grad.size() != 0; }
};

template <typename Scalar>
class Var;

/// Reverse-mode recording. Nodes are appended in creation order, so walking
/// them backwards is a valid topological order; references to node values stay
/// valid while the tape grows. A tape supports exactly one backward pass; parameter gradients accumulate across tapes until
/// Parameter::zero_grad().
template <typename Scalar>
class Tape {
 public:
  using MatrixType = Matrix<Scalar>;

  explicit Tape(bool record_gradients = true) : recording_(record_gradients) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }

  Var<Scalar> constant(MatrixType value);
  /// A free leaf whose gradient lives on the tape.
  Var<Scalar> variable(MatrixType value);
  /// A leaf bound to `p`; gradients accumulate into p.grad. `p` must outlive
  /// the tape.
  Var<Scalar> parameter(Parameter<Scalar>& p);
  /// Read-only view of a parameter (no gradient), for inference.
  Var<Scalar> parameter(const Parameter<Scalar>& p);

  /// Records an operation. `backward` is invoked with the node's own index
  /// during the reverse sweep, only if the node requires a gradient.
  Var<Scalar> record(MatrixType value, std::span<const std::size_t> parents,
                     std::function<void(Tape&, std::size_t)> backward);
  Var<Scalar> record(MatrixType value, std::initializer_list<std::size_t> parents,
                     std::function<void(Tape&, std::size_t)> backward) {
    return record(std::move(value), std::span<const std::size_t>(parents.begin(), parents.size()),
                  std::move(backward));
  }

  void backward(const Var<Scalar>& loss);

  const MatrixType& value(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external_value ? *n.external_value : n.value;
  }
  /// Gradient of a node; an empty matrix when no gradient reached it.
  const MatrixType& grad(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.external_grad ? *n.external_grad : n.grad;
  }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  template <typename Expr>
  void accumulate(std::size_t id, const Expr& delta) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    MatrixType& g = n.external_grad ? *n.external_grad : n.grad;
    if (g.size() == 0) {
      g = delta;
    } else {
      g += delta;
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    MatrixType value;
    MatrixType grad;
    const MatrixType* external_value = nullptr;
    MatrixType* external_grad = nullptr;
    bool requires_grad = false;
    std::function<void(Tape&, std::size_t)> backward;
  };

  std::deque<Node> nodes_;
  bool recording_;
  bool consumed_ = false;
};

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Tape<Scalar>* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix<Scalar>& value() const { return tape_->value(id_); }
  const Matrix<Scalar>& grad() const { return tape_->grad(id_); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool requires_grad() const { return tape_->requires_grad(id_); }
  Scalar item() const;

  Tape<Scalar>& tape() const { return *tape_; }
  std::size_t id() const { return id_; }

 private:
  Tape<Scalar>* tape_ = nullptr;
  std::size_t id_ = 0;
};

template <typename Scalar>
Scalar Var<Scalar>::item() const {
  const auto& v = value();
  if (v.size() != 1) throw ShapeError("item() on tensor of shape " + shape_of(v));
  return v(0, 0);
}

template <typename Scalar>
Var<Scalar> Tape<Scalar>::constant(MatrixType value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var<Scalar>(this, nodes_.size() - 1);
}

template <typename Scalar>
Var<Scalar> Tape<Scalar>::variable(MatrixType value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = recording_;
  nodes_.push_back(std::move(n));
  return Var<Scalar>(this, nodes_.size() - 1);
}

template <typename Scalar>
Var<Scalar> Tape<Scalar>::parameter(Parameter<Scalar>& p) {
  Node n;
  n.external_value = &p.value;
  if (recording_) {
    n.external_grad = &p.grad;
    n.requires_grad = true;
  }
  nodes_.push_back(std::move(n));
  return Var<Scalar>(this, nodes_.size() - 1);
}

template <typename Scalar>
Var<Scalar> Tape<Scalar>::parameter(const Parameter<Scalar>& p) {
  Node n;
  n.external_value = &p.value;
  nodes_.push_back(std::move(n));
  return Var<Scalar>(this, nodes_.size() - 1);
}

template <typename Scalar>
Var<Scalar> Tape<Scalar>::record(MatrixType value, std::span<const std::size_t> parents,
                                 std::function<void(Tape&, std::size_t)> backward) {
  Node n;
  n.value = std::move(value);
  if (recording_) {
    for (std::size_t p : parents) {
      if (nodes_[p].requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
    if (n.requires_grad) n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Var<Scalar>(this, nodes_.size() - 1);
}

template <typename Scalar>
void Tape<Scalar>::backward(const Var<Scalar>& loss) {
  if (&loss.tape() != this) throw std::logic_error("backward: loss belongs to another tape");
  if (loss.value().size() != 1) {
    throw ShapeError("backward requires a scalar loss, got " + shape_of(loss.value()));
  }
  if (!recording_) throw std::logic_error("backward on a tape that does not record gradients");
  if (consumed_) throw std::logic_error("backward called twice on the same tape");
  consumed_ = true;
  if (!nodes_[loss.id()].requires_grad) return;

  accumulate(loss.id(), MatrixType::Ones(1, 1));
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward) continue;
    if (n.grad.size() == 0) continue;
    n.backward(*this, i);
  }
}

}  // namespace tapt
