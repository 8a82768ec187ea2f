#pragma once

// Reverse-mode automatic differentiation over matrix-valued nodes.
//
// Every node holds a dense matrix; scalars are 1x1. Batched quantities use one
// row per sample. A Graph is append-only, so node order is a topological order
// and backward() is a single reverse sweep.

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace hamflow::ad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;

/// Trainable tensor. `grad` is written by the trainer from Graph::parameter_gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  Index size() const { return value.size(); }
  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Graph;

/// Handle to a node of a Graph.
class Var {
 public:
  Var() = default;

  Graph* graph() const { return graph_; }
  std::size_t index() const { return index_; }
  bool valid() const { return graph_ != nullptr; }

  const Matrix& value() const;
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

 private:
  friend class Graph;
  Var(Graph* g, std::size_t i) : graph_(g), index_(i) {}

  Graph* graph_ = nullptr;
  std::size_t index_ = 0;
};

enum class Op : std::uint8_t {
  Leaf,
  Constant,
  Add,
  Sub,
  Mul,
  Neg,
  Affine,  // c0 * a + c1
  MatMul,
  MatMulNT,  // a * b^T
  Tanh,
  Exp,
  Log,
  Square,
  Sqrt,
  Pow,  // a ^ c0
  Sigmoid,
  LogSigmoid,
  Clamp,  // clamp(a, c0, c1)
  Sum,
  RowSum,
  BroadcastRows,  // 1xM -> c0 x M
  BroadcastCols,  // Nx1 -> N x c0
  Column,         // column c0 of a
  HCat,           // [a b]
  LowerTriangular,
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Leaf that receives no adjoint.
  Var constant(Matrix value);
  Var constant(double value);
  /// Differentiable leaf not bound to a Parameter.
  Var variable(Matrix value);
  /// Leaf bound to `p`. The same Parameter maps to the same node within one graph.
  Var parameter(const Parameter& p);

  /// Resets all adjoints and propagates d(root)/d(node) to every node. Root must be 1x1.
  void backward(Var root);

  /// Adjoint of `v` after backward(); zeros if `v` does not influence the root.
  Matrix adjoint(Var v) const;
  /// Adjoint of the leaf bound to `p`; zeros if `p` was never registered.
  Matrix parameter_gradient(const Parameter& p) const;

  std::size_t size() const { return nodes_.size(); }
  const Matrix& value(std::size_t i) const { return nodes_[i].value; }
  bool needs_grad(Var v) const { return nodes_[v.index()].needs_grad; }

  // Low-level node constructor used by the op functions below.
  Var push(Op op, Matrix value, Var a = {}, Var b = {}, double c0 = 0.0, double c1 = 0.0);

 private:
  struct Node {
    Op op;
    std::int64_t a;
    std::int64_t b;
    double c0;
    double c1;
    bool needs_grad;
    Matrix value;
  };

  void accumulate(std::int64_t target, const Matrix& contribution);
  template <typename Expr>
  void accumulate_expr(std::int64_t target, const Expr& contribution);

  std::vector<Node> nodes_;
  std::vector<Matrix> adjoints_;
  std::vector<char> touched_;
  std::unordered_map<const Parameter*, std::size_t> parameter_nodes_;
};

// Elementwise arithmetic (operands must have equal shape).
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var neg(Var a);
/// scale * a + shift, elementwise.
Var affine(Var a, double scale, double shift);

// Linear algebra.
Var matmul(Var a, Var b);
/// a * b^T
Var matmul_nt(Var a, Var b);

// Elementwise nonlinearities.
Var tanh(Var a);
Var exp(Var a);
Var log(Var a);
Var square(Var a);
Var sqrt(Var a);
Var pow(Var a, double exponent);
Var sigmoid(Var a);
/// log(sigmoid(a)), evaluated without overflow.
Var log_sigmoid(Var a);
/// Clamp with zero derivative outside [lo, hi].
Var clamp(Var a, double lo, double hi);

// Reductions and reshaping.
Var sum(Var a);
Var mean(Var a);
Var row_sum(Var a);
Var broadcast_rows(Var row, Index n);
Var broadcast_cols(Var col, Index m);
Var column(Var a, Index j);
Var hcat(Var a, Var b);
/// Packs d(d+1)/2 entries (row-major over the lower triangle) into a dxd lower-triangular matrix.
Var lower_triangular(Var packed, Index d);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator-(Var a) { return neg(a); }
inline Var operator*(double s, Var a) { return affine(a, s, 0.0); }
inline Var operator*(Var a, double s) { return affine(a, s, 0.0); }
inline Var operator+(Var a, double c) { return affine(a, 1.0, c); }
inline Var operator+(double c, Var a) { return affine(a, 1.0, c); }
inline Var operator-(Var a, double c) { return affine(a, 1.0, -c); }
inline Var operator-(double c, Var a) { return affine(a, -1.0, c); }

}  // namespace hamflow::ad
