#include "hamflow/autodiff.hpp"

#include <cmath>
#include <sstream>

#include "hamflow/errors.hpp"

namespace hamflow::ad {

namespace {

std::string shape(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

Graph& graph_of(Var a) {
  if (!a.valid()) throw UsageError("operation on an unbound Var");
  return *a.graph();
}

Graph& graph_of(Var a, Var b) {
  Graph& g = graph_of(a);
  if (b.graph() != &g) throw UsageError("operands belong to different graphs");
  return g;
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError(std::string(op) + ": shape mismatch " + shape(a.value()) + " vs " +
                      shape(b.value()));
  }
}

// Elementwise kernels written as array expressions so exp vectorizes. exp(-|x|) never overflows.
Matrix stable_sigmoid(const Matrix& x) {
  const Eigen::ArrayXXd e = (-x.array().abs()).exp();
  const Eigen::ArrayXXd r = 1.0 / (1.0 + e);
  return (x.array() >= 0.0).select(r, e * r).matrix();
}

Matrix stable_log_sigmoid(const Matrix& x) {
  const Eigen::ArrayXXd e = (-x.array().abs()).exp();
  // log1p(e) as log(u) * e / (u - 1), exact to a few ulps and vectorizable.
  const Eigen::ArrayXXd u = 1.0 + e;
  const Eigen::ArrayXXd d = u - 1.0;
  const Eigen::ArrayXXd l1p = (d == 0.0).select(e, u.log() * (e / d));
  return (-((-x.array()).max(0.0) + l1p)).matrix();
}

}  // namespace

const Matrix& Var::value() const {
  if (!valid()) throw UsageError("value of an unbound Var");
  return graph_->value(index_);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw UsageError("scalar() on a " + shape(v) + " node");
  return v(0, 0);
}

Var Graph::push(Op op, Matrix value, Var a, Var b, double c0, double c1) {
  bool needs = (op == Op::Leaf);
  if (a.valid()) needs = needs || nodes_[a.index()].needs_grad;
  if (b.valid()) needs = needs || nodes_[b.index()].needs_grad;
  nodes_.push_back(Node{op,
                        a.valid() ? static_cast<std::int64_t>(a.index()) : -1,
                        b.valid() ? static_cast<std::int64_t>(b.index()) : -1,
                        c0,
                        c1,
                        needs,
                        std::move(value)});
  return Var(this, nodes_.size() - 1);
}

Var Graph::constant(Matrix value) { return push(Op::Constant, std::move(value)); }

Var Graph::constant(double value) { return push(Op::Constant, Matrix::Constant(1, 1, value)); }

Var Graph::variable(Matrix value) { return push(Op::Leaf, std::move(value)); }

Var Graph::parameter(const Parameter& p) {
  auto it = parameter_nodes_.find(&p);
  if (it != parameter_nodes_.end()) return Var(this, it->second);
  Var v = push(Op::Leaf, p.value);
  parameter_nodes_.emplace(&p, v.index());
  return v;
}

void Graph::accumulate(std::int64_t target, const Matrix& contribution) {
  if (target < 0 || !nodes_[target].needs_grad) return;
  if (!touched_[target]) {
    adjoints_[target] = contribution;
    touched_[target] = 1;
  } else {
    adjoints_[target] += contribution;
  }
}

template <typename Expr>
void Graph::accumulate_expr(std::int64_t target, const Expr& contribution) {
  if (target < 0 || !nodes_[target].needs_grad) return;
  if (!touched_[target]) {
    adjoints_[target] = contribution;
    touched_[target] = 1;
  } else {
    adjoints_[target] += contribution;
  }
}

void Graph::backward(Var root) {
  if (root.graph() != this) throw UsageError("backward: root is not a node of this graph");
  if (root.rows() != 1 || root.cols() != 1) {
    throw UsageError("backward: root must be scalar, got " + shape(root.value()));
  }
  adjoints_.assign(nodes_.size(), Matrix());
  touched_.assign(nodes_.size(), 0);
  adjoints_[root.index()] = Matrix::Ones(1, 1);
  touched_[root.index()] = 1;

  for (std::int64_t i = static_cast<std::int64_t>(root.index()); i >= 0; --i) {
    if (!touched_[i]) continue;
    const Node& n = nodes_[i];
    if (!n.needs_grad) continue;
    const Matrix& g = adjoints_[i];
    const Matrix* av = n.a >= 0 ? &nodes_[n.a].value : nullptr;
    const Matrix* bv = n.b >= 0 ? &nodes_[n.b].value : nullptr;
    switch (n.op) {
      case Op::Leaf:
      case Op::Constant:
        break;
      case Op::Add:
        accumulate(n.a, g);
        accumulate(n.b, g);
        break;
      case Op::Sub:
        accumulate(n.a, g);
        accumulate_expr(n.b, -g);
        break;
      case Op::Mul:
        accumulate_expr(n.a, (g.array() * bv->array()).matrix());
        accumulate_expr(n.b, (g.array() * av->array()).matrix());
        break;
      case Op::Neg:
        accumulate_expr(n.a, -g);
        break;
      case Op::Affine:
        accumulate_expr(n.a, n.c0 * g);
        break;
      case Op::MatMul:
        accumulate_expr(n.a, g * bv->transpose());
        accumulate_expr(n.b, av->transpose() * g);
        break;
      case Op::MatMulNT:
        accumulate_expr(n.a, g * (*bv));
        accumulate_expr(n.b, g.transpose() * (*av));
        break;
      case Op::Tanh:
        accumulate_expr(n.a, (g.array() * (1.0 - n.value.array().square())).matrix());
        break;
      case Op::Exp:
        accumulate_expr(n.a, (g.array() * n.value.array()).matrix());
        break;
      case Op::Log:
        accumulate_expr(n.a, (g.array() / av->array()).matrix());
        break;
      case Op::Square:
        accumulate_expr(n.a, (2.0 * g.array() * av->array()).matrix());
        break;
      case Op::Sqrt:
        accumulate_expr(n.a, (g.array() / (2.0 * n.value.array())).matrix());
        break;
      case Op::Pow:
        accumulate_expr(n.a, (g.array() * n.c0 * av->array().pow(n.c0 - 1.0)).matrix());
        break;
      case Op::Sigmoid:
        accumulate_expr(n.a, (g.array() * n.value.array() * (1.0 - n.value.array())).matrix());
        break;
      case Op::LogSigmoid:
        accumulate_expr(n.a,
                        (g.array() * stable_sigmoid(-*av).array())
                            .matrix());
        break;
      case Op::Clamp: {
        const double lo = n.c0;
        const double hi = n.c1;
        accumulate_expr(
            n.a, g.binaryExpr(*av, [lo, hi](double gi, double x) { return (x >= lo && x <= hi) ? gi : 0.0; }));
        break;
      }
      case Op::Sum:
        accumulate_expr(n.a, Matrix::Constant(av->rows(), av->cols(), g(0, 0)));
        break;
      case Op::RowSum:
        accumulate_expr(n.a, g.replicate(1, av->cols()));
        break;
      case Op::BroadcastRows:
        accumulate_expr(n.a, g.colwise().sum());
        break;
      case Op::BroadcastCols:
        accumulate_expr(n.a, g.rowwise().sum());
        break;
      case Op::Column: {
        Matrix full = Matrix::Zero(av->rows(), av->cols());
        full.col(static_cast<Index>(n.c0)) = g;
        accumulate(n.a, full);
        break;
      }
      case Op::HCat:
        accumulate_expr(n.a, g.leftCols(av->cols()));
        accumulate_expr(n.b, g.rightCols(bv->cols()));
        break;
      case Op::LowerTriangular: {
        const Index d = static_cast<Index>(n.c0);
        Matrix packed(1, av->cols());
        Index k = 0;
        for (Index r = 0; r < d; ++r) {
          for (Index c = 0; c <= r; ++c) packed(0, k++) = g(r, c);
        }
        accumulate(n.a, packed);
        break;
      }
    }
  }
}

Matrix Graph::adjoint(Var v) const {
  if (v.graph() != this) throw UsageError("adjoint: Var is not a node of this graph");
  const std::size_t i = v.index();
  if (i < touched_.size() && touched_[i]) return adjoints_[i];
  return Matrix::Zero(nodes_[i].value.rows(), nodes_[i].value.cols());
}

Matrix Graph::parameter_gradient(const Parameter& p) const {
  auto it = parameter_nodes_.find(&p);
  if (it == parameter_nodes_.end()) return Matrix::Zero(p.value.rows(), p.value.cols());
  return adjoint(Var(const_cast<Graph*>(this), it->second));
}

// ---------------------------------------------------------------------------

Var add(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape("add", a, b);
  return g.push(Op::Add, a.value() + b.value(), a, b);
}

Var sub(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape("sub", a, b);
  return g.push(Op::Sub, a.value() - b.value(), a, b);
}

Var mul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  require_same_shape("mul", a, b);
  return g.push(Op::Mul, (a.value().array() * b.value().array()).matrix(), a, b);
}

Var neg(Var a) { return graph_of(a).push(Op::Neg, -a.value(), a); }

Var affine(Var a, double scale, double shift) {
  return graph_of(a).push(Op::Affine, ((scale * a.value().array()) + shift).matrix(), a, {}, scale, shift);
}

Var matmul(Var a, Var b) {
  Graph& g = graph_of(a, b);
  if (a.cols() != b.rows()) {
    throw ConfigError("matmul: inner dimensions differ " + shape(a.value()) + " * " + shape(b.value()));
  }
  return g.push(Op::MatMul, a.value() * b.value(), a, b);
}

Var matmul_nt(Var a, Var b) {
  Graph& g = graph_of(a, b);
  if (a.cols() != b.cols()) {
    throw ConfigError("matmul_nt: inner dimensions differ " + shape(a.value()) + " * " +
                      shape(b.value()) + "^T");
  }
  return g.push(Op::MatMulNT, a.value() * b.value().transpose(), a, b);
}

Var tanh(Var a) { return graph_of(a).push(Op::Tanh, a.value().array().tanh().matrix(), a); }

Var exp(Var a) { return graph_of(a).push(Op::Exp, a.value().array().exp().matrix(), a); }

Var log(Var a) { return graph_of(a).push(Op::Log, a.value().array().log().matrix(), a); }

Var square(Var a) { return graph_of(a).push(Op::Square, a.value().array().square().matrix(), a); }

Var sqrt(Var a) { return graph_of(a).push(Op::Sqrt, a.value().array().sqrt().matrix(), a); }

Var pow(Var a, double exponent) {
  return graph_of(a).push(Op::Pow, a.value().array().pow(exponent).matrix(), a, {}, exponent);
}

Var sigmoid(Var a) {
  return graph_of(a).push(Op::Sigmoid, stable_sigmoid(a.value()), a);
}

Var log_sigmoid(Var a) {
  return graph_of(a).push(Op::LogSigmoid, stable_log_sigmoid(a.value()),
                          a);
}

Var clamp(Var a, double lo, double hi) {
  if (!(lo <= hi)) throw ConfigError("clamp: lo > hi");
  return graph_of(a).push(Op::Clamp, a.value().cwiseMax(lo).cwiseMin(hi), a, {}, lo, hi);
}

Var sum(Var a) { return graph_of(a).push(Op::Sum, Matrix::Constant(1, 1, a.value().sum()), a); }

Var mean(Var a) { return affine(sum(a), 1.0 / static_cast<double>(a.value().size()), 0.0); }

Var row_sum(Var a) { return graph_of(a).push(Op::RowSum, a.value().rowwise().sum(), a); }

Var broadcast_rows(Var row, Index n) {
  if (row.rows() != 1) throw ConfigError("broadcast_rows: expected a row, got " + shape(row.value()));
  return graph_of(row).push(Op::BroadcastRows, row.value().replicate(n, 1), row, {}, static_cast<double>(n));
}

Var broadcast_cols(Var col, Index m) {
  if (col.cols() != 1) throw ConfigError("broadcast_cols: expected a column, got " + shape(col.value()));
  return graph_of(col).push(Op::BroadcastCols, col.value().replicate(1, m), col, {}, static_cast<double>(m));
}

Var column(Var a, Index j) {
  if (j < 0 || j >= a.cols()) throw ConfigError("column: index out of range");
  return graph_of(a).push(Op::Column, a.value().col(j), a, {}, static_cast<double>(j));
}

Var hcat(Var a, Var b) {
  Graph& g = graph_of(a, b);
  if (a.rows() != b.rows()) throw ConfigError("hcat: row counts differ");
  Matrix out(a.rows(), a.cols() + b.cols());
  out << a.value(), b.value();
  return g.push(Op::HCat, std::move(out), a, b);
}

Var lower_triangular(Var packed, Index d) {
  if (packed.rows() != 1 || packed.cols() != d * (d + 1) / 2) {
    throw ConfigError("lower_triangular: expected 1x" + std::to_string(d * (d + 1) / 2) + " packed entries");
  }
  Matrix out = Matrix::Zero(d, d);
  Index k = 0;
  for (Index r = 0; r < d; ++r) {
    for (Index c = 0; c <= r; ++c) out(r, c) = packed.value()(0, k++);
  }
  return graph_of(packed).push(Op::LowerTriangular, std::move(out), packed, {}, static_cast<double>(d));
}

}  // namespace hamflow::ad
