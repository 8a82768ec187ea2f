#pragma once
// Shared helpers for the unit tests: finite differences and small random utilities.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "hamflow/autodiff.hpp"

namespace hamflow::testing {

using ad::Graph;
using ad::Matrix;
using ad::Var;

inline constexpr double kFdStep = 1e-5;

/// |a - b| / max(|a|, |b|, floor). The floor keeps near-zero derivatives from dominating.
inline double rel_err(double a, double b, double floor = 1e-3) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Central difference of a scalar function of one matrix entry.
inline double central_difference(const std::function<double(const Matrix&)>& f, Matrix x, ad::Index r, ad::Index c,
                                 double h = kFdStep) {
  const double x0 = x(r, c);
  x(r, c) = x0 + h;
  const double up = f(x);
  x(r, c) = x0 - h;
  const double down = f(x);
  return (up - down) / (2.0 * h);
}

inline Matrix uniform_matrix(ad::Index rows, ad::Index cols, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(rows, cols);
  for (ad::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

inline Matrix standard_normal_like(const Matrix& shape, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Matrix m(shape.rows(), shape.cols());
  for (ad::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

/// Largest relative error between the reverse-mode gradient of `f` at x and central differences.
inline double max_gradient_error(const std::function<Var(Graph&, Var)>& f, const Matrix& x, double floor = 1e-3) {
  Graph g;
  Var xv = g.variable(x);
  Var root = f(g, xv);
  g.backward(root);
  const Matrix grad = g.adjoint(xv);
  const auto value = [&](const Matrix& m) {
    Graph h;
    return f(h, h.constant(m)).scalar();
  };
  double worst = 0.0;
  for (ad::Index r = 0; r < x.rows(); ++r) {
    for (ad::Index c = 0; c < x.cols(); ++c) {
      worst = std::max(worst, rel_err(grad(r, c), central_difference(value, x, r, c), floor));
    }
  }
  return worst;
}

}  // namespace hamflow::testing
