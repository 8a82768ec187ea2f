#pragma once
// Numerical checks shared by the unit tests and the acceptance runner.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "hamflow/hamiltonian.hpp"

namespace hamflow::testing {

/// Randomly initialized (D, H, H, 1) energy.
inline std::unique_ptr<NetworkEnergy> random_energy(int dim, int hidden, std::uint64_t seed,
                                                    Activation act = Activation::Tanh) {
  auto e = std::make_unique<NetworkEnergy>(dim, hidden, act);
  std::mt19937_64 rng(seed);
  e->network().initialize(rng);
  return e;
}

/// Random lower-triangular mass factor with entries in [-1, 1] and a positive diagonal.
inline std::unique_ptr<QuadraticEnergy> random_mass(int dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ad::Matrix factor = ad::Matrix::Zero(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c <= r; ++c) factor(r, c) = u(rng);
    factor(r, r) = 0.5 + std::abs(factor(r, r));
  }
  return std::make_unique<QuadraticEnergy>(factor, 1e-4, true);
}

/// One leapfrog step as a plain map on the stacked vector (q, p).
inline Eigen::VectorXd step_map(const EnergyFunction& V, const EnergyFunction& K, double dt,
                                const Eigen::VectorXd& x) {
  const auto d = x.size() / 2;
  ad::Graph g;
  const PhaseState s{g.constant(x.head(d).transpose()), g.constant(x.tail(d).transpose())};
  const PhaseState out = leapfrog_step(g, s, V, K, dt);
  Eigen::VectorXd y(x.size());
  y << out.q.value().transpose(), out.p.value().transpose();
  return y;
}

/// |det J - 1| for the central-difference Jacobian of one leapfrog step.
inline double jacobian_determinant_error(const EnergyFunction& V, const EnergyFunction& K, double dt,
                                         const Eigen::VectorXd& x, double h = 1e-5) {
  const auto n = x.size();
  Eigen::MatrixXd J(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::VectorXd up = x;
    Eigen::VectorXd down = x;
    up(c) += h;
    down(c) -= h;
    J.col(c) = (step_map(V, K, dt, up) - step_map(V, K, dt, down)) / (2 * h);
  }
  return std::abs(J.determinant() - 1.0);
}

/// Max absolute deviation after integrating forward and then in reverse.
inline double reversibility_error(const EnergyFunction& V, const EnergyFunction& K, const LeapfrogConfig& cfg,
                                  const ad::Matrix& q, const ad::Matrix& p) {
  ad::Graph g;
  const PhaseState start{g.constant(q), g.constant(p)};
  const PhaseState fwd = integrate(g, start, V, K, cfg);
  const PhaseState back = integrate(g, fwd, V, K, cfg.reversed());
  return std::max((back.q.value() - q).cwiseAbs().maxCoeff(), (back.p.value() - p).cwiseAbs().maxCoeff());
}

/// Largest |H(q_n, p_n) - H(q_0, p_0)| along a harmonic-oscillator trajectory from (1, 0).
inline double oscillator_energy_error(int steps, double time) {
  const QuadraticEnergy V(1, 0.0, false);
  const QuadraticEnergy K(1, 0.0, false);
  ad::Graph g;
  const PhaseState start{g.constant(ad::Matrix::Constant(1, 1, 1.0)), g.constant(ad::Matrix::Zero(1, 1))};
  std::vector<PhaseState> traj;
  integrate(g, start, V, K, LeapfrogConfig{steps, time}, &traj);
  double worst = 0.0;
  for (const auto& s : traj) {
    const double q = s.q.value()(0, 0);
    const double p = s.p.value()(0, 0);
    worst = std::max(worst, std::abs(0.5 * q * q + 0.5 * p * p - 0.5));
  }
  return worst;
}

}  // namespace hamflow::testing
