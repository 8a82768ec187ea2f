#include "hamflow/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "hamflow/errors.hpp"
#include "hamflow/hamiltonian.hpp"

namespace hamflow {

using ad::Graph;
using ad::Matrix;
using ad::Var;

void HmcConfig::validate() const {
  if (!(step_size > 0.0)) throw ConfigError("hmc.step_size must be > 0");
  if (n_leapfrog < 1) throw ConfigError("hmc.n_leapfrog must be >= 1");
  if (n_samples < 0 || n_burnin < 0) throw ConfigError("hmc sample counts must be >= 0");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0)) throw ConfigError("hmc.target_acceptance in (0, 1)");
}

bool metropolis_accept(double delta_h, double uniform_draw) {
  if (std::isnan(delta_h)) return false;
  return uniform_draw < std::exp(-delta_h);
}

namespace {

struct Proposal {
  ad::RowVector q;
  double delta_h;
};

Proposal propose(const EnergyFunction& potential, const EnergyFunction& kinetic, const ad::RowVector& q,
                 const ad::RowVector& p, double step_size, int n_leapfrog) {
  Graph g;
  PhaseState s{g.constant(Matrix(q)), g.constant(Matrix(p))};
  const double h0 = potential.energy(g, s.q).scalar() + kinetic.energy(g, s.p).scalar();
  try {
    for (int n = 0; n < n_leapfrog; ++n) s = leapfrog_step(g, s, potential, kinetic, step_size, n);
  } catch (const IntegrationError&) {
    return Proposal{q, std::numeric_limits<double>::infinity()};
  }
  const double h1 = potential.energy(g, s.q).scalar() + kinetic.energy(g, s.p).scalar();
  const double dh = std::isfinite(h1) ? h1 - h0 : std::numeric_limits<double>::infinity();
  return Proposal{s.q.value(), dh};
}

}  // namespace

HmcResult hmc_sample(const LogTarget& log_target, const HmcConfig& cfg, const ad::RowVector& init) {
  cfg.validate();
  const int d = static_cast<int>(init.size());
  if (d < 1) throw ConfigError("hmc: empty initial state");
  {
    Graph g;
    const double v = log_target(g, g.constant(Matrix(init))).scalar();
    if (!std::isfinite(v)) throw ConfigError("hmc: log target is not finite at the initial state");
  }

  LogDensityEnergy potential(d, log_target);
  QuadraticEnergy kinetic(d, 0.0, false, "hmc.kinetic");  // identity mass matrix

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  HmcResult result;
  result.chain.resize(cfg.n_samples, d);
  double step = cfg.step_size;
  ad::RowVector q = init;
  long accepted_burnin = 0;
  long accepted = 0;

  // Dual averaging on log(step) driven by the Metropolis acceptance probability.
  constexpr double kGamma = 0.05;
  constexpr double kT0 = 10.0;
  constexpr double kKappa = 0.75;
  const double mu = std::log(10.0 * cfg.step_size);
  double h_bar = 0.0;
  double log_step_bar = std::log(cfg.step_size);

  const int total = cfg.n_burnin + cfg.n_samples;
  for (int it = 0; it < total; ++it) {
    ad::RowVector p(d);
    for (int i = 0; i < d; ++i) p(i) = normal(rng);
    const Proposal prop = propose(potential, kinetic, q, p, step, cfg.n_leapfrog);
    const bool accept = metropolis_accept(prop.delta_h, unit(rng));
    if (accept) q = prop.q;

    if (it < cfg.n_burnin) {
      accepted_burnin += accept;
      if (cfg.adapt_step_size) {
        const double m = it + 1.0;
        const double alpha = std::isnan(prop.delta_h) ? 0.0 : std::min(1.0, std::exp(-prop.delta_h));
        h_bar += (cfg.target_acceptance - alpha - h_bar) / (m + kT0);
        const double log_step = mu - std::sqrt(m) / kGamma * h_bar;
        const double w = std::pow(m, -kKappa);
        log_step_bar = w * log_step + (1.0 - w) * log_step_bar;
        step = it + 1 == cfg.n_burnin ? std::exp(log_step_bar) : std::exp(log_step);
      }
      if (it + 1 == cfg.n_burnin && accepted_burnin == 0) {
        throw SamplerError("hmc: no proposal accepted during burn-in; reduce the step size (currently " +
                           std::to_string(step) + ")");
      }
    } else {
      accepted += accept;
      result.chain.row(it - cfg.n_burnin) = q;
    }
  }
  result.step_size = step;
  result.burnin_acceptance_rate = cfg.n_burnin > 0 ? static_cast<double>(accepted_burnin) / cfg.n_burnin : 0.0;
  result.acceptance_rate = cfg.n_samples > 0 ? static_cast<double>(accepted) / cfg.n_samples : 0.0;
  return result;
}

LogTarget cosmology_logit_target(const cosmo::SupernovaLikelihood& likelihood, const Prior& prior) {
  if (prior.dimension() != 2) throw ConfigError("cosmology target expects a 2D prior");
  return [&likelihood, &prior](Graph& g, Var u) {
    Var theta = ad::sigmoid(u);
    Var log_jacobian = ad::row_sum(ad::log_sigmoid(u) + ad::log_sigmoid(-u));
    return prior.log_density(g, theta) + likelihood.log_likelihood(g, theta) + log_jacobian;
  };
}

Matrix sigmoid_rows(const Matrix& u) {
  return u.unaryExpr([](double x) { return 1.0 / (1.0 + std::exp(-x)); });
}

}  // namespace hamflow
