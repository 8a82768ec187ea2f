#pragma once

#include <cstdint>
#include <functional>

#include "hamflow/autodiff.hpp"
#include "hamflow/cosmology.hpp"
#include "hamflow/distributions.hpp"

namespace hamflow {

struct HmcConfig {
  double step_size = 0.05;
  int n_leapfrog = 20;
  int n_samples = 10000;
  int n_burnin = 2000;
  std::uint64_t seed = 0;
  /// Dual-averaging adaptation of the step size toward `target_acceptance` during burn-in. The
  /// averaged step is frozen for the post-burn-in chain.
  bool adapt_step_size = true;
  double target_acceptance = 0.75;

  void validate() const;
};

struct HmcResult {
  ad::Matrix chain;  ///< n_samples x D, post burn-in
  double acceptance_rate = 0.0;  ///< over the post-burn-in chain
  double burnin_acceptance_rate = 0.0;
  double step_size = 0.0;  ///< step size used for the chain
};

/// Maps an N x D node to N x 1 unnormalized log-target values.
using LogTarget = std::function<ad::Var(ad::Graph&, ad::Var)>;

/// Metropolis acceptance: accept when u < exp(-delta_h), u ~ U[0, 1). delta_h = 0 always accepts.
bool metropolis_accept(double delta_h, double uniform_draw);

/// Standard HMC with N(0, I) momentum refresh and K(p) = 1/2 |p|^2. Proposals are built with
/// the same leapfrog_step as the flows. Throws SamplerError if nothing is accepted during a
/// non-empty burn-in.
HmcResult hmc_sample(const LogTarget& log_target, const HmcConfig& cfg, const ad::RowVector& init);

/// Log-posterior of the cosmology model in logit coordinates u, with (omega_m, h) = sigmoid(u):
/// log pi_0(sigmoid(u)) + log l(d | sigmoid(u)) + sum_i log sigmoid'(u_i).
LogTarget cosmology_logit_target(const cosmo::SupernovaLikelihood& likelihood, const Prior& prior);

/// Applies the sigmoid to every entry (chain in logit space -> parameter space).
ad::Matrix sigmoid_rows(const ad::Matrix& u);

}  // namespace hamflow
