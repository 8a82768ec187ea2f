#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "hamflow/cosmology.hpp"
#include "hamflow/distributions.hpp"
#include "hamflow/flow.hpp"

namespace hamflow {

/// Row-batched log-likelihood log l(d | theta) for fixed data d.
class Likelihood {
 public:
  virtual ~Likelihood() = default;
  virtual int dimension() const = 0;
  /// N x D -> N x 1.
  virtual ad::Var log_likelihood(ad::Graph& g, ad::Var theta) const = 0;
};

/// d ~ N(theta, covariance): the parameters are observed directly with Gaussian noise.
class GaussianLikelihood final : public Likelihood {
 public:
  GaussianLikelihood(ad::RowVector observed, ad::Matrix covariance);
  int dimension() const override { return static_cast<int>(observed_.size()); }
  ad::Var log_likelihood(ad::Graph& g, ad::Var theta) const override;

 private:
  ad::RowVector observed_;
  ad::Matrix whitening_;
  double log_normalizer_;
};

/// Adapter exposing the supernova likelihood over (omega_m, h).
class CosmologyLikelihood final : public Likelihood {
 public:
  explicit CosmologyLikelihood(cosmo::SupernovaDataset data) : inner_(std::move(data)) {}
  int dimension() const override { return 2; }
  ad::Var log_likelihood(ad::Graph& g, ad::Var theta) const override { return inner_.log_likelihood(g, theta); }
  const cosmo::SupernovaLikelihood& model() const { return inner_; }

 private:
  cosmo::SupernovaLikelihood inner_;
};

/// Elementwise map from flow positions to model parameters.
enum class ConstraintMap { None, Sigmoid };
ConstraintMap constraint_from_string(const std::string& name);
std::string to_string(ConstraintMap c);

enum class BayesObjective { KL, ELBO };
BayesObjective objective_from_string(const std::string& name);
std::string to_string(BayesObjective o);

/// Batch means of the terms of the KL integrand.
/// total = log_f0 - log_prior_at_qT - log_like_at_qT - log_g_at_pT. The log pi_0(q_0) term
/// does not depend on the flow parameters and is reported separately, outside `total`.
struct KLLossParts {
  double log_f0 = 0.0;
  double log_prior_at_qT = 0.0;
  double log_like_at_qT = 0.0;
  double log_g_at_pT = 0.0;
  double total = 0.0;
  double log_prior_at_q0 = 0.0;
};

/// Neural Hamiltonian Flow trained to push the prior forward into the posterior.
///
/// q_0 ~ pi_0, p_0 = mu(q_0) + sigma(q_0) eps, (q_T, p_T) = forward flow, theta = c(q_T) with c
/// the constraint map. The prior and likelihood are evaluated at theta; no log-Jacobian of c is
/// added, so the flow targets the pushed-forward variable theta directly.
class BayesNHF {
 public:
  BayesNHF(const FlowConfig& cfg, std::unique_ptr<Prior> prior, std::unique_ptr<Likelihood> likelihood,
           std::unique_ptr<Prior> momentum_target, ConstraintMap constraint, std::uint64_t init_seed);

  /// KL objective (batch mean, minimized). `parts` optionally receives the term breakdown.
  ad::Var kl_loss(ad::Graph& g, const ad::Matrix& q0, const ad::Matrix& noise, KLLossParts* parts = nullptr) const;
  /// Negated batch mean of ln pi_0(theta) + ln l(d | theta) + ln g(p_T) - ln f(p_0 | q_0).
  ad::Var inference_elbo_loss(ad::Graph& g, const ad::Matrix& q0, const ad::Matrix& noise) const;
  ad::Var loss(ad::Graph& g, BayesObjective objective, const ad::Matrix& q0, const ad::Matrix& noise) const;

  /// Draws q_0 ~ pi_0, encodes, flows forward and applies the constraint map.
  ad::Matrix posterior_sample(std::size_t n, std::uint64_t seed, bool zero_momentum = false) const;

  HamiltonianFlow& flow() { return flow_; }
  const HamiltonianFlow& flow() const { return flow_; }
  const Prior& prior() const { return *prior_; }
  const Likelihood& likelihood() const { return *likelihood_; }
  const Prior& momentum_target() const { return *momentum_target_; }
  ConstraintMap constraint() const { return constraint_; }
  std::vector<ad::Parameter*> parameters() { return flow_.parameters(); }
  int dimension() const { return flow_.config().dim; }

  /// Replaces the leapfrog integration by the identity map. Only meant for degenerate-case tests.
  bool bypass_integration = false;

 private:
  struct Pushforward {
    ad::Var theta;
    ad::Var p_T;
    ad::Var log_f0;
  };
  Pushforward push_forward(ad::Graph& g, ad::Var q0, const ad::Matrix& noise) const;
  ad::Var apply_constraint(ad::Var q) const;

  HamiltonianFlow flow_;
  std::unique_ptr<Prior> prior_;
  std::unique_ptr<Likelihood> likelihood_;
  std::unique_ptr<Prior> momentum_target_;
  ConstraintMap constraint_;
};

struct BayesTrainOptions {
  int epochs = 1000;
  int batch_size = 256;  ///< fresh prior draws per epoch
  AdamOptions adam{};
  BayesObjective objective = BayesObjective::KL;
  std::uint64_t seed = 0;
  std::function<void(const TrainRecord&)> on_epoch;
};

/// One optimizer step per epoch on a fresh batch of prior draws.
class BayesTrainer {
 public:
  BayesTrainer(BayesNHF& model, BayesTrainOptions options);

  TrainRecord run_epoch();
  std::vector<TrainRecord> train();

  int epochs_done() const { return epoch_; }
  AdamState& adam() { return adam_; }
  std::mt19937_64& rng() { return rng_; }
  void set_epochs_done(int e) { epoch_ = e; }

 private:
  BayesNHF& model_;
  BayesTrainOptions options_;
  std::vector<ad::Parameter*> params_;
  AdamState adam_;
  std::mt19937_64 rng_;
  int epoch_ = 0;
  std::chrono::steady_clock::time_point start_;
};

std::vector<TrainRecord> train_bayes(BayesNHF& model, const BayesTrainOptions& options);

}  // namespace hamflow
