#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "hamflow/distributions.hpp"
#include "hamflow/flow.hpp"

namespace hamflow {

/// Generative Neural Hamiltonian Flow.
///
/// Training lifts data q_T to phase space with the encoder, integrates backward in time to
/// (q_0, p_0) and maximizes log pi_0(q_0) + log g_0(p_0) - log f(p_T | q_T). Sampling draws
/// (q_0, p_0) from the base and integrates forward. The flow is volume preserving, so no
/// Jacobian terms appear anywhere.
class GenerativeNHF {
 public:
  /// `base_prior` is pi_0 over positions; the base momentum density g_0 is N(0, I).
  GenerativeNHF(const FlowConfig& cfg, std::unique_ptr<Prior> base_prior, std::uint64_t init_seed);

  /// Negated batch mean of the ELBO. `q_T` and `noise` are N x D.
  /// Throws LossError naming the first sample whose ELBO term is not finite.
  ad::Var elbo_loss(ad::Graph& g, const ad::Matrix& q_T, const ad::Matrix& noise) const;

  struct Samples {
    ad::Matrix positions;
    ad::Matrix momenta;
  };
  /// Push `n` base draws forward through the flow. With `zero_momentum` the base momenta are 0.
  Samples sample(std::size_t n, std::uint64_t seed, bool zero_momentum = false) const;

  /// Encoder momenta p_T for the given positions (diagnostics).
  ad::Matrix encode_momenta(const ad::Matrix& q_T, std::uint64_t seed) const;

  HamiltonianFlow& flow() { return flow_; }
  const HamiltonianFlow& flow() const { return flow_; }
  const Prior& base_prior() const { return *base_prior_; }
  const Prior& base_momentum() const { return base_momentum_; }
  std::vector<ad::Parameter*> parameters() { return flow_.parameters(); }
  int dimension() const { return flow_.config().dim; }

  /// Replaces the leapfrog integration by the identity map. Only meant for degenerate-case tests.
  bool bypass_integration = false;

 private:
  HamiltonianFlow flow_;
  std::unique_ptr<Prior> base_prior_;
  GaussianPrior base_momentum_;
};

struct TrainOptions {
  int epochs = 100;
  int batch_size = 512;
  /// Encoder momentum draws per position in each loss evaluation.
  int momentum_draws = 1;
  AdamOptions adam{};
  std::uint64_t seed = 0;
  /// Called after every epoch; may be empty.
  std::function<void(const TrainRecord&)> on_epoch;
};

/// Stateful minibatch trainer for GenerativeNHF. Holds the optimizer state and the RNG used
/// for shuffling and encoder noise, so a run is a deterministic function of its seed.
class GenerativeTrainer {
 public:
  GenerativeTrainer(GenerativeNHF& model, TrainOptions options);

  /// One shuffled pass over `dataset`. On divergence the parameters are rolled back to the
  /// values before the failing step and DivergenceError is thrown.
  TrainRecord run_epoch(const ad::Matrix& dataset);
  /// Runs the remaining epochs up to options.epochs.
  std::vector<TrainRecord> train(const ad::Matrix& dataset);

  int epochs_done() const { return epoch_; }
  AdamState& adam() { return adam_; }
  std::mt19937_64& rng() { return rng_; }
  const TrainOptions& options() const { return options_; }
  void set_epochs_done(int e) { epoch_ = e; }

 private:
  GenerativeNHF& model_;
  TrainOptions options_;
  std::vector<ad::Parameter*> params_;
  AdamState adam_;
  std::mt19937_64 rng_;
  int epoch_ = 0;
  std::chrono::steady_clock::time_point start_;
};

/// Convenience wrapper: fresh trainer, all epochs.
std::vector<TrainRecord> train(GenerativeNHF& model, const ad::Matrix& dataset, const TrainOptions& options);

}  // namespace hamflow
