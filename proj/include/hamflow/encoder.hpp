#pragma once

#include <random>

#include "hamflow/autodiff.hpp"
#include "hamflow/network.hpp"

namespace hamflow {

/// Momentum drawn by the encoder together with the Gaussian it came from.
struct EncoderOutput {
  ad::Var p;            ///< N x D
  ad::Var mu;           ///< N x D
  ad::Var sigma;        ///< N x D
  ad::Var log_density;  ///< N x 1, log f(p | q)
};

/// Position-conditioned diagonal Gaussian over momenta: f(p | q) = N(mu(q), diag sigma(q)^2).
///
/// mu and sigma come from separate (D, H, H, D) networks. sigma = exp(clamp(raw, log 1e-6, log 1e6)),
/// so it is strictly positive and finite for any parameter values.
class GaussianEncoder {
 public:
  static constexpr double kSigmaMin = 1e-6;
  static constexpr double kSigmaMax = 1e6;

  GaussianEncoder() = default;
  GaussianEncoder(int dim, int hidden, Activation activation = Activation::Tanh);

  void initialize(std::mt19937_64& rng);

  /// Reparameterized draw p = mu(q) + sigma(q) * noise. `noise` is N x D standard normal.
  EncoderOutput encode(ad::Graph& g, ad::Var q, const ad::Matrix& noise) const;
  /// log f(p | q), one row per sample.
  ad::Var log_density(ad::Graph& g, ad::Var q, ad::Var p) const;

  int dimension() const { return mu_net_.input_size(); }
  DenseNetwork& mu_network() { return mu_net_; }
  DenseNetwork& sigma_network() { return sigma_net_; }
  const DenseNetwork& mu_network() const { return mu_net_; }
  const DenseNetwork& sigma_network() const { return sigma_net_; }

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;

 private:
  struct Moments {
    ad::Var mu;
    ad::Var log_sigma;
    ad::Var sigma;
  };
  Moments moments(ad::Graph& g, ad::Var q) const;
  static ad::Var gaussian_log_pdf(const Moments& m, ad::Var p);

  DenseNetwork mu_net_;
  DenseNetwork sigma_net_;
};

}  // namespace hamflow
