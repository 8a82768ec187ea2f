#include "hamflow/encoder.hpp"

#include <cmath>
#include <numbers>

#include "hamflow/errors.hpp"

namespace hamflow {

using ad::Graph;
using ad::Var;

GaussianEncoder::GaussianEncoder(int dim, int hidden, Activation activation)
    : mu_net_({dim, hidden, hidden, dim}, activation, "encoder.mu"),
      sigma_net_({dim, hidden, hidden, dim}, activation, "encoder.sigma") {}

void GaussianEncoder::initialize(std::mt19937_64& rng) {
  mu_net_.initialize(rng);
  sigma_net_.initialize(rng);
}

GaussianEncoder::Moments GaussianEncoder::moments(Graph& g, Var q) const {
  Var mu = mu_net_.forward(g, q);
  Var log_sigma = ad::clamp(sigma_net_.forward(g, q), std::log(kSigmaMin), std::log(kSigmaMax));
  Var sigma = ad::exp(log_sigma);
  if (!mu.value().allFinite() || !sigma.value().allFinite()) {
    throw EncodingError("encoder produced a non-finite mean or standard deviation");
  }
  return Moments{mu, log_sigma, sigma};
}

Var GaussianEncoder::gaussian_log_pdf(const Moments& m, Var p) {
  const double d = static_cast<double>(p.cols());
  const double log_two_pi = std::log(2.0 * std::numbers::pi);
  Var z = ad::mul(p - m.mu, ad::exp(-m.log_sigma));
  Var per_row = ad::row_sum(0.5 * ad::square(z) + m.log_sigma);
  return ad::affine(per_row, -1.0, -0.5 * d * log_two_pi);
}

EncoderOutput GaussianEncoder::encode(Graph& g, Var q, const ad::Matrix& noise) const {
  if (noise.rows() != q.rows() || noise.cols() != q.cols()) {
    throw ConfigError("encode: noise must have the same shape as q");
  }
  Moments m = moments(g, q);
  Var p = m.mu + ad::mul(m.sigma, g.constant(noise));
  return EncoderOutput{p, m.mu, m.sigma, gaussian_log_pdf(m, p)};
}

Var GaussianEncoder::log_density(Graph& g, Var q, Var p) const {
  if (p.rows() != q.rows() || p.cols() != dimension()) throw ConfigError("log_density: shape mismatch");
  return gaussian_log_pdf(moments(g, q), p);
}

std::vector<ad::Parameter*> GaussianEncoder::parameters() {
  auto out = mu_net_.parameters();
  for (auto* p : sigma_net_.parameters()) out.push_back(p);
  return out;
}

std::vector<const ad::Parameter*> GaussianEncoder::parameters() const {
  auto out = mu_net_.parameters();
  for (const auto* p : sigma_net_.parameters()) out.push_back(p);
  return out;
}

}  // namespace hamflow
