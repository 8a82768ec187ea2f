#pragma once

// Benchmark targets and priors: the equally weighted Gaussian mixture, the soft-uniform
// plateau density, isotropic Gaussians and an unnormalized uniform box.

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "hamflow/autodiff.hpp"

namespace hamflow {

/// Row-batched log-density with a sampler. Values may be unnormalized; see normalized().
class Prior {
 public:
  virtual ~Prior() = default;

  virtual int dimension() const = 0;
  /// N x D -> N x 1.
  virtual ad::Var log_density(ad::Graph& g, ad::Var x) const = 0;
  virtual ad::Matrix sample(std::size_t n, std::mt19937_64& rng) const = 0;
  virtual bool normalized() const = 0;
  virtual std::string describe() const = 0;

  ad::Matrix sample(std::size_t n, std::uint64_t seed) const;
  /// Plain evaluation of log_density for one point.
  double log_density(const ad::RowVector& x) const;
};

/// N(0, sigma^2 I).
class GaussianPrior final : public Prior {
 public:
  GaussianPrior(int dim, double sigma);

  int dimension() const override { return dim_; }
  ad::Var log_density(ad::Graph& g, ad::Var x) const override;
  ad::Matrix sample(std::size_t n, std::mt19937_64& rng) const override;
  bool normalized() const override { return true; }
  std::string describe() const override;
  double sigma() const { return sigma_; }
  using Prior::log_density;
  using Prior::sample;

 private:
  int dim_;
  double sigma_;
};

/// Density proportional to prod_i s(x_i + b) s(b - x_i), s the logistic sigmoid. Unnormalized.
class SoftUniform final : public Prior {
 public:
  /// Half-width of the rejection envelope beyond the plateau edge.
  static constexpr double kEnvelopeMargin = 10.0;

  SoftUniform(int dim, double half_width = 3.0);

  int dimension() const override { return dim_; }
  ad::Var log_density(ad::Graph& g, ad::Var x) const override;
  /// Per-coordinate rejection sampling from U[-b-10, b+10] with envelope constant s(b)^2.
  ad::Matrix sample(std::size_t n, std::mt19937_64& rng) const override;
  bool normalized() const override { return false; }
  std::string describe() const override;
  double half_width() const { return half_width_; }
  using Prior::log_density;
  using Prior::sample;

 private:
  int dim_;
  double half_width_;
};

/// Unnormalized uniform density on [lo, hi]^D: log density 0 inside, -inf outside.
class UniformBox final : public Prior {
 public:
  UniformBox(int dim, double lo, double hi);

  int dimension() const override { return dim_; }
  ad::Var log_density(ad::Graph& g, ad::Var x) const override;
  ad::Matrix sample(std::size_t n, std::mt19937_64& rng) const override;
  bool normalized() const override { return false; }
  std::string describe() const override;
  using Prior::log_density;
  using Prior::sample;

 private:
  int dim_;
  double lo_;
  double hi_;
};

/// Unnormalized soft-uniform log-density of a single point.
double soft_uniform_logpdf_unnorm(const SoftUniform& s, const ad::RowVector& x);

/// Mixture of isotropic Gaussians sharing one standard deviation.
struct GaussianMixture {
  std::vector<ad::RowVector> centers;
  double sigma = 0.5;
  std::vector<double> weights;  ///< empty means equal weights

  /// Centers on the 3x3 grid {-spacing, 0, spacing}^2.
  static GaussianMixture grid3x3(double spacing = 2.0, double sigma = 0.5);

  int dimension() const;
  std::vector<double> normalized_weights() const;
  void validate() const;
  std::size_t nearest_center(const ad::RowVector& x) const;
};

/// log sum_k w_k N(x; c_k, sigma^2 I), evaluated with a max shift.
double mixture_logpdf(const GaussianMixture& m, const ad::RowVector& x);

/// Ancestral sampling. When `components` is non-null it receives the drawn component indices.
ad::Matrix mixture_sample(const GaussianMixture& m, std::size_t n, std::uint64_t seed,
                          std::vector<std::size_t>* components = nullptr);

/// Fraction of rows lying within `radius` of their nearest center, one entry per center.
std::vector<double> mode_fractions(const GaussianMixture& m, const ad::Matrix& samples, double radius);

/// Standard normal draws, N x D.
ad::Matrix standard_normal(std::size_t n, int dim, std::mt19937_64& rng);

}  // namespace hamflow
