#pragma once

// Type Ia supernova forward model for a flat universe.
//
// The comoving-distance integral is replaced by the closed-form fitting function
//   eta(a, Om) = 2 sqrt(s^3 + 1) [a^-4 - 0.1540 s a^-3 + 0.4304 s^2 a^-2
//                                 + 0.19097 s^3 a^-1 + 0.066941 s^4]^(-1/8),
//   s^3 = (1 - Om) / Om,
// giving D_L*(z, Om) = c (1 + z) / H0 [eta(1, Om) - eta(1 / (1 + z), Om)] in Mpc with
// H0 = 100 km/s/Mpc, and mu = 25 + 5 log10(D_L* / h).

#include <cstdint>
#include <string>

#include "hamflow/autodiff.hpp"

namespace hamflow::cosmo {

inline constexpr double kSpeedOfLight = 299792.458;  // km/s
inline constexpr double kHubbleReference = 100.0;    // km/s/Mpc
inline constexpr double kHubbleDistance = kSpeedOfLight / kHubbleReference;  // Mpc

struct CosmoParams {
  double omega_m = 0.3;
  double h = 0.7;

  /// Both parameters must lie strictly inside (0, 1).
  void validate() const;
};

struct SupernovaDataset {
  ad::Vector z;
  ad::Vector mu;
  ad::Matrix covariance;

  std::size_t size() const { return static_cast<std::size_t>(z.size()); }
  /// Checks sizes, z > 0, symmetry and positive definiteness of the covariance.
  void validate() const;
};

/// Fitting function eta(a, Om), a in (0, 1], Om in (0, 1].
double eta(double a, double omega_m);
/// D_L*(z, Om) in Mpc (the h-independent luminosity distance).
double luminosity_distance(double z, double omega_m);
double distance_modulus(double z, const CosmoParams& params);

/// Batched, differentiable distance moduli: omega_m and h are N x 1, result is N x z.size().
ad::Var distance_modulus(ad::Graph& g, ad::Var omega_m, ad::Var h, const ad::Vector& z);

/// Multivariate Gaussian log-likelihood of the observed moduli, constants included.
class SupernovaLikelihood {
 public:
  explicit SupernovaLikelihood(SupernovaDataset data);

  const SupernovaDataset& data() const { return data_; }
  double log_likelihood(const CosmoParams& params) const;
  /// `params` is N x 2 with columns (omega_m, h); result N x 1.
  ad::Var log_likelihood(ad::Graph& g, ad::Var params) const;

 private:
  SupernovaDataset data_;
  ad::Matrix whitening_;  // L^{-T} for covariance = L L^T
  double log_normalizer_ = 0.0;
};

double log_likelihood(const SupernovaDataset& data, const CosmoParams& params);

/// mu_i = distance_modulus(z_i, truth) + N(0, noise_sigma^2); covariance noise_sigma^2 I.
SupernovaDataset synthesize_dataset(const CosmoParams& truth, const ad::Vector& z, double noise_sigma,
                                    std::uint64_t seed);

/// `n` redshifts evenly spaced on [z_min, z_max].
ad::Vector redshift_grid(std::size_t n, double z_min, double z_max);

/// CSV with header "z,mu", values written with 17 significant digits.
void write_dataset_csv(const SupernovaDataset& data, const std::string& path);
/// Reads a z,mu CSV. Covariance comes from `covariance_path` (dense CSV) when non-empty,
/// otherwise sigma^2 I.
SupernovaDataset read_dataset_csv(const std::string& path, const std::string& covariance_path, double sigma);

}  // namespace hamflow::cosmo
