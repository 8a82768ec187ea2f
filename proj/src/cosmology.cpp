#include "hamflow/cosmology.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "hamflow/csv.hpp"
#include "hamflow/errors.hpp"

namespace hamflow::cosmo {

using ad::Graph;
using ad::Matrix;
using ad::Var;

namespace {

constexpr double kC1 = -0.1540;
constexpr double kC2 = 0.4304;
constexpr double kC3 = 0.19097;
constexpr double kC4 = 0.066941;

void check_omega(double omega_m) {
  if (!(omega_m > 0.0 && omega_m <= 1.0)) {
    throw DomainError("omega_m must lie in (0, 1], got " + std::to_string(omega_m));
  }
}

}  // namespace

void CosmoParams::validate() const {
  if (!(omega_m > 0.0 && omega_m < 1.0)) throw DomainError("omega_m must lie in (0, 1)");
  if (!(h > 0.0 && h < 1.0)) throw DomainError("h must lie in (0, 1)");
}

void SupernovaDataset::validate() const {
  const auto n = z.size();
  if (n == 0) throw ConfigError("supernova dataset is empty");
  if (mu.size() != n) throw ConfigError("supernova dataset: z and mu differ in length");
  if (covariance.rows() != n || covariance.cols() != n) throw ConfigError("supernova dataset: covariance must be n x n");
  if ((z.array() <= 0.0).any()) throw ConfigError("supernova dataset: all redshifts must be > 0");
  if (!z.allFinite() || !mu.allFinite() || !covariance.allFinite()) {
    throw ConfigError("supernova dataset: non-finite entries");
  }
  if (!covariance.isApprox(covariance.transpose(), 1e-12)) throw ConfigError("supernova dataset: covariance not symmetric");
  Eigen::LLT<Matrix> llt(covariance);
  if (llt.info() != Eigen::Success) throw ConfigError("supernova dataset: covariance not positive definite");
}

double eta(double a, double omega_m) {
  check_omega(omega_m);
  if (!(a > 0.0 && a <= 1.0)) throw DomainError("scale factor must lie in (0, 1]");
  const double s3 = (1.0 - omega_m) / omega_m;
  const double s = std::cbrt(s3);
  const double inv_a = 1.0 / a;
  const double poly = std::pow(inv_a, 4) + kC1 * s * std::pow(inv_a, 3) + kC2 * s * s * inv_a * inv_a +
                      kC3 * s3 * inv_a + kC4 * s3 * s;
  return 2.0 * std::sqrt(s3 + 1.0) * std::pow(poly, -0.125);
}

double luminosity_distance(double z, double omega_m) {
  if (!(z > 0.0)) throw DomainError("redshift must be > 0");
  return kHubbleDistance * (1.0 + z) * (eta(1.0, omega_m) - eta(1.0 / (1.0 + z), omega_m));
}

double distance_modulus(double z, const CosmoParams& params) {
  if (!(params.h > 0.0)) throw DomainError("h must be > 0");
  return 25.0 + 5.0 * std::log10(luminosity_distance(z, params.omega_m) / params.h);
}

Var distance_modulus(Graph& g, Var omega_m, Var h, const ad::Vector& z) {
  if (omega_m.cols() != 1 || h.cols() != 1 || omega_m.rows() != h.rows()) {
    throw ConfigError("distance_modulus: omega_m and h must be matching N x 1 columns");
  }
  if ((z.array() <= 0.0).any()) throw DomainError("redshift must be > 0");
  const ad::Index n = omega_m.rows();
  const ad::Index m = z.size();

  const Matrix inv_a = (1.0 + z.array()).matrix().transpose();
  auto row_const = [&](const Matrix& row) { return ad::broadcast_rows(g.constant(row), n); };
  auto wide = [&](Var col) { return ad::broadcast_cols(col, m); };

  Var s3 = ad::pow(omega_m, -1.0) - 1.0;
  Var s = ad::pow(s3, 1.0 / 3.0);
  Var s2 = ad::square(s);
  Var s4 = ad::square(s2);
  Var prefactor = 2.0 * ad::sqrt(s3 + 1.0);

  // a = 1: every power of 1/a is one.
  Var poly_today = 1.0 + kC1 * s + kC2 * s2 + kC3 * s3 + kC4 * s4;
  Var eta_today = ad::mul(prefactor, ad::pow(poly_today, -0.125));

  Var poly = row_const(inv_a.array().pow(4).matrix()) +
             ad::mul(wide(s), row_const(kC1 * inv_a.array().pow(3).matrix())) +
             ad::mul(wide(s2), row_const(kC2 * inv_a.array().square().matrix())) +
             ad::mul(wide(s3), row_const(kC3 * inv_a)) + wide(kC4 * s4);
  Var eta_then = ad::mul(wide(prefactor), ad::pow(poly, -0.125));

  Var distance = ad::mul(wide(eta_today) - eta_then, row_const(kHubbleDistance * inv_a));
  const double to_mag = 5.0 / std::numbers::ln10;
  return to_mag * (ad::log(distance) - wide(ad::log(h))) + 25.0;
}

// --- likelihood -------------------------------------------------------------

SupernovaLikelihood::SupernovaLikelihood(SupernovaDataset data) : data_(std::move(data)) {
  data_.validate();
  Eigen::LLT<Matrix> llt(data_.covariance);
  const Matrix l = llt.matrixL();
  const auto n = data_.z.size();
  whitening_ = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n)).transpose();
  const double log_det = 2.0 * l.diagonal().array().log().sum();
  log_normalizer_ = -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + log_det);
}

double SupernovaLikelihood::log_likelihood(const CosmoParams& params) const {
  const auto n = data_.z.size();
  Matrix residual(1, n);
  for (ad::Index i = 0; i < n; ++i) residual(0, i) = data_.mu(i) - distance_modulus(data_.z(i), params);
  const Matrix w = residual * whitening_;
  return log_normalizer_ - 0.5 * w.squaredNorm();
}

Var SupernovaLikelihood::log_likelihood(Graph& g, Var params) const {
  if (params.cols() != 2) throw ConfigError("supernova likelihood expects (omega_m, h) columns");
  Var model = distance_modulus(g, ad::column(params, 0), ad::column(params, 1), data_.z);
  Var residual = ad::broadcast_rows(g.constant(data_.mu.transpose()), params.rows()) - model;
  Var white = ad::matmul(residual, g.constant(whitening_));
  return ad::affine(ad::row_sum(ad::square(white)), -0.5, log_normalizer_);
}

double log_likelihood(const SupernovaDataset& data, const CosmoParams& params) {
  return SupernovaLikelihood(data).log_likelihood(params);
}

SupernovaDataset synthesize_dataset(const CosmoParams& truth, const ad::Vector& z, double noise_sigma,
                                    std::uint64_t seed) {
  truth.validate();
  if (!(noise_sigma > 0.0)) throw ConfigError("noise sigma must be > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, noise_sigma);
  SupernovaDataset d;
  d.z = z;
  d.mu.resize(z.size());
  for (ad::Index i = 0; i < z.size(); ++i) d.mu(i) = distance_modulus(z(i), truth) + normal(rng);
  d.covariance = noise_sigma * noise_sigma * Matrix::Identity(z.size(), z.size());
  return d;
}

ad::Vector redshift_grid(std::size_t n, double z_min, double z_max) {
  if (n == 0) throw ConfigError("redshift grid needs at least one point");
  if (!(z_min > 0.0 && z_max >= z_min)) throw ConfigError("redshift grid requires 0 < z_min <= z_max");
  if (n == 1) return ad::Vector::Constant(1, z_min);
  return ad::Vector::LinSpaced(static_cast<ad::Index>(n), z_min, z_max);
}

void write_dataset_csv(const SupernovaDataset& data, const std::string& path) {
  Matrix table(data.z.size(), 2);
  table.col(0) = data.z;
  table.col(1) = data.mu;
  csv::write(path, {"z", "mu"}, table);
}

SupernovaDataset read_dataset_csv(const std::string& path, const std::string& covariance_path, double sigma) {
  const csv::Table t = csv::read(path);
  if (t.header.size() < 2 || t.header[0] != "z" || t.header[1] != "mu") {
    throw ConfigError(path + ": expected header 'z,mu'");
  }
  SupernovaDataset d;
  d.z = t.values.col(0);
  d.mu = t.values.col(1);
  if (!covariance_path.empty()) {
    d.covariance = csv::read(covariance_path, false).values;
  } else {
    if (!(sigma > 0.0)) throw ConfigError("a positive sigma is required when no covariance file is given");
    d.covariance = sigma * sigma * Matrix::Identity(d.z.size(), d.z.size());
  }
  d.validate();
  return d;
}

}  // namespace hamflow::cosmo
