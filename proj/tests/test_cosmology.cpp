#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "hamflow/cosmology.hpp"
#include "hamflow/errors.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace hamflow;
using namespace hamflow::cosmo;
using namespace hamflow::testing;

namespace {

double eds_distance(double z) { return 2 * kHubbleDistance * (1 + z) * (1 - 1 / std::sqrt(1 + z)); }

SupernovaDataset small_dataset(const ad::Vector& var) {
  SupernovaDataset d;
  d.z = ad::Vector::LinSpaced(var.size(), 0.1, 1.2);
  d.mu = ad::Vector(var.size());
  for (ad::Index i = 0; i < var.size(); ++i) d.mu(i) = distance_modulus(d.z(i), {0.3, 0.7}) + 0.1 * (i % 3 - 1.0);
  d.covariance = var.asDiagonal();
  return d;
}

}  // namespace

TEST_CASE("eta") {
  CHECK(eta(1.0, 1.0) == doctest::Approx(2.0).epsilon(1e-15));
  for (const double a : {0.1, 0.25, 0.5, 0.9}) CHECK(std::abs(eta(a, 1.0) - 2 * std::sqrt(a)) < 1e-14);
  CHECK(eta(1.0, 1.0) - eta(0.25, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(eta(0.5, 0.0), DomainError);
  CHECK_THROWS_AS(eta(0.0, 0.3), DomainError);
  CHECK_THROWS_AS(eta(1.5, 0.3), DomainError);
}

TEST_CASE("Einstein-de Sitter closed form") {
  CHECK(luminosity_distance(3.0, 1.0) == doctest::Approx(4 * kHubbleDistance).epsilon(1e-14));
  CHECK(luminosity_distance(3.0, 1.0) == doctest::Approx(11991.7).epsilon(1e-5));
  double worst = 0.0;
  for (double z = 0.01; z <= 2.0; z += 0.01) {
    worst = std::max(worst, std::abs(luminosity_distance(z, 1.0) - eds_distance(z)) / eds_distance(z));
  }
  CHECK(worst < 1e-10);
  CHECK(distance_modulus(3.0, {1.0, 1.0}) == doctest::Approx(25 + 5 * std::log10(4 * kHubbleDistance)).epsilon(1e-14));
  CHECK(distance_modulus(3.0, {1.0, 1.0}) == doctest::Approx(45.394).epsilon(1e-5));
}

TEST_CASE("distance modulus against the quadrature oracle") {
  const double oracle = distance_modulus_quadrature(0.5, 0.3, 0.7);
  CHECK(oracle == doctest::Approx(42.26).epsilon(2e-4));
  CHECK(distance_modulus(0.5, {0.3, 0.7}) == doctest::Approx(42.26).epsilon(2e-4));
  // The fitting function is accurate to 0.4% in distance inside its validity range.
  CHECK(max_distance_error(50, 0.01, 2.0, 0.2, 1.0) < 4e-3);
}

TEST_CASE("distance modulus domain and monotonicity") {
  CHECK_THROWS_AS(distance_modulus(0.0, {0.3, 0.7}), DomainError);
  CHECK_THROWS_AS(distance_modulus(-0.1, {0.3, 0.7}), DomainError);
  CHECK_THROWS_AS(distance_modulus(0.5, {0.0, 0.7}), DomainError);
  CHECK_THROWS_AS(distance_modulus(0.5, {0.3, 0.0}), DomainError);
  CHECK_THROWS_AS(CosmoParams({0.3, 1.0}).validate(), DomainError);
  CHECK(distance_modulus(1e-8, {0.3, 0.7}) < distance_modulus(1e-4, {0.3, 0.7}));
  for (const double om : {0.1, 0.3, 0.6, 0.99}) {
    double prev = -INFINITY;
    for (int i = 0; i < 200; ++i) {
      const double z = 0.01 + (2.0 - 0.01) * i / 199;
      const double mu = distance_modulus(z, {om, 0.7});
      CHECK(mu > prev);
      prev = mu;
    }
  }
}

TEST_CASE("graph distance modulus matches scalar values and finite differences") {
  const ad::Vector z = ad::Vector::LinSpaced(7, 0.05, 1.9);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix om = uniform_matrix(1, 1, 0.1, 0.95, rng);
    const Matrix h = uniform_matrix(1, 1, 0.3, 0.95, rng);
    Graph g;
    Var omv = g.variable(om);
    Var hv = g.variable(h);
    Var mu = distance_modulus(g, omv, hv, z);
    for (ad::Index j = 0; j < z.size(); ++j) {
      CHECK(std::abs(mu.value()(0, j) - distance_modulus(z(j), {om(0, 0), h(0, 0)})) < 1e-12);
    }
    for (ad::Index j = 0; j < z.size(); ++j) {
      Graph gj;
      Var o = gj.variable(om);
      Var hh = gj.variable(h);
      gj.backward(ad::column(distance_modulus(gj, o, hh, z), j));
      const auto f_om = [&](const Matrix& m) { return distance_modulus(z(j), {m(0, 0), h(0, 0)}); };
      const auto f_h = [&](const Matrix& m) { return distance_modulus(z(j), {om(0, 0), m(0, 0)}); };
      CHECK(rel_err(gj.adjoint(o)(0, 0), central_difference(f_om, om, 0, 0), 1e-8) < 1e-5);
      CHECK(rel_err(gj.adjoint(hh)(0, 0), central_difference(f_h, h, 0, 0), 1e-8) < 1e-5);
    }
  }
}

TEST_CASE("likelihood identities") {
  SUBCASE("zero residuals with identity covariance") {
    SupernovaDataset d = synthesize_dataset({0.3, 0.7}, redshift_grid(20, 0.05, 1.0), 1e-12, 3);
    d.covariance = Matrix::Identity(20, 20);
    const double ll = log_likelihood(d, {0.3, 0.7});
    CHECK(ll == doctest::Approx(-10 * std::log(2 * std::numbers::pi)).epsilon(1e-9));
    d.covariance *= 2.0;
    CHECK(log_likelihood(d, {0.3, 0.7}) == doctest::Approx(ll - 10 * std::log(2.0)).epsilon(1e-9));
  }
  SUBCASE("diagonal covariance equals the sum of 1D Gaussian log densities") {
    std::mt19937_64 rng(4);
    const ad::Vector var = uniform_matrix(12, 1, 0.01, 0.2, rng);
    const SupernovaDataset d = small_dataset(var);
    const CosmoParams p{0.35, 0.68};
    double sum = 0.0;
    for (ad::Index i = 0; i < var.size(); ++i) {
      const double r = d.mu(i) - distance_modulus(d.z(i), p);
      sum += -0.5 * std::log(2 * std::numbers::pi * var(i)) - r * r / (2 * var(i));
    }
    CHECK(std::abs(log_likelihood(d, p) - sum) < 1e-10);
  }
  SUBCASE("graph likelihood agrees with the scalar one and differentiates correctly") {
    const SupernovaLikelihood like(synthesize_dataset({0.3, 0.7}, redshift_grid(30, 0.02, 1.4), 0.15, 5));
    std::mt19937_64 rng(6);
    Matrix theta(4, 2);
    theta.col(0) = uniform_matrix(4, 1, 0.15, 0.8, rng);
    theta.col(1) = uniform_matrix(4, 1, 0.5, 0.9, rng);
    Graph g;
    const Matrix ll = like.log_likelihood(g, g.constant(theta)).value();
    for (ad::Index i = 0; i < 4; ++i) {
      CHECK(ll(i, 0) == doctest::Approx(like.log_likelihood({theta(i, 0), theta(i, 1)})).epsilon(1e-12));
    }
    CHECK(max_gradient_error([&](Graph& h, Var t) { return ad::sum(like.log_likelihood(h, t)); }, theta) < 1e-5);
  }
  SUBCASE("non-SPD covariance is a configuration error") {
    SupernovaDataset d = synthesize_dataset({0.3, 0.7}, redshift_grid(3, 0.1, 1.0), 0.1, 1);
    d.covariance(0, 0) = -1.0;
    CHECK_THROWS_AS(SupernovaLikelihood{d}, ConfigError);
    d = synthesize_dataset({0.3, 0.7}, redshift_grid(3, 0.1, 1.0), 0.1, 1);
    d.covariance(0, 1) = 0.001;
    CHECK_THROWS_AS(d.validate(), ConfigError);
  }
}

TEST_CASE("synthetic datasets") {
  const ad::Vector z = redshift_grid(50, 0.02, 1.4);
  SUBCASE("noiseless limit reproduces the forward model") {
    const SupernovaDataset d = synthesize_dataset({0.3, 0.7}, z, 1e-12, 1);
    for (ad::Index i = 0; i < z.size(); ++i) CHECK(std::abs(d.mu(i) - distance_modulus(z(i), {0.3, 0.7})) < 1e-9);
    CHECK(d.covariance.isApprox(1e-24 * Matrix::Identity(50, 50)));
  }
  SUBCASE("seed determinism") {
    CHECK(synthesize_dataset({0.3, 0.7}, z, 0.15, 9).mu == synthesize_dataset({0.3, 0.7}, z, 0.15, 9).mu);
    CHECK(synthesize_dataset({0.3, 0.7}, z, 0.15, 9).mu != synthesize_dataset({0.3, 0.7}, z, 0.15, 10).mu);
  }
  SUBCASE("true parameters beat a shifted matter density in at least 99 of 100 seeds") {
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const SupernovaDataset d = synthesize_dataset({0.3, 0.7}, z, 0.15, seed);
      wins += log_likelihood(d, {0.3, 0.7}) > log_likelihood(d, {std::min(0.3 + 0.3, 0.999), 0.7}) ? 1 : 0;
    }
    CHECK(wins >= 99);
  }
  SUBCASE("redshift grid") {
    CHECK(z.size() == 50);
    CHECK(z(0) == 0.02);
    CHECK(z(49) == doctest::Approx(1.4).epsilon(1e-15));
  }
}

TEST_CASE("dataset CSV round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "hamflow_test_cosmo";
  std::filesystem::create_directories(dir);
  const SupernovaDataset d = synthesize_dataset({0.3, 0.7}, redshift_grid(10, 0.02, 1.4), 0.15, 3);
  const std::string path = (dir / "sn.csv").string();
  write_dataset_csv(d, path);
  const SupernovaDataset back = read_dataset_csv(path, "", 0.15);
  CHECK(back.z == d.z);
  CHECK(back.mu == d.mu);
  CHECK(back.covariance.isApprox(d.covariance, 1e-15));

  const std::string cov = (dir / "cov.csv").string();
  {
    std::ofstream os(cov);
    for (int i = 0; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) os << (j ? "," : "") << (i == j ? 0.04 : 0.001);
      os << '\n';
    }
  }
  const SupernovaDataset dense = read_dataset_csv(path, cov, 0.0);
  CHECK(dense.covariance(0, 0) == 0.04);
  CHECK(dense.covariance(3, 7) == 0.001);
  std::filesystem::remove_all(dir);
}
