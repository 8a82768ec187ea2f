#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <filesystem>
#include <numeric>
#include <numbers>
#include <random>

#include "hamflow/csv.hpp"
#include "hamflow/distributions.hpp"
#include "hamflow/errors.hpp"
#include "support.hpp"

using namespace hamflow;
using namespace hamflow::testing;
using boost::math::quadrature::gauss_kronrod;

namespace {

ad::RowVector point(double x, double y) { return (ad::RowVector(2) << x, y).finished(); }

double log_sigmoid(double x) { return -std::log1p(std::exp(-x)); }

double normal_cdf(double x, double mu, double sigma) {
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::numbers::sqrt2));
}

/// Chi-square goodness-of-fit p-value of `x` against `cdf` on `edges` (two open tail bins added).
double chi_square_p_value(const ad::Vector& x, const std::vector<double>& edges,
                          const std::function<double(double)>& cdf) {
  const std::size_t bins = edges.size() + 1;
  std::vector<double> observed(bins, 0.0);
  for (ad::Index i = 0; i < x.size(); ++i) {
    const auto it = std::upper_bound(edges.begin(), edges.end(), x(i));
    observed[static_cast<std::size_t>(it - edges.begin())] += 1.0;
  }
  const double n = static_cast<double>(x.size());
  double stat = 0.0;
  double prev = 0.0;
  for (std::size_t b = 0; b < bins; ++b) {
    const double next = b < edges.size() ? cdf(edges[b]) : 1.0;
    const double expected = n * (next - prev);
    prev = next;
    stat += (observed[b] - expected) * (observed[b] - expected) / expected;
  }
  const boost::math::chi_squared dist(static_cast<double>(bins - 1));
  return boost::math::cdf(boost::math::complement(dist, stat));
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  return v;
}

}  // namespace

TEST_CASE("mixture log density") {
  const GaussianMixture m = GaussianMixture::grid3x3();
  SUBCASE("central mode value from direct summation") {
    // Four neighbors at distance 2 and four diagonals at distance 2 sqrt 2.
    const double s2 = 0.25;
    const double peak = 1.0 / (2 * std::numbers::pi * s2);
    const double direct = std::log(peak / 9 * (1 + 4 * std::exp(-4.0 / (2 * s2)) + 4 * std::exp(-8.0 / (2 * s2))));
    CHECK(mixture_logpdf(m, point(0, 0)) == doctest::Approx(direct).epsilon(1e-14));
    CHECK(mixture_logpdf(m, point(0, 0)) == doctest::Approx(-2.6477).epsilon(1e-4));
  }
  SUBCASE("central symmetry") {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 100; ++i) {
      const Matrix x = uniform_matrix(1, 2, -5, 5, rng);
      CHECK(mixture_logpdf(m, x.row(0)) == doctest::Approx(mixture_logpdf(m, -x.row(0))).epsilon(1e-14));
    }
  }
  SUBCASE("single component reduces to a Gaussian") {
    GaussianMixture one;
    one.centers = {point(1.0, -0.5)};
    one.sigma = 0.7;
    const ad::RowVector x = point(0.2, 0.9);
    const double expected = -std::log(2 * std::numbers::pi * 0.49) - (x - one.centers[0]).squaredNorm() / (2 * 0.49);
    CHECK(std::abs(mixture_logpdf(one, x) - expected) < 1e-12);
  }
  SUBCASE("stable far from every center") {
    CHECK(std::isfinite(mixture_logpdf(m, point(200, -300))));
  }
  SUBCASE("1D mixture integrates to one") {
    GaussianMixture m1;
    for (const double c : {-2.0, 0.0, 2.0}) m1.centers.push_back((ad::RowVector(1) << c).finished());
    m1.sigma = 0.5;
    const auto f = [&](double x) { return std::exp(mixture_logpdf(m1, (ad::RowVector(1) << x).finished())); };
    const double total = gauss_kronrod<double, 61>::integrate(f, -15.0, 15.0, 15, 1e-12);
    CHECK(total >= 0.999);
    CHECK(total <= 1.001);
  }
  SUBCASE("weights are normalized") {
    GaussianMixture w = m;
    w.weights = {1, 2, 3, 4, 5, 6, 7, 8, 9};
    const auto nw = w.normalized_weights();
    CHECK(std::accumulate(nw.begin(), nw.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("mixture sampling") {
  const GaussianMixture m = GaussianMixture::grid3x3();
  SUBCASE("component occupancy within three binomial standard deviations") {
    const std::size_t n = 90000;
    std::vector<std::size_t> comp;
    mixture_sample(m, n, 3, &comp);
    std::vector<double> counts(9, 0.0);
    for (auto c : comp) counts[c] += 1.0;
    const double bound = 3 * std::sqrt(n * (1.0 / 9) * (8.0 / 9));
    for (const double c : counts) CHECK(std::abs(c - n / 9.0) <= bound);
  }
  SUBCASE("zero sigma puts every sample on a center") {
    const GaussianMixture m0 = GaussianMixture::grid3x3(2.0, 0.0);
    const Matrix s = mixture_sample(m0, 500, 4);
    for (ad::Index i = 0; i < s.rows(); ++i) {
      const auto k = m0.nearest_center(s.row(i));
      CHECK((s.row(i) - m0.centers[k]).norm() == 0.0);
    }
  }
  SUBCASE("seed determinism") {
    CHECK(mixture_sample(m, 1000, 5) == mixture_sample(m, 1000, 5));
    CHECK(mixture_sample(m, 1000, 5) != mixture_sample(m, 1000, 6));
  }
  SUBCASE("histogram of the x marginal matches the pdf") {
    const Matrix s = mixture_sample(m, 100000, 7);
    const auto cdf = [](double x) {
      return (normal_cdf(x, -2, 0.5) + normal_cdf(x, 0, 0.5) + normal_cdf(x, 2, 0.5)) / 3.0;
    };
    const double p = chi_square_p_value(s.col(0), linspace(-3.5, 3.5, 36), cdf);
    INFO("p = " << p);
    CHECK(p > 0.001);
  }
  SUBCASE("mode fractions") {
    const Matrix s = mixture_sample(m, 9000, 8);
    const auto f = mode_fractions(m, s, 1.0);
    REQUIRE(f.size() == 9);
    // P(|N(0, 0.25 I)| <= 1) = 1 - exp(-2) per mode.
    for (const double x : f) CHECK(std::abs(x - (1 - std::exp(-2.0)) / 9) < 0.015);
  }
  SUBCASE("invalid mixtures are configuration errors") {
    GaussianMixture bad = m;
    bad.sigma = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = m;
    bad.weights = {1.0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
}

TEST_CASE("soft-uniform log density") {
  const SoftUniform s(2, 3.0);
  CHECK(soft_uniform_logpdf_unnorm(s, point(0, 0)) == doctest::Approx(4 * log_sigmoid(3.0)).epsilon(1e-14));
  CHECK(soft_uniform_logpdf_unnorm(s, point(0, 0)) == doctest::Approx(-0.19435).epsilon(1e-4));
  CHECK(log_sigmoid(3.0) == doctest::Approx(-0.048587).epsilon(1e-4));
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Matrix x = uniform_matrix(1, 2, -8, 8, rng);
    CHECK(soft_uniform_logpdf_unnorm(s, x.row(0)) ==
          doctest::Approx(soft_uniform_logpdf_unnorm(s, -x.row(0))).epsilon(1e-14));
  }
  double prev = soft_uniform_logpdf_unnorm(s, point(0, 0));
  for (double x = 0.05; x < 10; x += 0.05) {
    const double v = soft_uniform_logpdf_unnorm(s, point(x, 0));
    CHECK(v < prev);
    prev = v;
  }
  // The graph version agrees with the scalar one.
  Graph g;
  const Matrix x = uniform_matrix(5, 2, -6, 6, rng);
  const Matrix lp = s.log_density(g, g.constant(x)).value();
  for (ad::Index i = 0; i < 5; ++i) CHECK(std::abs(lp(i, 0) - soft_uniform_logpdf_unnorm(s, x.row(i))) < 1e-14);
}

TEST_CASE("soft-uniform sampling") {
  const SoftUniform s(2, 3.0);
  const std::size_t n = 100000;
  const Matrix x = s.sample(n, std::uint64_t{11});
  const auto density = [](double t) { return std::exp(log_sigmoid(t + 3) + log_sigmoid(3 - t)); };
  const double z = gauss_kronrod<double, 61>::integrate(density, -40.0, 40.0, 15, 1e-13);

  SUBCASE("mean is zero within four standard errors") {
    for (int c = 0; c < 2; ++c) {
      const ad::Vector col = x.col(c);
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() / (n - 1));
      CHECK(std::abs(mean) < 4 * sd / std::sqrt(static_cast<double>(n)));
    }
  }
  SUBCASE("mass inside [-4.5, 4.5] matches quadrature") {
    const double inside = gauss_kronrod<double, 61>::integrate(density, -4.5, 4.5, 15, 1e-13) / z;
    CHECK(inside == doctest::Approx(0.93305).epsilon(1e-4));
    for (int c = 0; c < 2; ++c) {
      const double frac = (x.col(c).array().abs() <= 4.5).cast<double>().mean();
      const double se = std::sqrt(inside * (1 - inside) / static_cast<double>(n));
      CHECK(std::abs(frac - inside) < 4 * se);
    }
  }
  SUBCASE("histogram matches the normalized density") {
    const auto cdf = [&](double t) { return gauss_kronrod<double, 61>::integrate(density, -40.0, t, 15, 1e-13) / z; };
    const double p = chi_square_p_value(x.col(0), linspace(-6, 6, 41), cdf);
    INFO("p = " << p);
    CHECK(p > 0.001);
  }
  SUBCASE("samples stay within the rejection envelope") {
    CHECK(x.cwiseAbs().maxCoeff() <= 3.0 + SoftUniform::kEnvelopeMargin);
  }
}

TEST_CASE("gaussian prior") {
  const GaussianPrior p(2, 2.5);
  Graph g;
  const Matrix x = (Matrix(1, 2) << 1.0, -2.0).finished();
  const double expected = -std::log(2 * std::numbers::pi * 6.25) - 5.0 / (2 * 6.25);
  CHECK(p.log_density(g, g.constant(x)).scalar() == doctest::Approx(expected).epsilon(1e-14));
  const Matrix s = p.sample(200000, std::uint64_t{3});
  CHECK(std::abs(s.col(0).mean()) < 4 * 2.5 / std::sqrt(200000.0));
  const double sd = std::sqrt(s.col(1).array().square().mean());
  CHECK(sd == doctest::Approx(2.5).epsilon(0.01));
}

TEST_CASE("csv round-trips doubles bit-exactly") {
  const auto dir = std::filesystem::temp_directory_path() / "hamflow_test_csv";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "samples.csv").string();
  Matrix m = mixture_sample(GaussianMixture::grid3x3(), 200, 9);
  m(0, 0) = 0.1;
  m(1, 1) = 1e-300;
  m(2, 0) = -123456789.123456789;
  csv::write(path, {"x1", "x2"}, m);
  const csv::Table t = csv::read(path);
  CHECK(t.header == std::vector<std::string>{"x1", "x2"});
  CHECK(t.values == m);
  std::filesystem::remove_all(dir);
}
