#include "hamflow/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "hamflow/errors.hpp"

namespace hamflow {

using ad::Graph;
using ad::Matrix;
using ad::RowVector;
using ad::Var;

namespace {

double log_sigmoid(double x) { return -(std::max(-x, 0.0) + std::log1p(std::exp(-std::abs(x)))); }

void check_dim(int dim) {
  if (dim < 1) throw ConfigError("distribution dimension must be >= 1");
}

}  // namespace

std::vector<double> mode_fractions(const GaussianMixture& m, const Matrix& samples, double radius) {
  std::vector<double> counts(m.centers.size(), 0.0);
  if (samples.rows() == 0) return counts;
  for (ad::Index r = 0; r < samples.rows(); ++r) {
    const RowVector x = samples.row(r);
    const std::size_t k = m.nearest_center(x);
    if ((x - m.centers[k]).norm() <= radius) counts[k] += 1.0;
  }
  for (double& c : counts) c /= static_cast<double>(samples.rows());
  return counts;
}

Matrix standard_normal(std::size_t n, int dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(static_cast<ad::Index>(n), dim);
  for (ad::Index r = 0; r < out.rows(); ++r) {
    for (ad::Index c = 0; c < out.cols(); ++c) out(r, c) = normal(rng);
  }
  return out;
}

Matrix Prior::sample(std::size_t n, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  return sample(n, rng);
}

double Prior::log_density(const RowVector& x) const {
  Graph g;
  return log_density(g, g.constant(Matrix(x))).scalar();
}

// --- GaussianPrior ----------------------------------------------------------

GaussianPrior::GaussianPrior(int dim, double sigma) : dim_(dim), sigma_(sigma) {
  check_dim(dim);
  if (!(sigma > 0.0)) throw ConfigError("gaussian prior: sigma must be > 0");
}

Var GaussianPrior::log_density(Graph&, Var x) const {
  if (x.cols() != dim_) throw ConfigError("gaussian prior: dimension mismatch");
  const double log_norm = -0.5 * dim_ * std::log(2.0 * std::numbers::pi) - dim_ * std::log(sigma_);
  return ad::affine(ad::row_sum(ad::square(x)), -0.5 / (sigma_ * sigma_), log_norm);
}

Matrix GaussianPrior::sample(std::size_t n, std::mt19937_64& rng) const {
  return sigma_ * standard_normal(n, dim_, rng);
}

std::string GaussianPrior::describe() const {
  std::ostringstream os;
  os << "gaussian(sigma=" << sigma_ << ")";
  return os.str();
}

// --- SoftUniform ------------------------------------------------------------

SoftUniform::SoftUniform(int dim, double half_width) : dim_(dim), half_width_(half_width) {
  check_dim(dim);
  if (!(half_width > 0.0)) throw ConfigError("soft-uniform prior: half width must be > 0");
}

Var SoftUniform::log_density(Graph&, Var x) const {
  if (x.cols() != dim_) throw ConfigError("soft-uniform prior: dimension mismatch");
  return ad::row_sum(ad::log_sigmoid(x + half_width_) + ad::log_sigmoid(half_width_ - x));
}

Matrix SoftUniform::sample(std::size_t n, std::mt19937_64& rng) const {
  const double b = half_width_;
  const double edge = b + kEnvelopeMargin;
  // log of the plateau maximum s(b)^2; the density is log-concave and even, so it peaks at 0.
  const double log_envelope = 2.0 * log_sigmoid(b);
  std::uniform_real_distribution<double> proposal(-edge, edge);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix out(static_cast<ad::Index>(n), dim_);
  for (ad::Index r = 0; r < out.rows(); ++r) {
    for (ad::Index c = 0; c < out.cols(); ++c) {
      for (;;) {
        const double x = proposal(rng);
        const double log_ratio = log_sigmoid(x + b) + log_sigmoid(b - x) - log_envelope;
        if (std::log(unit(rng)) < log_ratio) {
          out(r, c) = x;
          break;
        }
      }
    }
  }
  return out;
}

std::string SoftUniform::describe() const {
  std::ostringstream os;
  os << "soft-uniform(b=" << half_width_ << ")";
  return os.str();
}

double soft_uniform_logpdf_unnorm(const SoftUniform& s, const RowVector& x) {
  if (x.size() != s.dimension()) throw ConfigError("soft-uniform: dimension mismatch");
  const double b = s.half_width();
  double total = 0.0;
  for (ad::Index i = 0; i < x.size(); ++i) total += log_sigmoid(x(i) + b) + log_sigmoid(b - x(i));
  return total;
}

// --- UniformBox -------------------------------------------------------------

UniformBox::UniformBox(int dim, double lo, double hi) : dim_(dim), lo_(lo), hi_(hi) {
  check_dim(dim);
  if (!(lo < hi)) throw ConfigError("uniform box: lo must be < hi");
}

Var UniformBox::log_density(Graph& g, Var x) const {
  if (x.cols() != dim_) throw ConfigError("uniform box: dimension mismatch");
  Matrix out(x.rows(), 1);
  for (ad::Index r = 0; r < x.rows(); ++r) {
    const auto row = x.value().row(r);
    const bool inside = (row.array() >= lo_).all() && (row.array() <= hi_).all();
    out(r, 0) = inside ? 0.0 : -std::numeric_limits<double>::infinity();
  }
  return g.constant(std::move(out));
}

Matrix UniformBox::sample(std::size_t n, std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> u(lo_, hi_);
  Matrix out(static_cast<ad::Index>(n), dim_);
  for (ad::Index r = 0; r < out.rows(); ++r) {
    for (ad::Index c = 0; c < out.cols(); ++c) out(r, c) = u(rng);
  }
  return out;
}

std::string UniformBox::describe() const {
  std::ostringstream os;
  os << "uniform-box([" << lo_ << ", " << hi_ << "])";
  return os.str();
}

// --- GaussianMixture --------------------------------------------------------

GaussianMixture GaussianMixture::grid3x3(double spacing, double sigma) {
  GaussianMixture m;
  m.sigma = sigma;
  for (int i = -1; i <= 1; ++i) {
    for (int j = -1; j <= 1; ++j) {
      RowVector c(2);
      c << i * spacing, j * spacing;
      m.centers.push_back(c);
    }
  }
  return m;
}

int GaussianMixture::dimension() const { return centers.empty() ? 0 : static_cast<int>(centers.front().size()); }

std::vector<double> GaussianMixture::normalized_weights() const {
  if (weights.empty()) return std::vector<double>(centers.size(), 1.0 / static_cast<double>(centers.size()));
  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<double> out;
  for (double w : weights) out.push_back(w / total);
  return out;
}

void GaussianMixture::validate() const {
  if (centers.empty()) throw ConfigError("mixture: at least one center required");
  for (const auto& c : centers) {
    if (c.size() != centers.front().size()) throw ConfigError("mixture: centers differ in dimension");
  }
  if (!(sigma >= 0.0)) throw ConfigError("mixture: sigma must be >= 0");
  if (!weights.empty()) {
    if (weights.size() != centers.size()) throw ConfigError("mixture: one weight per center required");
    for (double w : weights) {
      if (!(w > 0.0)) throw ConfigError("mixture: weights must be positive");
    }
  }
}

std::size_t GaussianMixture::nearest_center(const RowVector& x) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const double d = (x - centers[k]).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  return best;
}

double mixture_logpdf(const GaussianMixture& m, const RowVector& x) {
  m.validate();
  const auto w = m.normalized_weights();
  const double d = static_cast<double>(m.dimension());
  const double s2 = m.sigma * m.sigma;
  const double log_norm = -0.5 * d * std::log(2.0 * std::numbers::pi * s2);
  std::vector<double> terms;
  terms.reserve(m.centers.size());
  for (std::size_t k = 0; k < m.centers.size(); ++k) {
    terms.push_back(std::log(w[k]) + log_norm - 0.5 * (x - m.centers[k]).squaredNorm() / s2);
  }
  const double top = *std::max_element(terms.begin(), terms.end());
  double acc = 0.0;
  for (double t : terms) acc += std::exp(t - top);
  return top + std::log(acc);
}

Matrix mixture_sample(const GaussianMixture& m, std::size_t n, std::uint64_t seed,
                      std::vector<std::size_t>* components) {
  m.validate();
  std::mt19937_64 rng(seed);
  const auto w = m.normalized_weights();
  std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  const int d = m.dimension();
  Matrix out(static_cast<ad::Index>(n), d);
  if (components != nullptr) components->assign(n, 0);
  for (ad::Index r = 0; r < out.rows(); ++r) {
    const std::size_t k = pick(rng);
    if (components != nullptr) (*components)[static_cast<std::size_t>(r)] = k;
    for (int c = 0; c < d; ++c) out(r, c) = m.centers[k](c) + m.sigma * normal(rng);
  }
  return out;
}

}  // namespace hamflow
