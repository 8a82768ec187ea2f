#include "hamflow/nhf_bayes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "hamflow/errors.hpp"

namespace hamflow {

using ad::Graph;
using ad::Matrix;
using ad::Var;

namespace {

constexpr ad::Index kSampleChunk = 1024;

void check_finite_rows(const Matrix& per_sample, const char* what) {
  for (ad::Index r = 0; r < per_sample.rows(); ++r) {
    if (!std::isfinite(per_sample(r, 0))) {
      throw LossError(std::string("non-finite ") + what, static_cast<std::size_t>(r));
    }
  }
}

double batch_mean(Var v) { return v.value().mean(); }

}  // namespace

GaussianLikelihood::GaussianLikelihood(ad::RowVector observed, Matrix covariance)
    : observed_(std::move(observed)) {
  const auto n = observed_.size();
  if (covariance.rows() != n || covariance.cols() != n) throw ConfigError("gaussian likelihood: covariance shape");
  Eigen::LLT<Matrix> llt(covariance);
  if (llt.info() != Eigen::Success) throw ConfigError("gaussian likelihood: covariance not positive definite");
  const Matrix l = llt.matrixL();
  whitening_ = l.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n)).transpose();
  log_normalizer_ =
      -0.5 * (static_cast<double>(n) * std::log(2.0 * std::numbers::pi) + 2.0 * l.diagonal().array().log().sum());
}

Var GaussianLikelihood::log_likelihood(Graph& g, Var theta) const {
  if (theta.cols() != dimension()) throw ConfigError("gaussian likelihood: dimension mismatch");
  Var residual = ad::broadcast_rows(g.constant(Matrix(observed_)), theta.rows()) - theta;
  Var white = ad::matmul(residual, g.constant(whitening_));
  return ad::affine(ad::row_sum(ad::square(white)), -0.5, log_normalizer_);
}

ConstraintMap constraint_from_string(const std::string& name) {
  if (name == "none") return ConstraintMap::None;
  if (name == "sigmoid") return ConstraintMap::Sigmoid;
  throw ConfigError("unknown constraint map '" + name + "' (expected none or sigmoid)");
}

std::string to_string(ConstraintMap c) { return c == ConstraintMap::None ? "none" : "sigmoid"; }

BayesObjective objective_from_string(const std::string& name) {
  if (name == "kl") return BayesObjective::KL;
  if (name == "elbo") return BayesObjective::ELBO;
  throw ConfigError("unknown objective '" + name + "' (expected kl or elbo)");
}

std::string to_string(BayesObjective o) { return o == BayesObjective::KL ? "kl" : "elbo"; }

// --- model ------------------------------------------------------------------

BayesNHF::BayesNHF(const FlowConfig& cfg, std::unique_ptr<Prior> prior, std::unique_ptr<Likelihood> likelihood,
                   std::unique_ptr<Prior> momentum_target, ConstraintMap constraint, std::uint64_t init_seed)
    : flow_(cfg, init_seed),
      prior_(std::move(prior)),
      likelihood_(std::move(likelihood)),
      momentum_target_(std::move(momentum_target)),
      constraint_(constraint) {
  if (!prior_ || !likelihood_ || !momentum_target_) throw ConfigError("bayes model: prior, likelihood and g required");
  if (prior_->dimension() != cfg.dim || likelihood_->dimension() != cfg.dim ||
      momentum_target_->dimension() != cfg.dim) {
    throw ConfigError("bayes model: prior, likelihood and momentum target must match the model dimension");
  }
  if (!momentum_target_->normalized()) throw ConfigError("bayes model: momentum target g must be normalized");
}

Var BayesNHF::apply_constraint(Var q) const {
  return constraint_ == ConstraintMap::Sigmoid ? ad::sigmoid(q) : q;
}

BayesNHF::Pushforward BayesNHF::push_forward(Graph& g, Var q0, const Matrix& noise) const {
  EncoderOutput enc = flow_.encoder().encode(g, q0, noise);
  PhaseState start{q0, enc.p};
  PhaseState end = bypass_integration
                       ? start
                       : integrate(g, start, flow_.potential(), flow_.kinetic(), flow_.config().leapfrog);
  return Pushforward{apply_constraint(end.q), end.p, enc.log_density};
}

Var BayesNHF::kl_loss(Graph& g, const Matrix& q0, const Matrix& noise, KLLossParts* parts) const {
  if (q0.cols() != dimension() || q0.rows() == 0) throw ConfigError("kl_loss: q0 must be a non-empty N x D batch");
  Var q0_node = g.constant(q0);
  Pushforward pf = push_forward(g, q0_node, noise);
  Var log_prior = prior_->log_density(g, pf.theta);
  Var log_like = likelihood_->log_likelihood(g, pf.theta);
  Var log_g = momentum_target_->log_density(g, pf.p_T);
  Var per_sample = pf.log_f0 - log_prior - log_like - log_g;
  check_finite_rows(log_like.value(), "log-likelihood");
  check_finite_rows(per_sample.value(), "KL integrand");
  Var total = ad::mean(per_sample);
  if (parts != nullptr) {
    parts->log_f0 = batch_mean(pf.log_f0);
    parts->log_prior_at_qT = batch_mean(log_prior);
    parts->log_like_at_qT = batch_mean(log_like);
    parts->log_g_at_pT = batch_mean(log_g);
    parts->total = total.scalar();
    parts->log_prior_at_q0 = batch_mean(prior_->log_density(g, q0_node));
  }
  return total;
}

Var BayesNHF::inference_elbo_loss(Graph& g, const Matrix& q0, const Matrix& noise) const {
  if (q0.cols() != dimension() || q0.rows() == 0) {
    throw ConfigError("inference_elbo_loss: q0 must be a non-empty N x D batch");
  }
  Pushforward pf = push_forward(g, g.constant(q0), noise);
  Var log_like = likelihood_->log_likelihood(g, pf.theta);
  check_finite_rows(log_like.value(), "log-likelihood");
  Var per_sample = prior_->log_density(g, pf.theta) + log_like + momentum_target_->log_density(g, pf.p_T) - pf.log_f0;
  check_finite_rows(per_sample.value(), "ELBO term");
  return -ad::mean(per_sample);
}

Var BayesNHF::loss(Graph& g, BayesObjective objective, const Matrix& q0, const Matrix& noise) const {
  return objective == BayesObjective::KL ? kl_loss(g, q0, noise) : inference_elbo_loss(g, q0, noise);
}

Matrix BayesNHF::posterior_sample(std::size_t n, std::uint64_t seed, bool zero_momentum) const {
  std::mt19937_64 rng(seed);
  const int d = dimension();
  Matrix out(static_cast<ad::Index>(n), d);
  if (n == 0) return out;
  const Matrix q0 = prior_->sample(n, rng);
  const Matrix noise = standard_normal(n, d, rng);
  for (ad::Index start = 0; start < static_cast<ad::Index>(n); start += kSampleChunk) {
    const ad::Index rows = std::min<ad::Index>(kSampleChunk, static_cast<ad::Index>(n) - start);
    Graph g;
    Var q = g.constant(q0.middleRows(start, rows));
    Var p = zero_momentum ? g.constant(Matrix::Zero(rows, d))
                          : flow_.encoder().encode(g, q, noise.middleRows(start, rows)).p;
    PhaseState s{q, p};
    if (!bypass_integration) s = integrate(g, s, flow_.potential(), flow_.kinetic(), flow_.config().leapfrog);
    out.middleRows(start, rows) = apply_constraint(s.q).value();
  }
  return out;
}

// --- training ---------------------------------------------------------------

BayesTrainer::BayesTrainer(BayesNHF& model, BayesTrainOptions options)
    : model_(model),
      options_(std::move(options)),
      params_(model.parameters()),
      adam_(params_, options_.adam),
      rng_(options_.seed),
      start_(std::chrono::steady_clock::now()) {
  if (options_.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (options_.epochs < 0) throw ConfigError("epochs must be >= 0");
}

TrainRecord BayesTrainer::run_epoch() {
  const int epoch = epoch_ + 1;
  const auto n = static_cast<std::size_t>(options_.batch_size);
  const Matrix q0 = model_.prior().sample(n, rng_);
  const Matrix noise = standard_normal(n, model_.dimension(), rng_);
  const auto saved = snapshot(params_);
  double value = 0.0;
  try {
    Graph g;
    Var loss = model_.loss(g, options_.objective, q0, noise);
    value = apply_gradient_step(g, loss, params_, adam_, epoch);
  } catch (const DivergenceError&) {
    restore(params_, saved);
    throw;
  } catch (const std::runtime_error& e) {
    restore(params_, saved);
    throw DivergenceError(e.what(), epoch);
  }
  epoch_ = epoch;
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  TrainRecord record{epoch, value, elapsed};
  if (options_.on_epoch) options_.on_epoch(record);
  return record;
}

std::vector<TrainRecord> BayesTrainer::train() {
  std::vector<TrainRecord> records;
  while (epoch_ < options_.epochs) records.push_back(run_epoch());
  return records;
}

std::vector<TrainRecord> train_bayes(BayesNHF& model, const BayesTrainOptions& options) {
  BayesTrainer trainer(model, options);
  return trainer.train();
}

}  // namespace hamflow
