#include "hamflow/nhf_generative.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hamflow/errors.hpp"

namespace hamflow {

using ad::Graph;
using ad::Matrix;
using ad::Var;

namespace {

constexpr ad::Index kSampleChunk = 1024;

void check_finite_rows(const Matrix& per_sample, const char* what) {
  for (ad::Index r = 0; r < per_sample.rows(); ++r) {
    if (!std::isfinite(per_sample(r, 0))) throw LossError(std::string("non-finite ") + what, static_cast<std::size_t>(r));
  }
}

}  // namespace

GenerativeNHF::GenerativeNHF(const FlowConfig& cfg, std::unique_ptr<Prior> base_prior, std::uint64_t init_seed)
    : flow_(cfg, init_seed), base_prior_(std::move(base_prior)), base_momentum_(cfg.dim, 1.0) {
  if (!base_prior_) throw ConfigError("generative model requires a base prior");
  if (base_prior_->dimension() != cfg.dim) throw ConfigError("base prior dimension differs from model dimension");
}

Var GenerativeNHF::elbo_loss(Graph& g, const Matrix& q_T, const Matrix& noise) const {
  if (q_T.cols() != dimension()) throw ConfigError("elbo_loss: data dimension differs from model dimension");
  if (q_T.rows() == 0) throw ConfigError("elbo_loss: empty minibatch");
  Var q = g.constant(q_T);
  EncoderOutput enc = flow_.encoder().encode(g, q, noise);
  PhaseState start{q, enc.p};
  PhaseState base = bypass_integration
                        ? start
                        : integrate(g, start, flow_.potential(), flow_.kinetic(), flow_.config().leapfrog.reversed());
  Var per_sample =
      base_prior_->log_density(g, base.q) + base_momentum_.log_density(g, base.p) - enc.log_density;
  check_finite_rows(per_sample.value(), "ELBO term");
  return -ad::mean(per_sample);
}

GenerativeNHF::Samples GenerativeNHF::sample(std::size_t n, std::uint64_t seed, bool zero_momentum) const {
  std::mt19937_64 rng(seed);
  const int d = dimension();
  Samples out{Matrix(static_cast<ad::Index>(n), d), Matrix(static_cast<ad::Index>(n), d)};
  if (n == 0) return out;
  const Matrix q0 = base_prior_->sample(n, rng);
  const Matrix p0 = zero_momentum ? Matrix::Zero(static_cast<ad::Index>(n), d) : base_momentum_.sample(n, rng);
  for (ad::Index start = 0; start < static_cast<ad::Index>(n); start += kSampleChunk) {
    const ad::Index rows = std::min<ad::Index>(kSampleChunk, static_cast<ad::Index>(n) - start);
    Graph g;
    PhaseState s{g.constant(q0.middleRows(start, rows)), g.constant(p0.middleRows(start, rows))};
    if (!bypass_integration) s = integrate(g, s, flow_.potential(), flow_.kinetic(), flow_.config().leapfrog);
    out.positions.middleRows(start, rows) = s.q.value();
    out.momenta.middleRows(start, rows) = s.p.value();
  }
  return out;
}

Matrix GenerativeNHF::encode_momenta(const Matrix& q_T, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  Matrix out(q_T.rows(), q_T.cols());
  for (ad::Index start = 0; start < q_T.rows(); start += kSampleChunk) {
    const ad::Index rows = std::min<ad::Index>(kSampleChunk, q_T.rows() - start);
    Graph g;
    const Matrix noise = standard_normal(static_cast<std::size_t>(rows), dimension(), rng);
    out.middleRows(start, rows) = flow_.encoder().encode(g, g.constant(q_T.middleRows(start, rows)), noise).p.value();
  }
  return out;
}

// --- training ---------------------------------------------------------------

GenerativeTrainer::GenerativeTrainer(GenerativeNHF& model, TrainOptions options)
    : model_(model),
      options_(std::move(options)),
      params_(model.parameters()),
      adam_(params_, options_.adam),
      rng_(options_.seed),
      start_(std::chrono::steady_clock::now()) {
  if (options_.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (options_.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (options_.momentum_draws < 1) throw ConfigError("momentum_draws must be >= 1");
}

TrainRecord GenerativeTrainer::run_epoch(const Matrix& dataset) {
  if (dataset.rows() == 0) throw ConfigError("training dataset is empty");
  std::vector<ad::Index> order(static_cast<std::size_t>(dataset.rows()));
  std::iota(order.begin(), order.end(), ad::Index{0});
  std::shuffle(order.begin(), order.end(), rng_);

  const int epoch = epoch_ + 1;
  double weighted = 0.0;
  for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(options_.batch_size)) {
    const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(options_.batch_size));
    const auto rows = static_cast<ad::Index>(end - begin);
    const int draws = options_.momentum_draws;
    // Each position is repeated once per momentum draw; the batch mean then averages the draws.
    Matrix batch(rows * draws, dataset.cols());
    for (int k = 0; k < draws; ++k) {
      for (std::size_t i = begin; i < end; ++i) batch.row(k * rows + static_cast<ad::Index>(i - begin)) = dataset.row(order[i]);
    }
    const Matrix noise = standard_normal(static_cast<std::size_t>(batch.rows()), model_.dimension(), rng_);

    const auto saved = snapshot(params_);
    try {
      Graph g;
      Var loss = model_.elbo_loss(g, batch, noise);
      weighted += apply_gradient_step(g, loss, params_, adam_, epoch) * static_cast<double>(end - begin);
    } catch (const DivergenceError&) {
      restore(params_, saved);
      throw;
    } catch (const std::runtime_error& e) {
      restore(params_, saved);
      throw DivergenceError(e.what(), epoch);
    }
  }
  epoch_ = epoch;
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  TrainRecord record{epoch, weighted / static_cast<double>(dataset.rows()), elapsed};
  if (options_.on_epoch) options_.on_epoch(record);
  return record;
}

std::vector<TrainRecord> GenerativeTrainer::train(const Matrix& dataset) {
  std::vector<TrainRecord> records;
  while (epoch_ < options_.epochs) records.push_back(run_epoch(dataset));
  return records;
}

std::vector<TrainRecord> train(GenerativeNHF& model, const Matrix& dataset, const TrainOptions& options) {
  GenerativeTrainer trainer(model, options);
  return trainer.train(dataset);
}

}  // namespace hamflow
