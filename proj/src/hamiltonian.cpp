#include "hamflow/hamiltonian.hpp"

#include <cmath>

#include "hamflow/errors.hpp"

namespace hamflow {

using ad::Graph;
using ad::Matrix;
using ad::Var;

std::size_t EnergyFunction::parameter_count() const {
  std::size_t n = 0;
  for (const ad::Parameter* p : parameters()) n += static_cast<std::size_t>(p->size());
  return n;
}

// --- NetworkEnergy ----------------------------------------------------------

NetworkEnergy::NetworkEnergy(int dim, int hidden, Activation activation, const std::string& name)
    : net_({dim, hidden, hidden, 1}, activation, name) {}

NetworkEnergy::NetworkEnergy(DenseNetwork net) : net_(std::move(net)) {
  if (net_.output_size() != 1) throw ConfigError("NetworkEnergy requires a scalar-output network");
}

Var NetworkEnergy::energy(Graph& g, Var x) const { return net_.forward(g, x); }

Var NetworkEnergy::gradient(Graph& g, Var x) const { return net_.input_gradient(g, x); }

// --- QuadraticEnergy --------------------------------------------------------

namespace {

Matrix pack_lower(const Matrix& factor) {
  const ad::Index d = factor.rows();
  Matrix packed(1, d * (d + 1) / 2);
  ad::Index k = 0;
  for (ad::Index r = 0; r < d; ++r) {
    for (ad::Index c = 0; c <= r; ++c) packed(0, k++) = factor(r, c);
  }
  return packed;
}

}  // namespace

QuadraticEnergy::QuadraticEnergy(int dim, double jitter, bool trainable, const std::string& name)
    : QuadraticEnergy(Matrix::Identity(dim, dim), jitter, trainable, name) {}

QuadraticEnergy::QuadraticEnergy(const Matrix& factor, double jitter, bool trainable, const std::string& name)
    : dim_(static_cast<int>(factor.rows())), jitter_(jitter), trainable_(trainable) {
  if (factor.rows() < 1 || factor.rows() != factor.cols()) {
    throw ConfigError("QuadraticEnergy: factor must be a non-empty square matrix");
  }
  if (!(jitter >= 0.0)) throw ConfigError("QuadraticEnergy: jitter must be non-negative");
  packed_ = ad::Parameter(name + ".cholesky", pack_lower(factor));
}

std::vector<ad::Parameter*> QuadraticEnergy::parameters() {
  if (!trainable_) return {};
  return {&packed_};
}

std::vector<const ad::Parameter*> QuadraticEnergy::parameters() const {
  if (!trainable_) return {};
  return {&packed_};
}

Matrix QuadraticEnergy::cholesky_factor() const {
  Matrix out = Matrix::Zero(dim_, dim_);
  ad::Index k = 0;
  for (ad::Index r = 0; r < dim_; ++r) {
    for (ad::Index c = 0; c <= r; ++c) out(r, c) = packed_.value(0, k++);
  }
  return out;
}

void QuadraticEnergy::set_cholesky_factor(const Matrix& factor) {
  if (factor.rows() != dim_ || factor.cols() != dim_) throw ConfigError("set_cholesky_factor: wrong shape");
  packed_.value = pack_lower(factor);
}

Matrix QuadraticEnergy::mass_matrix() const {
  const Matrix l = cholesky_factor();
  return l * l.transpose() + jitter_ * Matrix::Identity(dim_, dim_);
}

Var QuadraticEnergy::mass_node(Graph& g) const {
  if (!trainable_) return g.constant(mass_matrix());
  Var l = ad::lower_triangular(g.parameter(packed_), dim_);
  return ad::matmul_nt(l, l) + g.constant(jitter_ * Matrix::Identity(dim_, dim_));
}

Var QuadraticEnergy::energy(Graph& g, Var x) const {
  if (x.cols() != dim_) throw ConfigError("QuadraticEnergy: input dimension mismatch");
  Var mx = ad::matmul(x, mass_node(g));
  return 0.5 * ad::row_sum(ad::mul(mx, x));
}

Var QuadraticEnergy::gradient(Graph& g, Var x) const {
  if (x.cols() != dim_) throw ConfigError("QuadraticEnergy: input dimension mismatch");
  // M is symmetric, so the row-batched gradient x M equals (M x^T)^T.
  return ad::matmul(x, mass_node(g));
}

// --- LogDensityEnergy -------------------------------------------------------

LogDensityEnergy::LogDensityEnergy(int dim, LogDensity log_density)
    : dim_(dim), log_density_(std::move(log_density)) {
  if (dim < 1) throw ConfigError("LogDensityEnergy: dimension must be positive");
}

Var LogDensityEnergy::energy(Graph& g, Var x) const { return -log_density_(g, x); }

Var LogDensityEnergy::gradient(Graph& g, Var x) const {
  Graph scratch;
  Var xs = scratch.variable(x.value());
  Var total = ad::sum(log_density_(scratch, xs));
  scratch.backward(total);
  return g.constant(-scratch.adjoint(xs));
}

// --- Leapfrog ---------------------------------------------------------------

double LeapfrogConfig::dt() const {
  const double step = time / static_cast<double>(steps);
  return direction == Direction::Forward ? step : -step;
}

LeapfrogConfig LeapfrogConfig::reversed() const {
  LeapfrogConfig out = *this;
  out.direction = direction == Direction::Forward ? Direction::Reverse : Direction::Forward;
  return out;
}

void LeapfrogConfig::validate() const {
  if (steps < 1) throw ConfigError("leapfrog: number of steps must be >= 1, got " + std::to_string(steps));
  if (!(time > 0.0) || !std::isfinite(time)) throw ConfigError("leapfrog: integration time must be > 0");
}

namespace {

Var checked_gradient(Graph& g, const EnergyFunction& e, Var x, int step, const char* which) {
  Var grad = e.gradient(g, x);
  if (!grad.value().allFinite()) {
    throw IntegrationError(std::string("non-finite gradient of the ") + which + " energy", step);
  }
  return grad;
}

void check_state(const PhaseState& s, const EnergyFunction& v, const EnergyFunction& k) {
  if (s.q.cols() != s.p.cols() || s.q.rows() != s.p.rows()) {
    throw ConfigError("phase state: q and p shapes differ");
  }
  if (s.q.cols() != v.dimension() || s.p.cols() != k.dimension()) {
    throw ConfigError("phase state: dimension does not match the energies");
  }
}

PhaseState step_with_gradient(Graph& g, const PhaseState& s, Var grad_v, const EnergyFunction& potential,
                              const EnergyFunction& kinetic, double dt, int step, Var* grad_v_next) {
  Var p_half = s.p - (0.5 * dt) * grad_v;
  Var q_next = s.q + dt * checked_gradient(g, kinetic, p_half, step, "kinetic");
  Var grad_next = checked_gradient(g, potential, q_next, step, "potential");
  Var p_next = p_half - (0.5 * dt) * grad_next;
  if (grad_v_next != nullptr) *grad_v_next = grad_next;
  return PhaseState{q_next, p_next};
}

}  // namespace

PhaseState leapfrog_step(Graph& g, const PhaseState& state, const EnergyFunction& potential,
                         const EnergyFunction& kinetic, double dt, int step_index) {
  if (dt == 0.0 || !std::isfinite(dt)) throw ConfigError("leapfrog_step: dt must be finite and non-zero");
  check_state(state, potential, kinetic);
  Var grad_v = checked_gradient(g, potential, state.q, step_index, "potential");
  return step_with_gradient(g, state, grad_v, potential, kinetic, dt, step_index, nullptr);
}

PhaseState integrate(Graph& g, const PhaseState& state, const EnergyFunction& potential,
                     const EnergyFunction& kinetic, const LeapfrogConfig& cfg,
                     std::vector<PhaseState>* trajectory) {
  cfg.validate();
  check_state(state, potential, kinetic);
  const double dt = cfg.dt();
  PhaseState s = state;
  Var grad_v = checked_gradient(g, potential, s.q, 0, "potential");
  for (int n = 0; n < cfg.steps; ++n) {
    s = step_with_gradient(g, s, grad_v, potential, kinetic, dt, n, &grad_v);
    if (trajectory != nullptr) trajectory->push_back(s);
  }
  return s;
}

}  // namespace hamflow
