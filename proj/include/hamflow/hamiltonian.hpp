#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "hamflow/autodiff.hpp"
#include "hamflow/network.hpp"

namespace hamflow {

/// Differentiable scalar field over positions (potential) or momenta (kinetic).
/// Inputs and outputs are row-batched: x is N x D, energy N x 1, gradient N x D.
class EnergyFunction {
 public:
  virtual ~EnergyFunction() = default;

  virtual int dimension() const = 0;
  virtual ad::Var energy(ad::Graph& g, ad::Var x) const = 0;
  /// Gradient with respect to x, itself differentiable with respect to the parameters.
  virtual ad::Var gradient(ad::Graph& g, ad::Var x) const = 0;

  virtual std::vector<ad::Parameter*> parameters() = 0;
  virtual std::vector<const ad::Parameter*> parameters() const = 0;
  std::size_t parameter_count() const;
};

/// Energy given by a (D, H, H, 1) network.
class NetworkEnergy final : public EnergyFunction {
 public:
  NetworkEnergy(int dim, int hidden, Activation activation = Activation::Tanh, const std::string& name = "energy");
  explicit NetworkEnergy(DenseNetwork net);

  int dimension() const override { return net_.input_size(); }
  ad::Var energy(ad::Graph& g, ad::Var x) const override;
  ad::Var gradient(ad::Graph& g, ad::Var x) const override;
  std::vector<ad::Parameter*> parameters() override { return net_.parameters(); }
  std::vector<const ad::Parameter*> parameters() const override { return net_.parameters(); }

  DenseNetwork& network() { return net_; }
  const DenseNetwork& network() const { return net_; }

 private:
  DenseNetwork net_;
};

/// E(x) = 1/2 x^T M x with M = L L^T + jitter * I and L an unconstrained lower-triangular factor.
///
/// M is symmetric positive definite with eigenvalues >= jitter for any factor value. The factor
/// is stored packed (D(D+1)/2 entries) so a D=2 mass matrix has exactly three trainable scalars.
class QuadraticEnergy final : public EnergyFunction {
 public:
  /// Identity factor, M = (1 + jitter) I.
  QuadraticEnergy(int dim, double jitter, bool trainable, const std::string& name = "mass");
  /// Explicit lower-triangular factor (upper part ignored).
  QuadraticEnergy(const ad::Matrix& factor, double jitter, bool trainable, const std::string& name = "mass");

  int dimension() const override { return dim_; }
  ad::Var energy(ad::Graph& g, ad::Var x) const override;
  ad::Var gradient(ad::Graph& g, ad::Var x) const override;
  std::vector<ad::Parameter*> parameters() override;
  std::vector<const ad::Parameter*> parameters() const override;

  ad::Matrix cholesky_factor() const;
  void set_cholesky_factor(const ad::Matrix& factor);
  ad::Matrix mass_matrix() const;
  double jitter() const { return jitter_; }
  bool trainable() const { return trainable_; }
  ad::Parameter& packed_factor() { return packed_; }

 private:
  ad::Var mass_node(ad::Graph& g) const;

  int dim_;
  double jitter_;
  bool trainable_;
  ad::Parameter packed_;
};

/// Energy -log p(x) for an arbitrary differentiable log-density.
///
/// The gradient is evaluated with a separate reverse sweep and enters the caller's graph as a
/// constant, so this energy is suitable for sampling (HMC) but not for training through.
class LogDensityEnergy final : public EnergyFunction {
 public:
  /// Maps an N x D node to N x 1 log-density values.
  using LogDensity = std::function<ad::Var(ad::Graph&, ad::Var)>;

  LogDensityEnergy(int dim, LogDensity log_density);

  int dimension() const override { return dim_; }
  ad::Var energy(ad::Graph& g, ad::Var x) const override;
  ad::Var gradient(ad::Graph& g, ad::Var x) const override;
  std::vector<ad::Parameter*> parameters() override { return {}; }
  std::vector<const ad::Parameter*> parameters() const override { return {}; }

 private:
  int dim_;
  LogDensity log_density_;
};

/// Row-batched phase-space points (q, p), both N x D.
struct PhaseState {
  ad::Var q;
  ad::Var p;
};

enum class Direction { Forward, Reverse };

/// L steps over total time T; the timestep is derived as dt = T / L.
struct LeapfrogConfig {
  int steps = 10;
  double time = 1.0;
  Direction direction = Direction::Forward;

  /// Signed timestep (negative for Direction::Reverse).
  double dt() const;
  LeapfrogConfig reversed() const;
  void validate() const;
};

/// One leapfrog step:
///   p_half = p - grad V(q) dt/2
///   q'     = q + grad K(p_half) dt
///   p'     = p_half - grad V(q') dt/2
/// Throws IntegrationError carrying `step_index` on a non-finite gradient.
PhaseState leapfrog_step(ad::Graph& g, const PhaseState& state, const EnergyFunction& potential,
                         const EnergyFunction& kinetic, double dt, int step_index = 0);

/// `cfg.steps` consecutive leapfrog steps. The potential gradient at each intermediate
/// position is shared between adjacent steps; results equal repeated leapfrog_step exactly.
/// When `trajectory` is non-null it receives the state after every step (start excluded).
PhaseState integrate(ad::Graph& g, const PhaseState& state, const EnergyFunction& potential,
                     const EnergyFunction& kinetic, const LeapfrogConfig& cfg,
                     std::vector<PhaseState>* trajectory = nullptr);

}  // namespace hamflow
