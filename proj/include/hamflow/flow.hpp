#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "hamflow/adam.hpp"
#include "hamflow/encoder.hpp"
#include "hamflow/hamiltonian.hpp"

namespace hamflow {

enum class KineticKind { Mlp, Fixed };

KineticKind kinetic_from_string(const std::string& name);
std::string to_string(KineticKind k);

struct FlowConfig {
  int dim = 2;
  int hidden = 32;
  /// Hidden width of the encoder networks; 0 uses `hidden`.
  int encoder_hidden = 0;
  KineticKind kinetic = KineticKind::Mlp;
  /// Fixed kinetic only: train the mass-matrix factor or freeze it at identity.
  bool learn_mass = true;
  double mass_jitter = 1e-4;
  Activation activation = Activation::Tanh;
  LeapfrogConfig leapfrog{};

  int encoder_width() const { return encoder_hidden > 0 ? encoder_hidden : hidden; }
  void validate() const;
};

/// Encoder, potential and kinetic energies, and the leapfrog schedule shared by the
/// generative and Bayesian models.
class HamiltonianFlow {
 public:
  HamiltonianFlow(const FlowConfig& cfg, std::uint64_t init_seed);

  const FlowConfig& config() const { return config_; }
  GaussianEncoder& encoder() { return encoder_; }
  const GaussianEncoder& encoder() const { return encoder_; }
  EnergyFunction& potential() { return *potential_; }
  const EnergyFunction& potential() const { return *potential_; }
  EnergyFunction& kinetic() { return *kinetic_; }
  const EnergyFunction& kinetic() const { return *kinetic_; }

  /// Encoder, potential, then kinetic parameters, in a fixed order.
  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  std::size_t parameter_count() const;

 private:
  FlowConfig config_;
  GaussianEncoder encoder_;
  std::unique_ptr<EnergyFunction> potential_;
  std::unique_ptr<EnergyFunction> kinetic_;
};

/// One epoch summary.
struct TrainRecord {
  int epoch = 0;
  double loss = 0.0;  ///< mean minimized loss over the epoch
  double wall_time = 0.0;
};

/// Backpropagates `loss` into the parameters' grad fields and applies one Adam update.
/// Throws DivergenceError (parameters untouched) if the loss or any gradient is non-finite.
double apply_gradient_step(ad::Graph& g, ad::Var loss, std::span<ad::Parameter* const> params,
                           AdamState& adam, int epoch);

/// Copies of parameter values, used to roll back a failed step.
std::vector<ad::Matrix> snapshot(std::span<ad::Parameter* const> params);
void restore(std::span<ad::Parameter* const> params, const std::vector<ad::Matrix>& values);

}  // namespace hamflow
