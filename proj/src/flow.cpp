#include "hamflow/flow.hpp"

#include <cmath>
#include <random>

#include "hamflow/errors.hpp"

namespace hamflow {

KineticKind kinetic_from_string(const std::string& name) {
  if (name == "mlp") return KineticKind::Mlp;
  if (name == "fixed") return KineticKind::Fixed;
  throw ConfigError("unknown kinetic energy '" + name + "' (expected mlp or fixed)");
}

std::string to_string(KineticKind k) { return k == KineticKind::Mlp ? "mlp" : "fixed"; }

void FlowConfig::validate() const {
  if (dim < 1) throw ConfigError("model.dim must be >= 1");
  if (hidden < 1) throw ConfigError("model.hidden must be >= 1");
  if (encoder_hidden < 0) throw ConfigError("model.encoder_hidden must be >= 0");
  if (!(mass_jitter > 0.0)) throw ConfigError("model.mass_jitter must be > 0");
  leapfrog.validate();
}

HamiltonianFlow::HamiltonianFlow(const FlowConfig& cfg, std::uint64_t init_seed) : config_(cfg) {
  cfg.validate();
  std::mt19937_64 rng(init_seed);
  encoder_ = GaussianEncoder(cfg.dim, cfg.encoder_width(), cfg.activation);
  encoder_.initialize(rng);
  auto v = std::make_unique<NetworkEnergy>(cfg.dim, cfg.hidden, cfg.activation, "potential");
  v->network().initialize(rng);
  potential_ = std::move(v);
  if (cfg.kinetic == KineticKind::Mlp) {
    auto k = std::make_unique<NetworkEnergy>(cfg.dim, cfg.hidden, cfg.activation, "kinetic");
    k->network().initialize(rng);
    kinetic_ = std::move(k);
  } else {
    kinetic_ = std::make_unique<QuadraticEnergy>(cfg.dim, cfg.mass_jitter, cfg.learn_mass, "kinetic");
  }
}

std::vector<ad::Parameter*> HamiltonianFlow::parameters() {
  auto out = encoder_.parameters();
  for (auto* p : potential_->parameters()) out.push_back(p);
  for (auto* p : kinetic_->parameters()) out.push_back(p);
  return out;
}

std::vector<const ad::Parameter*> HamiltonianFlow::parameters() const {
  auto out = encoder_.parameters();
  for (const auto* p : std::as_const(*potential_).parameters()) out.push_back(p);
  for (const auto* p : std::as_const(*kinetic_).parameters()) out.push_back(p);
  return out;
}

std::size_t HamiltonianFlow::parameter_count() const {
  std::size_t n = 0;
  for (const auto* p : parameters()) n += static_cast<std::size_t>(p->size());
  return n;
}

double apply_gradient_step(ad::Graph& g, ad::Var loss, std::span<ad::Parameter* const> params,
                           AdamState& adam, int epoch) {
  const double value = loss.scalar();
  if (!std::isfinite(value)) throw DivergenceError("non-finite loss", epoch);
  g.backward(loss);
  for (ad::Parameter* p : params) {
    p->grad = g.parameter_gradient(*p);
    if (!p->grad.allFinite()) throw DivergenceError("non-finite gradient for '" + p->name + "'", epoch);
  }
  adam_step(adam, params);
  return value;
}

std::vector<ad::Matrix> snapshot(std::span<ad::Parameter* const> params) {
  std::vector<ad::Matrix> out;
  out.reserve(params.size());
  for (const ad::Parameter* p : params) out.push_back(p->value);
  return out;
}

void restore(std::span<ad::Parameter* const> params, const std::vector<ad::Matrix>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace hamflow
