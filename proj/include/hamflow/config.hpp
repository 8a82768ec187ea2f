#pragma once
// Run configuration: one JSON document per experiment. Every section is optional; missing
// fields keep their defaults. Unknown keys are rejected so typos surface as config errors.

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "hamflow/flow.hpp"
#include "hamflow/hmc.hpp"
#include "hamflow/nhf_bayes.hpp"

namespace hamflow::cli {

enum class Mode { GenData, TrainGen, Sample, TrainBayes, Hmc, Diagnose, Sweep, CosmoSim };

Mode mode_from_string(const std::string& name);
std::string to_string(Mode m);
const std::vector<std::string>& mode_names();

struct ModelSection {
  std::string kinetic = "mlp";
  int dim = 2;
  int hidden = 32;
  int encoder_hidden = 0;  ///< 0: same as hidden
  bool learn_mass = true;
  double mass_jitter = 1e-4;
  std::string activation = "tanh";

  bool operator==(const ModelSection&) const = default;
};

struct LeapfrogSection {
  int steps = 5;
  double time = 1.0;

  bool operator==(const LeapfrogSection&) const = default;
};

/// Base distribution pi_0 over positions.
struct PriorSection {
  std::string kind = "soft-uniform";  ///< soft-uniform | gaussian | uniform-box
  double half_width = 3.0;
  double sigma = 1.0;
  double lo = 0.0;
  double hi = 1.0;

  bool operator==(const PriorSection&) const = default;
};

/// Generative target: the Gaussian mixture, or a dataset file (io.dataset).
struct TargetSection {
  std::string kind = "mixture";  ///< mixture | file
  double spacing = 2.0;
  double sigma = 0.5;
  std::vector<std::vector<double>> centers;  ///< overrides the 3x3 grid when non-empty
  int n = 5000;

  bool operator==(const TargetSection&) const = default;
};

/// Bayesian likelihood. "cosmology" uses the supernova model; "gaussian" observes theta
/// directly with isotropic noise.
struct LikelihoodSection {
  std::string kind = "cosmology";  ///< cosmology | gaussian
  std::vector<double> observed;
  double sigma = 1.0;

  bool operator==(const LikelihoodSection&) const = default;
};

struct CosmologySection {
  double omega_m = 0.3;
  double h = 0.7;
  int n_sn = 50;
  double z_min = 0.02;
  double z_max = 1.4;
  double noise_sigma = 0.15;
  std::uint64_t data_seed = 7;
  std::string dataset;     ///< z,mu CSV; synthesized when empty
  std::string covariance;  ///< dense covariance CSV; noise_sigma^2 I when empty

  bool operator==(const CosmologySection&) const = default;
};

struct BayesSection {
  std::string objective = "kl";
  std::string constraint = "sigmoid";
  double momentum_sigma = 1.0;  ///< g = N(0, momentum_sigma^2 I)

  bool operator==(const BayesSection&) const = default;
};

struct OptimizerSection {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 512;
  int epochs = 3000;
  int momentum_draws = 1;  ///< encoder draws per position (train-gen)

  bool operator==(const OptimizerSection&) const = default;
};

struct SamplingSection {
  int n = 10000;
  std::uint64_t seed = 12345;
  bool zero_momentum = false;

  bool operator==(const SamplingSection&) const = default;
};

struct HmcSection {
  double step_size = 0.05;
  int n_leapfrog = 20;
  int n_samples = 10000;
  int n_burnin = 2000;
  bool adapt = true;
  double target_acceptance = 0.75;
  std::vector<double> init;  ///< parameter-space start; posterior-free default when empty

  bool operator==(const HmcSection&) const = default;
};

struct DiagnosticsSection {
  double x_min = -5.0;
  double x_max = 5.0;
  double y_min = -5.0;
  double y_max = 5.0;
  int resolution = 128;
  double bandwidth = 0.0;  ///< <= 0: Silverman
  bool png = true;

  bool operator==(const DiagnosticsSection&) const = default;
};

struct SweepSection {
  std::vector<int> hidden{8, 32, 128};
  std::vector<int> steps{1, 2, 10, 50};
  std::vector<double> time{0.1, 1.0, 10.0};
  std::vector<std::string> kinetic{"mlp", "fixed"};
  int window = 500;

  bool operator==(const SweepSection&) const = default;
};

struct IoSection {
  std::string out_dir = "runs";
  std::string dataset;     ///< input samples CSV (train-gen with target.kind = file)
  std::string checkpoint;  ///< input checkpoint (sample, diagnose)
  std::string samples;     ///< input samples CSV for diagnose; drawn from the model when empty

  bool operator==(const IoSection&) const = default;
};

struct RunConfig {
  Mode mode = Mode::TrainGen;
  std::string preset;
  std::uint64_t seed = 1;
  ModelSection model;
  LeapfrogSection leapfrog;
  PriorSection prior;
  TargetSection target;
  LikelihoodSection likelihood;
  CosmologySection cosmology;
  BayesSection bayes;
  OptimizerSection optimizer;
  SamplingSection sampling;
  HmcSection hmc;
  DiagnosticsSection diagnostics;
  SweepSection sweep;
  IoSection io;

  bool operator==(const RunConfig&) const = default;

  /// Field-level range and consistency checks; throws ConfigError naming the field.
  /// `check_paths` also requires every referenced input file to exist.
  void validate(bool check_paths = true) const;

  FlowConfig flow_config() const;
  AdamOptions adam_options() const;
  HmcConfig hmc_config() const;
};

nlohmann::json to_json(const RunConfig& cfg);
/// Parses on top of `base` (defaults when omitted). Throws ConfigError with the JSON path of
/// the offending field.
RunConfig from_json(const nlohmann::json& j, const RunConfig& base = {});

/// Reads a config file (or a run manifest, whose embedded config is used verbatim). Fields
/// absent from the file come from the preset it names, else from `base`.
RunConfig load_config(const std::string& path, const RunConfig& base = {});
void save_config(const RunConfig& cfg, const std::string& path);

/// Named presets: mixture-desk, mixture-paper, cosmo-desk, cosmo-paper.
RunConfig preset(const std::string& name);
const std::vector<std::string>& preset_names();

/// Applies "a.b.c=value" overrides; value is parsed as JSON, falling back to a string.
RunConfig apply_overrides(const RunConfig& cfg, const std::vector<std::string>& assignments);

/// Stable short hex digest of the canonical JSON form.
std::string config_hash(const RunConfig& cfg);

std::unique_ptr<Prior> make_prior(const PriorSection& s, int dim);
GaussianMixture make_mixture(const TargetSection& s);

}  // namespace hamflow::cli
