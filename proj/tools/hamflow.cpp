// hamflow: command-line entry point.
//
//   hamflow <mode> [--config FILE] [--preset NAME] [--seed N] [--jobs K] [--out DIR] ...
//
// Precedence: built-in defaults < preset < config file < flags.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "hamflow/config.hpp"
#include "hamflow/errors.hpp"
#include "hamflow/runner.hpp"

namespace {

using namespace hamflow;
using namespace hamflow::cli;

struct Flags {
  std::string config;
  std::string preset;
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out;
  std::optional<int> epochs;
  std::optional<int> samples;
  std::string checkpoint;
  std::string dataset;
  std::vector<std::string> overrides;
  bool print_config = false;
  bool quiet = false;
};

void add_common(CLI::App* sub, Flags& f) {
  sub->add_option("-c,--config", f.config, "JSON run configuration (or a manifest.json to replay)");
  sub->add_option("-p,--preset", f.preset, "Base preset: mixture-desk, mixture-paper, cosmo-desk, cosmo-paper");
  sub->add_option("--seed", f.seed, "Run seed");
  sub->add_option("-j,--jobs", f.jobs, "Concurrent sweep cells")->check(CLI::PositiveNumber);
  sub->add_option("-o,--out", f.out, "Parent directory for run directories (io.out_dir)");
  sub->add_option("--set", f.overrides, "Override any field, e.g. --set leapfrog.steps=10")->take_all();
  sub->add_flag("--print-config", f.print_config, "Print the resolved configuration and exit");
  sub->add_flag("-q,--quiet", f.quiet, "No progress output");
}

RunConfig resolve(Mode mode, const Flags& f) {
  RunConfig cfg;
  if (!f.preset.empty()) cfg = preset(f.preset);
  if (!f.config.empty()) cfg = load_config(f.config, cfg);
  cfg.mode = mode;
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.io.out_dir = f.out;
  if (f.epochs) cfg.optimizer.epochs = *f.epochs;
  if (f.samples) cfg.sampling.n = *f.samples;
  if (!f.checkpoint.empty()) cfg.io.checkpoint = f.checkpoint;
  if (!f.dataset.empty()) {
    cfg.io.dataset = f.dataset;
    cfg.target.kind = "file";
  }
  if (!f.overrides.empty()) cfg = apply_overrides(cfg, f.overrides);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural Hamiltonian Flows: generative and Bayesian samplers, HMC baseline, diagnostics"};
  app.require_subcommand(1);
  Flags flags;

  struct ModeSpec {
    const char* name;
    const char* help;
  };
  const ModeSpec specs[] = {
      {"gen-data", "Draw a training dataset from the target mixture"},
      {"train-gen", "Train a generative flow on a dataset"},
      {"sample", "Draw samples from a trained checkpoint"},
      {"train-bayes", "Train a flow on a posterior (KL or inference ELBO)"},
      {"hmc", "Reference HMC chain on the same posterior"},
      {"diagnose", "Dump potential and density grids for a checkpoint"},
      {"sweep", "Train one flow per (kinetic, H, L, T) cell"},
      {"cosmo-sim", "Synthesize a supernova dataset"},
  };
  std::vector<CLI::App*> subs;
  for (const auto& s : specs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    add_common(sub, flags);
    const std::string name = s.name;
    if (name == "train-gen" || name == "train-bayes" || name == "sweep") {
      sub->add_option("--epochs", flags.epochs, "Training epochs (optimizer.epochs)");
    }
    if (name == "train-gen" || name == "sweep") {
      sub->add_option("--dataset", flags.dataset, "Training samples CSV instead of fresh mixture draws");
    }
    if (name == "sample" || name == "diagnose") {
      sub->add_option("--checkpoint", flags.checkpoint, "checkpoint.json of a training run");
    }
    if (name == "sample" || name == "diagnose" || name == "train-gen" || name == "train-bayes") {
      sub->add_option("-n,--samples", flags.samples, "Number of samples to draw (sampling.n)");
    }
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  const CLI::App* chosen = nullptr;
  for (const auto* s : subs) {
    if (s->parsed()) chosen = s;
  }
  try {
    const RunConfig cfg = resolve(mode_from_string(chosen->get_name()), flags);
    if (flags.print_config) {
      std::cout << to_json(cfg).dump(2) << '\n';
      cfg.validate(false);
      return kExitOk;
    }
    RunOptions opts;
    opts.jobs = flags.jobs;
    opts.log = flags.quiet ? nullptr : &std::cerr;
    const RunOutcome out = run(cfg, opts);
    if (!out.run_dir.empty()) std::cout << out.run_dir.string() << '\n';
    if (out.exit_code != kExitOk) std::cerr << "hamflow: " << out.message << '\n';
    return out.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "hamflow: config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "hamflow: " << e.what() << '\n';
    return kExitFailure;
  }
}
