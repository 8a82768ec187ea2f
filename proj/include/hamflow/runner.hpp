#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>

#include "hamflow/config.hpp"
#include "hamflow/cosmology.hpp"
#include "hamflow/nhf_bayes.hpp"
#include "hamflow/nhf_generative.hpp"

namespace hamflow::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDivergence = 3;

struct RunOptions {
  int jobs = 1;                ///< concurrent sweep cells
  std::ostream* log = nullptr;  ///< progress and warnings; silent when null
  /// Use this directory instead of out_dir/<mode>-<hash>-<timestamp>.
  std::filesystem::path run_dir;
};

struct RunOutcome {
  int exit_code = kExitOk;
  std::filesystem::path run_dir;
  nlohmann::json result;  ///< also written to run_dir/result.json
  std::string message;    ///< error text when exit_code != 0
};

/// Validates `cfg`, creates the run directory with its manifest and executes the mode.
/// Never throws for configuration or divergence problems; they map to exit codes 2 and 3.
RunOutcome run(const RunConfig& cfg, const RunOptions& options = {});

/// Independent seed stream `stream` derived from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Model factories shared by the modes (and by checkpoint readers).
std::unique_ptr<GenerativeNHF> build_generative(const RunConfig& cfg);
cosmo::SupernovaDataset build_supernova_dataset(const RunConfig& cfg);
std::unique_ptr<Likelihood> build_likelihood(const RunConfig& cfg);
std::unique_ptr<BayesNHF> build_bayes(const RunConfig& cfg);

/// Training samples for train-gen: the dataset file, or target.n mixture draws with the run seed.
ad::Matrix training_data(const RunConfig& cfg);

/// Column names x1..xD, or (omega_m, h) for the cosmology likelihood.
std::vector<std::string> parameter_names(const RunConfig& cfg);

}  // namespace hamflow::cli
