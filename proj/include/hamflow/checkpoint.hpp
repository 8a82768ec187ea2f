#pragma once

#include <json.hpp>

#include <random>
#include <span>
#include <string>
#include <vector>

#include "hamflow/adam.hpp"
#include "hamflow/autodiff.hpp"

namespace hamflow {

/// Everything needed to resume or replay a training run. Stored as JSON; doubles are written
/// in shortest round-trip form, so save/load is bitwise.
struct Checkpoint {
  static constexpr int kVersion = 1;

  int epoch = 0;
  nlohmann::json config;
  std::vector<std::string> names;
  std::vector<ad::Matrix> values;
  std::string rng_state;
  AdamState adam;

  static Checkpoint capture(std::span<ad::Parameter* const> params, const AdamState& adam,
                            const std::mt19937_64& rng, int epoch, nlohmann::json config);

  /// Copies values into `params` (names and shapes must match). Optimizer and RNG state are
  /// restored when the pointers are non-null.
  void apply(std::span<ad::Parameter* const> params, AdamState* adam = nullptr,
             std::mt19937_64* rng = nullptr) const;

  void write(const std::string& path) const;
  static Checkpoint read(const std::string& path);
};

nlohmann::json matrix_to_json(const ad::Matrix& m);
ad::Matrix matrix_from_json(const nlohmann::json& j);

}  // namespace hamflow
