#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hamflow {

/// Invalid configuration or mismatched dimensions.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// API misuse (e.g. differentiating a node that belongs to another graph).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Non-finite gradient encountered during leapfrog integration.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, int step)
      : std::runtime_error(what + " (leapfrog step " + std::to_string(step) + ")"), step_(step) {}
  int step() const noexcept { return step_; }

 private:
  int step_;
};

/// Non-finite encoder output.
class EncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite per-sample loss term.
class LossError : public std::runtime_error {
 public:
  LossError(const std::string& what, std::size_t sample)
      : std::runtime_error(what + " (sample " + std::to_string(sample) + ")"), sample_(sample) {}
  std::size_t sample() const noexcept { return sample_; }

 private:
  std::size_t sample_;
};

/// Training produced a non-finite loss. Parameters are left at the last good values.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, int epoch)
      : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"), epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// Sampler diagnostic failure (e.g. nothing accepted during burn-in).
class SamplerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hamflow
