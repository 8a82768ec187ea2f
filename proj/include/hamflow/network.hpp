#pragma once

#include <random>
#include <string>
#include <vector>

#include "hamflow/autodiff.hpp"

namespace hamflow {

enum class Activation { Tanh, Softplus };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

/// Fully connected network with a nonlinearity between layers and a linear output layer.
///
/// Layer l maps row-batched inputs X (N x in) to X W^T + b with W stored out x in and b as a
/// 1 x out row. Both the output and, for scalar networks, the input gradient are built from
/// first-order graph primitives, so a loss containing the input gradient is differentiated
/// with a single reverse sweep.
class DenseNetwork {
 public:
  DenseNetwork() = default;
  /// `sizes` lists layer widths including input and output, e.g. {2, 32, 32, 1}.
  explicit DenseNetwork(std::vector<int> sizes, Activation activation = Activation::Tanh,
                        const std::string& name = "net");

  /// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
  void initialize(std::mt19937_64& rng);
  /// Sets every weight and bias to zero.
  void zero();

  ad::Var forward(ad::Graph& g, ad::Var x) const;
  /// d(net)/dx for a scalar-output network, one gradient row per input row.
  ad::Var input_gradient(ad::Graph& g, ad::Var x) const;

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& layer_sizes() const { return sizes_; }
  Activation activation() const { return activation_; }

  std::vector<ad::Parameter*> parameters();
  std::vector<const ad::Parameter*> parameters() const;
  std::size_t parameter_count() const;

 private:
  struct Layer {
    ad::Parameter weight;
    ad::Parameter bias;
  };

  void check_input(ad::Var x) const;
  ad::Var activate(ad::Var z) const;
  /// act'(z) given z and act(z).
  ad::Var activation_derivative(ad::Var z, ad::Var a) const;

  std::vector<int> sizes_;
  Activation activation_ = Activation::Tanh;
  std::vector<Layer> layers_;
};

}  // namespace hamflow
