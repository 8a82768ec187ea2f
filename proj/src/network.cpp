#include "hamflow/network.hpp"

#include <cmath>

#include "hamflow/errors.hpp"

namespace hamflow {

using ad::Graph;
using ad::Matrix;
using ad::Var;

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "softplus") return Activation::Softplus;
  throw ConfigError("unknown activation '" + name + "'");
}

std::string to_string(Activation a) { return a == Activation::Tanh ? "tanh" : "softplus"; }

DenseNetwork::DenseNetwork(std::vector<int> sizes, Activation activation, const std::string& name)
    : sizes_(std::move(sizes)), activation_(activation) {
  if (sizes_.size() < 2) throw ConfigError(name + ": a network needs at least two layer sizes");
  for (int s : sizes_) {
    if (s < 1) throw ConfigError(name + ": layer sizes must be positive");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const std::string prefix = name + ".layer" + std::to_string(l);
    layers_.push_back(Layer{ad::Parameter(prefix + ".weight", Matrix::Zero(sizes_[l + 1], sizes_[l])),
                            ad::Parameter(prefix + ".bias", Matrix::Zero(1, sizes_[l + 1]))});
  }
}

void DenseNetwork::initialize(std::mt19937_64& rng) {
  for (auto& layer : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(layer.weight.value.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (ad::Index r = 0; r < layer.weight.value.rows(); ++r) {
      for (ad::Index c = 0; c < layer.weight.value.cols(); ++c) layer.weight.value(r, c) = u(rng);
    }
    layer.bias.value.setZero();
  }
}

void DenseNetwork::zero() {
  for (auto& layer : layers_) {
    layer.weight.value.setZero();
    layer.bias.value.setZero();
  }
}

void DenseNetwork::check_input(Var x) const {
  if (x.cols() != sizes_.front()) {
    throw ConfigError("network input has " + std::to_string(x.cols()) + " columns, expected " +
                      std::to_string(sizes_.front()));
  }
}

Var DenseNetwork::activate(Var z) const {
  switch (activation_) {
    case Activation::Tanh:
      return ad::tanh(z);
    case Activation::Softplus:
      // softplus(z) = -log_sigmoid(-z)
      return -ad::log_sigmoid(-z);
  }
  return z;
}

Var DenseNetwork::activation_derivative(Var z, Var a) const {
  switch (activation_) {
    case Activation::Tanh:
      return 1.0 - ad::square(a);
    case Activation::Softplus:
      return ad::sigmoid(z);
  }
  return z;
}

Var DenseNetwork::forward(Graph& g, Var x) const {
  check_input(x);
  const ad::Index n = x.rows();
  Var h = x;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Var w = g.parameter(layers_[l].weight);
    Var b = g.parameter(layers_[l].bias);
    Var z = ad::matmul_nt(h, w) + ad::broadcast_rows(b, n);
    h = (l + 1 < layers_.size()) ? activate(z) : z;
  }
  return h;
}

Var DenseNetwork::input_gradient(Graph& g, Var x) const {
  if (sizes_.back() != 1) {
    throw UsageError("input_gradient requires a scalar-output network, output size is " +
                     std::to_string(sizes_.back()));
  }
  check_input(x);
  const ad::Index n = x.rows();

  // Forward pass, keeping pre-activations and activations of the hidden layers.
  std::vector<Var> pre;
  std::vector<Var> post;
  Var h = x;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    Var z = ad::matmul_nt(h, g.parameter(layers_[l].weight)) + ad::broadcast_rows(g.parameter(layers_[l].bias), n);
    pre.push_back(z);
    h = activate(z);
    post.push_back(h);
  }

  // Reverse Jacobian recurrence: G_{l-1} = (G_l * act'(Z_l)) W_l, starting from the output row.
  Var grad = ad::broadcast_rows(g.parameter(layers_.back().weight), n);
  for (std::size_t l = layers_.size() - 1; l-- > 0;) {
    Var delta = ad::mul(grad, activation_derivative(pre[l], post[l]));
    grad = ad::matmul(delta, g.parameter(layers_[l].weight));
  }
  return grad;
}

std::vector<ad::Parameter*> DenseNetwork::parameters() {
  std::vector<ad::Parameter*> out;
  for (auto& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

std::vector<const ad::Parameter*> DenseNetwork::parameters() const {
  std::vector<const ad::Parameter*> out;
  for (const auto& layer : layers_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  return out;
}

std::size_t DenseNetwork::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

}  // namespace hamflow
