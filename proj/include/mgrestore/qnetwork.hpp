#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "mgrestore/errors.hpp"
#include "mgrestore/random.hpp"

namespace mgrestore {

// Fully connected layer; weights are row-major [out][in].
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> biases;

  double& w(std::size_t o, std::size_t i) { return weights[o * inputs + i]; }
  double w(std::size_t o, std::size_t i) const { return weights[o * inputs + i]; }

  bool operator==(const DenseLayer&) const = default;
};

/// Multilayer perceptron mapping an observation to one value per action:
/// rectifier hidden layers, linear output.
class QNetwork {
 public:
  QNetwork() = default;

  // Zero-initialized network with the given layer widths (input first).
  explicit QNetwork(std::vector<std::size_t> widths) {
    if (widths.size() < 2) throw DimensionError("a network needs at least input and output widths");
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
      DenseLayer layer;
      layer.inputs = widths[l];
      layer.outputs = widths[l + 1];
      layer.weights.assign(layer.inputs * layer.outputs, 0.0);
      layer.biases.assign(layer.outputs, 0.0);
      layers_.push_back(std::move(layer));
    }
  }

  // Uniform initialization in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases.
  template <class URBG>
  static QNetwork random(std::vector<std::size_t> widths, URBG& rng) {
    QNetwork net(std::move(widths));
    for (auto& layer : net.layers_) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(layer.inputs));
      for (auto& w : layer.weights) w = uniform_real(rng, -bound, bound);
      for (auto& b : layer.biases) b = uniform_real(rng, -bound, bound);
    }
    return net;
  }

  std::size_t input_size() const { return layers_.empty() ? 0 : layers_.front().inputs; }
  std::size_t output_size() const { return layers_.empty() ? 0 : layers_.back().outputs; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }

  std::vector<std::size_t> widths() const {
    std::vector<std::size_t> w;
    if (layers_.empty()) return w;
    w.push_back(layers_.front().inputs);
    for (const auto& l : layers_) w.push_back(l.outputs);
    return w;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.weights.size() + l.biases.size();
    return n;
  }

  bool finite() const {
    for (const auto& l : layers_) {
      for (double w : l.weights)
        if (!std::isfinite(w)) return false;
      for (double b : l.biases)
        if (!std::isfinite(b)) return false;
    }
    return true;
  }

  std::vector<double> forward(std::span<const double> input) const {
    Activations act;
    forward(input, act);
    return act.back();
  }

  // Per-layer outputs (post-activation), input first; used by backprop.
  using Activations = std::vector<std::vector<double>>;

  void forward(std::span<const double> input, Activations& act) const {
    if (input.size() != input_size())
      throw DimensionError("network expects " + std::to_string(input_size()) + " inputs, got " +
                           std::to_string(input.size()));
    act.resize(layers_.size() + 1);
    act[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const auto& layer = layers_[l];
      const auto& x = act[l];
      auto& y = act[l + 1];
      y.assign(layer.biases.begin(), layer.biases.end());
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        const double* row = &layer.weights[o * layer.inputs];
        double sum = y[o];
        for (std::size_t i = 0; i < layer.inputs; ++i) sum += row[i] * x[i];
        y[o] = sum;
      }
      if (l + 1 < layers_.size())
        for (auto& v : y) v = std::max(v, 0.0);
    }
  }

  // Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
  void backward(const Activations& act, std::span<const double> output_grad,
                std::vector<DenseLayer>& grad) const {
    std::vector<double> delta(output_grad.begin(), output_grad.end());
    std::vector<double> prev;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const auto& layer = layers_[l];
      auto& g = grad[l];
      const auto& x = act[l];
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        if (delta[o] == 0.0) continue;
        g.biases[o] += delta[o];
        double* row = &g.weights[o * layer.inputs];
        for (std::size_t i = 0; i < layer.inputs; ++i) row[i] += delta[o] * x[i];
      }
      if (l == 0) break;
      prev.assign(layer.inputs, 0.0);
      for (std::size_t o = 0; o < layer.outputs; ++o) {
        if (delta[o] == 0.0) continue;
        const double* row = &layer.weights[o * layer.inputs];
        for (std::size_t i = 0; i < layer.inputs; ++i) prev[i] += delta[o] * row[i];
      }
      // Rectifier derivative on the hidden layer feeding this one.
      for (std::size_t i = 0; i < layer.inputs; ++i)
        if (x[i] <= 0.0) prev[i] = 0.0;
      delta.swap(prev);
    }
  }

  // Gradient buffer shaped like this network, zero-filled.
  std::vector<DenseLayer> zero_gradient() const {
    std::vector<DenseLayer> g = layers_;
    for (auto& l : g) {
      std::fill(l.weights.begin(), l.weights.end(), 0.0);
      std::fill(l.biases.begin(), l.biases.end(), 0.0);
    }
    return g;
  }

  void apply_gradient(const std::vector<DenseLayer>& grad, double step) {
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      for (std::size_t k = 0; k < layers_[l].weights.size(); ++k)
        layers_[l].weights[k] -= step * grad[l].weights[k];
      for (std::size_t k = 0; k < layers_[l].biases.size(); ++k)
        layers_[l].biases[k] -= step * grad[l].biases[k];
    }
  }

  bool operator==(const QNetwork&) const = default;

 private:
  std::vector<DenseLayer> layers_;
};

}  // namespace mgrestore
