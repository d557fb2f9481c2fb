#pragma once

// Full-precision reference network. Written independently of the engine: the
// backward pass applies the chain rule un-split, as dE/dY_{i+1} times the
// Jacobian entries dY_{i+1}/dY_i = f'_{i+1} W_{i+1} and dY_i/dW_i = f'_i X_i,
// in scatter form, without ever materializing the G_i signals.

#include <cstdint>
#include <span>
#include <vector>

#include "fxtrain/data.hpp"
#include "fxtrain/netgraph.hpp"
#include "fxtrain/run_record.hpp"

namespace fxtrain::oracle {

struct FloatNet {
  net::NetworkConfig config;
  net::ShapeReport shapes;
  std::vector<std::vector<double>> weights;  // per layer, layouts as net::init_weights
  std::vector<std::vector<double>> biases;   // per layer; empty unless use_bias
};

FloatNet make_float_net(const net::NetworkConfig& config);
FloatNet make_float_net(const net::NetworkConfig& config, std::vector<std::vector<double>> weights);

/// Per-layer pre-activations and outputs from one forward pass, plus the
/// activation pattern (ReLU signs, pool argmax) that decides differentiability.
struct ForwardTrace {
  std::vector<std::vector<double>> z;
  std::vector<std::vector<double>> y;
  std::vector<std::vector<std::uint32_t>> argmax;
  std::vector<std::uint32_t> pattern;
};

std::vector<double> float_forward(const FloatNet& net, std::span<const double> input, ForwardTrace* trace = nullptr);

/// Softmax cross-entropy of the network's logits.
double float_loss(const FloatNet& net, std::span<const double> input, int label);

struct Gradients {
  double loss = 0;
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

Gradients oracle_backprop(const FloatNet& net, std::span<const double> input, int label);

struct FiniteDiff {
  std::vector<std::vector<double>> weights;
  /// 1 where perturbing the weight by +-eps changes a ReLU sign or a pool
  /// argmax; the loss is not differentiable there and the entry is excluded.
  std::vector<std::vector<std::uint8_t>> excluded;
};

/// Central differences (L(w+eps) - L(w-eps)) / 2eps for every weight.
FiniteDiff finite_diff(const FloatNet& net, std::span<const double> input, int label, double eps);

double float_evaluate(const FloatNet& net, const data::Dataset& test);

struct FloatTrainResult {
  RunRecord record;
  FloatNet net;
};

/// Same loop, sampler stream and initialization as engine::train, in float64.
FloatTrainResult float_train(const net::NetworkConfig& config, const data::Dataset& train_set,
                             const TrainOptions& options);

}  // namespace fxtrain::oracle
