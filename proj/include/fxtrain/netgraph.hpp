#pragma once

// Network topology, activation functions and the LeNet presets.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fxtrain/qnum.hpp"

namespace fxtrain::net {

using qnum::QFormat;
using qnum::QValue;

enum class Activation { identity, relu, sigmoid, tanh };
enum class PoolKind { max, avg };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

// Real-arithmetic activation unit. Tanh and every derivative are built from
// the sigmoid primitive: tanh(x) = 2 s(2x) - 1, s'(x) = s(x)(1 - s(x)),
// tanh'(x) = 4 s'(2x); relu'(0) = 0.
double sigmoid(double x) noexcept;
double activate_real(Activation kind, double x) noexcept;
double activate_deriv_real(Activation kind, double x) noexcept;

// Quantized activation unit: the sigmoid is evaluated in double and quantized
// (a lookup-style block); the identities above then run in fixed point.
QValue activate(Activation kind, const QValue& x, QFormat out_fmt);
QValue activate_deriv(Activation kind, const QValue& x, QFormat out_fmt);

/// Channel-planar tensor shape (depth, rows, cols). Vectors are {n, 1, 1}.
struct Shape {
  int depth = 1;
  int rows = 1;
  int cols = 1;

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(depth) * static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
  std::string to_string() const;
  friend bool operator==(const Shape&, const Shape&) = default;
};

struct ConvSpec {
  int in_h = 0;
  int in_w = 0;
  int in_d = 0;
  int kernel = 0;
  int filters = 0;
  Activation activation = Activation::relu;
  QFormat fmt{2, 12};

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

struct PoolSpec {
  int window = 2;
  int stride = 2;
  PoolKind kind = PoolKind::max;

  friend bool operator==(const PoolSpec&, const PoolSpec&) = default;
};

struct DenseSpec {
  int in_n = 0;
  int out_n = 0;
  Activation activation = Activation::sigmoid;
  QFormat fmt{2, 12};

  friend bool operator==(const DenseSpec&, const DenseSpec&) = default;
};

using LayerSpec = std::variant<ConvSpec, PoolSpec, DenseSpec>;

bool has_weights(const LayerSpec& layer) noexcept;
std::optional<QFormat> layer_format(const LayerSpec& layer) noexcept;
std::string_view layer_kind(const LayerSpec& layer) noexcept;

struct NetworkConfig {
  std::vector<LayerSpec> layers;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  bool use_bias = false;
  /// Dataset family the network is shaped for: "mnist", "cifar10", "svhn_idx"
  /// or empty for hand-built networks.
  std::string dataset;

  std::vector<QFormat> formats() const;
  /// Replaces the per-layer formats of the weight-bearing layers, in order.
  void set_formats(const std::vector<QFormat>& formats);
  std::size_t weight_layer_count() const noexcept;

  friend bool operator==(const NetworkConfig&, const NetworkConfig&) = default;
};

struct LayerShape {
  std::string name;  // e.g. "conv1", "pool2", "dense5"
  Shape in;
  Shape out;
  /// Format values leaving this layer are stored in. Pool layers inherit the
  /// format of whatever feeds them.
  QFormat fmt{2, 12};
};

struct ShapeReport {
  Shape input;
  QFormat input_fmt{2, 12};
  std::vector<LayerShape> layers;

  const Shape& output() const { return layers.back().out; }
};

/// Walks the layer list; throws shape_mismatch naming both layers on the first
/// incompatibility, invalid_config for malformed layers.
ShapeReport validate(const NetworkConfig& config);

enum class Dataset { mnist, cifar10, svhn_idx };
Dataset parse_dataset(std::string_view name);
std::string_view to_string(Dataset d) noexcept;

/// LeNet: conv 6@5x5, maxpool 2x2, conv 16@5x5, maxpool 2x2, dense 120, 84, 10.
/// ReLU on conv layers, sigmoid on hidden dense layers, identity logits.
NetworkConfig lenet_preset(Dataset dataset);
NetworkConfig lenet_preset(std::string_view dataset);

/// Per-layer (I,F) formats of the five weight-bearing LeNet layers.
std::vector<QFormat> table_formats(Dataset dataset);

/// Real-valued initial weights, uniform in +-sqrt(6/(fan_in+fan_out)), one
/// vector per layer (empty for pool layers). Conv weights are laid out
/// [filter][channel][ky][kx], dense weights [out][in].
std::vector<std::vector<double>> init_weights(const NetworkConfig& config);

}  // namespace fxtrain::net
