#include "fxtrain/netgraph.hpp"

#include <cmath>

#include "fxtrain/random.hpp"

namespace fxtrain::net {

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "identity" || name == "linear" || name == "none") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  throw Error(Errc::invalid_config, "unknown activation \"" + std::string(name) + "\"");
}

double sigmoid(double x) noexcept {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double activate_real(Activation kind, double x) noexcept {
  switch (kind) {
    case Activation::identity: return x;
    case Activation::relu: return x > 0 ? x : 0.0;
    case Activation::sigmoid: return sigmoid(x);
    case Activation::tanh: return 2.0 * sigmoid(2.0 * x) - 1.0;
  }
  return x;
}

double activate_deriv_real(Activation kind, double x) noexcept {
  switch (kind) {
    case Activation::identity: return 1.0;
    case Activation::relu: return x > 0 ? 1.0 : 0.0;
    case Activation::sigmoid: {
      const double s = sigmoid(x);
      return s * (1.0 - s);
    }
    case Activation::tanh: {
      const double s = sigmoid(2.0 * x);
      return 4.0 * s * (1.0 - s);
    }
  }
  return 1.0;
}

namespace {

// s and 1 - s share the output format; 1 is one past the top of a (0,F)
// format, so the subtraction runs in the wide domain and saturates.
QValue one_minus(const QValue& s) {
  const qnum::wide_t one = qnum::wide_t{1} << s.fmt().frac_bits();
  return QValue::from_raw(one - s.raw(), s.fmt());
}

QValue times_small_int(const QValue& v, int factor) {
  return QValue::from_raw(qnum::wide_t{v.raw()} * factor, v.fmt());
}

}  // namespace

QValue activate(Activation kind, const QValue& x, QFormat out_fmt) {
  switch (kind) {
    case Activation::identity: return qnum::requantize(x, out_fmt);
    case Activation::relu: return x.raw() > 0 ? qnum::requantize(x, out_fmt) : QValue::zero(out_fmt);
    case Activation::sigmoid: return qnum::quantize(sigmoid(x.to_real()), out_fmt);
    case Activation::tanh: {
      const QValue s = qnum::quantize(sigmoid(2.0 * x.to_real()), out_fmt);
      const qnum::wide_t one = qnum::wide_t{1} << out_fmt.frac_bits();
      return QValue::from_raw(2 * qnum::wide_t{s.raw()} - one, out_fmt);
    }
  }
  return x;
}

QValue activate_deriv(Activation kind, const QValue& x, QFormat out_fmt) {
  switch (kind) {
    case Activation::identity: return qnum::quantize(1.0, out_fmt);
    case Activation::relu: return qnum::quantize(x.raw() > 0 ? 1.0 : 0.0, out_fmt);
    case Activation::sigmoid: {
      const QValue s = qnum::quantize(sigmoid(x.to_real()), out_fmt);
      return qnum::q_mul(s, one_minus(s), out_fmt);
    }
    case Activation::tanh: {
      const QValue s = qnum::quantize(sigmoid(2.0 * x.to_real()), out_fmt);
      return times_small_int(qnum::q_mul(s, one_minus(s), out_fmt), 4);
    }
  }
  return x;
}

std::string Shape::to_string() const {
  return std::to_string(rows) + "x" + std::to_string(cols) + "x" + std::to_string(depth);
}

bool has_weights(const LayerSpec& layer) noexcept { return !std::holds_alternative<PoolSpec>(layer); }

std::optional<QFormat> layer_format(const LayerSpec& layer) noexcept {
  if (const auto* c = std::get_if<ConvSpec>(&layer)) return c->fmt;
  if (const auto* d = std::get_if<DenseSpec>(&layer)) return d->fmt;
  return std::nullopt;
}

std::string_view layer_kind(const LayerSpec& layer) noexcept {
  if (std::holds_alternative<ConvSpec>(layer)) return "conv";
  if (std::holds_alternative<PoolSpec>(layer)) return "pool";
  return "dense";
}

std::vector<QFormat> NetworkConfig::formats() const {
  std::vector<QFormat> out;
  for (const auto& l : layers) {
    if (auto f = layer_format(l)) out.push_back(*f);
  }
  return out;
}

std::size_t NetworkConfig::weight_layer_count() const noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += has_weights(l) ? 1 : 0;
  return n;
}

void NetworkConfig::set_formats(const std::vector<QFormat>& formats) {
  if (formats.size() != weight_layer_count()) {
    throw Error(Errc::invalid_config, "expected " + std::to_string(weight_layer_count()) +
                                          " per-layer formats, got " + std::to_string(formats.size()));
  }
  std::size_t next = 0;
  for (auto& l : layers) {
    if (auto* c = std::get_if<ConvSpec>(&l)) c->fmt = formats[next++];
    if (auto* d = std::get_if<DenseSpec>(&l)) d->fmt = formats[next++];
  }
}

namespace {

std::string describe(const LayerSpec& layer, std::size_t index) {
  const std::string name = std::string(layer_kind(layer)) + std::to_string(index + 1);
  if (const auto* c = std::get_if<ConvSpec>(&layer)) {
    return name + " (conv " + std::to_string(c->in_h) + "x" + std::to_string(c->in_w) + "x" +
           std::to_string(c->in_d) + ", " + std::to_string(c->filters) + "@" + std::to_string(c->kernel) + "x" +
           std::to_string(c->kernel) + ")";
  }
  if (const auto* d = std::get_if<DenseSpec>(&layer)) {
    return name + " (dense " + std::to_string(d->in_n) + "->" + std::to_string(d->out_n) + ")";
  }
  const auto& p = std::get<PoolSpec>(layer);
  return name + " (pool " + std::to_string(p.window) + "x" + std::to_string(p.window) + "/" +
         std::to_string(p.stride) + ")";
}

Shape natural_input(const LayerSpec& layer) {
  if (const auto* c = std::get_if<ConvSpec>(&layer)) return {c->in_d, c->in_h, c->in_w};
  if (const auto* d = std::get_if<DenseSpec>(&layer)) return {d->in_n, 1, 1};
  throw Error(Errc::invalid_config, "the first layer must be a conv or dense layer");
}

}  // namespace

ShapeReport validate(const NetworkConfig& config) {
  if (config.layers.empty()) throw Error(Errc::invalid_config, "network has no layers");
  if (!(config.learning_rate > 0) || !std::isfinite(config.learning_rate)) {
    throw Error(Errc::invalid_config, "learning rate must be positive and finite");
  }
  const auto& last = config.layers.back();
  if (!has_weights(last)) throw Error(Errc::invalid_config, "the last layer must carry weights");

  ShapeReport report;
  report.input = natural_input(config.layers.front());
  report.input_fmt = *layer_format(config.layers.front());

  Shape current = report.input;
  QFormat current_fmt = report.input_fmt;
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const auto& layer = config.layers[i];
    LayerShape ls;
    ls.name = std::string(layer_kind(layer)) + std::to_string(i + 1);
    ls.in = current;
    const std::string previous = i == 0 ? std::string("network input") : describe(config.layers[i - 1], i - 1);

    if (const auto* c = std::get_if<ConvSpec>(&layer)) {
      if (c->kernel < 1 || c->filters < 1 || c->in_d < 1 || c->kernel > std::min(c->in_h, c->in_w)) {
        throw Error(Errc::invalid_config, describe(layer, i) + ": kernel must fit inside the input");
      }
      const Shape expect{c->in_d, c->in_h, c->in_w};
      if (expect != current) {
        throw Error(Errc::shape_mismatch, previous + " produces " + current.to_string() + " but " +
                                              describe(layer, i) + " expects " + expect.to_string());
      }
      const std::int64_t fan_in = std::int64_t{c->kernel} * c->kernel * c->in_d;
      if (fan_in > qnum::WideAcc::kMaxTerms) {
        throw Error(Errc::invalid_config, describe(layer, i) + ": fan-in exceeds the accumulator headroom");
      }
      current = {c->filters, c->in_h - c->kernel + 1, c->in_w - c->kernel + 1};
      current_fmt = c->fmt;
    } else if (const auto* d = std::get_if<DenseSpec>(&layer)) {
      if (d->in_n < 1 || d->out_n < 1) throw Error(Errc::invalid_config, describe(layer, i) + ": empty layer");
      if (static_cast<std::size_t>(d->in_n) != current.size()) {
        throw Error(Errc::shape_mismatch, previous + " produces " + std::to_string(current.size()) +
                                              " values but " + describe(layer, i) + " expects " +
                                              std::to_string(d->in_n));
      }
      if (d->in_n > qnum::WideAcc::kMaxTerms) {
        throw Error(Errc::invalid_config, describe(layer, i) + ": fan-in exceeds the accumulator headroom");
      }
      current = {d->out_n, 1, 1};
      current_fmt = d->fmt;
    } else {
      const auto& p = std::get<PoolSpec>(layer);
      if (p.window < 1 || p.stride < 1 || p.window > std::min(current.rows, current.cols)) {
        throw Error(Errc::invalid_config, describe(layer, i) + ": window must fit inside " + current.to_string());
      }
      if (i == 0) throw Error(Errc::invalid_config, "the first layer must be a conv or dense layer");
      current = {current.depth, (current.rows - p.window) / p.stride + 1, (current.cols - p.window) / p.stride + 1};
    }
    ls.out = current;
    ls.fmt = current_fmt;
    report.layers.push_back(ls);
  }
  return report;
}

Dataset parse_dataset(std::string_view name) {
  if (name == "mnist") return Dataset::mnist;
  if (name == "cifar10") return Dataset::cifar10;
  if (name == "svhn_idx" || name == "svhn") return Dataset::svhn_idx;
  throw Error(Errc::invalid_config, "unknown dataset \"" + std::string(name) + "\"");
}

std::string_view to_string(Dataset d) noexcept {
  switch (d) {
    case Dataset::mnist: return "mnist";
    case Dataset::cifar10: return "cifar10";
    case Dataset::svhn_idx: return "svhn_idx";
  }
  return "mnist";
}

std::vector<QFormat> table_formats(Dataset dataset) {
  switch (dataset) {
    case Dataset::mnist: return {{2, 12}, {2, 12}, {2, 12}, {1, 12}, {3, 10}};
    case Dataset::cifar10: return {{2, 10}, {2, 11}, {1, 10}, {1, 13}, {2, 13}};
    case Dataset::svhn_idx: return {{1, 12}, {2, 12}, {2, 12}, {2, 11}, {4, 12}};
  }
  return {};
}

NetworkConfig lenet_preset(Dataset dataset) {
  // SVHN is taken as 32x32x3, the size of the pre-converted IDX files.
  const int side = dataset == Dataset::mnist ? 28 : 32;
  const int depth = dataset == Dataset::mnist ? 1 : 3;
  const auto formats = table_formats(dataset);

  const int c1 = side - 4;       // conv1 output side
  const int p1 = c1 / 2;         // pool1 output side
  const int c2 = p1 - 4;         // conv2 output side
  const int p2 = c2 / 2;         // pool2 output side

  NetworkConfig config;
  config.dataset = std::string(to_string(dataset));
  config.layers = {
      ConvSpec{side, side, depth, 5, 6, Activation::relu, formats[0]},
      PoolSpec{2, 2, PoolKind::max},
      ConvSpec{p1, p1, 6, 5, 16, Activation::relu, formats[1]},
      PoolSpec{2, 2, PoolKind::max},
      DenseSpec{16 * p2 * p2, 120, Activation::sigmoid, formats[2]},
      DenseSpec{120, 84, Activation::sigmoid, formats[3]},
      DenseSpec{84, 10, Activation::identity, formats[4]},
  };
  return config;
}

NetworkConfig lenet_preset(std::string_view dataset) { return lenet_preset(parse_dataset(dataset)); }

std::vector<std::vector<double>> init_weights(const NetworkConfig& config) {
  SplitMix64 rng(derive_seed(config.seed, kInitStream));
  std::vector<std::vector<double>> out;
  for (const auto& layer : config.layers) {
    std::size_t count = 0;
    double fan_in = 0;
    double fan_out = 0;
    if (const auto* c = std::get_if<ConvSpec>(&layer)) {
      count = static_cast<std::size_t>(c->filters) * c->in_d * c->kernel * c->kernel;
      fan_in = static_cast<double>(c->in_d) * c->kernel * c->kernel;
      fan_out = static_cast<double>(c->filters) * c->kernel * c->kernel;
    } else if (const auto* d = std::get_if<DenseSpec>(&layer)) {
      count = static_cast<std::size_t>(d->in_n) * d->out_n;
      fan_in = d->in_n;
      fan_out = d->out_n;
    }
    std::vector<double> w(count);
    const double limit = count ? std::sqrt(6.0 / (fan_in + fan_out)) : 0.0;
    for (auto& v : w) v = limit * (2.0 * rng.next_unit() - 1.0);
    out.push_back(std::move(w));
  }
  return out;
}

}  // namespace fxtrain::net
