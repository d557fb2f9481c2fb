#pragma once

// Quantized training engine.
//
// Forward pass, loss unit, the unrolled backward recursion
//
//   G_i   = (G_{i+1} propagated through W_{i+1}) * f'_i(Z_i)
//   dW_i  = -alpha * (G_i x X_i)
//
// and the weight update. The engine is parameterized on an arithmetic policy:
// FixedArith runs every quantity in its layer's (I,F) format with the rounding
// points of the PE datapath, FloatArith runs the same schedule in double
// precision with no quantization at all.

#include <cstdint>
#include <span>
#include <vector>

#include "fxtrain/data.hpp"
#include "fxtrain/netgraph.hpp"
#include "fxtrain/qnum.hpp"
#include "fxtrain/run_record.hpp"

namespace fxtrain::engine {

using net::Activation;
using net::Shape;
using qnum::QFormat;

struct FixedArith {
  using scalar = std::int32_t;
  using sum_type = std::int64_t;
  static constexpr bool quantized = true;

  static scalar from_real(double x, const QFormat& f) { return qnum::quantize_raw(x, f); }
  static double to_real(scalar s, const QFormat& f) noexcept;
  static scalar mul(scalar a, const QFormat& fa, scalar b, const QFormat& fb, const QFormat& out) noexcept {
    return qnum::mul_raw(a, fa.frac_bits(), b, fb.frac_bits(), out);
  }
  static scalar add(scalar a, scalar b, const QFormat& f) noexcept {
    return qnum::saturate(static_cast<std::int64_t>(a) + b, f);
  }
  static scalar neg(scalar a, const QFormat& f) noexcept { return qnum::saturate(-static_cast<std::int64_t>(a), f); }
  /// Rounded mean of a sum of `count` values of format f.
  static scalar mean(sum_type sum, std::int64_t count, const QFormat& f) noexcept {
    return qnum::saturate(qnum::div_round(sum, count), f);
  }
  static scalar activate(Activation kind, scalar z, const QFormat& f);
  /// f'(Z) as used in step 2. A Z stored at either saturation bound of its
  /// format has derivative 0: the write-back clipped it, so the stored value no
  /// longer responds to the weights.
  static scalar activate_deriv(Activation kind, scalar z, const QFormat& f);
  static bool saturated(scalar z, const QFormat& f) noexcept { return z == f.max_raw() || z == f.min_raw(); }

  /// Wide MAC register: exact products, one rounding in finish().
  class Acc {
   public:
    void add(scalar a, scalar b) noexcept { sum_ += static_cast<std::int64_t>(a) * b; }
    /// Adds a value of format `vf` into a chain whose products carry `frac` bits.
    void add_value(scalar v, const QFormat& vf, int frac) noexcept {
      sum_ += static_cast<qnum::wide_t>(v) * (qnum::wide_t{1} << (frac - vf.frac_bits()));
    }
    scalar finish(int frac, const QFormat& out) const noexcept { return qnum::requantize(sum_, frac, out); }

   private:
    qnum::wide_t sum_ = 0;
  };
  static int product_frac(const QFormat& a, const QFormat& b) noexcept { return a.frac_bits() + b.frac_bits(); }
};

struct FloatArith {
  using scalar = double;
  using sum_type = double;
  static constexpr bool quantized = false;

  static scalar from_real(double x, const QFormat&) noexcept { return x; }
  static double to_real(scalar s, const QFormat&) noexcept { return s; }
  static scalar mul(scalar a, const QFormat&, scalar b, const QFormat&, const QFormat&) noexcept { return a * b; }
  static scalar add(scalar a, scalar b, const QFormat&) noexcept { return a + b; }
  static scalar neg(scalar a, const QFormat&) noexcept { return -a; }
  static scalar mean(sum_type sum, std::int64_t count, const QFormat&) noexcept {
    return sum / static_cast<double>(count);
  }
  static scalar activate(Activation kind, scalar z, const QFormat&) noexcept { return net::activate_real(kind, z); }
  static scalar activate_deriv(Activation kind, scalar z, const QFormat&) noexcept {
    return net::activate_deriv_real(kind, z);
  }
  static bool saturated(scalar, const QFormat&) noexcept { return false; }

  class Acc {
   public:
    void add(scalar a, scalar b) noexcept { sum_ += a * b; }
    void add_value(scalar v, const QFormat&, int) noexcept { sum_ += v; }
    scalar finish(int, const QFormat&) const noexcept { return sum_; }

   private:
    double sum_ = 0;
  };
  static int product_frac(const QFormat&, const QFormat&) noexcept { return 0; }
};

template <class A>
struct Tensor {
  using scalar = typename A::scalar;

  Shape shape;
  QFormat fmt{2, 12};
  std::vector<scalar> data;

  Tensor() = default;
  Tensor(Shape s, QFormat f) : shape(s), fmt(f), data(s.size(), scalar{}) {}

  std::size_t size() const noexcept { return data.size(); }
  double real(std::size_t i) const noexcept { return A::to_real(data[i], fmt); }
  std::vector<double> to_real() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

template <class A>
struct LayerState {
  net::LayerSpec spec;
  net::LayerShape shape;
  Activation activation = Activation::identity;

  Tensor<A> weights;  // empty for pool layers
  Tensor<A> bias;     // empty unless use_bias
  typename A::scalar neg_alpha{};  // -alpha in this layer's format

  // Forward caches: input X_i, pre-activation Z_i, output Y_i.
  Tensor<A> x;
  Tensor<A> z;
  Tensor<A> y;
  std::vector<std::uint32_t> argmax;  // pool layers: flat input index per output
  // Backward signal G_i (weight-bearing layers).
  Tensor<A> g;
  bool has_forward = false;
};

template <class A>
struct TrainState {
  net::NetworkConfig config;
  net::ShapeReport shapes;
  std::vector<LayerState<A>> layers;
};

/// Per-layer weight and bias updates (already scaled by -alpha). Pool layers
/// hold empty tensors.
template <class A>
struct Deltas {
  std::vector<Tensor<A>> weights;
  std::vector<Tensor<A>> biases;
};

template <class A>
struct LossGrad {
  double loss = 0;
  Tensor<A> grad;  // dE/dY_n in the last layer's format
};

/// Builds a state with the seeded initial weights (quantized for FixedArith).
template <class A>
TrainState<A> make_state(const net::NetworkConfig& config);

/// Builds a state from explicit real-valued weights (one vector per layer,
/// empty for pool layers; layouts as in net::init_weights). Biases start at 0.
template <class A>
TrainState<A> make_state(const net::NetworkConfig& config, const std::vector<std::vector<double>>& weights);

/// Network input tensor in the first layer's format.
template <class A>
Tensor<A> make_input(const TrainState<A>& state, std::span<const double> values);
template <class A>
Tensor<A> make_input(const TrainState<A>& state, std::span<const std::uint8_t> pixels);

/// Runs the forward pass, caching X_i, Z_i, Y_i; returns the logits.
template <class A>
const Tensor<A>& forward(TrainState<A>& state, const Tensor<A>& input);

/// Softmax cross-entropy in real arithmetic; gradient p - onehot quantized to
/// the logits' format.
template <class A>
LossGrad<A> loss_and_initial_gradient(const Tensor<A>& logits, int label);

/// Unrolled backward pass from dE/dY_n. Stores G_i in every weight-bearing
/// layer and returns -alpha * dE/dW_i. Throws missing_cache without a prior
/// forward pass.
template <class A>
Deltas<A> backward_unrolled(TrainState<A>& state, const Tensor<A>& dE_dY);

/// W_i += dW_i with saturation.
template <class A>
void apply_update(TrainState<A>& state, const Deltas<A>& deltas);

/// Classification accuracy in percent. Throws empty_dataset.
template <class A>
double evaluate(TrainState<A>& state, const data::Dataset& test);

template <class A>
struct TrainResult {
  RunRecord record;
  TrainState<A> state;
};

/// Seeded minibatch SGD: per-sample forward/loss/backward, deltas averaged
/// over the batch in sample order, then applied. Throws empty_dataset.
template <class A>
TrainResult<A> train(const net::NetworkConfig& config, const data::Dataset& train_set, const TrainOptions& options);

/// Index of the largest logit (first on ties).
template <class A>
int predict(const Tensor<A>& logits);

extern template struct Tensor<FixedArith>;
extern template struct Tensor<FloatArith>;

}  // namespace fxtrain::engine
