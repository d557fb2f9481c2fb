#include "fxtrain/engine.hpp"

#include <algorithm>
#include <cmath>

#include "fxtrain/random.hpp"

namespace fxtrain::engine {

double FixedArith::to_real(scalar s, const QFormat& f) noexcept { return std::ldexp(static_cast<double>(s), -f.frac_bits()); }

FixedArith::scalar FixedArith::activate(Activation kind, scalar z, const QFormat& f) {
  switch (kind) {
    case Activation::identity: return z;
    case Activation::relu: return z > 0 ? z : 0;
    default: return net::activate(kind, qnum::QValue::from_raw(z, f), f).raw();
  }
}

FixedArith::scalar FixedArith::activate_deriv(Activation kind, scalar z, const QFormat& f) {
  if (saturated(z, f)) return 0;
  return net::activate_deriv(kind, qnum::QValue::from_raw(z, f), f).raw();
}

template <class A>
std::vector<double> Tensor<A>::to_real() const {
  std::vector<double> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = real(i);
  return out;
}

template struct Tensor<FixedArith>;
template struct Tensor<FloatArith>;

namespace {

template <class A>
using scalar_t = typename A::scalar;

Activation activation_of(const net::LayerSpec& spec) {
  if (const auto* c = std::get_if<net::ConvSpec>(&spec)) return c->activation;
  if (const auto* d = std::get_if<net::DenseSpec>(&spec)) return d->activation;
  return Activation::identity;
}

// Format of the values entering layer i.
QFormat input_format(const net::ShapeReport& shapes, std::size_t i) {
  return i == 0 ? shapes.input_fmt : shapes.layers[i - 1].fmt;
}

template <class A>
void conv_forward(LayerState<A>& L, const net::ConvSpec& c, bool use_bias) {
  const auto& x = L.x;
  const int k = c.kernel;
  const int ih = c.in_h, iw = c.in_w, id = c.in_d;
  const int oh = L.shape.out.rows, ow = L.shape.out.cols;
  const int frac = A::product_frac(L.weights.fmt, x.fmt);
  const auto* w = L.weights.data.data();
  const auto* xin = x.data.data();
  for (int f = 0; f < c.filters; ++f) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        typename A::Acc acc;
        for (int ch = 0; ch < id; ++ch) {
          const auto* wk = w + ((static_cast<std::size_t>(f) * id + ch) * k) * k;
          const auto* xc = xin + (static_cast<std::size_t>(ch) * ih + oy) * iw + ox;
          for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) acc.add(wk[ky * k + kx], xc[ky * iw + kx]);
          }
        }
        if (use_bias) acc.add_value(L.bias.data[f], L.bias.fmt, frac);
        const std::size_t o = (static_cast<std::size_t>(f) * oh + oy) * ow + ox;
        L.z.data[o] = acc.finish(frac, L.z.fmt);
      }
    }
  }
}

template <class A>
void dense_forward(LayerState<A>& L, const net::DenseSpec& d, bool use_bias) {
  const int frac = A::product_frac(L.weights.fmt, L.x.fmt);
  const auto* xin = L.x.data.data();
  for (int j = 0; j < d.out_n; ++j) {
    typename A::Acc acc;
    const auto* row = L.weights.data.data() + static_cast<std::size_t>(j) * d.in_n;
    for (int i = 0; i < d.in_n; ++i) acc.add(row[i], xin[i]);
    if (use_bias) acc.add_value(L.bias.data[j], L.bias.fmt, frac);
    L.z.data[j] = acc.finish(frac, L.z.fmt);
  }
}

template <class A>
void pool_forward(LayerState<A>& L, const net::PoolSpec& p) {
  const Shape& in = L.shape.in;
  const Shape& out = L.shape.out;
  L.argmax.assign(out.size(), 0);
  for (int ch = 0; ch < out.depth; ++ch) {
    for (int oy = 0; oy < out.rows; ++oy) {
      for (int ox = 0; ox < out.cols; ++ox) {
        const std::size_t o = (static_cast<std::size_t>(ch) * out.rows + oy) * out.cols + ox;
        std::size_t best = 0;
        bool first = true;
        typename A::sum_type sum{};
        for (int wy = 0; wy < p.window; ++wy) {
          for (int wx = 0; wx < p.window; ++wx) {
            const std::size_t idx =
                (static_cast<std::size_t>(ch) * in.rows + oy * p.stride + wy) * in.cols + ox * p.stride + wx;
            sum += L.x.data[idx];
            // Strict comparison keeps the first maximum in row-major order.
            if (first || L.x.data[idx] > L.x.data[best]) best = idx;
            first = false;
          }
        }
        if (p.kind == net::PoolKind::max) {
          L.z.data[o] = L.x.data[best];
          L.argmax[o] = static_cast<std::uint32_t>(best);
        } else {
          L.z.data[o] = A::mean(sum, std::int64_t{p.window} * p.window, L.z.fmt);
        }
      }
    }
  }
}

}  // namespace

template <class A>
TrainState<A> make_state(const net::NetworkConfig& config, const std::vector<std::vector<double>>& weights) {
  TrainState<A> state;
  state.config = config;
  state.shapes = net::validate(config);
  if (weights.size() != config.layers.size()) {
    throw Error(Errc::invalid_argument, "expected one weight vector per layer");
  }
  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    LayerState<A> L;
    L.spec = config.layers[i];
    L.shape = state.shapes.layers[i];
    L.activation = activation_of(L.spec);
    if (const auto fmt = net::layer_format(L.spec)) {
      Shape wshape;
      Shape bshape;
      if (const auto* c = std::get_if<net::ConvSpec>(&L.spec)) {
        wshape = {c->filters * c->in_d, c->kernel, c->kernel};
        bshape = {c->filters, 1, 1};
      } else {
        const auto& d = std::get<net::DenseSpec>(L.spec);
        wshape = {d.out_n, 1, d.in_n};
        bshape = {d.out_n, 1, 1};
      }
      if (weights[i].size() != wshape.size()) {
        throw Error(Errc::shape_mismatch, L.shape.name + ": expected " + std::to_string(wshape.size()) +
                                              " weights, got " + std::to_string(weights[i].size()));
      }
      L.weights = Tensor<A>(wshape, *fmt);
      for (std::size_t j = 0; j < wshape.size(); ++j) L.weights.data[j] = A::from_real(weights[i][j], *fmt);
      if (config.use_bias) L.bias = Tensor<A>(bshape, *fmt);
      L.neg_alpha = A::neg(A::from_real(config.learning_rate, *fmt), *fmt);
    }
    state.layers.push_back(std::move(L));
  }
  return state;
}

template <class A>
TrainState<A> make_state(const net::NetworkConfig& config) {
  return make_state<A>(config, net::init_weights(config));
}

template <class A>
Tensor<A> make_input(const TrainState<A>& state, std::span<const double> values) {
  Tensor<A> t(state.shapes.input, state.shapes.input_fmt);
  if (values.size() != t.size()) {
    throw Error(Errc::shape_mismatch, "input has " + std::to_string(values.size()) + " values, network expects " +
                                          state.shapes.input.to_string());
  }
  for (std::size_t i = 0; i < values.size(); ++i) t.data[i] = A::from_real(values[i], t.fmt);
  return t;
}

template <class A>
Tensor<A> make_input(const TrainState<A>& state, std::span<const std::uint8_t> pixels) {
  Tensor<A> t(state.shapes.input, state.shapes.input_fmt);
  if (pixels.size() != t.size()) {
    throw Error(Errc::shape_mismatch, "image has " + std::to_string(pixels.size()) + " pixels, network expects " +
                                          state.shapes.input.to_string());
  }
  for (std::size_t i = 0; i < pixels.size(); ++i) t.data[i] = A::from_real(data::Dataset::normalize(pixels[i]), t.fmt);
  return t;
}

template <class A>
const Tensor<A>& forward(TrainState<A>& state, const Tensor<A>& input) {
  if (input.shape != state.shapes.input || input.fmt != state.shapes.input_fmt) {
    throw Error(Errc::shape_mismatch, "forward: input " + input.shape.to_string() + " " + input.fmt.to_string() +
                                          " does not match network input " + state.shapes.input.to_string() + " " +
                                          state.shapes.input_fmt.to_string());
  }
  const bool use_bias = state.config.use_bias;
  for (std::size_t i = 0; i < state.layers.size(); ++i) {
    auto& L = state.layers[i];
    L.x = i == 0 ? input : state.layers[i - 1].y;
    L.z = Tensor<A>(L.shape.out, L.shape.fmt);
    if (const auto* c = std::get_if<net::ConvSpec>(&L.spec)) {
      conv_forward(L, *c, use_bias);
    } else if (const auto* d = std::get_if<net::DenseSpec>(&L.spec)) {
      dense_forward(L, *d, use_bias);
    } else {
      pool_forward(L, std::get<net::PoolSpec>(L.spec));
    }
    if (L.activation == Activation::identity) {
      L.y = L.z;
    } else {
      L.y = Tensor<A>(L.shape.out, L.shape.fmt);
      for (std::size_t j = 0; j < L.z.size(); ++j) L.y.data[j] = A::activate(L.activation, L.z.data[j], L.z.fmt);
    }
    L.has_forward = true;
  }
  return state.layers.back().y;
}

template <class A>
LossGrad<A> loss_and_initial_gradient(const Tensor<A>& logits, int label) {
  const std::size_t n = logits.size();
  if (label < 0 || static_cast<std::size_t>(label) >= n) {
    throw Error(Errc::invalid_argument, "label " + std::to_string(label) + " outside [0, " + std::to_string(n) + ")");
  }
  const auto z = logits.to_real();
  const double m = *std::max_element(z.begin(), z.end());
  double total = 0;
  for (double v : z) total += std::exp(v - m);
  LossGrad<A> out;
  out.loss = std::log(total) - (z[static_cast<std::size_t>(label)] - m);
  out.grad = Tensor<A>(logits.shape, logits.fmt);
  for (std::size_t j = 0; j < n; ++j) {
    const double p = std::exp(z[j] - m) / total;
    out.grad.data[j] = A::from_real(p - (static_cast<int>(j) == label ? 1.0 : 0.0), logits.fmt);
  }
  return out;
}

namespace {

// Step 2 of the PE schedule: G = R1 * f'(Z). Identity layers pass R1 through
// except where Z saturated.
template <class A>
Tensor<A> backward_signal(const LayerState<A>& L, const Tensor<A>& upstream) {
  Tensor<A> g(L.shape.out, L.shape.fmt);
  if (L.activation == Activation::identity) {
    for (std::size_t j = 0; j < g.size(); ++j) {
      g.data[j] = A::saturated(L.z.data[j], L.z.fmt) ? typename A::scalar{} : upstream.data[j];
    }
    return g;
  }
  for (std::size_t j = 0; j < g.size(); ++j) {
    const auto fprime = A::activate_deriv(L.activation, L.z.data[j], L.z.fmt);
    g.data[j] = A::mul(upstream.data[j], upstream.fmt, fprime, L.z.fmt, g.fmt);
  }
  return g;
}

template <class A>
void dense_backward(const LayerState<A>& L, const net::DenseSpec& d, const Tensor<A>& g, Tensor<A>& dw,
                    Tensor<A>* prev, bool use_bias, Tensor<A>& db) {
  const QFormat& fmt = L.weights.fmt;
  const auto neg_alpha = L.neg_alpha;
  // Steps 3 and 4: dE/dW = G x X, then times -alpha.
  for (int j = 0; j < d.out_n; ++j) {
    auto* row = dw.data.data() + static_cast<std::size_t>(j) * d.in_n;
    for (int i = 0; i < d.in_n; ++i) {
      const auto grad = A::mul(g.data[j], g.fmt, L.x.data[i], L.x.fmt, fmt);
      row[i] = A::mul(grad, fmt, neg_alpha, fmt, fmt);
    }
    if (use_bias) db.data[j] = A::mul(g.data[j], g.fmt, neg_alpha, fmt, fmt);
  }
  if (prev == nullptr) return;
  // Step 1 for the layer below: R1_i = sum_j G_j W_ji, rounded once.
  const int frac = A::product_frac(g.fmt, fmt);
  for (int i = 0; i < d.in_n; ++i) {
    typename A::Acc acc;
    for (int j = 0; j < d.out_n; ++j) acc.add(g.data[j], L.weights.data[static_cast<std::size_t>(j) * d.in_n + i]);
    prev->data[i] = acc.finish(frac, prev->fmt);
  }
}

template <class A>
void conv_backward(const LayerState<A>& L, const net::ConvSpec& c, const Tensor<A>& g, Tensor<A>& dw,
                   Tensor<A>* prev, bool use_bias, Tensor<A>& db) {
  const QFormat& fmt = L.weights.fmt;
  const int k = c.kernel;
  const int ih = c.in_h, iw = c.in_w, id = c.in_d;
  const int oh = L.shape.out.rows, ow = L.shape.out.cols;
  const auto* gd = g.data.data();
  const auto* xd = L.x.data.data();
  const auto* wd = L.weights.data.data();

  // Weight gradient: valid correlation of X with G, one rounding per weight.
  const int wfrac = A::product_frac(g.fmt, L.x.fmt);
  for (int f = 0; f < c.filters; ++f) {
    const auto* gf = gd + static_cast<std::size_t>(f) * oh * ow;
    for (int ch = 0; ch < id; ++ch) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          typename A::Acc acc;
          for (int oy = 0; oy < oh; ++oy) {
            const auto* xr = xd + (static_cast<std::size_t>(ch) * ih + oy + ky) * iw + kx;
            const auto* gr = gf + static_cast<std::size_t>(oy) * ow;
            for (int ox = 0; ox < ow; ++ox) acc.add(gr[ox], xr[ox]);
          }
          const std::size_t widx = ((static_cast<std::size_t>(f) * id + ch) * k + ky) * k + kx;
          const auto grad = acc.finish(wfrac, fmt);
          dw.data[widx] = A::mul(grad, fmt, L.neg_alpha, fmt, fmt);
        }
      }
    }
    if (use_bias) {
      typename A::sum_type sum{};
      for (int o = 0; o < oh * ow; ++o) sum += gf[o];
      // The bias gradient is a plain sum of G in its own format.
      const auto grad = A::mean(sum, 1, fmt);
      db.data[f] = A::mul(grad, fmt, L.neg_alpha, fmt, fmt);
    }
  }
  if (prev == nullptr) return;

  // Input gradient: full correlation of G with the spatially flipped kernels.
  const int frac = A::product_frac(g.fmt, fmt);
  for (int ch = 0; ch < id; ++ch) {
    for (int y = 0; y < ih; ++y) {
      for (int x = 0; x < iw; ++x) {
        typename A::Acc acc;
        for (int f = 0; f < c.filters; ++f) {
          const auto* gf = gd + static_cast<std::size_t>(f) * oh * ow;
          const auto* wk = wd + ((static_cast<std::size_t>(f) * id + ch) * k) * k;
          const int ky_lo = std::max(0, y - oh + 1), ky_hi = std::min(k - 1, y);
          const int kx_lo = std::max(0, x - ow + 1), kx_hi = std::min(k - 1, x);
          for (int ky = ky_lo; ky <= ky_hi; ++ky) {
            for (int kx = kx_lo; kx <= kx_hi; ++kx) {
              acc.add(gf[(y - ky) * ow + (x - kx)], wk[ky * k + kx]);
            }
          }
        }
        prev->data[(static_cast<std::size_t>(ch) * ih + y) * iw + x] = acc.finish(frac, prev->fmt);
      }
    }
  }
}

template <class A>
void pool_backward(const LayerState<A>& L, const net::PoolSpec& p, const Tensor<A>& upstream, Tensor<A>& prev) {
  const Shape& in = L.shape.in;
  const Shape& out = L.shape.out;
  if (p.kind == net::PoolKind::max) {
    for (std::size_t o = 0; o < out.size(); ++o) {
      const auto idx = L.argmax[o];
      prev.data[idx] = A::add(prev.data[idx], upstream.data[o], prev.fmt);
    }
    return;
  }
  const std::int64_t area = std::int64_t{p.window} * p.window;
  for (int ch = 0; ch < out.depth; ++ch) {
    for (int oy = 0; oy < out.rows; ++oy) {
      for (int ox = 0; ox < out.cols; ++ox) {
        const std::size_t o = (static_cast<std::size_t>(ch) * out.rows + oy) * out.cols + ox;
        const auto share = A::mean(upstream.data[o], area, prev.fmt);
        for (int wy = 0; wy < p.window; ++wy) {
          for (int wx = 0; wx < p.window; ++wx) {
            const std::size_t idx =
                (static_cast<std::size_t>(ch) * in.rows + oy * p.stride + wy) * in.cols + ox * p.stride + wx;
            prev.data[idx] = A::add(prev.data[idx], share, prev.fmt);
          }
        }
      }
    }
  }
}

}  // namespace

template <class A>
Deltas<A> backward_unrolled(TrainState<A>& state, const Tensor<A>& dE_dY) {
  const std::size_t n = state.layers.size();
  for (const auto& L : state.layers) {
    if (!L.has_forward) throw Error(Errc::missing_cache, "backward pass requested before a forward pass");
  }
  const auto& top = state.layers.back();
  if (dE_dY.shape != top.shape.out || dE_dY.fmt != top.shape.fmt) {
    throw Error(Errc::shape_mismatch, "dE/dY " + dE_dY.shape.to_string() + " does not match the network output " +
                                          top.shape.out.to_string());
  }

  Deltas<A> deltas;
  deltas.weights.resize(n);
  deltas.biases.resize(n);
  const bool use_bias = state.config.use_bias;

  Tensor<A> upstream = dE_dY;
  for (std::size_t idx = n; idx-- > 0;) {
    auto& L = state.layers[idx];
    Tensor<A> prev;
    Tensor<A>* prev_ptr = nullptr;
    if (idx > 0) {
      prev = Tensor<A>(L.shape.in, input_format(state.shapes, idx));
      prev_ptr = &prev;
    }
    if (const auto* p = std::get_if<net::PoolSpec>(&L.spec)) {
      pool_backward(L, *p, upstream, prev);
    } else {
      L.g = backward_signal(L, upstream);
      deltas.weights[idx] = Tensor<A>(L.weights.shape, L.weights.fmt);
      if (use_bias) deltas.biases[idx] = Tensor<A>(L.bias.shape, L.bias.fmt);
      if (const auto* c = std::get_if<net::ConvSpec>(&L.spec)) {
        conv_backward(L, *c, L.g, deltas.weights[idx], prev_ptr, use_bias, deltas.biases[idx]);
      } else {
        dense_backward(L, std::get<net::DenseSpec>(L.spec), L.g, deltas.weights[idx], prev_ptr, use_bias,
                       deltas.biases[idx]);
      }
    }
    upstream = std::move(prev);
  }
  return deltas;
}

template <class A>
void apply_update(TrainState<A>& state, const Deltas<A>& deltas) {
  if (deltas.weights.size() != state.layers.size()) {
    throw Error(Errc::shape_mismatch, "update has " + std::to_string(deltas.weights.size()) + " layers, network has " +
                                          std::to_string(state.layers.size()));
  }
  auto add_into = [](Tensor<A>& target, const Tensor<A>& delta, const std::string& name) {
    if (delta.size() != target.size()) {
      throw Error(Errc::shape_mismatch, name + ": update size " + std::to_string(delta.size()) + " vs " +
                                            std::to_string(target.size()));
    }
    for (std::size_t j = 0; j < target.size(); ++j) target.data[j] = A::add(target.data[j], delta.data[j], target.fmt);
  };
  for (std::size_t i = 0; i < state.layers.size(); ++i) {
    auto& L = state.layers[i];
    if (!net::has_weights(L.spec)) continue;
    add_into(L.weights, deltas.weights[i], L.shape.name);
    if (state.config.use_bias && !deltas.biases[i].data.empty()) add_into(L.bias, deltas.biases[i], L.shape.name);
  }
}

template <class A>
int predict(const Tensor<A>& logits) {
  const auto it = std::max_element(logits.data.begin(), logits.data.end());
  return static_cast<int>(it - logits.data.begin());
}

template <class A>
double evaluate(TrainState<A>& state, const data::Dataset& test) {
  if (test.empty()) throw Error(Errc::empty_dataset, "evaluation set is empty");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto input = make_input(state, test.image(i));
    if (predict(forward(state, input)) == test.label(i)) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(test.size());
}

template <class A>
TrainResult<A> train(const net::NetworkConfig& config, const data::Dataset& train_set, const TrainOptions& options) {
  if (train_set.empty()) throw Error(Errc::empty_dataset, "training set is empty");
  if (options.batch_size == 0) throw Error(Errc::invalid_argument, "batch size must be at least 1");

  TrainResult<A> result{RunRecord{}, make_state<A>(config)};
  auto& state = result.state;
  const auto batch = static_cast<std::int64_t>(options.batch_size);
  std::uint64_t rng = derive_seed(config.seed, kSampleStream);

  // Batch sums of the per-sample deltas, reduced in sample order.
  std::vector<std::vector<typename A::sum_type>> wsum(state.layers.size());
  std::vector<std::vector<typename A::sum_type>> bsum(state.layers.size());

  for (std::size_t it = 1; it <= options.iterations; ++it) {
    auto [indices, next] = data::sample_batch(train_set.size(), options.batch_size, rng);
    rng = next;
    for (std::size_t i = 0; i < state.layers.size(); ++i) {
      wsum[i].assign(state.layers[i].weights.size(), typename A::sum_type{});
      bsum[i].assign(state.layers[i].bias.size(), typename A::sum_type{});
    }
    double loss_sum = 0;
    for (const std::size_t s : indices) {
      const auto input = make_input(state, train_set.image(s));
      const auto& logits = forward(state, input);
      const auto lg = loss_and_initial_gradient(logits, train_set.label(s));
      loss_sum += lg.loss;
      const auto d = backward_unrolled(state, lg.grad);
      for (std::size_t i = 0; i < state.layers.size(); ++i) {
        for (std::size_t j = 0; j < d.weights[i].size(); ++j) wsum[i][j] += d.weights[i].data[j];
        for (std::size_t j = 0; j < d.biases[i].size(); ++j) bsum[i][j] += d.biases[i].data[j];
      }
    }
    Deltas<A> avg;
    avg.weights.resize(state.layers.size());
    avg.biases.resize(state.layers.size());
    for (std::size_t i = 0; i < state.layers.size(); ++i) {
      const auto& L = state.layers[i];
      if (!net::has_weights(L.spec)) continue;
      avg.weights[i] = Tensor<A>(L.weights.shape, L.weights.fmt);
      for (std::size_t j = 0; j < wsum[i].size(); ++j) avg.weights[i].data[j] = A::mean(wsum[i][j], batch, L.weights.fmt);
      if (!L.bias.data.empty()) {
        avg.biases[i] = Tensor<A>(L.bias.shape, L.bias.fmt);
        for (std::size_t j = 0; j < bsum[i].size(); ++j) avg.biases[i].data[j] = A::mean(bsum[i][j], batch, L.bias.fmt);
      }
    }
    apply_update(state, avg);

    const double loss = loss_sum / static_cast<double>(batch);
    result.record.losses.push_back({it, loss});
    if (options.on_iteration) options.on_iteration(it, loss);
    if (options.test != nullptr && options.eval_every != 0 && it % options.eval_every == 0) {
      result.record.evals.push_back({it, evaluate(state, *options.test)});
    }
  }
  if (options.test != nullptr) {
    if (!result.record.evals.empty() && result.record.evals.back().iteration == options.iterations) {
      result.record.final_accuracy = result.record.evals.back().accuracy;
    } else {
      result.record.final_accuracy = evaluate(state, *options.test);
      result.record.evals.push_back({options.iterations, result.record.final_accuracy});
    }
  }
  return result;
}

#define FXTRAIN_INSTANTIATE(A)                                                                                   \
  template TrainState<A> make_state<A>(const net::NetworkConfig&);                                             \
  template TrainState<A> make_state<A>(const net::NetworkConfig&, const std::vector<std::vector<double>>&);    \
  template Tensor<A> make_input<A>(const TrainState<A>&, std::span<const double>);                             \
  template Tensor<A> make_input<A>(const TrainState<A>&, std::span<const std::uint8_t>);                       \
  template const Tensor<A>& forward<A>(TrainState<A>&, const Tensor<A>&);                                      \
  template LossGrad<A> loss_and_initial_gradient<A>(const Tensor<A>&, int);                                    \
  template Deltas<A> backward_unrolled<A>(TrainState<A>&, const Tensor<A>&);                                   \
  template void apply_update<A>(TrainState<A>&, const Deltas<A>&);                                             \
  template double evaluate<A>(TrainState<A>&, const data::Dataset&);                                           \
  template TrainResult<A> train<A>(const net::NetworkConfig&, const data::Dataset&, const TrainOptions&);      \
  template int predict<A>(const Tensor<A>&);

FXTRAIN_INSTANTIATE(FixedArith)
FXTRAIN_INSTANTIATE(FloatArith)

#undef FXTRAIN_INSTANTIATE

}  // namespace fxtrain::engine
