#include "fxtrain/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "fxtrain/random.hpp"

namespace fxtrain::oracle {

using net::Activation;

FloatNet make_float_net(const net::NetworkConfig& config, std::vector<std::vector<double>> weights) {
  FloatNet fnet;
  fnet.config = config;
  fnet.shapes = net::validate(config);
  fnet.weights = std::move(weights);
  fnet.biases.resize(config.layers.size());
  if (config.use_bias) {
    for (std::size_t i = 0; i < config.layers.size(); ++i) {
      if (const auto* c = std::get_if<net::ConvSpec>(&config.layers[i])) fnet.biases[i].assign(c->filters, 0.0);
      if (const auto* d = std::get_if<net::DenseSpec>(&config.layers[i])) fnet.biases[i].assign(d->out_n, 0.0);
    }
  }
  return fnet;
}

FloatNet make_float_net(const net::NetworkConfig& config) { return make_float_net(config, net::init_weights(config)); }

namespace {

Activation act_of(const net::LayerSpec& spec) {
  if (const auto* c = std::get_if<net::ConvSpec>(&spec)) return c->activation;
  if (const auto* d = std::get_if<net::DenseSpec>(&spec)) return d->activation;
  return Activation::identity;
}

std::vector<double> softmax(const std::vector<double>& z) {
  double m = z[0];
  for (double v : z) m = std::max(m, v);
  std::vector<double> p(z.size());
  double s = 0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    p[j] = std::exp(z[j] - m);
    s += p[j];
  }
  for (double& v : p) v /= s;
  return p;
}

}  // namespace

std::vector<double> float_forward(const FloatNet& fnet, std::span<const double> input, ForwardTrace* trace) {
  if (input.size() != fnet.shapes.input.size()) {
    throw Error(Errc::shape_mismatch, "oracle input has " + std::to_string(input.size()) + " values");
  }
  std::vector<double> x(input.begin(), input.end());
  if (trace != nullptr) *trace = ForwardTrace{};
  const bool bias = fnet.config.use_bias;

  for (std::size_t li = 0; li < fnet.config.layers.size(); ++li) {
    const auto& spec = fnet.config.layers[li];
    const auto& shape = fnet.shapes.layers[li];
    std::vector<double> z(shape.out.size(), 0.0);
    std::vector<std::uint32_t> arg;

    if (const auto* c = std::get_if<net::ConvSpec>(&spec)) {
      const auto& w = fnet.weights[li];
      const int oh = shape.out.rows, ow = shape.out.cols, k = c->kernel;
      for (int f = 0; f < c->filters; ++f)
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            double s = bias ? fnet.biases[li][f] : 0.0;
            for (int ch = 0; ch < c->in_d; ++ch)
              for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx)
                  s += w[((f * c->in_d + ch) * k + ky) * k + kx] * x[(ch * c->in_h + oy + ky) * c->in_w + ox + kx];
            z[(f * oh + oy) * ow + ox] = s;
          }
    } else if (const auto* d = std::get_if<net::DenseSpec>(&spec)) {
      const auto& w = fnet.weights[li];
      for (int j = 0; j < d->out_n; ++j) {
        double s = bias ? fnet.biases[li][j] : 0.0;
        for (int i = 0; i < d->in_n; ++i) s += w[j * d->in_n + i] * x[i];
        z[j] = s;
      }
    } else {
      const auto& p = std::get<net::PoolSpec>(spec);
      arg.resize(z.size());
      for (int ch = 0; ch < shape.out.depth; ++ch)
        for (int oy = 0; oy < shape.out.rows; ++oy)
          for (int ox = 0; ox < shape.out.cols; ++ox) {
            const int o = (ch * shape.out.rows + oy) * shape.out.cols + ox;
            int best = -1;
            double sum = 0;
            for (int wy = 0; wy < p.window; ++wy)
              for (int wx = 0; wx < p.window; ++wx) {
                const int idx = (ch * shape.in.rows + oy * p.stride + wy) * shape.in.cols + ox * p.stride + wx;
                sum += x[idx];
                if (best < 0 || x[idx] > x[best]) best = idx;
              }
            arg[o] = static_cast<std::uint32_t>(best);
            z[o] = p.kind == net::PoolKind::max ? x[best] : sum / (p.window * p.window);
          }
    }

    const Activation act = act_of(spec);
    std::vector<double> y(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) y[j] = net::activate_real(act, z[j]);
    if (trace != nullptr) {
      if (act == Activation::relu) {
        for (double v : z) trace->pattern.push_back(v > 0 ? 1 : 0);
      }
      trace->pattern.insert(trace->pattern.end(), arg.begin(), arg.end());
      trace->z.push_back(z);
      trace->y.push_back(y);
      trace->argmax.push_back(std::move(arg));
    }
    x = std::move(y);
  }
  return x;
}

double float_loss(const FloatNet& fnet, std::span<const double> input, int label) {
  const auto p = softmax(float_forward(fnet, input));
  return -std::log(p.at(static_cast<std::size_t>(label)));
}

Gradients oracle_backprop(const FloatNet& fnet, std::span<const double> input, int label) {
  ForwardTrace tr;
  const auto logits = float_forward(fnet, input, &tr);
  const auto p = softmax(logits);
  const std::size_t n = fnet.config.layers.size();

  Gradients out;
  out.loss = -std::log(p.at(static_cast<std::size_t>(label)));
  out.weights.resize(n);
  out.biases.resize(n);

  // dE/dY of the current layer's output.
  std::vector<double> dy = p;
  dy[static_cast<std::size_t>(label)] -= 1.0;

  for (std::size_t li = n; li-- > 0;) {
    const auto& spec = fnet.config.layers[li];
    const auto& shape = fnet.shapes.layers[li];
    const auto& x = li == 0 ? std::vector<double>(input.begin(), input.end()) : tr.y[li - 1];
    const auto& z = tr.z[li];
    std::vector<double> dx(shape.in.size(), 0.0);
    const Activation act = act_of(spec);

    if (const auto* c = std::get_if<net::ConvSpec>(&spec)) {
      const auto& w = fnet.weights[li];
      auto& gw = out.weights[li];
      gw.assign(w.size(), 0.0);
      if (fnet.config.use_bias) out.biases[li].assign(c->filters, 0.0);
      const int oh = shape.out.rows, ow = shape.out.cols, k = c->kernel;
      for (int f = 0; f < c->filters; ++f)
        for (int oy = 0; oy < oh; ++oy)
          for (int ox = 0; ox < ow; ++ox) {
            const int o = (f * oh + oy) * ow + ox;
            const double e = dy[o];
            const double fp = net::activate_deriv_real(act, z[o]);
            if (fnet.config.use_bias) out.biases[li][f] += e * fp;
            for (int ch = 0; ch < c->in_d; ++ch)
              for (int ky = 0; ky < k; ++ky)
                for (int kx = 0; kx < k; ++kx) {
                  const int wi = ((f * c->in_d + ch) * k + ky) * k + kx;
                  const int xi = (ch * c->in_h + oy + ky) * c->in_w + ox + kx;
                  gw[wi] += e * (fp * x[xi]);  // dE/dY * dY/dW
                  dx[xi] += e * (fp * w[wi]);  // dE/dY * dY/dX
                }
          }
    } else if (const auto* d = std::get_if<net::DenseSpec>(&spec)) {
      const auto& w = fnet.weights[li];
      auto& gw = out.weights[li];
      gw.assign(w.size(), 0.0);
      if (fnet.config.use_bias) out.biases[li].assign(d->out_n, 0.0);
      for (int j = 0; j < d->out_n; ++j) {
        const double e = dy[j];
        const double fp = net::activate_deriv_real(act, z[j]);
        if (fnet.config.use_bias) out.biases[li][j] = e * fp;
        for (int i = 0; i < d->in_n; ++i) {
          gw[j * d->in_n + i] = e * (fp * x[i]);
          dx[i] += e * (fp * w[j * d->in_n + i]);
        }
      }
    } else {
      const auto& pool = std::get<net::PoolSpec>(spec);
      const auto& arg = tr.argmax[li];
      for (std::size_t o = 0; o < dy.size(); ++o) {
        if (pool.kind == net::PoolKind::max) {
          dx[arg[o]] += dy[o];
        } else {
          const int ch = static_cast<int>(o) / (shape.out.rows * shape.out.cols);
          const int rem = static_cast<int>(o) % (shape.out.rows * shape.out.cols);
          const int oy = rem / shape.out.cols, ox = rem % shape.out.cols;
          for (int wy = 0; wy < pool.window; ++wy)
            for (int wx = 0; wx < pool.window; ++wx)
              dx[(ch * shape.in.rows + oy * pool.stride + wy) * shape.in.cols + ox * pool.stride + wx] +=
                  dy[o] / (pool.window * pool.window);
        }
      }
    }
    dy = std::move(dx);
  }
  return out;
}

FiniteDiff finite_diff(const FloatNet& fnet, std::span<const double> input, int label, double eps) {
  if (!(eps > 0)) throw Error(Errc::invalid_argument, "finite difference step must be positive");
  FiniteDiff out;
  FloatNet probe = fnet;
  out.weights.resize(fnet.weights.size());
  out.excluded.resize(fnet.weights.size());
  for (std::size_t li = 0; li < fnet.weights.size(); ++li) {
    out.weights[li].resize(fnet.weights[li].size());
    out.excluded[li].resize(fnet.weights[li].size());
    for (std::size_t j = 0; j < fnet.weights[li].size(); ++j) {
      const double w0 = fnet.weights[li][j];
      ForwardTrace plus_tr, minus_tr;
      probe.weights[li][j] = w0 + eps;
      const auto pp = softmax(float_forward(probe, input, &plus_tr));
      probe.weights[li][j] = w0 - eps;
      const auto pm = softmax(float_forward(probe, input, &minus_tr));
      probe.weights[li][j] = w0;
      const double lp = -std::log(pp.at(static_cast<std::size_t>(label)));
      const double lm = -std::log(pm.at(static_cast<std::size_t>(label)));
      out.weights[li][j] = (lp - lm) / (2 * eps);
      out.excluded[li][j] = plus_tr.pattern != minus_tr.pattern ? 1 : 0;
    }
  }
  return out;
}

double float_evaluate(const FloatNet& fnet, const data::Dataset& test) {
  if (test.empty()) throw Error(Errc::empty_dataset, "evaluation set is empty");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto logits = float_forward(fnet, test.image_values(i));
    const auto best = std::max_element(logits.begin(), logits.end()) - logits.begin();
    if (best == test.label(i)) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(test.size());
}

FloatTrainResult float_train(const net::NetworkConfig& config, const data::Dataset& train_set,
                             const TrainOptions& options) {
  if (train_set.empty()) throw Error(Errc::empty_dataset, "training set is empty");
  if (options.batch_size == 0) throw Error(Errc::invalid_argument, "batch size must be at least 1");

  FloatTrainResult result{RunRecord{}, make_float_net(config)};
  auto& fnet = result.net;
  const double alpha = config.learning_rate;
  const auto batch = static_cast<double>(options.batch_size);
  std::uint64_t rng = derive_seed(config.seed, kSampleStream);

  for (std::size_t it = 1; it <= options.iterations; ++it) {
    auto [indices, next] = data::sample_batch(train_set.size(), options.batch_size, rng);
    rng = next;
    std::vector<std::vector<double>> wsum(fnet.weights.size());
    std::vector<std::vector<double>> bsum(fnet.biases.size());
    for (std::size_t i = 0; i < fnet.weights.size(); ++i) {
      wsum[i].assign(fnet.weights[i].size(), 0.0);
      bsum[i].assign(fnet.biases[i].size(), 0.0);
    }
    double loss_sum = 0;
    for (const std::size_t s : indices) {
      const auto g = oracle_backprop(fnet, train_set.image_values(s), train_set.label(s));
      loss_sum += g.loss;
      for (std::size_t i = 0; i < g.weights.size(); ++i) {
        for (std::size_t j = 0; j < g.weights[i].size(); ++j) wsum[i][j] += -alpha * g.weights[i][j];
        for (std::size_t j = 0; j < g.biases[i].size(); ++j) bsum[i][j] += -alpha * g.biases[i][j];
      }
    }
    for (std::size_t i = 0; i < fnet.weights.size(); ++i) {
      for (std::size_t j = 0; j < fnet.weights[i].size(); ++j) fnet.weights[i][j] += wsum[i][j] / batch;
      for (std::size_t j = 0; j < fnet.biases[i].size(); ++j) fnet.biases[i][j] += bsum[i][j] / batch;
    }
    const double loss = loss_sum / batch;
    result.record.losses.push_back({it, loss});
    if (options.on_iteration) options.on_iteration(it, loss);
    if (options.test != nullptr && options.eval_every != 0 && it % options.eval_every == 0) {
      result.record.evals.push_back({it, float_evaluate(fnet, *options.test)});
    }
  }
  if (options.test != nullptr) {
    if (!result.record.evals.empty() && result.record.evals.back().iteration == options.iterations) {
      result.record.final_accuracy = result.record.evals.back().accuracy;
    } else {
      result.record.final_accuracy = float_evaluate(fnet, *options.test);
      result.record.evals.push_back({options.iterations, result.record.final_accuracy});
    }
  }
  return result;
}

}  // namespace fxtrain::oracle
