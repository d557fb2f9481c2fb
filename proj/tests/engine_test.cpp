#include "fxtrain/engine.hpp"

#include <cmath>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "fxtrain/data.hpp"
#include "fxtrain/oracle.hpp"
#include "test_nets.hpp"

using namespace fxtrain;
using namespace fxtrain::engine;
using net::Activation;
using qnum::QFormat;
using fxtrain::testing::dense_net;
using fxtrain::testing::random_dense_net;
using fxtrain::testing::random_input;
using fxtrain::testing::small_conv_net;

namespace {

template <class A>
Tensor<A> tensor_of(std::initializer_list<double> values, QFormat fmt) {
  Tensor<A> t(net::Shape{static_cast<int>(values.size()), 1, 1}, fmt);
  std::size_t i = 0;
  for (double v : values) t.data[i++] = A::from_real(v, fmt);
  return t;
}

data::Dataset toy_dataset(std::size_t count, std::uint64_t seed, net::Shape shape = {1, 4, 4}) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint8_t> pixels(count * shape.size());
  std::vector<std::uint8_t> labels(count);
  for (std::size_t i = 0; i < count; ++i) {
    labels[i] = static_cast<std::uint8_t>(i % 3);
    for (std::size_t j = 0; j < shape.size(); ++j) {
      // Class-dependent brightness pattern plus noise.
      const int base = (static_cast<int>(j) % 3 == labels[i]) ? 200 : 30;
      pixels[i * shape.size() + j] = static_cast<std::uint8_t>(base + static_cast<int>(rng() % 40));
    }
  }
  return data::Dataset(shape, std::move(pixels), std::move(labels), 3, data::Split::train);
}

}  // namespace

TEST(Forward, DenseReluExample) {
  auto config = dense_net({2, 1}, {Activation::relu}, {2, 12});
  auto state = make_state<FixedArith>(config, {{0.5, 0.25}});
  const std::vector<double> x{1.0, 1.0};
  const auto& logits = forward(state, make_input(state, std::span<const double>(x)));
  ASSERT_EQ(logits.size(), 1u);
  EXPECT_EQ(logits.real(0), 0.75);
}

TEST(Forward, IdentityWeightsPassInput) {
  auto config = dense_net({3, 3}, {Activation::identity}, {2, 12});
  auto state = make_state<FixedArith>(config, {{1, 0, 0, 0, 1, 0, 0, 0, 1}});
  const std::vector<double> x{0.25, -1.5, 3.0};
  const auto input = make_input(state, std::span<const double>(x));
  EXPECT_EQ(forward(state, input), input);
}

TEST(Forward, CachesChainLayers) {
  auto config = small_conv_net(8, 2, 3, 3, net::PoolKind::max, {2, 12});
  config.seed = 5;
  auto state = make_state<FixedArith>(config);
  std::mt19937_64 rng(1);
  const auto x = random_input(rng, 128);
  forward(state, make_input(state, std::span<const double>(x)));
  for (std::size_t i = 1; i < state.layers.size(); ++i) {
    EXPECT_EQ(state.layers[i].x, state.layers[i - 1].y) << "layer " << i;
  }
}

TEST(Forward, RejectsWrongInput) {
  auto config = dense_net({3, 2}, {Activation::identity});
  auto state = make_state<FixedArith>(config);
  const std::vector<double> x{1.0, 2.0};
  EXPECT_THROW(make_input(state, std::span<const double>(x)), Error);
}

// One image, as frozen; across the first 20 test images the worst error is
// about 5.06 * 2^-10.
TEST(Forward, MnistPresetNearFloatOracle) {
  const std::filesystem::path dir = FXTRAIN_MNIST_DIR;
  if (!std::filesystem::exists(dir / "t10k-images-idx3-ubyte")) GTEST_SKIP() << "MNIST files not present";
  const auto test = data::load_standard(net::Dataset::mnist, dir, data::Split::test).head(1);
  auto config = net::lenet_preset(net::Dataset::mnist);
  config.seed = 42;
  auto state = make_state<FixedArith>(config);
  const auto fnet = oracle::make_float_net(config);
  const double bound = 5.0 * std::ldexp(1.0, -10);
  double worst = 0;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto& logits = forward(state, make_input(state, test.image(i)));
    const auto values = test.image_values(i);
    const auto ref = oracle::float_forward(fnet, values);
    for (std::size_t j = 0; j < ref.size(); ++j) worst = std::max(worst, std::abs(logits.real(j) - ref[j]));
  }
  EXPECT_LE(worst, bound);
}

TEST(Loss, UniformLogits) {
  const auto lg = loss_and_initial_gradient(tensor_of<FixedArith>({0, 0}, {3, 10}), 0);
  EXPECT_EQ(lg.grad.real(0), -0.5);
  EXPECT_EQ(lg.grad.real(1), 0.5);
  EXPECT_NEAR(lg.loss, std::log(2.0), 1e-15);
}

TEST(Loss, ExactOneHot) {
  const auto lg = loss_and_initial_gradient(tensor_of<FloatArith>({0, -1000, -2000}, {3, 10}), 0);
  EXPECT_EQ(lg.loss, 0.0);
  for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(lg.grad.data[j], 0.0);
  const auto fixed = loss_and_initial_gradient(tensor_of<FixedArith>({7, -8}, {3, 10}), 0);
  EXPECT_EQ(fixed.grad.data[0], 0);
  EXPECT_EQ(fixed.grad.data[1], 0);
}

TEST(Loss, MatchesRealOracle) {
  const QFormat f{3, 10};
  const auto lg = loss_and_initial_gradient(tensor_of<FixedArith>({1, 2, 3}, f), 2);
  const double total = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  const double p[] = {std::exp(1.0) / total, std::exp(2.0) / total, std::exp(3.0) / total - 1.0};
  for (int j = 0; j < 3; ++j) EXPECT_EQ(lg.grad.data[j], qnum::quantize(p[j], f).raw());
  EXPECT_NEAR(lg.loss, std::log(total) - 3.0, 1e-12);
  EXPECT_THROW(loss_and_initial_gradient(tensor_of<FixedArith>({1, 2}, f), 2), Error);
}

TEST(Backward, ScalarChain) {
  auto config = dense_net({1, 1}, {Activation::identity}, {2, 12});
  config.learning_rate = 0.125;
  auto state = make_state<FixedArith>(config, {{0.5}});
  const std::vector<double> x{2.0};
  forward(state, make_input(state, std::span<const double>(x)));
  const auto d = backward_unrolled(state, tensor_of<FixedArith>({0.25}, {2, 12}));
  EXPECT_EQ(d.weights[0].real(0), -0.125 * 0.25 * 2.0);
  EXPECT_EQ(state.layers[0].g.real(0), 0.25);
}

TEST(Backward, DeadReluGivesZeroSignals) {
  auto config = dense_net({3, 2, 2}, {Activation::relu, Activation::identity}, {2, 12});
  auto state = make_state<FixedArith>(config, {{-0.5, -0.5, -0.5, -0.25, -0.25, -0.25}, {0.5, 0.25, -0.5, 1.0}});
  const std::vector<double> x{0.5, 0.25, 0.75};
  forward(state, make_input(state, std::span<const double>(x)));
  const auto d = backward_unrolled(state, tensor_of<FixedArith>({0.5, -0.5}, {2, 12}));
  for (auto g : state.layers[0].g.data) EXPECT_EQ(g, 0);
  for (auto w : d.weights[0].data) EXPECT_EQ(w, 0);
}

TEST(Backward, SaturatedPreActivationStopsGradient) {
  // Z = 3 * 1.5 saturates (2,12) at its maximum; the ReLU derivative is clipped to 0.
  auto config = dense_net({1, 1, 1}, {Activation::relu, Activation::identity}, {2, 12});
  auto state = make_state<FixedArith>(config, {{3.0}, {0.5}});
  const std::vector<double> x{1.5};
  forward(state, make_input(state, std::span<const double>(x)));
  EXPECT_TRUE(FixedArith::saturated(state.layers[0].z.data[0], {2, 12}));
  EXPECT_EQ(FixedArith::activate_deriv(Activation::relu, state.layers[0].z.data[0], {2, 12}), 0);
  const auto d = backward_unrolled(state, tensor_of<FixedArith>({0.5}, {2, 12}));
  EXPECT_EQ(state.layers[0].g.data[0], 0);
  EXPECT_EQ(d.weights[0].data[0], 0);
  EXPECT_NE(d.weights[1].data[0], 0);
}

TEST(Backward, SaturatedIdentityOutputStopsGradient) {
  auto config = dense_net({1, 1}, {Activation::identity}, {1, 12});
  auto state = make_state<FixedArith>(config, {{1.75}});
  const std::vector<double> x{1.75};
  forward(state, make_input(state, std::span<const double>(x)));
  const auto d = backward_unrolled(state, tensor_of<FixedArith>({0.5}, {1, 12}));
  EXPECT_EQ(state.layers[0].g.data[0], 0);
  EXPECT_EQ(d.weights[0].data[0], 0);
}

TEST(Backward, FloatModeNeverClips) {
  auto config = dense_net({1, 1}, {Activation::relu}, {2, 12});
  auto state = make_state<FloatArith>(config, {{3.0}});
  const std::vector<double> x{1.5};
  forward(state, make_input(state, std::span<const double>(x)));
  const auto d = backward_unrolled(state, tensor_of<FloatArith>({0.5}, {2, 12}));
  EXPECT_DOUBLE_EQ(d.weights[0].data[0], -config.learning_rate * 0.5 * 1.5);
}

TEST(Backward, MissingCacheThrows) {
  auto config = dense_net({2, 2}, {Activation::identity});
  auto state = make_state<FixedArith>(config);
  try {
    backward_unrolled(state, tensor_of<FixedArith>({0.1, 0.2}, {8, 20}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::missing_cache);
  }
}

TEST(Backward, FloatModeMatchesFiniteDifferences) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    auto config = fxtrain::testing::dense_net({5, 7, 6, 4}, {Activation::tanh, Activation::sigmoid,
                                                            Activation::identity});
    config.seed = rng();
    config.learning_rate = 0.5;
    auto state = make_state<FloatArith>(config);
    const auto x = random_input(rng, 5, -1, 1);
    const int label = static_cast<int>(rng() % 4);
    const auto& logits = forward(state, make_input(state, std::span<const double>(x)));
    const auto d = backward_unrolled(state, loss_and_initial_gradient(logits, label).grad);
    const auto fd = oracle::finite_diff(oracle::make_float_net(config), x, label, 1e-5);
    for (std::size_t l = 0; l < config.layers.size(); ++l) {
      for (std::size_t j = 0; j < fd.weights[l].size(); ++j) {
        const double grad = d.weights[l].data[j] / -config.learning_rate;
        const double ref = fd.weights[l][j];
        EXPECT_LE(std::abs(grad - ref), 1e-4 * std::max(std::abs(ref), 1e-6) + 1e-9) << "layer " << l << " " << j;
      }
    }
  }
}

TEST(Backward, DenseThreeFactorFormMatchesTwoStep) {
  // dE/dW_ji assembled directly as dE/dY_j * f'(Z_j) * X_i against G_j * X_i.
  std::mt19937_64 rng(22);
  auto config = dense_net({6, 5, 3}, {Activation::sigmoid, Activation::identity});
  config.seed = 7;
  config.learning_rate = 1.0;
  auto state = make_state<FloatArith>(config);
  const auto x = random_input(rng, 6);
  const auto& logits = forward(state, make_input(state, std::span<const double>(x)));
  const auto d = backward_unrolled(state, loss_and_initial_gradient(logits, 1).grad);
  const auto& top = state.layers[1];
  const auto& hidden = state.layers[0];
  for (int j = 0; j < 5; ++j) {
    double dE_dY = 0;
    for (int k = 0; k < 3; ++k) dE_dY += top.g.data[k] * top.weights.data[k * 5 + j];
    const double fprime = net::activate_deriv_real(Activation::sigmoid, hidden.z.data[j]);
    for (int i = 0; i < 6; ++i) {
      const double direct = dE_dY * fprime * hidden.x.data[i];
      EXPECT_NEAR(-d.weights[0].data[j * 6 + i], direct, 1e-15 * std::max(1.0, std::abs(direct)));
    }
  }
}

TEST(Backward, HighPrecisionFixedMatchesFloat) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    auto config = random_dense_net(rng, 3, 12, {8, 20});
    config.learning_rate = 0.25;
    auto fixed = make_state<FixedArith>(config);
    auto flt = make_state<FloatArith>(config);
    // Start both from the quantized weights so only the step itself differs.
    for (std::size_t l = 0; l < config.layers.size(); ++l) {
      for (std::size_t j = 0; j < fixed.layers[l].weights.size(); ++j) {
        flt.layers[l].weights.data[j] = fixed.layers[l].weights.real(j);
      }
    }
    const auto x = random_input(rng, static_cast<std::size_t>(std::get<net::DenseSpec>(config.layers[0]).in_n));
    const auto xin = make_input(fixed, std::span<const double>(x));
    const auto xin_real = xin.to_real();
    const int classes = static_cast<int>(fixed.shapes.output().size());
    const int label = static_cast<int>(rng() % static_cast<std::uint64_t>(classes));
    const auto dq = backward_unrolled(fixed, loss_and_initial_gradient(forward(fixed, xin), label).grad);
    const auto ff = make_input(flt, std::span<const double>(xin_real));
    const auto df = backward_unrolled(flt, loss_and_initial_gradient(forward(flt, ff), label).grad);
    for (std::size_t l = 0; l < config.layers.size(); ++l) {
      for (std::size_t j = 0; j < dq.weights[l].size(); ++j) {
        ASSERT_LE(std::abs(dq.weights[l].real(j) - df.weights[l].data[j]), std::ldexp(1.0, -16));
      }
    }
  }
}

TEST(Backward, MaxPoolRoutesToFirstMaximum) {
  net::NetworkConfig config;
  const QFormat f{2, 12};
  // A 1x1 identity conv keeps the 2x2 spatial layout for the pool window.
  config.layers = {net::ConvSpec{2, 2, 1, 1, 1, Activation::identity, f}, net::PoolSpec{2, 2, net::PoolKind::max},
                   net::DenseSpec{1, 1, Activation::identity, f}};
  auto state = make_state<FixedArith>(config, {{1.0}, {}, {1.0}});
  const std::vector<double> x{0.5, 0.75, 0.75, 0.25};
  forward(state, make_input(state, std::span<const double>(x)));
  EXPECT_EQ(state.layers[1].argmax[0], 1u);
  EXPECT_EQ(state.layers[1].y.real(0), 0.75);
  backward_unrolled(state, tensor_of<FixedArith>({0.5}, f));
  const auto& g = state.layers[0].g;
  EXPECT_EQ(g.real(0), 0.0);
  EXPECT_EQ(g.real(1), 0.5);
  EXPECT_EQ(g.real(2), 0.0);
  EXPECT_EQ(g.real(3), 0.0);
}

TEST(Backward, AvgPoolSplitsUniformly) {
  const QFormat f{2, 12};
  net::NetworkConfig config;
  config.layers = {net::ConvSpec{2, 2, 1, 1, 1, Activation::identity, f}, net::PoolSpec{2, 2, net::PoolKind::avg},
                   net::DenseSpec{1, 1, Activation::identity, f}};
  auto state = make_state<FixedArith>(config, {{1.0}, {}, {1.0}});
  const std::vector<double> x{0.5, 0.75, 0.75, 0.25};
  forward(state, make_input(state, std::span<const double>(x)));
  EXPECT_EQ(state.layers[1].y.real(0), 0.5625);
  backward_unrolled(state, tensor_of<FixedArith>({0.5}, f));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(state.layers[0].g.real(i), 0.125);
}

TEST(Update, Examples) {
  const QFormat f{2, 12};
  auto config = dense_net({1, 1}, {Activation::identity}, f);
  auto state = make_state<FixedArith>(config, {{0.5}});
  Deltas<FixedArith> d;
  d.weights = {tensor_of<FixedArith>({-0.25}, f)};
  d.biases.resize(1);
  apply_update(state, d);
  EXPECT_EQ(state.layers[0].weights.real(0), 0.25);

  state = make_state<FixedArith>(config, {{4.0}});
  EXPECT_EQ(state.layers[0].weights.data[0], f.max_raw());
  d.weights = {tensor_of<FixedArith>({0.5}, f)};
  apply_update(state, d);
  EXPECT_EQ(state.layers[0].weights.data[0], f.max_raw());

  state = make_state<FixedArith>(config, {{-1.375}});
  const auto before = state.layers[0].weights;
  d.weights = {tensor_of<FixedArith>({0.0}, f)};
  apply_update(state, d);
  EXPECT_EQ(state.layers[0].weights, before);
}

TEST(Train, ZeroIterationsKeepsInitialWeights) {
  auto config = small_conv_net(4, 1, 3, 2, net::PoolKind::max, {2, 12});
  config.seed = 3;
  const auto ds = toy_dataset(12, 1);
  const auto result = train<FixedArith>(config, ds, TrainOptions{});
  const auto init = make_state<FixedArith>(config);
  for (std::size_t l = 0; l < init.layers.size(); ++l) EXPECT_EQ(result.state.layers[l].weights, init.layers[l].weights);
  EXPECT_TRUE(result.record.losses.empty());
}

TEST(Train, Deterministic) {
  auto config = small_conv_net(4, 1, 3, 2, net::PoolKind::max, {2, 12});
  config.seed = 9;
  const auto ds = toy_dataset(30, 2);
  TrainOptions options;
  options.iterations = 15;
  options.batch_size = 4;
  options.test = &ds;
  options.eval_every = 5;
  const auto a = train<FixedArith>(config, ds, options);
  const auto b = train<FixedArith>(config, ds, options);
  EXPECT_EQ(a.record, b.record);
  for (std::size_t l = 0; l < a.state.layers.size(); ++l) EXPECT_EQ(a.state.layers[l].weights, b.state.layers[l].weights);
  ASSERT_EQ(a.record.evals.size(), 3u);
  EXPECT_EQ(a.record.evals.back().iteration, 15u);
  EXPECT_EQ(a.record.final_accuracy, a.record.evals.back().accuracy);
}

TEST(Train, Errors) {
  auto config = dense_net({16, 3}, {Activation::identity});
  const data::Dataset empty;
  TrainOptions options;
  options.iterations = 1;
  try {
    train<FixedArith>(config, empty, options);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_dataset);
  }
  auto state = make_state<FixedArith>(config);
  EXPECT_THROW(evaluate(state, empty), Error);
}

TEST(Train, MemorizesTwoSamples) {
  const QFormat f{3, 12};
  net::NetworkConfig config = dense_net({4, 8, 2}, {Activation::sigmoid, Activation::identity}, f);
  config.seed = 1;
  config.learning_rate = 0.5;
  std::vector<std::uint8_t> pixels{250, 10, 250, 10, 10, 250, 10, 250};
  data::Dataset ds(net::Shape{4, 1, 1}, pixels, {0, 1}, 2, data::Split::train);
  TrainOptions options;
  options.iterations = 400;
  options.batch_size = 2;
  options.test = &ds;
  const auto result = train<FixedArith>(config, ds, options);
  EXPECT_EQ(result.record.final_accuracy, 100.0);
  EXPECT_LT(result.record.losses.back().loss, 0.05);
}

TEST(Evaluate, UntrainedNearChance) {
  const std::filesystem::path dir = FXTRAIN_MNIST_DIR;
  if (!std::filesystem::exists(dir / "t10k-images-idx3-ubyte")) GTEST_SKIP() << "MNIST files not present";
  const auto test = data::load_standard(net::Dataset::mnist, dir, data::Split::test).head(500);
  auto config = net::lenet_preset(net::Dataset::mnist);
  config.seed = 42;
  auto state = make_state<FixedArith>(config);
  const double acc = evaluate(state, test);
  EXPECT_GE(acc, 5.0);
  EXPECT_LE(acc, 20.0);
}
