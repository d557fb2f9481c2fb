#include "fxtrain/netgraph.hpp"

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fxtrain/config_io.hpp"

using namespace fxtrain;
using namespace fxtrain::net;
using qnum::QFormat;
using qnum::quantize;

TEST(Activation, Examples) {
  const QFormat f{2, 12};
  const auto zero = quantize(0.0, f);
  EXPECT_EQ(activate(Activation::sigmoid, zero, f).to_real(), 0.5);
  EXPECT_EQ(activate_deriv(Activation::sigmoid, zero, f).to_real(), 0.25);
  EXPECT_EQ(activate(Activation::tanh, zero, f).raw(), 0);
  EXPECT_EQ(activate_deriv(Activation::tanh, zero, f), quantize(1.0, f));
  EXPECT_EQ(activate_deriv(Activation::relu, quantize(-3.0, f), f).raw(), 0);
  EXPECT_EQ(activate_deriv(Activation::relu, quantize(2.0, f), f).to_real(), 1.0);
  EXPECT_EQ(activate_deriv(Activation::relu, zero, f).raw(), 0);
  EXPECT_EQ(activate(Activation::relu, quantize(-1.5, f), f).raw(), 0);
  EXPECT_EQ(activate(Activation::relu, quantize(1.5, f), f).to_real(), 1.5);
  EXPECT_EQ(activate(Activation::identity, quantize(-1.5, f), f).to_real(), -1.5);
  EXPECT_EQ(activate_deriv(Activation::identity, quantize(-1.5, f), f).to_real(), 1.0);
}

TEST(Activation, RealDerivativesAtZero) {
  EXPECT_EQ(activate_deriv_real(Activation::relu, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(activate_deriv_real(Activation::tanh, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(activate_deriv_real(Activation::sigmoid, 0.0), 0.25);
}

TEST(Activation, TanhIdentityWithinTwoQuantizationSteps) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-8.0, 8.0);
  for (const QFormat f : {QFormat{4, 12}, QFormat{3, 10}, QFormat{4, 20}}) {
    const double bound = std::ldexp(1.0, -(f.frac_bits() + 1)) + std::ldexp(1.0, -f.frac_bits());
    for (int i = 0; i < 1000; ++i) {
      const double x = dist(rng);
      const double got = activate(Activation::tanh, quantize(x, f), f).to_real();
      ASSERT_LE(std::abs(got - std::tanh(x)), bound) << f.to_string() << " x=" << x;
    }
  }
}

TEST(Activation, RealIdentitiesMatchLibm) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> dist(-8.0, 8.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = dist(rng);
    EXPECT_NEAR(activate_real(Activation::tanh, x), std::tanh(x), 1e-14);
    EXPECT_NEAR(activate_deriv_real(Activation::tanh, x), 1.0 - std::tanh(x) * std::tanh(x), 1e-14);
  }
}

TEST(Activation, DerivativeMatchesFiniteDifference) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(-6.0, 6.0);
  const double h = 1e-5;
  for (auto kind : {Activation::sigmoid, Activation::tanh}) {
    for (int i = 0; i < 100; ++i) {
      const double x = dist(rng);
      const double fd = (activate_real(kind, x + h) - activate_real(kind, x - h)) / (2 * h);
      EXPECT_NEAR(fd, activate_deriv_real(kind, x), 1e-6) << to_string(kind) << " x=" << x;
    }
  }
}

TEST(Activation, ParseNames) {
  EXPECT_EQ(parse_activation("relu"), Activation::relu);
  EXPECT_EQ(parse_activation("linear"), Activation::identity);
  EXPECT_EQ(parse_activation(to_string(Activation::tanh)), Activation::tanh);
  EXPECT_THROW(parse_activation("swish"), Error);
}

TEST(Preset, PerLayerFormats) {
  EXPECT_EQ(lenet_preset("mnist").formats(),
            (std::vector<QFormat>{{2, 12}, {2, 12}, {2, 12}, {1, 12}, {3, 10}}));
  EXPECT_EQ(lenet_preset("cifar10").formats(),
            (std::vector<QFormat>{{2, 10}, {2, 11}, {1, 10}, {1, 13}, {2, 13}}));
  EXPECT_EQ(lenet_preset("svhn_idx").formats(),
            (std::vector<QFormat>{{1, 12}, {2, 12}, {2, 12}, {2, 11}, {4, 12}}));
  EXPECT_THROW(lenet_preset("imagenet"), Error);
}

TEST(Preset, Topology) {
  const auto config = lenet_preset(Dataset::mnist);
  ASSERT_EQ(config.layers.size(), 7u);
  EXPECT_EQ(config.weight_layer_count(), 5u);
  EXPECT_FALSE(config.use_bias);
  const auto report = validate(config);
  EXPECT_EQ(report.output().size(), 10u);
  EXPECT_EQ(report.layers[0].out, (Shape{6, 24, 24}));
  EXPECT_EQ(report.layers[3].out, (Shape{16, 4, 4}));
  EXPECT_EQ(std::get<DenseSpec>(config.layers[4]).in_n, 256);
  EXPECT_EQ(std::get<ConvSpec>(config.layers[0]).activation, Activation::relu);
  EXPECT_EQ(std::get<DenseSpec>(config.layers[5]).activation, Activation::sigmoid);
  EXPECT_EQ(std::get<DenseSpec>(config.layers[6]).activation, Activation::identity);
  // Pool layers inherit the format of the layer feeding them.
  EXPECT_EQ(report.layers[1].fmt, QFormat(2, 12));
}

TEST(Preset, CifarShapes) {
  const auto report = validate(lenet_preset(Dataset::cifar10));
  EXPECT_EQ(report.input, (Shape{3, 32, 32}));
  EXPECT_EQ(report.layers[0].out, (Shape{6, 28, 28}));
  EXPECT_EQ(report.output().size(), 10u);
}

TEST(Validate, DenseMismatchNamesBothLayers) {
  NetworkConfig config;
  config.layers = {DenseSpec{20, 50, Activation::relu, {2, 12}}, DenseSpec{50, 99, Activation::relu, {2, 12}},
                   DenseSpec{100, 10, Activation::identity, {2, 12}}};
  try {
    validate(config);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::shape_mismatch);
    const std::string msg = e.what();
    EXPECT_NE(msg.find("dense2"), std::string::npos) << msg;
    EXPECT_NE(msg.find("dense3"), std::string::npos) << msg;
  }
}

TEST(Validate, MalformedLayers) {
  NetworkConfig config;
  config.layers = {ConvSpec{4, 4, 1, 5, 2, Activation::relu, {2, 12}}};
  EXPECT_THROW(validate(config), Error);
  config.layers = {DenseSpec{0, 3, Activation::relu, {2, 12}}};
  EXPECT_THROW(validate(config), Error);
  config.layers = {};
  EXPECT_THROW(validate(config), Error);
}

TEST(ConfigJson, RoundTripPresets) {
  for (auto d : {Dataset::mnist, Dataset::cifar10, Dataset::svhn_idx}) {
    auto config = lenet_preset(d);
    config.seed = 1234;
    config.learning_rate = 0.125;
    const auto back = config_from_json(nlohmann::json::parse(to_json(config).dump()));
    EXPECT_EQ(back, config);
    const auto a = validate(config);
    const auto b = validate(back);
    ASSERT_EQ(a.layers.size(), b.layers.size());
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
      EXPECT_EQ(a.layers[i].out, b.layers[i].out);
      EXPECT_EQ(a.layers[i].fmt, b.layers[i].fmt);
    }
  }
}

TEST(ConfigJson, PresetKeyWithOverrides) {
  const auto doc = nlohmann::json::parse(R"j({"preset": "mnist", "alpha": 0.5, "seed": 9,
                                             "formats": ["(3,10)","(3,10)","(3,10)","(3,10)","(3,10)"]})j");
  const auto config = config_from_json(doc);
  EXPECT_EQ(config.learning_rate, 0.5);
  EXPECT_EQ(config.seed, 9u);
  EXPECT_EQ(config.formats()[0], QFormat(3, 10));
  EXPECT_EQ(config.layers.size(), 7u);
}

TEST(ConfigJson, Errors) {
  auto expect_config_error = [](const char* text) {
    try {
      config_from_json(nlohmann::json::parse(text));
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::invalid_config) << text;
    }
  };
  expect_config_error(R"([1,2])");
  expect_config_error(R"j({"layers": [{"type": "dense", "in": 2}], "formats": ["(2,12)"]})j");
  expect_config_error(R"j({"layers": [{"type": "mystery"}], "formats": []})j");
  expect_config_error(R"j({"preset": "mnist", "formats": ["(2,12)"]})j");
  expect_config_error(R"j({"preset": "mnist", "formats": ["(2,x)","(2,12)","(2,12)","(2,12)","(2,12)"]})j");
  expect_config_error(R"j({"preset": "mnist", "alpha": -1})j");
}

TEST(InitWeights, SeededAndBounded) {
  auto config = lenet_preset(Dataset::mnist);
  config.seed = 42;
  const auto a = init_weights(config);
  const auto b = init_weights(config);
  EXPECT_EQ(a, b);
  ASSERT_EQ(a.size(), 7u);
  EXPECT_EQ(a[0].size(), 6u * 25u);
  EXPECT_TRUE(a[1].empty());
  EXPECT_EQ(a[4].size(), 256u * 120u);
  const double limit = std::sqrt(6.0 / (25 + 150));
  for (double w : a[0]) EXPECT_LE(std::abs(w), limit);
  config.seed = 43;
  EXPECT_NE(init_weights(config), a);
}
