#pragma once

// Small network builders shared by the engine, oracle and acceptance tests.

#include <random>
#include <vector>

#include "fxtrain/netgraph.hpp"

namespace fxtrain::testing {

inline net::NetworkConfig dense_net(const std::vector<int>& sizes, const std::vector<net::Activation>& acts,
                                    qnum::QFormat fmt = {8, 20}) {
  net::NetworkConfig config;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    config.layers.push_back(net::DenseSpec{sizes[i], sizes[i + 1], acts[i], fmt});
  }
  return config;
}

/// Random dense stack with 1..max_layers layers of 1..max_units units,
/// hidden activations drawn from {relu, sigmoid, tanh}, identity logits.
inline net::NetworkConfig random_dense_net(std::mt19937_64& rng, int max_layers, int max_units,
                                           qnum::QFormat fmt = {8, 20}) {
  std::uniform_int_distribution<int> layers(1, max_layers);
  std::uniform_int_distribution<int> units(1, max_units);
  std::uniform_int_distribution<int> classes(2, std::min(10, max_units));
  std::uniform_int_distribution<int> act(0, 2);
  const int n = layers(rng);
  std::vector<int> sizes{units(rng)};
  std::vector<net::Activation> acts;
  for (int i = 0; i < n; ++i) {
    sizes.push_back(i + 1 == n ? classes(rng) : units(rng));
    const net::Activation hidden[] = {net::Activation::relu, net::Activation::sigmoid, net::Activation::tanh};
    acts.push_back(i + 1 == n ? net::Activation::identity : hidden[act(rng)]);
  }
  auto config = dense_net(sizes, acts, fmt);
  config.seed = rng();
  config.learning_rate = 0.0625;
  return config;
}

/// Small conv net: conv (relu) -> pool -> dense (sigmoid) -> dense logits.
inline net::NetworkConfig small_conv_net(int side, int depth, int kernel, int filters, net::PoolKind pool,
                                         qnum::QFormat fmt = {8, 20}) {
  net::NetworkConfig config;
  const int c = side - kernel + 1;
  const int p = c / 2;
  config.layers = {
      net::ConvSpec{side, side, depth, kernel, filters, net::Activation::relu, fmt},
      net::PoolSpec{2, 2, pool},
      net::DenseSpec{filters * p * p, 6, net::Activation::sigmoid, fmt},
      net::DenseSpec{6, 3, net::Activation::identity, fmt},
  };
  config.learning_rate = 0.0625;
  return config;
}

inline std::vector<double> random_input(std::mt19937_64& rng, std::size_t n, double lo = 0.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

}  // namespace fxtrain::testing
