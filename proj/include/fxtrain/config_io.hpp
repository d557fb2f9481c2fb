#pragma once

// JSON form of NetworkConfig:
//
//   { "dataset": "mnist",
//     "layers": [ {"type": "conv", "in_h": 28, "in_w": 28, "in_d": 1, "kernel": 5,
//                  "filters": 6, "activation": "relu"},
//                 {"type": "pool", "window": 2, "stride": 2, "kind": "max"},
//                 {"type": "dense", "in": 256, "out": 120, "activation": "sigmoid"}, ... ],
//     "formats": ["(2,12)", ...],          // one per conv/dense layer
//     "alpha": 0.01, "seed": 42, "use_bias": false }
//
// {"preset": "mnist"} stands in for "dataset", "layers" and "formats"; any of
// the other keys may still override the preset.

#include <filesystem>

#include <json.hpp>

#include "fxtrain/netgraph.hpp"

namespace fxtrain::net {

nlohmann::json to_json(const NetworkConfig& config);
NetworkConfig config_from_json(const nlohmann::json& doc);

/// Throws io if the file cannot be read, invalid_config on malformed content.
NetworkConfig load_config(const std::filesystem::path& path);
void save_config(const NetworkConfig& config, const std::filesystem::path& path);

}  // namespace fxtrain::net
