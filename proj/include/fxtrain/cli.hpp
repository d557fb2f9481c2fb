#pragma once

// Command-line front end: train, sweep and timing.
//
// Exit codes: 0 success, 1 configuration error, 2 I/O or data error.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fxtrain/netgraph.hpp"

namespace fxtrain::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitIo = 2;

/// Where a network comes from plus the flag overrides shared by every command.
struct ConfigSource {
  std::optional<std::filesystem::path> config_path;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<double> alpha;
  std::optional<std::string> formats;  // "(I,F)[,...]"
};

/// Loads the config (file, preset, or the MNIST preset when neither is given)
/// and applies the overrides. Throws fxtrain::Error.
net::NetworkConfig resolve_config(const ConfigSource& source);

struct TrainArgs {
  ConfigSource source;
  std::optional<std::filesystem::path> data_dir;  // default: data/<dataset>
  std::filesystem::path out = "out";
  std::size_t iterations = 2000;
  std::size_t batch = 32;
  std::size_t eval_every = 0;
  std::size_t train_limit = 0;  // 0: whole split
  std::size_t test_limit = 0;
  bool float_mode = false;
};

/// Trains and writes loss.csv, accuracy.csv and summary.json under `out`.
int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err);

/// A sweep file:
///
///   { "preset": "mnist" | "config": "path" | "base": {...config...},
///     "points": [["(2,12)", ...], ...]          explicit design points, or
///     "candidates": [["(2,12)", "(2,8)"], ...]  per-layer lists (cartesian
///                                               product, first layer slowest)
///     "iterations": 2000, "batch": 32, "seed": 42, "accuracy_threshold": 90 }
struct SweepSpec {
  net::NetworkConfig base;
  std::vector<std::vector<qnum::QFormat>> points;
  std::size_t iterations = 2000;
  std::size_t batch = 32;
  double accuracy_threshold = 0;
};

/// Parses a sweep document. Relative "config" paths resolve against `base_dir`.
/// Throws invalid_config (including for an empty candidate list).
SweepSpec parse_sweep(const nlohmann::json& doc, const std::filesystem::path& base_dir);

struct SweepArgs {
  std::filesystem::path sweep_path;
  std::optional<std::filesystem::path> data_dir;
  std::filesystem::path out = "out";
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> batch;
  std::optional<std::uint64_t> seed;
  std::size_t train_limit = 0;
  std::size_t test_limit = 0;
  bool float_mode = false;
};

/// One run per design point with a shared seed. Writes sweep.csv
/// ("point,formats,final_loss,accuracy,meets_threshold") and point_<k>/ run files.
int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err);

struct TimingArgs {
  ConfigSource source;
  std::filesystem::path out = "out";
};

/// Prints the cycle report and writes it to timing.json.
int cmd_timing(const TimingArgs& args, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fxtrain::cli
