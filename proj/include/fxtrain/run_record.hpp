#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

namespace fxtrain {

namespace data {
class Dataset;
}
namespace net {
struct NetworkConfig;
}

struct LossPoint {
  std::size_t iteration = 0;
  double loss = 0;
  friend bool operator==(const LossPoint&, const LossPoint&) = default;
};

struct AccuracyPoint {
  std::size_t iteration = 0;
  double accuracy = 0;  // percent
  friend bool operator==(const AccuracyPoint&, const AccuracyPoint&) = default;
};

/// Loss per iteration (1-based) and periodic test accuracy.
struct RunRecord {
  std::vector<LossPoint> losses;
  std::vector<AccuracyPoint> evals;
  /// Test accuracy after the last iteration; negative when no test set was given.
  double final_accuracy = -1;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct TrainOptions {
  std::size_t iterations = 0;
  std::size_t batch_size = 32;
  /// Evaluate on `test` every this many iterations (0: only at the end).
  std::size_t eval_every = 0;
  const data::Dataset* test = nullptr;
  std::function<void(std::size_t iteration, double loss)> on_iteration;
};

/// "iteration,loss" rows.
std::string loss_csv(const RunRecord& record);
/// "eval_iteration,accuracy" rows.
std::string accuracy_csv(const RunRecord& record);
nlohmann::json summary_json(const net::NetworkConfig& config, const RunRecord& record, std::size_t iterations,
                            bool float_mode);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace fxtrain
