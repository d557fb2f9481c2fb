#include "fxtrain/run_record.hpp"

#include <fstream>

#include <fmt/format.h>

#include "fxtrain/config_io.hpp"
#include "fxtrain/error.hpp"

namespace fxtrain {

std::string loss_csv(const RunRecord& record) {
  std::string out = "iteration,loss\n";
  for (const auto& p : record.losses) out += fmt::format("{},{:.17g}\n", p.iteration, p.loss);
  return out;
}

std::string accuracy_csv(const RunRecord& record) {
  std::string out = "eval_iteration,accuracy\n";
  for (const auto& p : record.evals) out += fmt::format("{},{:.6f}\n", p.iteration, p.accuracy);
  return out;
}

nlohmann::json summary_json(const net::NetworkConfig& config, const RunRecord& record, std::size_t iterations,
                            bool float_mode) {
  nlohmann::json doc;
  doc["config"] = net::to_json(config);
  doc["final_accuracy"] = record.final_accuracy;
  doc["final_loss"] = record.losses.empty() ? nlohmann::json(nullptr) : nlohmann::json(record.losses.back().loss);
  doc["iterations"] = iterations;
  doc["seed"] = config.seed;
  doc["arithmetic"] = float_mode ? "float64" : "fixed";
  return doc;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Errc::io, "failed writing " + path.string());
}

}  // namespace fxtrain
