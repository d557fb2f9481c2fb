#include "fxtrain/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "fxtrain/config_io.hpp"
#include "fxtrain/data.hpp"
#include "fxtrain/engine.hpp"
#include "fxtrain/error.hpp"
#include "fxtrain/oracle.hpp"
#include "fxtrain/pesim.hpp"
#include "fxtrain/run_record.hpp"

namespace fxtrain::cli {
namespace {

namespace fs = std::filesystem;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::io:
    case Errc::bad_magic:
    case Errc::truncated:
    case Errc::count_mismatch:
    case Errc::empty_dataset:
      return kExitIo;
    default:
      return kExitConfig;
  }
}

/// Runs `body`, mapping exceptions to exit codes with a one-line diagnostic.
template <class F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const nlohmann::json::exception& e) {
    err << "error: malformed JSON: " << e.what() << '\n';
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::io, "cannot create " + dir.string() + ": " + ec.message());
}

struct Splits {
  data::Dataset train;
  data::Dataset test;
};

Splits load_data(const net::NetworkConfig& config, const std::optional<fs::path>& dir, std::size_t train_limit,
                 std::size_t test_limit) {
  const auto kind = net::parse_dataset(config.dataset);
  const fs::path root = dir ? *dir : fs::path("data") / std::string(net::to_string(kind));
  Splits s{data::load_standard(kind, root, data::Split::train), data::load_standard(kind, root, data::Split::test)};
  if (train_limit > 0) s.train = s.train.head(train_limit);
  if (test_limit > 0) s.test = s.test.head(test_limit);
  const auto input = net::validate(config).input;
  if (!(s.train.image_shape() == input)) {
    throw Error(Errc::shape_mismatch, "dataset images are " + s.train.image_shape().to_string() +
                                          " but the network expects " + input.to_string());
  }
  return s;
}

RunRecord run_training(const net::NetworkConfig& config, const Splits& splits, std::size_t iterations,
                       std::size_t batch, std::size_t eval_every, bool float_mode) {
  TrainOptions options;
  options.iterations = iterations;
  options.batch_size = batch;
  options.eval_every = eval_every;
  options.test = &splits.test;
  if (float_mode) return oracle::float_train(config, splits.train, options).record;
  return engine::train<engine::FixedArith>(config, splits.train, options).record;
}

void write_run(const fs::path& dir, const net::NetworkConfig& config, const RunRecord& record,
               std::size_t iterations, bool float_mode) {
  ensure_dir(dir);
  write_text(dir / "loss.csv", loss_csv(record));
  write_text(dir / "accuracy.csv", accuracy_csv(record));
  write_text(dir / "summary.json", summary_json(config, record, iterations, float_mode).dump(2) + "\n");
}

std::string formats_string(const std::vector<qnum::QFormat>& formats) {
  std::string s;
  for (const auto& f : formats) {
    if (!s.empty()) s += ' ';
    s += f.to_string();
  }
  return s;
}

std::vector<qnum::QFormat> parse_point(const nlohmann::json& entry) {
  std::vector<qnum::QFormat> point;
  if (entry.is_string()) return qnum::QFormat::parse_list(entry.get<std::string>());
  if (!entry.is_array()) throw Error(Errc::invalid_config, "a design point must be a list of \"(I,F)\" strings");
  for (const auto& f : entry) point.push_back(qnum::QFormat::parse(f.get<std::string>()));
  return point;
}

}  // namespace

net::NetworkConfig resolve_config(const ConfigSource& source) {
  if (source.config_path && source.preset) throw Error(Errc::invalid_config, "--config and --preset are exclusive");
  net::NetworkConfig config = source.config_path ? net::load_config(*source.config_path)
                                                 : net::lenet_preset(source.preset.value_or("mnist"));
  if (source.seed) config.seed = *source.seed;
  if (source.alpha) {
    if (!(*source.alpha > 0)) throw Error(Errc::invalid_config, "--alpha must be positive");
    config.learning_rate = *source.alpha;
  }
  if (source.formats) {
    try {
      config.set_formats(qnum::QFormat::parse_list(*source.formats));
    } catch (const Error& e) {
      throw Error(Errc::invalid_config, std::string("--format: ") + e.what());
    }
  }
  net::validate(config);
  return config;
}

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto config = resolve_config(args.source);
    if (args.batch == 0) throw Error(Errc::invalid_config, "--batch must be at least 1");
    const auto splits = load_data(config, args.data_dir, args.train_limit, args.test_limit);
    const auto record = run_training(config, splits, args.iterations, args.batch, args.eval_every, args.float_mode);
    write_run(args.out, config, record, args.iterations, args.float_mode);
    out << fmt::format("{} iterations, final loss {}, test accuracy {:.2f}%\n", args.iterations,
                       record.losses.empty() ? std::string("n/a") : fmt::format("{:.6f}", record.losses.back().loss),
                       record.final_accuracy);
    return kExitOk;
  });
}

SweepSpec parse_sweep(const nlohmann::json& doc, const fs::path& base_dir) {
  if (!doc.is_object()) throw Error(Errc::invalid_config, "sweep file must be a JSON object");
  SweepSpec spec;
  if (doc.contains("base")) {
    spec.base = net::config_from_json(doc.at("base"));
  } else if (doc.contains("config")) {
    fs::path p = doc.at("config").get<std::string>();
    spec.base = net::load_config(p.is_relative() ? base_dir / p : p);
  } else {
    spec.base = net::lenet_preset(doc.value("preset", std::string("mnist")));
  }
  if (doc.contains("seed")) spec.base.seed = doc.at("seed").get<std::uint64_t>();
  if (doc.contains("alpha")) spec.base.learning_rate = doc.at("alpha").get<double>();
  spec.iterations = doc.value("iterations", spec.iterations);
  spec.batch = doc.value("batch", spec.batch);
  spec.accuracy_threshold = doc.value("accuracy_threshold", 0.0);

  const std::size_t n_layers = spec.base.weight_layer_count();
  if (doc.contains("points")) {
    const auto& points = doc.at("points");
    if (!points.is_array() || points.empty()) throw Error(Errc::invalid_config, "\"points\" must be a non-empty list");
    for (const auto& p : points) spec.points.push_back(parse_point(p));
  } else if (doc.contains("candidates")) {
    const auto& cands = doc.at("candidates");
    if (!cands.is_array() || cands.size() != n_layers) {
      throw Error(Errc::invalid_config,
                  "\"candidates\" needs one list per conv/dense layer (" + std::to_string(n_layers) + ")");
    }
    std::vector<std::vector<qnum::QFormat>> lists;
    for (std::size_t i = 0; i < cands.size(); ++i) {
      if (!cands[i].is_array() || cands[i].empty()) {
        throw Error(Errc::invalid_config, "candidate list for layer " + std::to_string(i + 1) + " is empty");
      }
      std::vector<qnum::QFormat> list;
      for (const auto& f : cands[i]) list.push_back(qnum::QFormat::parse(f.get<std::string>()));
      lists.push_back(std::move(list));
    }
    std::vector<std::size_t> idx(lists.size(), 0);
    while (true) {
      std::vector<qnum::QFormat> point;
      for (std::size_t i = 0; i < lists.size(); ++i) point.push_back(lists[i][idx[i]]);
      spec.points.push_back(std::move(point));
      std::size_t d = lists.size();
      while (d > 0 && ++idx[d - 1] == lists[d - 1].size()) idx[--d] = 0;
      if (d == 0) break;
    }
  } else {
    throw Error(Errc::invalid_config, "sweep needs \"points\" or \"candidates\"");
  }
  for (const auto& p : spec.points) {
    if (p.size() != n_layers) {
      throw Error(Errc::invalid_config, "design point " + formats_string(p) + " needs " + std::to_string(n_layers) +
                                            " formats");
    }
  }
  if (spec.batch == 0) throw Error(Errc::invalid_config, "batch must be at least 1");
  return spec;
}

int cmd_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::ifstream in(args.sweep_path);
    if (!in) throw Error(Errc::io, "cannot open " + args.sweep_path.string());
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::invalid_config, args.sweep_path.string() + ": " + e.what());
    }
    auto spec = parse_sweep(doc, args.sweep_path.parent_path());
    if (args.iterations) spec.iterations = *args.iterations;
    if (args.batch) spec.batch = *args.batch;
    if (args.seed) spec.base.seed = *args.seed;
    if (spec.batch == 0) throw Error(Errc::invalid_config, "batch must be at least 1");

    const auto splits = load_data(spec.base, args.data_dir, args.train_limit, args.test_limit);
    ensure_dir(args.out);
    std::string csv = "point,formats,final_loss,accuracy,meets_threshold\n";
    for (std::size_t k = 0; k < spec.points.size(); ++k) {
      auto config = spec.base;
      config.set_formats(spec.points[k]);
      const auto record = run_training(config, splits, spec.iterations, spec.batch, 0, args.float_mode);
      write_run(args.out / ("point_" + std::to_string(k)), config, record, spec.iterations, args.float_mode);
      const std::string loss = record.losses.empty() ? "" : fmt::format("{:.17g}", record.losses.back().loss);
      const bool meets = record.final_accuracy >= spec.accuracy_threshold;
      csv += fmt::format("{},\"{}\",{},{:.17g},{}\n", k, formats_string(spec.points[k]), loss,
                         record.final_accuracy, meets ? "true" : "false");
      out << fmt::format("point {} {}: accuracy {:.2f}%\n", k, formats_string(spec.points[k]),
                         record.final_accuracy);
    }
    write_text(args.out / "sweep.csv", csv);
    return kExitOk;
  });
}

int cmd_timing(const TimingArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto config = resolve_config(args.source);
    const auto report = pesim::timing_report(config);
    const auto text = pesim::to_json(report, &config).dump(2) + "\n";
    ensure_dir(args.out);
    write_text(args.out / "timing.json", text);
    out << text;
    return kExitOk;
  });
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fixed-point DNN training simulator"};
  app.require_subcommand(1);

  auto add_source = [](CLI::App* cmd, ConfigSource& s) {
    cmd->add_option("--config", s.config_path, "Network config JSON");
    cmd->add_option("--preset", s.preset, "LeNet preset: mnist, cifar10, svhn");
    cmd->add_option("--seed", s.seed, "Override the config seed");
    cmd->add_option("--alpha", s.alpha, "Override the learning rate");
    cmd->add_option("--format", s.formats, "Per-layer formats \"(I,F)[,...]\"");
  };

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a network and record loss and accuracy");
  add_source(train_cmd, train.source);
  train_cmd->add_option("--data-dir", train.data_dir, "Dataset directory (default data/<dataset>)");
  train_cmd->add_option("--out", train.out, "Output directory");
  train_cmd->add_option("--iterations", train.iterations, "Training iterations");
  train_cmd->add_option("--batch", train.batch, "Minibatch size");
  train_cmd->add_option("--eval-every", train.eval_every, "Evaluate every N iterations (0: end only)");
  train_cmd->add_option("--train-limit", train.train_limit, "Use only the first N training images");
  train_cmd->add_option("--test-limit", train.test_limit, "Use only the first N test images");
  train_cmd->add_flag("--float", train.float_mode, "Train in float64 instead of fixed point");

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Train one run per design point");
  sweep_cmd->add_option("sweep", sweep.sweep_path, "Sweep JSON file")->required();
  sweep_cmd->add_option("--data-dir", sweep.data_dir, "Dataset directory (default data/<dataset>)");
  sweep_cmd->add_option("--out", sweep.out, "Output directory");
  sweep_cmd->add_option("--iterations", sweep.iterations, "Override the iteration budget");
  sweep_cmd->add_option("--batch", sweep.batch, "Override the minibatch size");
  sweep_cmd->add_option("--seed", sweep.seed, "Override the shared seed");
  sweep_cmd->add_option("--train-limit", sweep.train_limit, "Use only the first N training images");
  sweep_cmd->add_option("--test-limit", sweep.test_limit, "Use only the first N test images");
  sweep_cmd->add_flag("--float", sweep.float_mode, "Train in float64 instead of fixed point");

  TimingArgs timing;
  auto* timing_cmd = app.add_subcommand("timing", "Report inference and back-propagation cycle counts");
  add_source(timing_cmd, timing.source);
  timing_cmd->add_option("--out", timing.out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << e.what() << '\n';
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (train_cmd->parsed()) return cmd_train(train, out, err);
  if (sweep_cmd->parsed()) return cmd_sweep(sweep, out, err);
  return cmd_timing(timing, out, err);
}

}  // namespace fxtrain::cli
