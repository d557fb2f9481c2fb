#include "fxtrain/config_io.hpp"

#include <fstream>

namespace fxtrain::net {

using nlohmann::json;

json to_json(const NetworkConfig& config) {
  json layers = json::array();
  json formats = json::array();
  for (const auto& layer : config.layers) {
    if (const auto* c = std::get_if<ConvSpec>(&layer)) {
      layers.push_back({{"type", "conv"},
                        {"in_h", c->in_h},
                        {"in_w", c->in_w},
                        {"in_d", c->in_d},
                        {"kernel", c->kernel},
                        {"filters", c->filters},
                        {"activation", to_string(c->activation)}});
      formats.push_back(c->fmt.to_string());
    } else if (const auto* d = std::get_if<DenseSpec>(&layer)) {
      layers.push_back({{"type", "dense"}, {"in", d->in_n}, {"out", d->out_n}, {"activation", to_string(d->activation)}});
      formats.push_back(d->fmt.to_string());
    } else {
      const auto& p = std::get<PoolSpec>(layer);
      layers.push_back({{"type", "pool"},
                        {"window", p.window},
                        {"stride", p.stride},
                        {"kind", p.kind == PoolKind::max ? "max" : "avg"}});
    }
  }
  json doc;
  if (!config.dataset.empty()) doc["dataset"] = config.dataset;
  doc["layers"] = std::move(layers);
  doc["formats"] = std::move(formats);
  doc["alpha"] = config.learning_rate;
  doc["seed"] = config.seed;
  doc["use_bias"] = config.use_bias;
  return doc;
}

namespace {

template <class T>
T get_required(const json& obj, const char* key, std::size_t index) {
  if (!obj.contains(key)) {
    throw Error(Errc::invalid_config, "layer " + std::to_string(index + 1) + " is missing \"" + key + "\"");
  }
  return obj.at(key).get<T>();
}

LayerSpec layer_from_json(const json& obj, std::size_t index) {
  const auto type = get_required<std::string>(obj, "type", index);
  if (type == "conv") {
    ConvSpec c;
    c.in_h = get_required<int>(obj, "in_h", index);
    c.in_w = get_required<int>(obj, "in_w", index);
    c.in_d = get_required<int>(obj, "in_d", index);
    c.kernel = get_required<int>(obj, "kernel", index);
    c.filters = get_required<int>(obj, "filters", index);
    c.activation = parse_activation(obj.value("activation", std::string("relu")));
    return c;
  }
  if (type == "dense") {
    DenseSpec d;
    d.in_n = get_required<int>(obj, "in", index);
    d.out_n = get_required<int>(obj, "out", index);
    d.activation = parse_activation(obj.value("activation", std::string("sigmoid")));
    return d;
  }
  if (type == "pool") {
    PoolSpec p;
    p.window = obj.value("window", 2);
    p.stride = obj.value("stride", p.window);
    const auto kind = obj.value("kind", std::string("max"));
    if (kind != "max" && kind != "avg") throw Error(Errc::invalid_config, "unknown pool kind \"" + kind + "\"");
    p.kind = kind == "max" ? PoolKind::max : PoolKind::avg;
    return p;
  }
  throw Error(Errc::invalid_config, "unknown layer type \"" + type + "\"");
}

}  // namespace

NetworkConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(Errc::invalid_config, "config must be a JSON object");
  try {
    NetworkConfig config;
    if (doc.contains("preset")) {
      config = lenet_preset(doc.at("preset").get<std::string>());
    }
    if (doc.contains("dataset")) config.dataset = doc.at("dataset").get<std::string>();
    if (doc.contains("layers")) {
      config.layers.clear();
      const auto& layers = doc.at("layers");
      if (!layers.is_array()) throw Error(Errc::invalid_config, "\"layers\" must be an array");
      for (std::size_t i = 0; i < layers.size(); ++i) config.layers.push_back(layer_from_json(layers[i], i));
    }
    if (config.layers.empty()) throw Error(Errc::invalid_config, "config defines no layers");
    if (doc.contains("formats")) {
      std::vector<QFormat> formats;
      for (const auto& f : doc.at("formats")) formats.push_back(QFormat::parse(f.get<std::string>()));
      config.set_formats(formats);
    } else if (!doc.contains("preset")) {
      throw Error(Errc::invalid_config, "config needs one \"formats\" entry per conv/dense layer");
    }
    if (doc.contains("alpha")) config.learning_rate = doc.at("alpha").get<double>();
    if (doc.contains("seed")) config.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("use_bias")) config.use_bias = doc.at("use_bias").get<bool>();
    validate(config);
    return config;
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_config, std::string("malformed config: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::invalid_format) {
      throw Error(Errc::invalid_config, e.what());
    }
    throw;
  }
}

NetworkConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io, "cannot read config file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(Errc::invalid_config, "config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

void save_config(const NetworkConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io, "cannot write " + path.string());
  out << to_json(config).dump(2) << '\n';
}

}  // namespace fxtrain::net
