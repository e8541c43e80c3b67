#include "bdett/serialize.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "json_util.hpp"

namespace bdett {

using nlohmann::json;

namespace detail {

json require(const json& j, const char* key, const char* where) {
  if (!j.contains(key))
    throw ConfigError(std::string(where) + ": missing field '" + key + "'");
  return j.at(key);
}

std::string scheme_kind_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::Static: return "static";
    case SchemeKind::DetOnly: return "det_only";
    case SchemeKind::DttOnly: return "dtt_only";
    case SchemeKind::Bdett: return "bdett";
    case SchemeKind::FittedConstants: return "fitted";
  }
  return "bdett";
}

SchemeKind scheme_kind_from(const std::string& name) {
  if (name == "static") return SchemeKind::Static;
  if (name == "det_only") return SchemeKind::DetOnly;
  if (name == "dtt_only") return SchemeKind::DttOnly;
  if (name == "bdett") return SchemeKind::Bdett;
  if (name == "fitted") return SchemeKind::FittedConstants;
  throw ConfigError("scheme: unknown kind '" + name + "'");
}

json scheme_to_json(const ThresholdSchemeConfig& cfg) {
  return json{{"kind", scheme_kind_name(cfg.kind)}, {"eta", cfg.eta},
              {"psi", cfg.psi},                     {"c", cfg.c_decay},
              {"theta0", cfg.theta0},               {"range_coeff", cfg.range_coeff}};
}

ThresholdSchemeConfig scheme_from_json(const json& j) {
  ThresholdSchemeConfig cfg;
  cfg.kind = scheme_kind_from(require(j, "kind", "scheme").get<std::string>());
  cfg.eta = j.value("eta", cfg.eta);
  cfg.psi = j.value("psi", cfg.psi);
  cfg.c_decay = j.value("c", cfg.c_decay);
  cfg.theta0 = j.value("theta0", cfg.theta0);
  cfg.range_coeff = j.value("range_coeff", cfg.range_coeff);
  cfg.validate();
  return cfg;
}

json degradation_to_json(const DegradationSpec& spec) {
  json j;
  switch (spec.kind) {
    case DegradationKind::FixedLasers:
      j["kind"] = "fixed_lasers";
      j["indices"] = spec.laser_indices;
      j["value"] = spec.laser_value;
      break;
    case DegradationKind::GaussInput:
      j["kind"] = "gauss_input";
      j["sigma"] = spec.sigma;
      break;
    case DegradationKind::Quantize8Bit:
      j["kind"] = "quantize8";
      break;
    case DegradationKind::GaussWeights:
      j["kind"] = "gauss_weights";
      j["sigma"] = spec.sigma;
      break;
    case DegradationKind::ZeroMask:
      j["kind"] = "zero_mask";
      j["fraction"] = spec.fraction;
      break;
  }
  j["seed"] = spec.seed;
  return j;
}

DegradationSpec degradation_from_json(const json& j) {
  DegradationSpec spec;
  const auto kind = require(j, "kind", "degradation").get<std::string>();
  if (kind == "fixed_lasers") {
    spec.kind = DegradationKind::FixedLasers;
    if (j.contains("indices"))
      spec.laser_indices = j.at("indices").get<std::vector<int>>();
    spec.laser_value = j.value("value", 0.2);
  } else if (kind == "gauss_input") {
    spec.kind = DegradationKind::GaussInput;
    spec.sigma = j.value("sigma", 1.0);
  } else if (kind == "quantize8") {
    spec.kind = DegradationKind::Quantize8Bit;
  } else if (kind == "gauss_weights") {
    spec.kind = DegradationKind::GaussWeights;
    spec.sigma = j.value("sigma", 0.05);
  } else if (kind == "zero_mask") {
    spec.kind = DegradationKind::ZeroMask;
    spec.fraction = j.value("fraction", 0.3);
  } else {
    throw ConfigError("degradation: unknown kind '" + kind + "'");
  }
  spec.seed = j.value("seed", std::uint64_t{0});
  spec.validate();
  return spec;
}

json normalizer_to_json(const StateNormalizer& norm) {
  json j = json::array();
  for (const auto& [lo, hi] : norm.bounds) j.push_back(json::array({lo, hi}));
  return j;
}

StateNormalizer normalizer_from_json(const json& j) {
  StateNormalizer norm;
  for (const auto& pair : j) {
    if (!pair.is_array() || pair.size() != 2)
      throw ConfigError("normalizer: each entry must be [lo, hi]");
    norm.bounds.emplace_back(pair[0].get<double>(), pair[1].get<double>());
  }
  norm.validate();
  return norm;
}

json parse(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw ConfigError(std::string(what) + ": malformed JSON");
  return j;
}

}  // namespace detail

using namespace detail;

std::string model_to_json(const NetworkModel& model) {
  json j;
  j["layer_sizes"] = model.layer_sizes;
  json weights = json::array();
  for (const auto& w : model.weights) {
    json rows = json::array();
    for (std::size_t i = 0; i < w.rows; ++i) {
      json row = json::array();
      for (std::size_t c = 0; c < w.cols; ++c) row.push_back(w(i, c));
      rows.push_back(std::move(row));
    }
    weights.push_back(std::move(rows));
  }
  j["weights"] = std::move(weights);
  j["biases"] = model.biases;
  if (model.neuron.kind == NeuronKind::Lif)
    j["neuron_model"] = json{{"kind", "lif"}, {"d", model.neuron.decay}};
  else
    j["neuron_model"] = json{{"kind", "srm"},
                             {"tau_s", model.neuron.tau_s},
                             {"tau_r", model.neuron.tau_r}};
  j["scheme"] = scheme_to_json(model.scheme);
  if (model.output_scheme)
    j["output_scheme"] = scheme_to_json(*model.output_scheme);
  j["T"] = model.timesteps;
  return j.dump(2);
}

NetworkModel model_from_json(const std::string& text) {
  const json j = parse(text, "model");
  NetworkModel m;
  m.layer_sizes =
      require(j, "layer_sizes", "model").get<std::vector<std::size_t>>();
  for (const auto& wj : require(j, "weights", "model")) {
    Matrix w(wj.size(), wj.empty() ? 0 : wj.at(0).size());
    for (std::size_t i = 0; i < w.rows; ++i) {
      const auto& row = wj.at(i);
      if (row.size() != w.cols)
        throw ConfigError("model: ragged weight matrix");
      for (std::size_t c = 0; c < w.cols; ++c)
        w(i, c) = row.at(c).get<double>();
    }
    m.weights.push_back(std::move(w));
  }
  m.biases = require(j, "biases", "model").get<std::vector<Vec>>();
  const json nj = require(j, "neuron_model", "model");
  const auto kind = require(nj, "kind", "neuron_model").get<std::string>();
  if (kind == "lif") {
    m.neuron.kind = NeuronKind::Lif;
    m.neuron.decay = nj.value("d", 0.75);
  } else if (kind == "srm") {
    m.neuron.kind = NeuronKind::Srm;
    m.neuron.tau_s = nj.value("tau_s", 1.0);
    m.neuron.tau_r = nj.value("tau_r", 1.0);
  } else {
    throw ConfigError("neuron_model: unknown kind '" + kind + "'");
  }
  m.scheme = scheme_from_json(require(j, "scheme", "model"));
  if (j.contains("output_scheme"))
    m.output_scheme = scheme_from_json(j.at("output_scheme"));
  m.timesteps = require(j, "T", "model").get<int>();
  m.validate();
  return m;
}

void save_model(const NetworkModel& model, const std::string& path) {
  write_file(path, model_to_json(model));
}

NetworkModel load_model(const std::string& path) {
  return model_from_json(read_file(path));
}

std::string world_to_json(const World& world) {
  json j;
  j["bounds"] = json::array({world.width, world.height});
  json circles = json::array();
  for (const auto& c : world.circles)
    circles.push_back(json{{"x", c.x}, {"y", c.y}, {"r", c.r}});
  j["circles"] = std::move(circles);
  json segments = json::array();
  for (const auto& s : world.segments)
    segments.push_back(json::array({s.x1, s.y1, s.x2, s.y2}));
  j["segments"] = std::move(segments);
  json dynamic = json::array();
  for (const auto& d : world.dynamic)
    dynamic.push_back(json{{"ax", d.ax}, {"ay", d.ay}, {"bx", d.bx},
                           {"by", d.by}, {"speed", d.speed}, {"r", d.radius}});
  j["dynamic"] = std::move(dynamic);
  return j.dump(2);
}

World world_from_json(const std::string& text) {
  const json j = parse(text, "world");
  World w;
  const json bounds = require(j, "bounds", "world");
  if (!bounds.is_array() || bounds.size() != 2)
    throw ConfigError("world: bounds must be [width, height]");
  w.width = bounds[0].get<double>();
  w.height = bounds[1].get<double>();
  for (const auto& cj : j.value("circles", json::array()))
    w.circles.push_back(Circle{require(cj, "x", "circle").get<double>(),
                               require(cj, "y", "circle").get<double>(),
                               require(cj, "r", "circle").get<double>()});
  for (const auto& sj : j.value("segments", json::array())) {
    if (!sj.is_array() || sj.size() != 4)
      throw ConfigError("world: segment must be [x1,y1,x2,y2]");
    w.segments.push_back(Segment{sj[0].get<double>(), sj[1].get<double>(),
                                 sj[2].get<double>(), sj[3].get<double>()});
  }
  for (const auto& dj : j.value("dynamic", json::array()))
    w.dynamic.push_back(DynamicObstacle{
        require(dj, "ax", "dynamic").get<double>(),
        require(dj, "ay", "dynamic").get<double>(),
        require(dj, "bx", "dynamic").get<double>(),
        require(dj, "by", "dynamic").get<double>(),
        require(dj, "speed", "dynamic").get<double>(),
        dj.value("r", 0.4)});
  w.validate();
  return w;
}

World load_world(const std::string& path) {
  return world_from_json(read_file(path));
}

std::string trials_to_json(const std::vector<std::pair<Point, Point>>& trials) {
  json j = json::array();
  for (const auto& [a, b] : trials)
    j.push_back(json::array({a.x, a.y, b.x, b.y}));
  return j.dump();
}

std::vector<std::pair<Point, Point>> trials_from_json(const std::string& text) {
  const json j = parse(text, "trials");
  std::vector<std::pair<Point, Point>> trials;
  for (const auto& t : j) {
    if (!t.is_array() || t.size() != 4)
      throw ConfigError("trials: each entry must be [sx,sy,gx,gy]");
    trials.push_back({{t[0].get<double>(), t[1].get<double>()},
                      {t[2].get<double>(), t[3].get<double>()}});
  }
  return trials;
}

std::vector<std::pair<Point, Point>> load_trials(const std::string& path) {
  return trials_from_json(read_file(path));
}

std::string dataset_to_json(const Dataset& data) {
  json j = json::array();
  for (const auto& s : data.samples) {
    json sj;
    sj["x"] = s.x;
    if (s.label >= 0)
      sj["y"] = s.label;
    else
      sj["y"] = s.action;
    j.push_back(std::move(sj));
  }
  return j.dump();
}

Dataset dataset_from_json(const std::string& text) {
  const json j = parse(text, "dataset");
  Dataset data;
  for (const auto& sj : j) {
    Sample s;
    s.x = require(sj, "x", "dataset").get<Vec>();
    const json y = require(sj, "y", "dataset");
    if (y.is_number_integer()) {
      s.label = y.get<int>();
      data.num_classes = std::max(data.num_classes, s.label + 1);
    } else if (y.is_array()) {
      s.action = y.get<Vec>();
    } else {
      throw ConfigError("dataset: y must be a class index or an action array");
    }
    data.samples.push_back(std::move(s));
  }
  data.validate();
  return data;
}

Dataset load_dataset(const std::string& path) {
  return dataset_from_json(read_file(path));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << content;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace bdett
