#include "bdett/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include <json.hpp>

#include "bdett/rng.hpp"
#include "bdett/serialize.hpp"
#include "json_util.hpp"

namespace bdett {

using nlohmann::json;
using detail::degradation_from_json;
using detail::degradation_to_json;
using detail::normalizer_from_json;
using detail::parse;
using detail::require;
using detail::scheme_from_json;

namespace {

namespace fs = std::filesystem;

json config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["task"] = cfg.task;
  j["seed"] = cfg.seed;
  j["out"] = cfg.out_dir;
  j["T"] = cfg.timesteps;
  j["scheme"] = detail::scheme_to_json(cfg.scheme);
  if (cfg.model_path) j["model"] = *cfg.model_path;
  if (!cfg.layer_sizes.empty()) j["layer_sizes"] = cfg.layer_sizes;
  j["epochs"] = cfg.epochs;
  j["lr"] = cfg.lr;
  j["batch_size"] = cfg.batch_size;
  j["train_with_scheme"] = cfg.train_with_scheme;
  if (cfg.dataset_path) j["dataset"] = *cfg.dataset_path;
  j["world"] = cfg.world_ref;
  j["episodes"] = cfg.episodes;
  j["trials"] = cfg.trials;
  if (cfg.trial_list_path) j["trial_list"] = *cfg.trial_list_path;
  json degs = json::array();
  for (const auto& d : cfg.degradations) degs.push_back(degradation_to_json(d));
  j["degradations"] = std::move(degs);
  if (cfg.normalizer) j["normalizer"] = detail::normalizer_to_json(*cfg.normalizer);
  j["jobs"] = cfg.jobs;
  j["max_steps"] = cfg.max_steps;
  return j;
}

void write_manifest(const ExperimentConfig& cfg, const std::string& command,
                    const std::vector<std::string>& outputs) {
  const json cj = config_to_json(cfg);
  json m;
  m["artifact_version"] = kArtifactVersion;
  m["command"] = command;
  m["root_seed"] = cfg.seed;
  m["config_hash"] = config_hash_hex(cj.dump());
  m["config"] = cj;
  m["outputs"] = outputs;
  write_file((fs::path(cfg.out_dir) / "manifest.json").string(), m.dump(2));
}

void ensure_out_dir(const ExperimentConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw ConfigError("cannot create output directory: " + cfg.out_dir);
}

Dataset resolve_dataset(const ExperimentConfig& cfg) {
  if (cfg.dataset_path) {
    if (!fs::exists(*cfg.dataset_path))
      throw ConfigError("dataset file does not exist: " + *cfg.dataset_path);
    return load_dataset(*cfg.dataset_path);
  }
  auto rng = make_stream(cfg.seed, 0xb10b);
  return make_blob_dataset(cfg.synthetic.per_class, cfg.synthetic.dim, rng,
                           cfg.synthetic.spread);
}

NetworkModel resolve_trained_model(const ExperimentConfig& cfg) {
  if (!cfg.model_path) throw ConfigError("eval: config has no 'model' path");
  if (!fs::exists(*cfg.model_path))
    throw ConfigError("model file does not exist: " + *cfg.model_path);
  return load_model(*cfg.model_path);
}

SimParams sim_params(const ExperimentConfig& cfg) {
  SimParams params;
  params.max_steps = cfg.max_steps;
  return params;
}

struct Condition {
  std::string label;
  std::optional<DegradationSpec> spec;
};

std::vector<Condition> eval_conditions(const ExperimentConfig& cfg) {
  std::vector<Condition> conditions;
  conditions.push_back({"base", std::nullopt});
  for (const auto& d : cfg.degradations) conditions.push_back({d.label(), d});
  return conditions;
}

NetworkModel degraded_model(const NetworkModel& model, const Condition& cond,
                            std::uint64_t root_seed, std::size_t cond_index) {
  if (!cond.spec || cond.spec->affects_inputs()) return model;
  const std::uint64_t seed =
      cond.spec->seed != 0 ? cond.spec->seed
                           : splitmix64(root_seed ^ (kWeightNoiseKey + cond_index));
  auto rng = make_stream(seed, 0);
  return apply_weight_degradation(model, *cond.spec, rng);
}

std::string csv_row(std::uint64_t trial_id, std::uint64_t seed,
                    const std::string& condition, const std::string& outcome,
                    int steps, double mean_rate, double std_rate) {
  std::ostringstream row;
  row << trial_id << ',' << seed << ',' << condition << ',' << outcome << ','
      << steps << ',' << format_double(mean_rate) << ','
      << format_double(std_rate) << '\n';
  return row.str();
}

json condition_report(const ConditionSummary& c, bool avoid) {
  json j;
  j["condition"] = c.condition;
  j["P"] = c.trials;
  if (avoid) {
    j["sr"] = c.sr;
    j["otp"] = c.otp;
  } else {
    j["accuracy"] = c.accuracy;
  }
  if (c.has_homeostasis) {
    j["fr_m"] = c.homeostasis.fr_m;
    j["fr_std_m"] = c.homeostasis.fr_std_m;
    j["fr_std_s"] = c.homeostasis.fr_std_s;
    j["delta"] = json{{"fr_m", c.vs_base.fr_m},
                      {"fr_std_m", c.vs_base.fr_std_m},
                      {"fr_std_s", c.vs_base.fr_std_s}};
  }
  return j;
}

}  // namespace

std::string config_hash_hex(const std::string& canonical_json) {
  // FNV-1a, 64-bit.
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : canonical_json) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream ss;
  ss << std::hex << h;
  return ss.str();
}

ExperimentConfig config_from_json(const std::string& text) {
  const json j = parse(text, "config");
  ExperimentConfig cfg;
  cfg.task = require(j, "task", "config").get<std::string>();
  if (cfg.task != "classify" && cfg.task != "clone" && cfg.task != "avoid")
    throw ConfigError("config.task: expected classify, clone or avoid");
  cfg.seed = j.value("seed", std::uint64_t{1});
  cfg.out_dir = j.value("out", std::string("out"));
  cfg.timesteps = j.value("T", 5);
  if (cfg.timesteps < 1) throw ConfigError("config.T: must be >= 1");
  if (j.contains("scheme")) cfg.scheme = scheme_from_json(j.at("scheme"));
  if (j.contains("neuron")) {
    const json nj = j.at("neuron");
    const auto kind = require(nj, "kind", "config.neuron").get<std::string>();
    if (kind == "lif") {
      cfg.neuron.kind = NeuronKind::Lif;
      cfg.neuron.decay = nj.value("d", 0.75);
    } else if (kind == "srm") {
      cfg.neuron.kind = NeuronKind::Srm;
      cfg.neuron.tau_s = nj.value("tau_s", 1.0);
      cfg.neuron.tau_r = nj.value("tau_r", 1.0);
    } else {
      throw ConfigError("config.neuron: unknown kind '" + kind + "'");
    }
  }
  if (j.contains("model")) cfg.model_path = j.at("model").get<std::string>();
  if (j.contains("layer_sizes"))
    cfg.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
  cfg.epochs = j.value("epochs", 50);
  cfg.lr = j.value("lr", 0.05);
  cfg.batch_size = j.value("batch_size", 32);
  cfg.alpha = j.value("alpha", 10.0);
  cfg.train_with_scheme = j.value("train_with_scheme", true);
  cfg.bias_init = j.value("bias_init", 0.3);
  if (j.contains("static_output"))
    cfg.static_output = j.at("static_output").get<bool>();
  if (j.contains("dataset")) {
    const json dj = j.at("dataset");
    if (dj.is_string()) {
      cfg.dataset_path = dj.get<std::string>();
    } else if (dj.is_object()) {
      cfg.synthetic.per_class = dj.value("per_class", std::size_t{100});
      cfg.synthetic.dim = dj.value("dim", std::size_t{2});
      cfg.synthetic.spread = dj.value("spread", 0.05);
    } else {
      throw ConfigError("config.dataset: expected a path or an object");
    }
  }
  cfg.world_ref = j.value("world", std::string("builtin:static"));
  cfg.episodes = j.value("episodes", std::size_t{40});
  cfg.stride = j.value("stride", std::size_t{2});
  cfg.trials = j.value("trials", std::size_t{50});
  if (cfg.trials < 1) throw ConfigError("config.trials: must be >= 1");
  if (j.contains("trial_list"))
    cfg.trial_list_path = j.at("trial_list").get<std::string>();
  for (const auto& dj : j.value("degradations", json::array()))
    cfg.degradations.push_back(degradation_from_json(dj));
  if (j.contains("normalizer"))
    cfg.normalizer = normalizer_from_json(j.at("normalizer"));
  cfg.jobs = j.value("jobs", 1u);
  cfg.max_steps = j.value("max_steps", 1000);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  return config_from_json(read_file(path));
}

World resolve_world(const std::string& world_ref) {
  if (world_ref == "builtin:static") return make_default_world();
  if (world_ref == "builtin:dynamic") return make_dynamic_world();
  if (!std::filesystem::exists(world_ref))
    throw ConfigError("world file does not exist: " + world_ref);
  return load_world(world_ref);
}

TrainSummary cmd_train(const ExperimentConfig& cfg) {
  if (cfg.task != "classify" && cfg.task != "clone")
    throw ConfigError("train: task must be classify or clone");
  ensure_out_dir(cfg);

  Dataset data;
  std::vector<std::size_t> sizes = cfg.layer_sizes;
  if (cfg.task == "classify") {
    data = resolve_dataset(cfg);
    if (!data.classification())
      throw ConfigError("train: classify task needs a labeled dataset");
    if (sizes.empty()) sizes = {data.input_dim(), 16, 2};
  } else {
    const World world = resolve_world(cfg.world_ref);
    CloneOptions clone;
    clone.stride = cfg.stride;
    data = clone_policy(world, expert_policy(), cfg.episodes,
                        sim_params(cfg), cfg.seed, clone);
    if (sizes.empty()) sizes = {kStateDims, 64, 64, 2};
  }

  auto init_rng = make_stream(cfg.seed, 0x171);
  NetworkModel model = init_model(sizes, cfg.neuron, cfg.scheme, cfg.timesteps,
                                  init_rng, cfg.bias_init);
  const bool static_readout =
      cfg.static_output.value_or(cfg.task == "clone");
  if (static_readout) {
    ThresholdSchemeConfig readout = cfg.scheme;
    readout.kind = SchemeKind::Static;
    model.output_scheme = readout;
  }

  TrainOptions opts;
  opts.epochs = cfg.epochs;
  opts.lr = cfg.lr;
  opts.batch_size = cfg.batch_size;
  opts.alpha = cfg.alpha;
  opts.seed = cfg.seed;
  opts.use_scheme = cfg.train_with_scheme;
  TrainResult trained = bptt_train(std::move(model), data, opts);

  std::ostringstream loss_csv;
  loss_csv << "epoch,loss,accuracy\n";
  for (const auto& row : trained.trace)
    loss_csv << row.epoch << ',' << format_double(row.loss) << ','
             << format_double(row.accuracy) << '\n';

  TrainSummary summary;
  summary.model_file = (fs::path(cfg.out_dir) / "model.json").string();
  save_model(trained.model, summary.model_file);
  write_file((fs::path(cfg.out_dir) / "loss.csv").string(), loss_csv.str());
  write_manifest(cfg, "train", {"model.json", "loss.csv"});
  if (!trained.trace.empty()) {
    summary.final_loss = trained.trace.back().loss;
    summary.final_accuracy = trained.trace.back().accuracy;
  }
  return summary;
}

EvalSummary cmd_eval(const ExperimentConfig& cfg) {
  ensure_out_dir(cfg);
  const NetworkModel model = resolve_trained_model(cfg);
  const bool avoid = cfg.task == "avoid";

  for (const auto& d : cfg.degradations)
    if (!avoid && d.affects_inputs())
      throw ConfigError("eval: " + d.label() +
                        " only applies to the avoid task's ray block");

  EvalSummary summary;
  std::ostringstream csv;
  csv << "trial_id,seed,condition,outcome,steps,mean_rate,std_rate\n";
  const auto conditions = eval_conditions(cfg);

  if (avoid) {
    const World world = resolve_world(cfg.world_ref);
    const SimParams params = sim_params(cfg);
    const StateNormalizer norm =
        cfg.normalizer ? *cfg.normalizer : avoid_state_normalizer(world, params);
    std::vector<std::pair<Point, Point>> trials;
    if (cfg.trial_list_path) {
      if (!fs::exists(*cfg.trial_list_path))
        throw ConfigError("trial list does not exist: " + *cfg.trial_list_path);
      trials = load_trials(*cfg.trial_list_path);
    } else {
      auto rng = make_stream(cfg.seed, 0x7115);
      trials = sample_trials(world, cfg.trials, rng);
    }

    for (std::size_t c = 0; c < conditions.size(); ++c) {
      const auto& cond = conditions[c];
      const NetworkModel m = degraded_model(model, cond, cfg.seed, c);
      SpikingPolicy policy(m, norm);
      std::vector<DegradationSpec> input_degs;
      if (cond.spec && cond.spec->affects_inputs()) input_degs = {*cond.spec};
      const CampaignResult result =
          campaign(world, policy, trials, input_degs, params, cfg.seed, cfg.jobs);

      ConditionSummary cs;
      cs.condition = cond.label;
      cs.sr = result.sr;
      cs.otp = result.otp;
      if (result.homeostasis) {
        cs.has_homeostasis = true;
        cs.homeostasis = *result.homeostasis;
        cs.trials = result.homeostasis->trials;
      }
      for (const auto& row : result.rows)
        csv << csv_row(row.trial_id, row.seed, cond.label,
                       outcome_name(row.outcome), row.steps, row.mean_rate,
                       row.std_rate);
      summary.conditions.push_back(std::move(cs));
    }
  } else {
    Dataset data = resolve_dataset(cfg);
    if (!data.classification())
      throw ConfigError("eval: classify task needs a labeled dataset");
    for (std::size_t c = 0; c < conditions.size(); ++c) {
      const auto& cond = conditions[c];
      const NetworkModel m = degraded_model(model, cond, cfg.seed, c);
      std::size_t correct = 0;
      std::vector<TrialRecording> recs;
      recs.reserve(data.samples.size());
      for (std::size_t i = 0; i < data.samples.size(); ++i) {
        auto rng = make_stream(cfg.seed, 0xE0000000ull + i);
        const auto trains =
            poisson_encode_state(data.samples[i].x, m.timesteps, rng);
        RateRecorder rec;
        const auto counts = forward(m, trains, &rec);
        const auto argmax = static_cast<int>(std::distance(
            counts.begin(), std::max_element(counts.begin(), counts.end())));
        const bool ok = argmax == data.samples[i].label;
        correct += ok ? 1 : 0;
        TrialRecording tr;
        tr.counts = std::move(rec.counts);
        tr.timesteps = rec.timesteps;
        tr.trial_id = i;
        tr.condition = cond.label;
        const Vec rates = trial_rates(tr);
        double mean = 0.0;
        for (double r : rates) mean += r;
        mean /= static_cast<double>(rates.size());
        double sd = 0.0;
        for (double r : rates) sd += (r - mean) * (r - mean);
        sd = std::sqrt(sd / static_cast<double>(rates.size()));
        csv << csv_row(i, splitmix64(cfg.seed ^ i), cond.label,
                       ok ? "correct" : "wrong", m.timesteps, mean, sd);
        recs.push_back(std::move(tr));
      }
      ConditionSummary cs;
      cs.condition = cond.label;
      cs.accuracy =
          static_cast<double>(correct) / static_cast<double>(data.samples.size());
      cs.has_homeostasis = true;
      cs.homeostasis = homeostasis_metrics(recs);
      cs.trials = recs.size();
      summary.conditions.push_back(std::move(cs));
    }
  }

  // Deltas are taken against the base condition's report.
  if (!summary.conditions.empty() && summary.conditions.front().has_homeostasis) {
    const HomeostasisReport& base = summary.conditions.front().homeostasis;
    for (auto& cs : summary.conditions)
      if (cs.has_homeostasis) cs.vs_base = delta(cs.homeostasis, base);
  }

  json report;
  report["task"] = cfg.task;
  report["seed"] = cfg.seed;
  json conds = json::array();
  for (const auto& cs : summary.conditions)
    conds.push_back(condition_report(cs, avoid));
  report["conditions"] = std::move(conds);

  summary.report_file = (fs::path(cfg.out_dir) / "report.json").string();
  write_file(summary.report_file, report.dump(2));
  write_file((fs::path(cfg.out_dir) / "trials.csv").string(), csv.str());
  write_manifest(cfg, "eval", {"report.json", "trials.csv"});
  return summary;
}

}  // namespace bdett
