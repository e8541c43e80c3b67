#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bdett/degradation.hpp"
#include "bdett/encoding.hpp"
#include "bdett/network.hpp"
#include "bdett/sim2d.hpp"
#include "bdett/trainer.hpp"

namespace bdett {

inline constexpr const char* kArtifactVersion = "0.1.0";

struct SyntheticSpec {
  std::size_t per_class = 100;
  std::size_t dim = 2;
  double spread = 0.05;
};

struct ExperimentConfig {
  std::string task;  // classify | clone | avoid
  std::uint64_t seed = 1;
  std::string out_dir = "out";
  int timesteps = 5;
  ThresholdSchemeConfig scheme;
  NeuronModel neuron;

  std::optional<std::string> model_path;  // trained model to evaluate
  std::vector<std::size_t> layer_sizes;   // network shape when training

  int epochs = 50;
  double lr = 0.05;
  int batch_size = 32;
  double alpha = 10.0;
  bool train_with_scheme = true;
  double bias_init = 0.3;
  std::optional<bool> static_output;  // default: on for clone, off otherwise

  std::optional<std::string> dataset_path;
  SyntheticSpec synthetic;

  std::string world_ref = "builtin:static";  // builtin:static|builtin:dynamic|path
  std::size_t episodes = 40;
  std::size_t stride = 2;

  std::size_t trials = 50;  // campaign size / homeostasis P
  std::optional<std::string> trial_list_path;
  std::vector<DegradationSpec> degradations;
  std::optional<StateNormalizer> normalizer;
  unsigned jobs = 1;
  int max_steps = 1000;
};

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

World resolve_world(const std::string& world_ref);

// Trains per the config, writes model.json, loss.csv and manifest.json under
// out_dir, and reports the final epoch's loss/accuracy.
struct TrainSummary {
  std::string model_file;
  double final_loss = 0.0;
  double final_accuracy = 0.0;
};
TrainSummary cmd_train(const ExperimentConfig& cfg);

// Evaluates the trained model under the base condition plus every configured
// degradation, writing report.json, trials.csv and manifest.json.
struct ConditionSummary {
  std::string condition;
  double sr = 0.0;        // avoid task
  double otp = 0.0;
  double accuracy = 0.0;  // classify task
  std::size_t trials = 0; // homeostasis P
  bool has_homeostasis = false;
  HomeostasisReport homeostasis;
  HomeostasisDelta vs_base;
};
struct EvalSummary {
  std::vector<ConditionSummary> conditions;
  std::string report_file;
};
EvalSummary cmd_eval(const ExperimentConfig& cfg);

std::string config_hash_hex(const std::string& canonical_json);

}  // namespace bdett
