#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "bdett/experiment.hpp"
#include "bdett/rng.hpp"
#include "bdett/serialize.hpp"
#include "bdett/verify.hpp"

using namespace bdett;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("bdett_test_" + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

ExperimentConfig tiny_classify_config(const TempDir& dir) {
  ExperimentConfig cfg = config_from_json(R"({
    "task": "classify",
    "seed": 5,
    "T": 5,
    "epochs": 3,
    "lr": 0.05,
    "layer_sizes": [2, 8, 2],
    "dataset": {"per_class": 12, "dim": 2}
  })");
  cfg.out_dir = dir.file("train");
  return cfg;
}

}  // namespace

TEST_CASE("config parsing and validation") {
  CHECK_THROWS_AS(config_from_json("{}"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"task":"paint"})"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"task":"avoid","T":0})"), ConfigError);
  CHECK_THROWS_AS(config_from_json(R"({"task":"avoid","trials":0})"),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json("]["), ConfigError);

  const ExperimentConfig cfg = config_from_json(R"({
    "task": "avoid",
    "seed": 42,
    "model": "m.json",
    "degradations": [
      {"kind": "fixed_lasers", "value": 0.2},
      {"kind": "gauss_input", "sigma": 1.0},
      {"kind": "quantize8"},
      {"kind": "gauss_weights", "sigma": 0.05},
      {"kind": "zero_mask", "fraction": 0.3, "seed": 9}
    ],
    "normalizer": [[0.0, 1.0], [0.2, 6.0]]
  })");
  CHECK(cfg.seed == 42);
  CHECK(cfg.degradations.size() == 5);
  CHECK(cfg.degradations[0].laser_indices == std::vector<int>{3, 9, 15});
  CHECK(cfg.degradations[4].seed == 9);
  REQUIRE(cfg.normalizer.has_value());
  CHECK(cfg.normalizer->dims() == 2);
}

TEST_CASE("train writes its artifacts and respects epochs=0") {
  TempDir dir("train");
  ExperimentConfig cfg = tiny_classify_config(dir);
  const TrainSummary summary = cmd_train(cfg);
  CHECK(fs::exists(summary.model_file));
  CHECK(fs::exists(dir.path / "train" / "loss.csv"));
  CHECK(fs::exists(dir.path / "train" / "manifest.json"));
  const std::string loss_csv = read_file(dir.file("train/loss.csv"));
  CHECK(std::count(loss_csv.begin(), loss_csv.end(), '\n') == 4);  // header + 3

  cfg.epochs = 0;
  cfg.out_dir = dir.file("init");
  cmd_train(cfg);
  // Zero epochs must emit the untouched initialization.
  auto init_rng = make_stream(cfg.seed, 0x171);
  const NetworkModel expected =
      init_model({2, 8, 2}, cfg.neuron, cfg.scheme, 5, init_rng, cfg.bias_init);
  CHECK(read_file(dir.file("init/model.json")) == model_to_json(expected));

  cfg.task = "avoid";
  CHECK_THROWS_AS(cmd_train(cfg), ConfigError);
}

TEST_CASE("eval is reproducible and reports every condition") {
  TempDir dir("eval");
  ExperimentConfig train_cfg = tiny_classify_config(dir);
  const TrainSummary trained = cmd_train(train_cfg);

  ExperimentConfig eval_cfg = train_cfg;
  eval_cfg.model_path = trained.model_file;
  eval_cfg.degradations.push_back({DegradationKind::Quantize8Bit});
  eval_cfg.out_dir = dir.file("eval_a");
  const EvalSummary a = cmd_eval(eval_cfg);
  eval_cfg.out_dir = dir.file("eval_b");
  cmd_eval(eval_cfg);

  CHECK(read_file(dir.file("eval_a/trials.csv")) ==
        read_file(dir.file("eval_b/trials.csv")));  // byte-identical rerun

  REQUIRE(a.conditions.size() == 2);
  CHECK(a.conditions[0].condition == "base");
  CHECK(a.conditions[1].condition == "quantize8");
  CHECK(a.conditions[0].vs_base.fr_m == 0.0);
  CHECK(a.conditions[0].vs_base.fr_std_m == 0.0);
  CHECK(a.conditions[0].vs_base.fr_std_s == 0.0);

  const std::string report = read_file(dir.file("eval_a/report.json"));
  CHECK(report.find("\"base\"") != std::string::npos);
  CHECK(report.find("\"quantize8\"") != std::string::npos);
  CHECK(report.find("\"delta\"") != std::string::npos);

  const std::string manifest = read_file(dir.file("eval_a/manifest.json"));
  CHECK(manifest.find("config_hash") != std::string::npos);
  CHECK(manifest.find("root_seed") != std::string::npos);
  CHECK(manifest.find(kArtifactVersion) != std::string::npos);
}

TEST_CASE("eval rejects missing models and misplaced degradations") {
  TempDir dir("evalerr");
  ExperimentConfig cfg = tiny_classify_config(dir);
  CHECK_THROWS_AS(cmd_eval(cfg), ConfigError);  // no model at all
  cfg.model_path = dir.file("missing.json");
  CHECK_THROWS_AS(cmd_eval(cfg), ConfigError);

  const TrainSummary trained = cmd_train(tiny_classify_config(dir));
  cfg.model_path = trained.model_file;
  cfg.degradations.push_back({DegradationKind::FixedLasers});
  CHECK_THROWS_AS(cmd_eval(cfg), ConfigError);  // ray block on classify
}

TEST_CASE("avoid eval runs a small campaign per condition") {
  TempDir dir("avoid");
  // A tiny policy net is enough to exercise the pipeline end to end.
  ExperimentConfig cfg = config_from_json(R"({
    "task": "avoid",
    "seed": 11,
    "T": 5,
    "trials": 3,
    "max_steps": 60,
    "jobs": 2,
    "degradations": [{"kind": "gauss_input", "sigma": 1.0}]
  })");
  cfg.out_dir = dir.file("out");
  auto rng = make_stream(11, 0x171);
  const NetworkModel policy_net =
      init_model({kStateDims, 8, 2}, {NeuronKind::Lif, 0.75, 1.0, 1.0},
                 ThresholdSchemeConfig{}, 5, rng, 0.3);
  const std::string model_file = dir.file("policy.json");
  save_model(policy_net, model_file);
  cfg.model_path = model_file;

  const EvalSummary summary = cmd_eval(cfg);
  REQUIRE(summary.conditions.size() == 2);
  CHECK(summary.conditions[1].condition == "gauss_input");
  const std::string csv = read_file(dir.file("out/trials.csv"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 3);
  CHECK(csv.rfind("trial_id,seed,condition,outcome,steps,mean_rate,std_rate",
                  0) == 0);
}

TEST_CASE("config hash is stable and content-sensitive") {
  const std::string a = config_hash_hex(R"({"task":"classify"})");
  CHECK(a == config_hash_hex(R"({"task":"classify"})"));
  CHECK(a != config_hash_hex(R"({"task":"avoid"})"));
}

TEST_CASE("perturbing eta makes the golden suite fail") {
  std::ostringstream sink;
  VerifyOptions opts;
  opts.goldens_only = true;
  const auto clean = run_verify(opts, sink);
  REQUIRE(clean.size() == 1);
  CHECK(clean[0].pass);
  opts.eta_perturbation = 1e-3;
  const auto perturbed = run_verify(opts, sink);
  CHECK_FALSE(perturbed[0].pass);
  CHECK_FALSE(all_blocking_passed(perturbed));
}

#ifdef BDETT_CLI_PATH
TEST_CASE("cli exit codes") {
  const std::string cli = BDETT_CLI_PATH;
  const int missing =
      std::system((cli + " train --config /nonexistent.json >/dev/null 2>&1")
                      .c_str());
  CHECK(WEXITSTATUS(missing) == 2);
  const int bad_flag =
      std::system((cli + " frobnicate >/dev/null 2>&1").c_str());
  CHECK(WEXITSTATUS(bad_flag) == 2);

  TempDir dir("cli");
  write_file(dir.file("cfg.json"), R"({
    "task": "classify", "seed": 3, "T": 5, "epochs": 1,
    "layer_sizes": [2, 4, 2], "dataset": {"per_class": 6, "dim": 2}
  })");
  const int ok = std::system((cli + " train --config " + dir.file("cfg.json") +
                              " --out " + dir.file("run") + " >/dev/null 2>&1")
                                 .c_str());
  CHECK(WEXITSTATUS(ok) == 0);
  CHECK(fs::exists(dir.file("run/model.json")));
}
#endif
