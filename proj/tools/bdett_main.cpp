#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bdett/experiment.hpp"
#include "bdett/serialize.hpp"
#include "bdett/verify.hpp"

namespace {

// Exit codes: 0 success, 1 verification failure, 2 configuration error,
// 3 numeric abort.
constexpr int kOk = 0;
constexpr int kTestFailure = 1;
constexpr int kConfigError = 2;
constexpr int kNumericAbort = 3;

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  unsigned jobs = 0;
};

bdett::ExperimentConfig load(const CommonArgs& args) {
  bdett::ExperimentConfig cfg = bdett::load_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.jobs > 0) cfg.jobs = args.jobs;
  return cfg;
}

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "experiment config JSON")
      ->required();
  cmd->add_option("--seed", args.seed, "override the config's root seed")
      ->each([&](const std::string&) { args.seed_set = true; });
  cmd->add_option("--out", args.out_dir, "override the output directory");
  cmd->add_option("--jobs", args.jobs, "trial-level parallelism");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"spiking-network experiment harness"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args;
  auto* train_cmd = app.add_subcommand("train", "train a model per the config");
  add_common(train_cmd, train_args);
  auto* eval_cmd =
      app.add_subcommand("eval", "evaluate a model under degradations");
  add_common(eval_cmd, eval_args);

  auto* verify_cmd =
      app.add_subcommand("verify", "run the built-in golden and property suites");
  double perturb_eta = 0.0;
  unsigned verify_jobs = 1;
  verify_cmd->add_option("--perturb-eta", perturb_eta,
                         "test hook: offset the energy-threshold eta constant")
      ->group("");  // hidden
  verify_cmd->add_option("--jobs", verify_jobs, "trial-level parallelism");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (train_cmd->parsed()) {
      const auto summary = bdett::cmd_train(load(train_args));
      std::cout << "model=" << summary.model_file
                << " final_loss=" << bdett::format_double(summary.final_loss)
                << " final_accuracy="
                << bdett::format_double(summary.final_accuracy) << '\n';
      return kOk;
    }
    if (eval_cmd->parsed()) {
      const auto summary = bdett::cmd_eval(load(eval_args));
      for (const auto& c : summary.conditions) {
        std::cout << "condition=" << c.condition;
        if (c.has_homeostasis)
          std::cout << " P=" << c.trials
                    << " fr_m=" << bdett::format_double(c.homeostasis.fr_m)
                    << " d_fr_m=" << bdett::format_double(c.vs_base.fr_m);
        std::cout << '\n';
      }
      std::cout << "report=" << summary.report_file << '\n';
      return kOk;
    }
    bdett::VerifyOptions opts;
    opts.eta_perturbation = perturb_eta;
    opts.jobs = verify_jobs;
    const auto results = bdett::run_verify(opts, std::cout);
    int passed = 0, failed = 0;
    for (const auto& r : results) (r.pass ? passed : failed)++;
    std::cout << "suites passed: " << passed << "/" << results.size() << '\n';
    return bdett::all_blocking_passed(results) ? kOk : kTestFailure;
  } catch (const bdett::NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << '\n';
    return kNumericAbort;
  } catch (const bdett::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const bdett::DomainError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const bdett::ShapeError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kTestFailure;
  }
}
