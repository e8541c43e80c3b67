#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bdett/common.hpp"

namespace bdett {

// Per-neuron spike totals of one trial, over all recorded layers.
struct TrialRecording {
  std::vector<std::uint64_t> counts;
  std::uint64_t timesteps = 0;  // total recorded timesteps of the trial
  std::uint64_t trial_id = 0;
  std::string condition;
};

struct HomeostasisDelta {
  double fr_m = 0.0;
  double fr_std_m = 0.0;
  double fr_std_s = 0.0;
};

// The three firing-rate statistics over P trials. Standard deviations are
// population (divide by N) throughout, which keeps P = 1 well defined.
struct HomeostasisReport {
  double fr_m = 0.0;      // mean of per-trial mean rates
  double fr_std_m = 0.0;  // mean of per-trial rate stds
  double fr_std_s = 0.0;  // std of the per-trial rate stds
  std::size_t trials = 0; // P
  std::string condition;
};

// Per-neuron firing rates: count / recorded timesteps.
Vec trial_rates(const TrialRecording& rec);

HomeostasisReport homeostasis_metrics(std::span<const TrialRecording> trials);

// Absolute per-metric differences against a base condition.
HomeostasisDelta delta(const HomeostasisReport& report,
                       const HomeostasisReport& base);

}  // namespace bdett
