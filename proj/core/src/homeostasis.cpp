#include "bdett/homeostasis.hpp"

#include <cmath>

namespace bdett {

namespace {

double mean_of(const Vec& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double population_std(const Vec& xs) {
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size()));
}

}  // namespace

Vec trial_rates(const TrialRecording& rec) {
  if (rec.timesteps == 0) throw DomainError("trial_rates: zero recorded timesteps");
  Vec rates(rec.counts.size());
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (rec.counts[i] > rec.timesteps)
      throw DomainError("trial_rates: count exceeds recorded timesteps");
    rates[i] = static_cast<double>(rec.counts[i]) /
               static_cast<double>(rec.timesteps);
  }
  return rates;
}

HomeostasisReport homeostasis_metrics(std::span<const TrialRecording> trials) {
  if (trials.empty()) throw DomainError("homeostasis_metrics: no trials");
  const std::size_t n_neurons = trials.front().counts.size();
  if (n_neurons == 0) throw DomainError("homeostasis_metrics: empty recording");

  Vec trial_means, trial_stds;
  trial_means.reserve(trials.size());
  trial_stds.reserve(trials.size());
  for (const auto& trial : trials) {
    check_shape(trial.counts.size() == n_neurons,
                "homeostasis_metrics: inconsistent neuron sets");
    const Vec rates = trial_rates(trial);
    trial_means.push_back(mean_of(rates));
    trial_stds.push_back(population_std(rates));
  }

  HomeostasisReport report;
  report.fr_m = mean_of(trial_means);
  report.fr_std_m = mean_of(trial_stds);
  report.fr_std_s = population_std(trial_stds);
  report.trials = trials.size();
  report.condition = trials.front().condition;
  return report;
}

HomeostasisDelta delta(const HomeostasisReport& report,
                       const HomeostasisReport& base) {
  return {std::abs(report.fr_m - base.fr_m),
          std::abs(report.fr_std_m - base.fr_std_m),
          std::abs(report.fr_std_s - base.fr_std_s)};
}

}  // namespace bdett
