#include "bdett/encoding.hpp"

#include <algorithm>

namespace bdett {

void StateNormalizer::validate() const {
  for (const auto& [lo, hi] : bounds)
    if (!(hi > lo)) throw ConfigError("normalizer: hi must be > lo");
}

SpikeTrain poisson_encode(double value, int timesteps, std::mt19937_64& rng) {
  if (!(value >= 0.0 && value <= 1.0))
    throw DomainError("poisson_encode: value outside [0,1]; normalize first");
  if (timesteps < 1) throw DomainError("poisson_encode: T must be >= 1");
  SpikeTrain train;
  train.bits.resize(static_cast<std::size_t>(timesteps));
  std::bernoulli_distribution coin(value);
  for (auto& b : train.bits) b = coin(rng) ? 1 : 0;
  return train;
}

std::vector<SpikeTrain> poisson_encode_state(std::span<const double> unit_state,
                                             int timesteps, std::mt19937_64& rng) {
  std::vector<SpikeTrain> trains;
  trains.reserve(unit_state.size());
  for (double v : unit_state) trains.push_back(poisson_encode(v, timesteps, rng));
  return trains;
}

Vec normalize_state(std::span<const double> raw, const StateNormalizer& norm) {
  check_shape(raw.size() == norm.dims(), "normalize_state: dimension mismatch");
  Vec out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto [lo, hi] = norm.bounds[i];
    out[i] = std::clamp((raw[i] - lo) / (hi - lo), 0.0, 1.0);
  }
  return out;
}

Vec denormalize_state(std::span<const double> unit, const StateNormalizer& norm) {
  check_shape(unit.size() == norm.dims(), "denormalize_state: dimension mismatch");
  Vec out(unit.size());
  for (std::size_t i = 0; i < unit.size(); ++i) {
    const auto [lo, hi] = norm.bounds[i];
    out[i] = lo + unit[i] * (hi - lo);
  }
  return out;
}

Vec rate_decode(std::span<const int> spike_counts, int timesteps, double lo,
                double hi) {
  if (timesteps < 1) throw DomainError("rate_decode: T must be >= 1");
  Vec out(spike_counts.size());
  for (std::size_t i = 0; i < spike_counts.size(); ++i) {
    if (spike_counts[i] < 0 || spike_counts[i] > timesteps)
      throw DomainError("rate_decode: count outside [0, T]");
    out[i] = lo + (static_cast<double>(spike_counts[i]) / timesteps) * (hi - lo);
  }
  return out;
}

}  // namespace bdett
