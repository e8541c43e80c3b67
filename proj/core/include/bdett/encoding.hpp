#pragma once

#include <random>
#include <span>
#include <utility>
#include <vector>

#include "bdett/common.hpp"
#include "bdett/network.hpp"

namespace bdett {

// Per-dimension (lo, hi) bounds mapping raw observations onto [0,1].
struct StateNormalizer {
  std::vector<std::pair<double, double>> bounds;

  std::size_t dims() const { return bounds.size(); }
  void validate() const;
};

// Bernoulli train: each of T bits fires with probability `value`.
SpikeTrain poisson_encode(double value, int timesteps, std::mt19937_64& rng);

std::vector<SpikeTrain> poisson_encode_state(std::span<const double> unit_state,
                                             int timesteps, std::mt19937_64& rng);

// (x - lo) / (hi - lo), clamped to [0,1].
Vec normalize_state(std::span<const double> raw, const StateNormalizer& norm);

// Inverse of normalize_state on in-range values.
Vec denormalize_state(std::span<const double> unit, const StateNormalizer& norm);

// Linear rate decoder: lo + (count / T) * (hi - lo) per neuron.
Vec rate_decode(std::span<const int> spike_counts, int timesteps, double lo,
                double hi);

}  // namespace bdett
