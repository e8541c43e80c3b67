#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bdett/common.hpp"
#include "bdett/threshold.hpp"

namespace bdett {

// Binary spike sequence of one neuron over the episode's T timesteps.
struct SpikeTrain {
  std::vector<std::uint8_t> bits;

  std::size_t length() const { return bits.size(); }
  int count() const;
  void validate(std::size_t expected_len) const;
};

enum class NeuronKind { Lif, Srm };

struct NeuronModel {
  NeuronKind kind = NeuronKind::Lif;
  double decay = 0.75;  // LIF membrane carry-over factor D
  double tau_s = 1.0;   // SRM spike-response time constant
  double tau_r = 1.0;   // SRM refractory time constant

  void validate() const;
};

// Mutable per-layer episode state. All vectors share the layer's neuron count.
struct LayerState {
  Vec potentials_now;   // v(t), committed
  Vec potentials_prev;  // v(t-1)
  Vec thresholds;       // theta(t)
  std::vector<std::uint8_t> last_spikes;               // s(t)
  std::vector<std::vector<int>> spike_history;         // SRM: spike timesteps
  std::vector<std::vector<double>> threshold_at_spike; // SRM: theta when fired

  static LayerState initial(std::size_t n, double theta0);
  std::size_t size() const { return thresholds.size(); }
};

struct NetworkModel {
  std::vector<std::size_t> layer_sizes;  // input layer included
  std::vector<Matrix> weights;           // weights[l]: sizes[l+1] x sizes[l]
  std::vector<Vec> biases;               // one per non-input layer; zero for SRM
  NeuronModel neuron;
  ThresholdSchemeConfig scheme;
  std::optional<ThresholdSchemeConfig> output_scheme;  // optional override
  int timesteps = 5;

  std::size_t num_layers() const { return layer_sizes.size(); }
  const ThresholdSchemeConfig& scheme_for_layer(std::size_t layer) const;
  void validate() const;
};

// v(t+1) = W s(t+1) + v(t) * f_d(s(t)) + b, with f_d = D when the neuron kept
// quiet at t and 0 when it spiked. Pure; the caller commits.
Vec lif_step(const LayerState& state, std::span<const std::uint8_t> input_spikes,
             const Matrix& weights, const Vec& biases, double decay);

// Spike response kernel (t/tau_s) e^{1 - t/tau_s}.
double srm_epsilon(int t, double tau_s);

// Refractory kernel -2 theta e^{-t/tau_r}, scaled by the threshold the neuron
// crossed when it fired.
double srm_zeta(int t, double theta_at_spike, double tau_r);

// Full-history SRM potential at timestep t: incoming spike responses plus the
// neuron's own refractory trace, one step delayed. history_horizon caps how
// far back spikes are integrated; pass INT_MAX for exact convolution.
Vec srm_step(const LayerState& state,
             const std::vector<std::vector<int>>& input_histories,
             const Matrix& weights, int t, const NeuronModel& neuron,
             int history_horizon = 0x7fffffff);

// Spike wherever v >= theta; equality fires.
std::vector<std::uint8_t> fire(std::span<const double> potentials,
                               std::span<const double> thresholds);

// Accumulates per-neuron spike totals over the recorded (non-input) layers.
struct RateRecorder {
  bool include_output = true;
  std::vector<std::uint64_t> counts;
  std::uint64_t timesteps = 0;  // recorded timesteps (summed over forward calls)

  void reset() { counts.clear(); timesteps = 0; }
};

// Simulates t = 1..T from resting initial conditions and returns the output
// layer's per-neuron spike counts.
std::vector<int> forward(const NetworkModel& model,
                         const std::vector<SpikeTrain>& inputs,
                         RateRecorder* recorder = nullptr);

}  // namespace bdett
