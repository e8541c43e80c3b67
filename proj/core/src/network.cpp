#include "bdett/network.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace bdett {

int SpikeTrain::count() const {
  int c = 0;
  for (auto b : bits) c += b;
  return c;
}

void SpikeTrain::validate(std::size_t expected_len) const {
  check_shape(bits.size() == expected_len, "spike train length != T");
  for (auto b : bits)
    if (b > 1) throw DomainError("spike train bit not in {0,1}");
}

void NeuronModel::validate() const {
  if (kind == NeuronKind::Lif) {
    if (!(decay >= 0.0 && decay <= 1.0))
      throw ConfigError("neuron: decay D must be in [0,1]");
  } else {
    if (!(tau_s > 0.0) || !(tau_r > 0.0))
      throw ConfigError("neuron: tau_s and tau_r must be > 0");
  }
}

LayerState LayerState::initial(std::size_t n, double theta0) {
  LayerState s;
  s.potentials_now.assign(n, 0.0);
  s.potentials_prev.assign(n, 0.0);
  s.thresholds.assign(n, theta0);
  s.last_spikes.assign(n, 0);
  s.spike_history.resize(n);
  s.threshold_at_spike.resize(n);
  return s;
}

const ThresholdSchemeConfig& NetworkModel::scheme_for_layer(std::size_t layer) const {
  if (output_scheme && layer + 1 == layer_sizes.size()) return *output_scheme;
  return scheme;
}

void NetworkModel::validate() const {
  if (layer_sizes.size() < 2) throw ConfigError("model: need at least 2 layers");
  for (auto n : layer_sizes)
    if (n == 0) throw ConfigError("model: zero-size layer");
  check_shape(weights.size() == layer_sizes.size() - 1,
              "model: weight matrix count != layer count - 1");
  check_shape(biases.size() == layer_sizes.size() - 1,
              "model: bias vector count != layer count - 1");
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    check_shape(weights[l].rows == layer_sizes[l + 1] &&
                    weights[l].cols == layer_sizes[l],
                "model: weight matrix " + std::to_string(l) + " shape mismatch");
    check_shape(biases[l].size() == layer_sizes[l + 1],
                "model: bias vector " + std::to_string(l) + " shape mismatch");
    for (double w : weights[l].data) check_finite(w, "model: non-finite weight");
    for (double b : biases[l]) check_finite(b, "model: non-finite bias");
  }
  if (timesteps < 1) throw ConfigError("model: T must be >= 1");
  neuron.validate();
  scheme.validate();
  if (output_scheme) output_scheme->validate();
}

Vec lif_step(const LayerState& state, std::span<const std::uint8_t> input_spikes,
             const Matrix& weights, const Vec& biases, double decay) {
  check_shape(input_spikes.size() == weights.cols,
              "lif_step: input count != weight columns");
  check_shape(state.size() == weights.rows && biases.size() == weights.rows,
              "lif_step: state size != weight rows");
  Vec v(weights.rows);
  for (std::size_t i = 0; i < weights.rows; ++i) {
    double acc = 0.0;
    const double* row = &weights.data[i * weights.cols];
    for (std::size_t j = 0; j < weights.cols; ++j)
      if (input_spikes[j]) acc += row[j];
    const double carry = state.last_spikes[i] ? 0.0 : decay;
    acc += state.potentials_prev[i] * carry + biases[i];
    check_finite(acc, "lif_step: non-finite potential");
    v[i] = acc;
  }
  return v;
}

double srm_epsilon(int t, double tau_s) {
  const double s = static_cast<double>(t) / tau_s;
  return s * std::exp(1.0 - s);
}

double srm_zeta(int t, double theta_at_spike, double tau_r) {
  return -2.0 * theta_at_spike * std::exp(-static_cast<double>(t) / tau_r);
}

Vec srm_step(const LayerState& state,
             const std::vector<std::vector<int>>& input_histories,
             const Matrix& weights, int t, const NeuronModel& neuron,
             int history_horizon) {
  check_shape(input_histories.size() == weights.cols,
              "srm_step: input count != weight columns");
  check_shape(state.size() == weights.rows, "srm_step: state size != weight rows");

  // Incoming response: each presynaptic spike up to and including t
  // contributes eps(t - t_f). Spikes at t itself add eps(0) = 0.
  Vec response(weights.cols, 0.0);
  for (std::size_t j = 0; j < weights.cols; ++j) {
    double r = 0.0;
    for (int tf : input_histories[j]) {
      const int lag = t - tf;
      if (lag < 0 || lag > history_horizon) continue;
      r += srm_epsilon(lag, neuron.tau_s);
    }
    response[j] = r;
  }

  Vec v(weights.rows);
  for (std::size_t i = 0; i < weights.rows; ++i) {
    double acc = 0.0;
    const double* row = &weights.data[i * weights.cols];
    for (std::size_t j = 0; j < weights.cols; ++j) acc += row[j] * response[j];
    // Own refractory trace, evaluated one step behind: spikes up to t-1
    // contribute zeta((t-1) - t_f) scaled by the threshold crossed then.
    const auto& hist = state.spike_history[i];
    const auto& theta_hist = state.threshold_at_spike[i];
    for (std::size_t k = 0; k < hist.size(); ++k) {
      const int lag = (t - 1) - hist[k];
      if (lag < 0 || lag > history_horizon) continue;
      acc += srm_zeta(lag, theta_hist[k], neuron.tau_r);
    }
    check_finite(acc, "srm_step: non-finite potential");
    v[i] = acc;
  }
  return v;
}

std::vector<std::uint8_t> fire(std::span<const double> potentials,
                               std::span<const double> thresholds) {
  check_shape(potentials.size() == thresholds.size(), "fire: length mismatch");
  std::vector<std::uint8_t> spikes(potentials.size());
  for (std::size_t i = 0; i < potentials.size(); ++i)
    spikes[i] = potentials[i] >= thresholds[i] ? 1 : 0;
  return spikes;
}

namespace {

// Smallest lag beyond which both kernels stay below 1e-6 in magnitude, for
// episodes long enough that exact convolution would be wasteful.
int kernel_horizon(const NeuronModel& neuron) {
  constexpr double kCutoff = 1e-6;
  int h = static_cast<int>(neuron.tau_s) + 1;
  while (srm_epsilon(h, neuron.tau_s) >= kCutoff) ++h;
  int hr = 1;
  while (2.0 * std::exp(-static_cast<double>(hr) / neuron.tau_r) >= kCutoff) ++hr;
  return std::max(h, hr);
}

Vec update_thresholds(const ThresholdSchemeConfig& cfg, const Vec& v_now,
                      const Vec& v_prev, const Vec& theta_prev) {
  if (cfg.kind == SchemeKind::FittedConstants)
    return fitted_constants_update(v_now, v_prev);
  return bdett_update(v_now, v_prev, theta_prev, cfg);
}

}  // namespace

std::vector<int> forward(const NetworkModel& model,
                         const std::vector<SpikeTrain>& inputs,
                         RateRecorder* recorder) {
  model.validate();
  const std::size_t n_layers = model.num_layers();
  check_shape(inputs.size() == model.layer_sizes[0],
              "forward: input train count != input layer size");
  const std::size_t T = static_cast<std::size_t>(model.timesteps);
  for (const auto& train : inputs) train.validate(T);

  const bool srm = model.neuron.kind == NeuronKind::Srm;
  const int horizon =
      srm && model.timesteps > 256 ? kernel_horizon(model.neuron) : 0x7fffffff;

  std::vector<LayerState> states;
  states.reserve(n_layers - 1);
  for (std::size_t l = 1; l < n_layers; ++l)
    states.push_back(LayerState::initial(model.layer_sizes[l],
                                         model.scheme_for_layer(l).theta0));

  std::vector<std::vector<int>> input_hist(model.layer_sizes[0]);

  std::size_t recorded = 0;
  if (recorder) {
    for (std::size_t l = 1; l < n_layers; ++l)
      if (recorder->include_output || l + 1 < n_layers)
        recorded += model.layer_sizes[l];
    if (recorder->counts.empty()) recorder->counts.assign(recorded, 0);
    check_shape(recorder->counts.size() == recorded,
                "forward: recorder size does not match the network");
  }

  std::vector<int> out_counts(model.layer_sizes.back(), 0);
  std::vector<std::uint8_t> prev_spikes;

  for (int t = 1; t <= model.timesteps; ++t) {
    prev_spikes.resize(inputs.size());
    for (std::size_t j = 0; j < inputs.size(); ++j) {
      prev_spikes[j] = inputs[j].bits[static_cast<std::size_t>(t - 1)];
      if (srm && prev_spikes[j]) input_hist[j].push_back(t);
    }

    std::size_t record_at = 0;
    for (std::size_t l = 0; l + 1 < n_layers; ++l) {
      LayerState& state = states[l];
      try {
        // Rotate so potentials_prev holds v(t-1) while v(t) is computed.
        std::swap(state.potentials_prev, state.potentials_now);
        Vec v_new =
            srm ? srm_step(state,
                           l == 0 ? input_hist : states[l - 1].spike_history,
                           model.weights[l], t, model.neuron, horizon)
                : lif_step(state, prev_spikes, model.weights[l], model.biases[l],
                           model.neuron.decay);
        Vec theta_new = update_thresholds(model.scheme_for_layer(l + 1), v_new,
                                          state.potentials_prev, state.thresholds);
        auto spikes = fire(v_new, theta_new);

        state.potentials_now = std::move(v_new);
        if (srm) {
          for (std::size_t i = 0; i < spikes.size(); ++i) {
            if (!spikes[i]) continue;
            state.spike_history[i].push_back(t);
            state.threshold_at_spike[i].push_back(theta_new[i]);
          }
        }
        state.thresholds = std::move(theta_new);
        state.last_spikes = std::move(spikes);
      } catch (const NumericError& e) {
        throw NumericError("layer " + std::to_string(l + 1) + ", t=" +
                           std::to_string(t) + ": " + e.what());
      } catch (const ShapeError& e) {
        throw ShapeError("layer " + std::to_string(l + 1) + ", t=" +
                         std::to_string(t) + ": " + e.what());
      }

      if (recorder && (recorder->include_output || l + 2 < n_layers)) {
        for (std::size_t i = 0; i < state.size(); ++i)
          recorder->counts[record_at + i] += state.last_spikes[i];
        record_at += state.size();
      }
      prev_spikes = state.last_spikes;
    }

    for (std::size_t i = 0; i < out_counts.size(); ++i)
      out_counts[i] += states.back().last_spikes[i];
  }
  if (recorder) recorder->timesteps += T;
  return out_counts;
}

}  // namespace bdett
