#include "bdett/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bdett/encoding.hpp"
#include "bdett/rng.hpp"

namespace bdett {

std::size_t Dataset::input_dim() const {
  return samples.empty() ? 0 : samples.front().x.size();
}

void Dataset::validate() const {
  const std::size_t d = input_dim();
  for (const auto& s : samples) {
    check_shape(s.x.size() == d, "dataset: inconsistent input dimension");
    for (double x : s.x)
      if (!(x >= 0.0 && x <= 1.0))
        throw DomainError("dataset: input outside [0,1]");
    if (classification()) {
      if (s.label < 0 || s.label >= num_classes)
        throw DomainError("dataset: label outside class count");
    } else {
      check_shape(!s.action.empty() &&
                      s.action.size() == samples.front().action.size(),
                  "dataset: inconsistent action dimension");
    }
  }
}

double surrogate_grad(double v, double theta, double alpha) {
  if (!(alpha > 0.0)) throw DomainError("surrogate_grad: alpha must be > 0");
  const double g = 1.0 + alpha * std::abs(v - theta);
  return 1.0 / (g * g);
}

namespace {

// Smooth relaxation of the fire step whose exact derivative is
// surrogate_grad: 0.5 + x / (1 + a|x|).
double smooth_spike(double x, double alpha) {
  return 0.5 + x / (1.0 + alpha * std::abs(x));
}

Vec update_thresholds(const ThresholdSchemeConfig& cfg, const Vec& v_now,
                      const Vec& v_prev, const Vec& theta_prev) {
  if (cfg.kind == SchemeKind::FittedConstants)
    return fitted_constants_update(v_now, v_prev);
  return bdett_update(v_now, v_prev, theta_prev, cfg);
}

LayerStats stats_for(const ThresholdSchemeConfig& cfg, const Vec& v_prev,
                     const Vec& theta_prev) {
  if (cfg.kind == SchemeKind::FittedConstants) return {3.0, 7.0, 0.0};
  return layer_stats(v_prev, theta_prev, cfg.range_coeff);
}

struct Unrolled {
  // Indexed [layer][t], t = 0..T; t = 0 holds the resting initial state.
  std::vector<std::vector<Vec>> v, s, theta;
  std::vector<std::vector<LayerStats>> stats;  // stats used at step t
};

// Unrolls a LIF network over the encoded sample, in either spike mode.
Unrolled unroll(const NetworkModel& model,
                const std::vector<SpikeTrain>& inputs, double alpha,
                SpikeMode mode) {
  const std::size_t L = model.num_layers() - 1;  // trainable layers
  const std::size_t T = static_cast<std::size_t>(model.timesteps);
  Unrolled u;
  u.v.resize(L);
  u.s.resize(L);
  u.theta.resize(L);
  u.stats.assign(L, std::vector<LayerStats>(T + 1));
  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t n = model.layer_sizes[l + 1];
    u.v[l].assign(T + 1, Vec(n, 0.0));
    u.s[l].assign(T + 1, Vec(n, 0.0));
    u.theta[l].assign(T + 1, Vec(n, model.scheme_for_layer(l + 1).theta0));
  }

  Vec input_now(model.layer_sizes[0]);
  for (std::size_t t = 1; t <= T; ++t) {
    for (std::size_t j = 0; j < input_now.size(); ++j)
      input_now[j] = inputs[j].bits[t - 1];
    const Vec* below = &input_now;
    for (std::size_t l = 0; l < L; ++l) {
      const Matrix& W = model.weights[l];
      const Vec& b = model.biases[l];
      const std::size_t n = W.rows;
      Vec v_new(n);
      for (std::size_t i = 0; i < n; ++i) {
        double acc = b[i];
        const double* row = &W.data[i * W.cols];
        for (std::size_t j = 0; j < W.cols; ++j) acc += row[j] * (*below)[j];
        const double carry = model.neuron.decay * (1.0 - u.s[l][t - 1][i]);
        acc += u.v[l][t - 1][i] * carry;
        check_finite(acc, "unroll: non-finite potential");
        v_new[i] = acc;
      }
      const auto& cfg = model.scheme_for_layer(l + 1);
      Vec theta_new =
          update_thresholds(cfg, v_new, u.v[l][t - 1], u.theta[l][t - 1]);
      u.stats[l][t] = stats_for(cfg, u.v[l][t - 1], u.theta[l][t - 1]);
      Vec s_new(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double x = v_new[i] - theta_new[i];
        s_new[i] = mode == SpikeMode::Hard ? (x >= 0.0 ? 1.0 : 0.0)
                                           : smooth_spike(x, alpha);
      }
      u.v[l][t] = std::move(v_new);
      u.theta[l][t] = std::move(theta_new);
      u.s[l][t] = std::move(s_new);
      below = &u.s[l][t];
    }
  }
  return u;
}

}  // namespace

GradientBundle loss_gradients(const NetworkModel& model,
                              const std::vector<SpikeTrain>& inputs,
                              const Sample& sample, double alpha,
                              SpikeMode mode, double action_lo,
                              double action_hi) {
  if (model.neuron.kind != NeuronKind::Lif)
    throw DomainError("loss_gradients: only LIF networks are trainable");
  const std::size_t L = model.num_layers() - 1;
  const std::size_t T = static_cast<std::size_t>(model.timesteps);
  const std::size_t n_out = model.layer_sizes.back();

  const Unrolled u = unroll(model, inputs, alpha, mode);

  // Output spike counts and the loss head.
  Vec counts(n_out, 0.0);
  for (std::size_t t = 1; t <= T; ++t)
    for (std::size_t k = 0; k < n_out; ++k) counts[k] += u.s[L - 1][t][k];

  GradientBundle out;
  Vec dloss_dcount(n_out, 0.0);
  const bool classify = sample.label >= 0;
  if (classify) {
    const double cmax = *std::max_element(counts.begin(), counts.end());
    double z = 0.0;
    Vec p(n_out);
    for (std::size_t k = 0; k < n_out; ++k) z += std::exp(counts[k] - cmax);
    for (std::size_t k = 0; k < n_out; ++k) p[k] = std::exp(counts[k] - cmax) / z;
    out.loss = -std::log(std::max(p[static_cast<std::size_t>(sample.label)],
                                  1e-300));
    for (std::size_t k = 0; k < n_out; ++k)
      dloss_dcount[k] =
          p[k] - (k == static_cast<std::size_t>(sample.label) ? 1.0 : 0.0);
    const auto argmax = static_cast<int>(std::distance(
        counts.begin(), std::max_element(counts.begin(), counts.end())));
    out.correct = argmax == sample.label;
  } else {
    check_shape(sample.action.size() == n_out,
                "loss_gradients: action size != output layer");
    const double span = (action_hi - action_lo) / static_cast<double>(T);
    for (std::size_t k = 0; k < n_out; ++k) {
      const double a = action_lo + counts[k] * span;
      const double err = a - sample.action[k];
      out.loss += err * err / static_cast<double>(n_out);
      dloss_dcount[k] = 2.0 * err * span / static_cast<double>(n_out);
    }
  }

  out.d_weights.reserve(L);
  out.d_biases.reserve(L);
  for (std::size_t l = 0; l < L; ++l) {
    out.d_weights.emplace_back(model.weights[l].rows, model.weights[l].cols);
    out.d_biases.emplace_back(model.layer_sizes[l + 1], 0.0);
  }

  // Backward pass. g_v_next / g_theta_next carry gradients from step t+1.
  std::vector<Vec> g_v_next(L), g_theta_next(L), g_v(L);
  for (std::size_t l = 0; l < L; ++l) {
    g_v_next[l].assign(model.layer_sizes[l + 1], 0.0);
    g_theta_next[l].assign(model.layer_sizes[l + 1], 0.0);
  }

  Vec input_now(model.layer_sizes[0]);
  for (std::size_t t = T; t >= 1; --t) {
    for (std::size_t l = L; l-- > 0;) {
      const auto& cfg = model.scheme_for_layer(l + 1);
      const std::size_t n = model.layer_sizes[l + 1];
      Vec g_s(n, 0.0);
      if (l == L - 1)
        for (std::size_t k = 0; k < n; ++k) g_s[k] = dloss_dcount[k];
      if (l + 1 < L) {
        // Chain from the layer above at the same timestep.
        const Matrix& Wup = model.weights[l + 1];
        for (std::size_t i = 0; i < Wup.rows; ++i) {
          const double g = g_v[l + 1][i];
          if (g == 0.0) continue;
          const double* row = &Wup.data[i * Wup.cols];
          for (std::size_t j = 0; j < Wup.cols; ++j) g_s[j] += g * row[j];
        }
      }
      // Spiking at t gates the membrane carry into t+1.
      for (std::size_t i = 0; i < n; ++i)
        g_s[i] -= g_v_next[l][i] * model.neuron.decay * u.v[l][t][i];

      Vec g_theta(n), gv(n);
      for (std::size_t i = 0; i < n; ++i) {
        const double sg = surrogate_grad(u.v[l][t][i], u.theta[l][t][i], alpha);
        g_theta[i] = -g_s[i] * sg;
        double g = g_s[i] * sg;
        g += g_v_next[l][i] * model.neuron.decay * (1.0 - u.s[l][t][i]);
        const auto partials = threshold_partials(u.v[l][t][i], u.v[l][t - 1][i],
                                                 u.stats[l][t], cfg);
        g += g_theta[i] * partials.d_vnow;
        if (t + 1 <= T) {
          const auto next = threshold_partials(
              u.v[l][t + 1][i], u.v[l][t][i], u.stats[l][t + 1], cfg);
          g += g_theta_next[l][i] * next.d_vprev;
        }
        gv[i] = g;
      }

      const Vec* below;
      if (l == 0) {
        for (std::size_t j = 0; j < input_now.size(); ++j)
          input_now[j] = inputs[j].bits[t - 1];
        below = &input_now;
      } else {
        below = &u.s[l - 1][t];
      }
      Matrix& dW = out.d_weights[l];
      for (std::size_t i = 0; i < n; ++i) {
        const double g = gv[i];
        out.d_biases[l][i] += g;
        if (g == 0.0) continue;
        double* row = &dW.data[i * dW.cols];
        for (std::size_t j = 0; j < dW.cols; ++j) row[j] += g * (*below)[j];
      }

      g_theta_next[l] = std::move(g_theta);
      g_v[l] = gv;
      g_v_next[l] = std::move(gv);
    }
  }
  return out;
}

TrainResult bptt_train(NetworkModel model, const Dataset& data,
                       const TrainOptions& opts) {
  model.validate();
  data.validate();
  if (model.neuron.kind != NeuronKind::Lif)
    throw DomainError("bptt_train: only LIF networks are trainable");
  if (data.samples.empty()) throw DomainError("bptt_train: empty dataset");
  check_shape(data.input_dim() == model.layer_sizes.front(),
              "bptt_train: dataset dimension != input layer");
  if (data.classification())
    check_shape(static_cast<std::size_t>(data.num_classes) ==
                    model.layer_sizes.back(),
                "bptt_train: class count != output layer");

  const ThresholdSchemeConfig original_scheme = model.scheme;
  const auto original_output_scheme = model.output_scheme;
  if (!opts.use_scheme) {
    model.scheme.kind = SchemeKind::Static;
    if (model.output_scheme) model.output_scheme->kind = SchemeKind::Static;
  }

  // Encodings are frozen per sample so epochs see identical spike trains.
  std::vector<std::vector<SpikeTrain>> encoded;
  encoded.reserve(data.samples.size());
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    auto rng = make_stream(opts.seed, 0xE0000000ull + i);
    encoded.push_back(
        poisson_encode_state(data.samples[i].x, model.timesteps, rng));
  }

  TrainResult result;
  auto shuffle_rng = make_stream(opts.seed, 0x517);
  std::vector<std::size_t> order(data.samples.size());
  std::iota(order.begin(), order.end(), 0);

  const std::size_t batch =
      std::max<std::size_t>(1, static_cast<std::size_t>(opts.batch_size));
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += batch) {
      const std::size_t end = std::min(order.size(), begin + batch);
      std::vector<Matrix> dW;
      std::vector<Vec> db;
      for (std::size_t l = 0; l + 1 < model.num_layers(); ++l) {
        dW.emplace_back(model.weights[l].rows, model.weights[l].cols);
        db.emplace_back(model.layer_sizes[l + 1], 0.0);
      }
      double batch_loss = 0.0;
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t idx = order[k];
        auto g = loss_gradients(model, encoded[idx], data.samples[idx],
                                opts.alpha, SpikeMode::Hard, opts.action_lo,
                                opts.action_hi);
        batch_loss += g.loss;
        if (g.correct) ++correct;
        for (std::size_t l = 0; l < dW.size(); ++l) {
          for (std::size_t ii = 0; ii < dW[l].size(); ++ii)
            dW[l].data[ii] += g.d_weights[l].data[ii];
          for (std::size_t ii = 0; ii < db[l].size(); ++ii)
            db[l][ii] += g.d_biases[l][ii];
        }
      }
      if (!std::isfinite(batch_loss))
        throw NumericError("bptt_train: non-finite loss at epoch " +
                           std::to_string(epoch) + ", batch " +
                           std::to_string(begin / batch));
      epoch_loss += batch_loss;
      if (opts.lr != 0.0) {
        const double step = opts.lr / static_cast<double>(end - begin);
        for (std::size_t l = 0; l < dW.size(); ++l) {
          for (std::size_t ii = 0; ii < dW[l].size(); ++ii)
            model.weights[l].data[ii] -= step * dW[l].data[ii];
          for (std::size_t ii = 0; ii < db[l].size(); ++ii)
            model.biases[l][ii] -= step * db[l][ii];
        }
      }
    }
    EpochStat stat;
    stat.epoch = epoch;
    stat.loss = epoch_loss / static_cast<double>(data.samples.size());
    stat.accuracy = data.classification()
                        ? static_cast<double>(correct) /
                              static_cast<double>(data.samples.size())
                        : 0.0;
    result.trace.push_back(stat);
  }

  if (!opts.use_scheme) {
    model.scheme = original_scheme;
    model.output_scheme = original_output_scheme;
  }
  result.model = std::move(model);
  return result;
}

NetworkModel init_model(std::vector<std::size_t> layer_sizes,
                        NeuronModel neuron, ThresholdSchemeConfig scheme,
                        int timesteps, std::mt19937_64& rng, double bias_init) {
  NetworkModel m;
  m.layer_sizes = std::move(layer_sizes);
  m.neuron = neuron;
  m.scheme = scheme;
  m.timesteps = timesteps;
  for (std::size_t l = 0; l + 1 < m.layer_sizes.size(); ++l) {
    const double bound = 1.5 / std::sqrt(static_cast<double>(m.layer_sizes[l]));
    std::uniform_real_distribution<double> u(-bound, bound);
    Matrix w(m.layer_sizes[l + 1], m.layer_sizes[l]);
    for (double& x : w.data) x = u(rng);
    m.weights.push_back(std::move(w));
    m.biases.emplace_back(m.layer_sizes[l + 1], bias_init);
  }
  m.validate();
  return m;
}

Dataset clone_policy(const World& world, const Policy& expert,
                     std::size_t episodes, const SimParams& params,
                     std::uint64_t seed, const CloneOptions& clone) {
  Dataset data;
  data.num_classes = 0;
  if (episodes == 0) return data;
  const StateNormalizer norm = avoid_state_normalizer(world, params);

  auto trial_rng = make_stream(seed, 0x7e1a15);
  const auto trials = sample_trials(world, episodes, trial_rng);

  auto kick_rng = make_stream(seed, 0x1c1c);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const std::size_t stride = std::max<std::size_t>(1, clone.stride);
  for (std::size_t e = 0; e < trials.size(); ++e) {
    std::size_t step = 0;
    int kick_left = 0;
    double kick_sign = 1.0;
    Policy recording = [&](const Vec& raw, std::mt19937_64& rng,
                           RateRecorder* rec) {
      auto action = expert(raw, rng, rec);
      if (step++ % stride == 0) {
        Sample s;
        s.x = normalize_state(raw, norm);
        s.action = {action.first, action.second};
        data.samples.push_back(std::move(s));
      }
      if (kick_left == 0 && clone.kick_steps > 0 && u01(kick_rng) < clone.kick_prob) {
        kick_left = clone.kick_steps;
        kick_sign = u01(kick_rng) < 0.5 ? 1.0 : -1.0;
      }
      if (kick_left > 0) {
        --kick_left;
        const double d = clone.kick_magnitude * kick_sign;
        return std::pair{std::clamp(action.first + d, 0.0, params.v_max),
                         std::clamp(action.second - d, 0.0, params.v_max)};
      }
      return action;
    };
    EpisodeConfig episode;
    episode.seed = splitmix64(seed ^ e);
    run_episode(world, recording, trials[e].first, trials[e].second, params,
                episode);
  }
  return data;
}

Dataset make_blob_dataset(std::size_t samples_per_class, std::size_t dim,
                          std::mt19937_64& rng, double spread) {
  Dataset data;
  data.num_classes = 2;
  std::normal_distribution<double> noise(0.0, spread);
  for (int label = 0; label < 2; ++label) {
    const double center = label == 0 ? 0.15 : 0.85;
    for (std::size_t i = 0; i < samples_per_class; ++i) {
      Sample s;
      s.label = label;
      s.x.resize(dim);
      for (auto& x : s.x) x = std::clamp(center + noise(rng), 0.0, 1.0);
      data.samples.push_back(std::move(s));
    }
  }
  return data;
}

double classify_accuracy(const NetworkModel& model, const Dataset& data,
                         std::uint64_t encode_seed) {
  if (!data.classification() || data.samples.empty())
    throw DomainError("classify_accuracy: needs a classification dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    auto rng = make_stream(encode_seed, 0xE0000000ull + i);
    const auto trains =
        poisson_encode_state(data.samples[i].x, model.timesteps, rng);
    const auto counts = forward(model, trains);
    const auto argmax = static_cast<int>(std::distance(
        counts.begin(), std::max_element(counts.begin(), counts.end())));
    if (argmax == data.samples[i].label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.samples.size());
}

}  // namespace bdett
