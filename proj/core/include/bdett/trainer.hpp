#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bdett/common.hpp"
#include "bdett/network.hpp"
#include "bdett/sim2d.hpp"

namespace bdett {

// One supervised example: inputs in [0,1]^d, and either a class index or a
// continuous action target.
struct Sample {
  Vec x;
  int label = -1;  // < 0 for regression samples
  Vec action;
};

struct Dataset {
  std::vector<Sample> samples;
  int num_classes = 0;  // 0 for regression datasets

  bool classification() const { return num_classes > 0; }
  std::size_t input_dim() const;
  void validate() const;
};

// Fast-sigmoid pseudo-derivative of the fire step: 1 / (1 + a|v - theta|)^2.
double surrogate_grad(double v, double theta, double alpha);

// Hard runs binary spikes with the surrogate used only in the backward pass.
// Smooth relaxes the fire step to a differentiable sigmoid whose exact
// derivative is the same surrogate, which makes the whole loss smooth and
// checkable against finite differences.
enum class SpikeMode { Hard, Smooth };

struct GradientBundle {
  std::vector<Matrix> d_weights;
  std::vector<Vec> d_biases;
  double loss = 0.0;
  bool correct = false;  // classification: argmax matched the label
};

// Loss and analytic weight/bias gradients of one encoded sample, by
// backpropagation through the unrolled T timesteps. Layer statistics of the
// threshold scheme are treated as constants. LIF only.
GradientBundle loss_gradients(const NetworkModel& model,
                              const std::vector<SpikeTrain>& inputs,
                              const Sample& sample, double alpha,
                              SpikeMode mode, double action_lo = 0.0,
                              double action_hi = 0.5);

struct TrainOptions {
  int epochs = 50;
  double lr = 0.05;
  int batch_size = 32;
  double alpha = 10.0;       // surrogate sharpness
  std::uint64_t seed = 1;
  bool use_scheme = true;    // false trains under a static threshold instead
  double action_lo = 0.0;    // regression decode bounds
  double action_hi = 0.5;
};

struct EpochStat {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;  // 0 for regression
};

struct TrainResult {
  NetworkModel model;
  std::vector<EpochStat> trace;
};

// Minibatch SGD over the surrogate-gradient BPTT loss: cross-entropy on
// output spike counts for classification, MSE on decoded actions otherwise.
// Sample encodings are drawn once from the seed and reused across epochs.
TrainResult bptt_train(NetworkModel model, const Dataset& data,
                       const TrainOptions& opts);

// Uniform weight init scaled by fan-in. A small positive bias keeps fresh
// neurons near their threshold so surrogate gradients flow from epoch one.
NetworkModel init_model(std::vector<std::size_t> layer_sizes,
                        NeuronModel neuron, ThresholdSchemeConfig scheme,
                        int timesteps, std::mt19937_64& rng,
                        double bias_init = 0.0);

struct CloneOptions {
  std::size_t stride = 1;      // record every stride-th step
  // Occasional steering kicks are executed (not recorded) so the dataset
  // covers the recovery states a noisy imitator actually visits.
  double kick_prob = 0.05;
  int kick_steps = 4;
  double kick_magnitude = 0.25;
};

// Rolls the expert through sampled episodes and records
// (normalized state, expert action) pairs.
Dataset clone_policy(const World& world, const Policy& expert,
                     std::size_t episodes, const SimParams& params,
                     std::uint64_t seed, const CloneOptions& clone = {});

// Two Gaussian blobs in [0,1]^dim around 0.15... and 0.85..., one per class.
Dataset make_blob_dataset(std::size_t samples_per_class, std::size_t dim,
                          std::mt19937_64& rng, double spread = 0.05);

// Argmax class prediction from hard-mode spike counts.
double classify_accuracy(const NetworkModel& model, const Dataset& data,
                         std::uint64_t encode_seed);

}  // namespace bdett
