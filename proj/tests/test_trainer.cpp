#include <doctest.h>

#include <cmath>

#include "bdett/encoding.hpp"
#include "bdett/rng.hpp"
#include "bdett/serialize.hpp"
#include "bdett/trainer.hpp"

using namespace bdett;

TEST_CASE("surrogate pseudo-derivative") {
  CHECK(surrogate_grad(0.7, 0.7, 10.0) == 1.0);
  CHECK(surrogate_grad(0.8, 0.7, 10.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(surrogate_grad(0.6, 0.7, 10.0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(surrogate_grad(100.0, 0.0, 10.0) < 1e-5);
  CHECK_THROWS_AS(surrogate_grad(0.0, 0.0, 0.0), DomainError);
}

namespace {

struct GradCheckTally {
  int checked = 0;
  int mismatched = 0;
};

// Central finite differences against the analytic gradients of the smooth
// relaxation. Counts mismatches above the relative tolerance.
void gradient_check(SchemeKind kind, std::uint64_t seed, GradCheckTally& tally) {
  auto rng = make_stream(seed, 0);
  ThresholdSchemeConfig scheme;
  scheme.kind = kind;
  NetworkModel model = init_model({2, 2, 1}, {NeuronKind::Lif, 0.75, 1.0, 1.0},
                                  scheme, 5, rng, 0.2);
  Sample sample;
  sample.x = {0.8, 0.3};
  sample.action = {0.3};
  auto enc = make_stream(seed, 1);
  const auto inputs = poisson_encode_state(sample.x, 5, enc);

  const auto analytic =
      loss_gradients(model, inputs, sample, 10.0, SpikeMode::Smooth);
  const double h = 1e-4;
  auto loss_at = [&](const NetworkModel& m) {
    return loss_gradients(m, inputs, sample, 10.0, SpikeMode::Smooth).loss;
  };
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    for (std::size_t i = 0; i < model.weights[l].size(); ++i) {
      NetworkModel up = model, down = model;
      up.weights[l].data[i] += h;
      down.weights[l].data[i] -= h;
      const double fd = (loss_at(up) - loss_at(down)) / (2 * h);
      const double got = analytic.d_weights[l].data[i];
      const double scale = std::max({1e-6, std::abs(fd), std::abs(got)});
      ++tally.checked;
      if (std::abs(fd - got) / scale > 1e-3) ++tally.mismatched;
    }
    for (std::size_t i = 0; i < model.biases[l].size(); ++i) {
      NetworkModel up = model, down = model;
      up.biases[l][i] += h;
      down.biases[l][i] -= h;
      const double fd = (loss_at(up) - loss_at(down)) / (2 * h);
      const double got = analytic.d_biases[l][i];
      const double scale = std::max({1e-6, std::abs(fd), std::abs(got)});
      ++tally.checked;
      if (std::abs(fd - got) / scale > 1e-3) ++tally.mismatched;
    }
  }
}

}  // namespace

TEST_CASE("analytic gradients match finite differences of the smooth loss") {
  for (SchemeKind kind : {SchemeKind::Static, SchemeKind::Bdett}) {
    GradCheckTally tally;
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
      gradient_check(kind, seed, tally);
    INFO("scheme ", static_cast<int>(kind), ": ", tally.mismatched, "/",
         tally.checked);
    CHECK(tally.checked >= 150);
    CHECK(tally.mismatched <= tally.checked / 20);  // at least 95% agree
  }
}

TEST_CASE("zero learning rate leaves the weights bit-identical") {
  auto rng = make_stream(31, 0);
  Dataset data = make_blob_dataset(20, 2, rng);
  NetworkModel model = init_model({2, 6, 2}, {NeuronKind::Lif, 0.75, 1.0, 1.0},
                                  ThresholdSchemeConfig{}, 5, rng, 0.3);
  const std::string before = model_to_json(model);
  TrainOptions opts;
  opts.epochs = 3;
  opts.lr = 0.0;
  const auto result = bptt_train(model, data, opts);
  CHECK(model_to_json(result.model) == before);
}

TEST_CASE("zero epochs returns the initialization") {
  auto rng = make_stream(32, 0);
  Dataset data = make_blob_dataset(10, 2, rng);
  NetworkModel model = init_model({2, 4, 2}, {NeuronKind::Lif, 0.75, 1.0, 1.0},
                                  ThresholdSchemeConfig{}, 5, rng);
  TrainOptions opts;
  opts.epochs = 0;
  const auto result = bptt_train(model, data, opts);
  CHECK(model_to_json(result.model) == model_to_json(model));
  CHECK(result.trace.empty());
}

TEST_CASE("training is deterministic under a fixed seed") {
  auto rng_a = make_stream(33, 0);
  auto rng_b = make_stream(33, 0);
  Dataset data_a = make_blob_dataset(30, 2, rng_a);
  Dataset data_b = make_blob_dataset(30, 2, rng_b);
  TrainOptions opts;
  opts.epochs = 5;
  opts.seed = 9;
  auto init_a = make_stream(34, 0);
  auto init_b = make_stream(34, 0);
  const auto a = bptt_train(
      init_model({2, 8, 2}, {NeuronKind::Lif, 0.75, 1.0, 1.0},
                 ThresholdSchemeConfig{}, 5, init_a, 0.3),
      data_a, opts);
  const auto b = bptt_train(
      init_model({2, 8, 2}, {NeuronKind::Lif, 0.75, 1.0, 1.0},
                 ThresholdSchemeConfig{}, 5, init_b, 0.3),
      data_b, opts);
  CHECK(model_to_json(a.model) == model_to_json(b.model));
}

TEST_CASE("single sample is memorized") {
  Dataset data;
  data.num_classes = 2;
  Sample s;
  s.x = {0.9, 0.1};
  s.label = 1;
  data.samples.push_back(s);
  auto rng = make_stream(35, 0);
  NetworkModel model = init_model({2, 8, 2}, {NeuronKind::Lif, 0.75, 1.0, 1.0},
                                  ThresholdSchemeConfig{}, 5, rng, 0.3);
  TrainOptions opts;
  opts.epochs = 200;
  opts.lr = 0.1;
  opts.batch_size = 1;
  const auto result = bptt_train(std::move(model), data, opts);
  CHECK(result.trace.back().loss < 0.01);
}

TEST_CASE("separable blobs train to high accuracy with a monotone tail") {
  auto rng = make_stream(1, 0xb10b);
  Dataset data = make_blob_dataset(100, 2, rng);
  auto init_rng = make_stream(1, 0x171);
  NetworkModel model = init_model({2, 16, 2}, {NeuronKind::Lif, 0.75, 1.0, 1.0},
                                  ThresholdSchemeConfig{}, 5, init_rng, 0.3);
  TrainOptions opts;
  opts.epochs = 50;
  opts.lr = 0.05;
  opts.batch_size = static_cast<int>(data.samples.size());  // full batch
  const auto result = bptt_train(std::move(model), data, opts);
  CHECK(result.trace.back().accuracy >= 0.95);
  for (std::size_t i = 0; i + 5 < result.trace.size(); ++i)
    CHECK(result.trace[i + 5].loss <= result.trace[i].loss + 1e-9);
  // Thresholds stayed finite throughout: a final forward pass works.
  CHECK(classify_accuracy(result.model, data, 1) >= 0.9);
}

TEST_CASE("srm models are rejected by the trainer") {
  auto rng = make_stream(36, 0);
  Dataset data = make_blob_dataset(4, 2, rng);
  NetworkModel model = init_model({2, 4, 2}, {NeuronKind::Srm, 0.75, 1.0, 1.0},
                                  ThresholdSchemeConfig{}, 5, rng);
  TrainOptions opts;
  CHECK_THROWS_AS(bptt_train(std::move(model), data, opts), DomainError);
}

TEST_CASE("cloning records one sample per expert call") {
  const World world = make_default_world();
  SimParams params;
  CloneOptions clone;  // stride 1
  CHECK(clone_policy(world, expert_policy(), 0, params, 3, clone)
            .samples.empty());

  std::size_t calls = 0;
  Policy counting = [&calls](const Vec& raw, std::mt19937_64& rng,
                             RateRecorder* rec) {
    ++calls;
    return expert_policy()(raw, rng, rec);
  };
  const Dataset data = clone_policy(world, counting, 3, params, 3, clone);
  CHECK(data.samples.size() == calls);
  CHECK_FALSE(data.classification());
}

TEST_CASE("cloning a constant expert yields identical targets") {
  const World world = make_default_world();
  SimParams params;
  params.max_steps = 50;
  Policy constant = [](const Vec&, std::mt19937_64&, RateRecorder*) {
    return std::pair<double, double>{0.25, 0.25};
  };
  CloneOptions clone;
  clone.kick_prob = 0.2;  // kicks must not leak into the labels
  const Dataset data = clone_policy(world, constant, 2, params, 4, clone);
  REQUIRE(!data.samples.empty());
  for (const auto& s : data.samples) {
    CHECK(s.action[0] == 0.25);
    CHECK(s.action[1] == 0.25);
  }
}
