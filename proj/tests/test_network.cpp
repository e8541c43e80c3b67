#include <doctest.h>

#include <cmath>
#include <random>

#include "bdett/network.hpp"
#include "bdett/rng.hpp"
#include "bdett/trainer.hpp"

using namespace bdett;

namespace {

NetworkModel one_to_one_lif(double theta0, int timesteps) {
  NetworkModel m;
  m.layer_sizes = {1, 1};
  Matrix w(1, 1);
  w(0, 0) = 1.0;
  m.weights = {w};
  m.biases = {Vec{0.0}};
  m.neuron = {NeuronKind::Lif, 0.75, 1.0, 1.0};
  m.scheme.kind = SchemeKind::Static;
  m.scheme.theta0 = theta0;
  m.timesteps = timesteps;
  return m;
}

}  // namespace

TEST_CASE("lif step") {
  LayerState st = LayerState::initial(1, 0.5);
  st.potentials_prev = {0.4};
  Matrix w(1, 2);
  w(0, 0) = 0.5;
  w(0, 1) = -0.25;
  const std::vector<std::uint8_t> in = {1, 1};

  CHECK(lif_step(st, in, w, {0.1}, 0.75)[0] ==
        doctest::Approx(0.65).epsilon(1e-12));
  st.last_spikes = {1};
  CHECK(lif_step(st, in, w, {0.1}, 0.75)[0] ==
        doctest::Approx(0.35).epsilon(1e-12));

  SUBCASE("a spike wipes the carry regardless of the previous potential") {
    st.potentials_prev = {123.0};
    CHECK(lif_step(st, in, w, {0.1}, 0.75)[0] ==
          doctest::Approx(0.35).epsilon(1e-12));
  }
  SUBCASE("shape and numeric errors") {
    const std::vector<std::uint8_t> wrong = {1};
    CHECK_THROWS_AS(lif_step(st, wrong, w, {0.1}, 0.75), ShapeError);
    w(0, 0) = std::numeric_limits<double>::quiet_NaN();
    st.last_spikes = {0};
    CHECK_THROWS_AS(lif_step(st, in, w, {0.1}, 0.75), NumericError);
  }
}

TEST_CASE("srm kernels") {
  CHECK(srm_epsilon(0, 1.0) == 0.0);
  CHECK(srm_epsilon(1, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(srm_epsilon(2, 1.0) ==
        doctest::Approx(0.7357588823428847).epsilon(1e-12));
  CHECK(srm_zeta(0, 0.5, 1.0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(srm_zeta(1, 1.0, 1.0) ==
        doctest::Approx(-0.7357588823428847).epsilon(1e-12));
  CHECK(srm_zeta(7, 0.0, 1.0) == 0.0);
}

TEST_CASE("srm step integrates history and refractory trace") {
  LayerState st = LayerState::initial(1, 0.5);
  Matrix w(1, 1);
  w(0, 0) = 1.0;
  const NeuronModel srm{NeuronKind::Srm, 0.75, 1.0, 1.0};
  const std::vector<std::vector<int>> hist = {{1}};
  CHECK(srm_step(st, hist, w, 2, srm)[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(srm_step(st, hist, w, 3, srm)[0] ==
        doctest::Approx(0.7357588823428847).epsilon(1e-12));
  st.spike_history[0] = {2};
  st.threshold_at_spike[0] = {0.5};
  CHECK(srm_step(st, hist, w, 3, srm)[0] ==
        doctest::Approx(-0.2642411176571153).epsilon(1e-12));
}

TEST_CASE("srm step equals a brute-force convolution") {
  auto rng = make_stream(42, 0);
  std::uniform_real_distribution<double> wdist(-1.0, 1.0);
  std::bernoulli_distribution spike(0.35);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n_in = 1 + rep % 8, n_out = 1 + (rep * 3) % 8;
    const int t = 3 + rep % 23;
    Matrix w(n_out, n_in);
    for (auto& x : w.data) x = wdist(rng);
    std::vector<std::vector<int>> hist(n_in);
    for (auto& h : hist)
      for (int s = 1; s <= t; ++s)
        if (spike(rng)) h.push_back(s);
    LayerState st = LayerState::initial(n_out, 0.5);
    for (std::size_t i = 0; i < n_out; ++i)
      for (int s = 1; s < t; ++s)
        if (spike(rng)) {
          st.spike_history[i].push_back(s);
          st.threshold_at_spike[i].push_back(wdist(rng));
        }
    const NeuronModel srm{NeuronKind::Srm, 0.75, 1.3, 0.8};
    const Vec got = srm_step(st, hist, w, t, srm);
    for (std::size_t i = 0; i < n_out; ++i) {
      double want = 0.0;
      for (std::size_t j = 0; j < n_in; ++j)
        for (int tf : hist[j])
          want += w(i, j) * ((t - tf) / srm.tau_s) *
                  std::exp(1.0 - (t - tf) / srm.tau_s);
      for (std::size_t k = 0; k < st.spike_history[i].size(); ++k)
        want += -2.0 * st.threshold_at_spike[i][k] *
                std::exp(-((t - 1) - st.spike_history[i][k]) / srm.tau_r);
      CHECK(got[i] == doctest::Approx(want).epsilon(1e-12));
    }
  }
}

TEST_CASE("fire rule") {
  const Vec v = {1.0, 0.2};
  const Vec th = {0.5, 0.5};
  const auto s = fire(v, th);
  CHECK(s == std::vector<std::uint8_t>{1, 0});
  const Vec eq = {0.5};
  CHECK(fire(eq, eq)[0] == 1);  // equality fires
  CHECK(fire(Vec{}, Vec{}).empty());
  CHECK_THROWS_AS(fire(v, eq), ShapeError);
}

TEST_CASE("fire is monotone in the potential") {
  auto rng = make_stream(3, 0);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    Vec v(6), th(6);
    for (int i = 0; i < 6; ++i) {
      v[i] = u(rng);
      th[i] = u(rng);
    }
    const auto before = fire(v, th);
    const int bump = rep % 6;
    v[bump] += 0.5;
    const auto after = fire(v, th);
    for (int i = 0; i < 6; ++i)
      if (before[i] == 1) CHECK(after[i] == 1);
  }
}

TEST_CASE("forward hand-stepped traces") {
  const std::vector<SpikeTrain> ones = {SpikeTrain{{1, 1, 1}}};
  NetworkModel m = one_to_one_lif(0.5, 3);
  CHECK(forward(m, ones)[0] == 3);  // resets keep v at 1 each step
  m = one_to_one_lif(1.5, 3);
  CHECK(forward(m, ones)[0] == 1);  // integrates 1, 1.75 (spike), 1
  m = one_to_one_lif(0.5, 1);
  const std::vector<SpikeTrain> zeros = {SpikeTrain{{0}}};
  CHECK(forward(m, zeros)[0] == 0);
}

TEST_CASE("forward validates inputs") {
  NetworkModel m = one_to_one_lif(0.5, 3);
  CHECK_THROWS_AS(forward(m, {}), ShapeError);
  const std::vector<SpikeTrain> wrong_len = {SpikeTrain{{1, 1}}};
  CHECK_THROWS_AS(forward(m, wrong_len), ShapeError);
  const std::vector<SpikeTrain> bad_bits = {SpikeTrain{{1, 2, 0}}};
  CHECK_THROWS_AS(forward(m, bad_bits), DomainError);
}

TEST_CASE("forward is deterministic and finite") {
  auto rng = make_stream(11, 0);
  for (NeuronKind kind : {NeuronKind::Lif, NeuronKind::Srm}) {
    NetworkModel m = init_model({4, 9, 3}, {kind, 0.75, 1.0, 1.0},
                                ThresholdSchemeConfig{}, 25, rng);
    std::vector<SpikeTrain> ins;
    std::bernoulli_distribution coin(0.4);
    for (int j = 0; j < 4; ++j) {
      SpikeTrain t;
      for (int s = 0; s < 25; ++s) t.bits.push_back(coin(rng) ? 1 : 0);
      ins.push_back(std::move(t));
    }
    const auto a = forward(m, ins);
    const auto b = forward(m, ins);
    CHECK(a == b);
  }
}

TEST_CASE("recorder tallies every non-input layer") {
  auto rng = make_stream(12, 0);
  NetworkModel m = init_model({3, 5, 2}, {NeuronKind::Lif, 0.75, 1.0, 1.0},
                              ThresholdSchemeConfig{}, 5, rng, 0.3);
  std::vector<SpikeTrain> ins(3, SpikeTrain{{1, 1, 1, 1, 1}});
  RateRecorder rec;
  const auto counts = forward(m, ins, &rec);
  CHECK(rec.counts.size() == 7);
  CHECK(rec.timesteps == 5);
  for (auto c : rec.counts) CHECK(c <= 5);
  // Output spikes show up in both the recorder tail and the return value.
  for (int i = 0; i < 2; ++i)
    CHECK(static_cast<int>(rec.counts[5 + i]) == counts[i]);

  RateRecorder hidden_only;
  hidden_only.include_output = false;
  forward(m, ins, &hidden_only);
  CHECK(hidden_only.counts.size() == 5);
}

TEST_CASE("long srm episodes use the kernel cutoff and stay finite") {
  NetworkModel m;
  m.layer_sizes = {1, 1};
  Matrix w(1, 1);
  w(0, 0) = 0.4;
  m.weights = {w};
  m.biases = {Vec{0.0}};
  m.neuron = {NeuronKind::Srm, 0.75, 1.0, 1.0};
  m.scheme.kind = SchemeKind::Static;
  m.scheme.theta0 = 0.6;
  m.timesteps = 300;
  SpikeTrain t;
  t.bits.assign(300, 1);
  const auto counts = forward(m, {t});
  CHECK(counts[0] >= 0);
  CHECK(counts[0] <= 300);
}

TEST_CASE("output layer can run its own scheme") {
  auto rng = make_stream(13, 0);
  NetworkModel m = init_model({2, 4, 2}, {NeuronKind::Lif, 0.75, 1.0, 1.0},
                              ThresholdSchemeConfig{}, 5, rng, 0.3);
  ThresholdSchemeConfig readout = m.scheme;
  readout.kind = SchemeKind::Static;
  readout.theta0 = -100.0;  // output fires every step
  m.output_scheme = readout;
  std::vector<SpikeTrain> ins(2, SpikeTrain{{0, 0, 0, 0, 0}});
  const auto counts = forward(m, ins);
  CHECK(counts == std::vector<int>{5, 5});
}

TEST_CASE("model validation") {
  NetworkModel m = one_to_one_lif(0.5, 3);
  m.neuron.decay = 1.5;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m.neuron.decay = 0.75;
  m.timesteps = 0;
  CHECK_THROWS_AS(m.validate(), ConfigError);
  m.timesteps = 3;
  m.weights[0] = Matrix(2, 1);
  CHECK_THROWS_AS(m.validate(), ShapeError);
}
