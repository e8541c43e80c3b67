#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "bdett/homeostasis.hpp"
#include "bdett/rng.hpp"

using namespace bdett;

TEST_CASE("trial rates") {
  TrialRecording rec;
  rec.counts = {5, 0};
  rec.timesteps = 5;
  CHECK(trial_rates(rec) == Vec{1.0, 0.0});
  rec.counts = {2};
  CHECK(trial_rates(rec)[0] == doctest::Approx(0.4).epsilon(1e-12));
  rec.counts = {0, 0, 0};
  const Vec zeros = trial_rates(rec);
  for (double r : zeros) CHECK(r == 0.0);

  rec.timesteps = 0;
  CHECK_THROWS_AS(trial_rates(rec), DomainError);
  rec.timesteps = 3;
  rec.counts = {4};
  CHECK_THROWS_AS(trial_rates(rec), DomainError);
}

TEST_CASE("worked two-trial example") {
  TrialRecording t1, t2;
  t1.counts = {2, 2};
  t1.timesteps = 4;
  t2.counts = {0, 4};
  t2.timesteps = 4;
  const std::vector<TrialRecording> trials = {t1, t2};
  const auto report = homeostasis_metrics(trials);
  CHECK(report.fr_m == 0.5);
  CHECK(report.fr_std_m == 0.25);
  CHECK(report.fr_std_s == 0.25);
  CHECK(report.trials == 2);
}

TEST_CASE("degenerate trial sets") {
  TrialRecording t;
  t.counts = {1, 3, 0};
  t.timesteps = 5;
  const std::vector<TrialRecording> one = {t};
  CHECK(homeostasis_metrics(one).fr_std_s == 0.0);  // P = 1
  const std::vector<TrialRecording> same = {t, t, t};
  CHECK(homeostasis_metrics(same).fr_std_s == 0.0);

  TrialRecording other;
  other.counts = {1, 1};
  other.timesteps = 5;
  const std::vector<TrialRecording> mixed = {t, other};
  CHECK_THROWS_AS(homeostasis_metrics(mixed), ShapeError);
  CHECK_THROWS_AS(homeostasis_metrics(std::vector<TrialRecording>{}),
                  DomainError);
}

TEST_CASE("metrics match an explicit double-loop oracle") {
  auto rng = make_stream(21, 0);
  std::uniform_int_distribution<int> nP(1, 9);
  std::uniform_int_distribution<int> nN(1, 30);
  for (int rep = 0; rep < 50; ++rep) {
    const int P = nP(rng), N = nN(rng);
    std::vector<TrialRecording> trials(P);
    for (auto& t : trials) {
      t.timesteps = 50;
      t.counts.resize(N);
      std::uniform_int_distribution<std::uint64_t> c(0, 50);
      for (auto& x : t.counts) x = c(rng);
    }
    const auto got = homeostasis_metrics(trials);

    Vec means, stds;
    for (const auto& t : trials) {
      double m = 0.0;
      for (auto c : t.counts) m += double(c) / 50.0;
      m /= N;
      double v = 0.0;
      for (auto c : t.counts) v += (double(c) / 50.0 - m) * (double(c) / 50.0 - m);
      means.push_back(m);
      stds.push_back(std::sqrt(v / N));
    }
    double fr_m = 0.0, fr_std_m = 0.0;
    for (double m : means) fr_m += m;
    for (double s : stds) fr_std_m += s;
    fr_m /= P;
    fr_std_m /= P;
    double disp = 0.0;
    for (double s : stds) disp += (s - fr_std_m) * (s - fr_std_m);
    const double fr_std_s = std::sqrt(disp / P);

    CHECK(got.fr_m == doctest::Approx(fr_m).epsilon(1e-12));
    CHECK(got.fr_std_m == doctest::Approx(fr_std_m).epsilon(1e-12));
    CHECK(got.fr_std_s == doctest::Approx(fr_std_s).epsilon(1e-12));
    CHECK(got.fr_m >= 0.0);
    CHECK(got.fr_m <= 1.0);
    CHECK(got.fr_std_m <= 0.5 + 1e-12);
  }
}

TEST_CASE("metrics are invariant under neuron and trial permutation") {
  auto rng = make_stream(22, 0);
  std::vector<TrialRecording> trials(4);
  for (auto& t : trials) {
    t.timesteps = 20;
    t.counts.resize(8);
    std::uniform_int_distribution<std::uint64_t> c(0, 20);
    for (auto& x : t.counts) x = c(rng);
  }
  const auto base = homeostasis_metrics(trials);

  auto shuffled = trials;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  for (auto& t : shuffled) std::shuffle(t.counts.begin(), t.counts.end(), rng);
  const auto perm = homeostasis_metrics(shuffled);
  CHECK(perm.fr_m == doctest::Approx(base.fr_m).epsilon(1e-12));
  CHECK(perm.fr_std_m == doctest::Approx(base.fr_std_m).epsilon(1e-12));
  CHECK(perm.fr_std_s == doctest::Approx(base.fr_std_s).epsilon(1e-12));
}

TEST_CASE("deltas are absolute and symmetric") {
  HomeostasisReport a, b;
  a.fr_m = 0.515;
  a.fr_std_m = 0.3;
  a.fr_std_s = 0.002;
  b = a;
  const auto zero = delta(a, b);
  CHECK(zero.fr_m == 0.0);
  CHECK(zero.fr_std_m == 0.0);
  CHECK(zero.fr_std_s == 0.0);
  b.fr_m = 0.558;
  CHECK(delta(a, b).fr_m == doctest::Approx(0.043).epsilon(1e-12));
  CHECK(delta(b, a).fr_m == doctest::Approx(0.043).epsilon(1e-12));
}
