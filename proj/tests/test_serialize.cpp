#include <doctest.h>

#include "bdett/rng.hpp"
#include "bdett/serialize.hpp"
#include "bdett/trainer.hpp"

using namespace bdett;

TEST_CASE("model round trip is exact") {
  auto rng = make_stream(61, 0);
  for (NeuronKind kind : {NeuronKind::Lif, NeuronKind::Srm}) {
    NetworkModel m = init_model({3, 5, 2}, {kind, 0.75, 1.3, 0.9},
                                ThresholdSchemeConfig{}, 7, rng, 0.1);
    ThresholdSchemeConfig readout = m.scheme;
    readout.kind = SchemeKind::Static;
    m.output_scheme = readout;
    const NetworkModel back = model_from_json(model_to_json(m));
    CHECK(back.layer_sizes == m.layer_sizes);
    CHECK(back.weights == m.weights);  // bit-exact doubles
    CHECK(back.biases == m.biases);
    CHECK(back.timesteps == m.timesteps);
    CHECK(back.neuron.kind == m.neuron.kind);
    CHECK(back.scheme.kind == m.scheme.kind);
    REQUIRE(back.output_scheme.has_value());
    CHECK(back.output_scheme->kind == SchemeKind::Static);
  }
}

TEST_CASE("every scheme kind survives the round trip") {
  for (SchemeKind kind :
       {SchemeKind::Static, SchemeKind::DetOnly, SchemeKind::DttOnly,
        SchemeKind::Bdett, SchemeKind::FittedConstants}) {
    NetworkModel m;
    m.layer_sizes = {1, 1};
    m.weights = {Matrix(1, 1, 0.5)};
    m.biases = {Vec{0.0}};
    m.scheme.kind = kind;
    m.timesteps = 5;
    const NetworkModel back = model_from_json(model_to_json(m));
    CHECK(back.scheme.kind == kind);
  }
}

TEST_CASE("model parsing errors carry field context") {
  CHECK_THROWS_AS(model_from_json("not json"), ConfigError);
  CHECK_THROWS_WITH_AS(model_from_json("{}"),
                       doctest::Contains("layer_sizes"), ConfigError);
  const char* ragged = R"({"layer_sizes":[2,1],
    "weights":[[[0.1,0.2],[0.3]]],
    "biases":[[0.0]],
    "neuron_model":{"kind":"lif","d":0.75},
    "scheme":{"kind":"bdett"},
    "T":5})";
  CHECK_THROWS_WITH_AS(model_from_json(ragged), doctest::Contains("ragged"),
                       ConfigError);
  const char* bad_kind = R"({"layer_sizes":[1,1],
    "weights":[[[0.1]]],
    "biases":[[0.0]],
    "neuron_model":{"kind":"izhikevich"},
    "scheme":{"kind":"bdett"},
    "T":5})";
  CHECK_THROWS_WITH_AS(model_from_json(bad_kind),
                       doctest::Contains("izhikevich"), ConfigError);
}

TEST_CASE("world and trial round trips") {
  World w = make_dynamic_world();
  w.segments.push_back({1.0, 1.0, 19.0, 1.5});
  const World back = world_from_json(world_to_json(w));
  CHECK(back.width == w.width);
  CHECK(back.circles.size() == w.circles.size());
  CHECK(back.segments.size() == w.segments.size());
  CHECK(back.dynamic.size() == w.dynamic.size());
  CHECK(back.dynamic[3].speed == w.dynamic[3].speed);

  const std::vector<std::pair<Point, Point>> trials = {
      {{1.0, 2.0}, {3.0, 4.0}}, {{5.5, 6.5}, {7.25, 8.125}}};
  const auto back_trials = trials_from_json(trials_to_json(trials));
  REQUIRE(back_trials.size() == 2);
  CHECK(back_trials[1].second.y == 8.125);
  CHECK_THROWS_AS(trials_from_json("[[1,2,3]]"), ConfigError);
}

TEST_CASE("dataset round trips keep labels and actions apart") {
  Dataset classify;
  classify.num_classes = 2;
  classify.samples.push_back({{0.1, 0.9}, 1, {}});
  classify.samples.push_back({{0.8, 0.2}, 0, {}});
  const Dataset back = dataset_from_json(dataset_to_json(classify));
  CHECK(back.classification());
  CHECK(back.samples[0].label == 1);

  Dataset regress;
  regress.num_classes = 0;
  regress.samples.push_back({{0.5, 0.5}, -1, {0.25, 0.5}});
  const Dataset rback = dataset_from_json(dataset_to_json(regress));
  CHECK_FALSE(rback.classification());
  CHECK(rback.samples[0].action == Vec{0.25, 0.5});
}

TEST_CASE("csv doubles format deterministically") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(1.0 / 3.0) == format_double(1.0 / 3.0));
  // Round-trip precision keeps distinct doubles distinct.
  CHECK(format_double(0.1 + 0.2) != format_double(0.3));
}
