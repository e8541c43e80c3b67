#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bdett/degradation.hpp"
#include "bdett/encoding.hpp"
#include "bdett/homeostasis.hpp"
#include "bdett/network.hpp"
#include "bdett/sim2d.hpp"
#include "bdett/trainer.hpp"

namespace bdett {

// Model files: {layer_sizes, weights, biases, neuron_model, scheme, T}.
std::string model_to_json(const NetworkModel& model);
NetworkModel model_from_json(const std::string& text);
void save_model(const NetworkModel& model, const std::string& path);
NetworkModel load_model(const std::string& path);

// World files: {bounds, circles, segments, dynamic}.
std::string world_to_json(const World& world);
World world_from_json(const std::string& text);
World load_world(const std::string& path);

// Trial lists: [[sx, sy, gx, gy], ...].
std::string trials_to_json(const std::vector<std::pair<Point, Point>>& trials);
std::vector<std::pair<Point, Point>> trials_from_json(const std::string& text);
std::vector<std::pair<Point, Point>> load_trials(const std::string& path);

// Datasets: [{"x": [...], "y": class or [action...]}, ...].
std::string dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const std::string& text);
Dataset load_dataset(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Fixed-width decimal formatting used in CSV output so reruns are
// byte-identical.
std::string format_double(double x);

}  // namespace bdett
