#include "bdett/degradation.hpp"

#include <algorithm>
#include <cmath>

namespace bdett {

std::string DegradationSpec::label() const {
  switch (kind) {
    case DegradationKind::FixedLasers:
      return laser_value <= 0.2 ? "fixed_lasers_0.2" : "fixed_lasers_6.0";
    case DegradationKind::GaussInput: return "gauss_input";
    case DegradationKind::Quantize8Bit: return "quantize8";
    case DegradationKind::GaussWeights: return "gauss_weights";
    case DegradationKind::ZeroMask: return "zero_mask";
  }
  return "unknown";
}

void DegradationSpec::validate() const {
  if (!(sigma >= 0.0)) throw ConfigError("degradation: sigma must be >= 0");
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw ConfigError("degradation: fraction must be in [0,1]");
  for (int idx : laser_indices)
    if (idx < 1 || idx > static_cast<int>(kLidarCount))
      throw ConfigError("degradation: laser index outside the ray block");
}

Vec fix_laser_ranges(Vec state, std::span<const int> indices, double value_m) {
  check_shape(state.size() == kStateDims, "fix_laser_ranges: state is not 24-dim");
  for (int idx : indices) {
    if (idx < 1 || idx > static_cast<int>(kLidarCount))
      throw DomainError("fix_laser_ranges: laser index outside the ray block");
    state[kLidarOffset + static_cast<std::size_t>(idx - 1)] = value_m;
  }
  return state;
}

Vec gauss_input(Vec state, double sigma, double clip_lo, double clip_hi,
                std::mt19937_64& rng) {
  check_shape(state.size() == kStateDims, "gauss_input: state is not 24-dim");
  if (!(clip_lo < clip_hi)) throw DomainError("gauss_input: clip_lo >= clip_hi");
  std::normal_distribution<double> noise(0.0, sigma);
  for (std::size_t i = kLidarOffset; i < kStateDims; ++i) {
    const double n = sigma > 0.0 ? noise(rng) : 0.0;
    state[i] = std::clamp(state[i] + n, clip_lo, clip_hi);
  }
  return state;
}

QuantizedMatrix quantize_8bit(const Matrix& weights) {
  QuantizedMatrix qm;
  qm.rows = weights.rows;
  qm.cols = weights.cols;
  qm.q.resize(weights.size());
  double max_abs = 0.0;
  for (double w : weights.data) {
    check_finite(w, "quantize_8bit: non-finite weight");
    max_abs = std::max(max_abs, std::abs(w));
  }
  if (max_abs == 0.0) {
    qm.scale = 1.0;
    return qm;
  }
  qm.scale = max_abs / 127.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    // lround rounds half away from zero, matching signed hardware weights.
    long q = std::lround(weights.data[i] / qm.scale);
    q = std::clamp(q, -127l, 127l);
    qm.q[i] = static_cast<std::int8_t>(q);
  }
  return qm;
}

Matrix dequantize(const QuantizedMatrix& qm) {
  Matrix w(qm.rows, qm.cols);
  for (std::size_t i = 0; i < qm.q.size(); ++i)
    w.data[i] = static_cast<double>(qm.q[i]) * qm.scale;
  return w;
}

Matrix gauss_weights(Matrix weights, double sigma, std::mt19937_64& rng) {
  if (sigma == 0.0) return weights;
  std::normal_distribution<double> noise(0.0, sigma);
  for (double& w : weights.data) w += noise(rng);
  return weights;
}

Matrix zero_mask(Matrix weights, double fraction, std::mt19937_64& rng) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw DomainError("zero_mask: fraction outside [0,1]");
  const std::size_t n = weights.size();
  const auto k = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
  if (k == 0) return weights;
  // Partial Fisher-Yates draw of k positions without replacement.
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
    weights.data[idx[i]] = 0.0;
  }
  return weights;
}

NetworkModel apply_weight_degradation(NetworkModel model,
                                      const DegradationSpec& spec,
                                      std::mt19937_64& rng) {
  switch (spec.kind) {
    case DegradationKind::Quantize8Bit:
      for (auto& w : model.weights) w = dequantize(quantize_8bit(w));
      break;
    case DegradationKind::GaussWeights:
      for (auto& w : model.weights) w = gauss_weights(std::move(w), spec.sigma, rng);
      break;
    case DegradationKind::ZeroMask:
      for (auto& w : model.weights) w = zero_mask(std::move(w), spec.fraction, rng);
      break;
    default:
      throw DomainError("apply_weight_degradation: " + spec.label() +
                        " is not a weight degradation");
  }
  return model;
}

Vec apply_input_degradation(Vec state, const DegradationSpec& spec,
                            std::mt19937_64& rng) {
  switch (spec.kind) {
    case DegradationKind::FixedLasers:
      return fix_laser_ranges(std::move(state), spec.laser_indices,
                              spec.laser_value);
    case DegradationKind::GaussInput:
      return gauss_input(std::move(state), spec.sigma, 0.2, 6.0, rng);
    default:
      throw DomainError("apply_input_degradation: " + spec.label() +
                        " is not an input degradation");
  }
}

}  // namespace bdett
