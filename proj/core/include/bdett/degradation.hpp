#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bdett/common.hpp"
#include "bdett/network.hpp"

namespace bdett {

// The 24-dim avoidance state keeps its 18 range readings in the tail block.
inline constexpr std::size_t kLidarOffset = 6;
inline constexpr std::size_t kLidarCount = 18;
inline constexpr std::size_t kStateDims = kLidarOffset + kLidarCount;

enum class DegradationKind {
  FixedLasers,   // pin selected rays to a constant range
  GaussInput,    // additive noise on all rays, clipped to sensor range
  Quantize8Bit,  // signed 8-bit weights with a per-matrix scale
  GaussWeights,  // additive noise on every weight
  ZeroMask       // zero an exact fraction of each weight matrix
};

struct DegradationSpec {
  DegradationKind kind = DegradationKind::GaussInput;
  std::vector<int> laser_indices = {3, 9, 15};  // 1-based within the ray block
  double laser_value = 0.2;                     // meters
  double sigma = 1.0;                           // noise standard deviation
  double fraction = 0.3;                        // zero-mask fraction
  std::uint64_t seed = 0;  // 0 = derive from the run's root seed

  bool affects_inputs() const {
    return kind == DegradationKind::FixedLasers ||
           kind == DegradationKind::GaussInput;
  }
  std::string label() const;
  void validate() const;
};

// Replaces the listed rays (1-based within the ray block) with value_m.
Vec fix_laser_ranges(Vec state, std::span<const int> indices, double value_m);

// Adds N(0, sigma) to each ray and clips the result to [clip_lo, clip_hi].
// Non-ray dimensions are untouched.
Vec gauss_input(Vec state, double sigma, double clip_lo, double clip_hi,
                std::mt19937_64& rng);

struct QuantizedMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int8_t> q;
  double scale = 1.0;
};

// Symmetric per-matrix quantization: scale = max|w| / 127, entries rounded
// half away from zero. An all-zero matrix quantizes to zeros with scale 1.
QuantizedMatrix quantize_8bit(const Matrix& weights);
Matrix dequantize(const QuantizedMatrix& qm);

Matrix gauss_weights(Matrix weights, double sigma, std::mt19937_64& rng);

// Zeroes exactly round(fraction * n) entries, chosen uniformly without
// replacement; the survivors are bit-identical to the input.
Matrix zero_mask(Matrix weights, double fraction, std::mt19937_64& rng);

// Applies a weight-space degradation to every adjacency matrix of the model.
NetworkModel apply_weight_degradation(NetworkModel model,
                                      const DegradationSpec& spec,
                                      std::mt19937_64& rng);

// Applies an input-space degradation to a raw 24-dim state.
Vec apply_input_degradation(Vec state, const DegradationSpec& spec,
                            std::mt19937_64& rng);

}  // namespace bdett
