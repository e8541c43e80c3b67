#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bdett {

using Vec = std::vector<double>;

// Dimension or layout violation (mismatched vector/matrix sizes).
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite value or overflowed exponent where a finite result is required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Input outside the documented domain of an operation.
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent configuration / file content.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void check_shape(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

inline void check_finite(double x, const std::string& what) {
  if (!std::isfinite(x)) throw NumericError(what);
}

// Dense row-major matrix. Weight matrices are (post-layer size) x (pre-layer size).
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::size_t size() const { return data.size(); }

  bool operator==(const Matrix&) const = default;
};

}  // namespace bdett
