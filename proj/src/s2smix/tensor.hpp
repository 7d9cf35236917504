#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s2smix/rng.hpp"

namespace s2smix {

// Dense row-major tensor of 64-bit floats. All model quantities live in
// these; rank is 1 (vectors) or 2 (matrices) everywhere in this codebase,
// with scalars represented as shape {1}.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;

  Tensor() = default;
  explicit Tensor(std::vector<int> s);
  Tensor(std::vector<int> s, std::vector<double> v);

  static Tensor scalar(double v);
  static Tensor from_vector(std::vector<double> v);
  static Tensor zeros(std::vector<int> s);
  static Tensor uniform(std::vector<int> s, double lo, double hi, Rng& rng);

  int64_t numel() const { return static_cast<int64_t>(values.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int dim(int i) const { return shape[static_cast<size_t>(i)]; }
  bool is_scalar() const { return numel() == 1; }
  bool is_vector() const { return shape.size() == 1; }
  bool is_matrix() const { return shape.size() == 2; }

  int rows() const { return shape[0]; }
  int cols() const { return shape[1]; }

  double& at(int64_t i) { return values[static_cast<size_t>(i)]; }
  double at(int64_t i) const { return values[static_cast<size_t>(i)]; }
  double& at(int r, int c) { return values[static_cast<size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return values[static_cast<size_t>(r) * cols() + c]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;
  void fill(double v);
};

std::string shape_str(const std::vector<int>& shape);

}  // namespace s2smix
