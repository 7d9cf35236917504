#include "s2smix/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "s2smix/error.hpp"

namespace s2smix {

namespace {

int64_t shape_numel(const std::vector<int>& shape) {
  if (shape.empty()) throw NumericError("tensor shape must be non-empty");
  int64_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw NumericError("tensor dimensions must be positive, got " + shape_str(shape));
    n *= d;
  }
  return n;
}

}  // namespace

Tensor::Tensor(std::vector<int> s) : shape(std::move(s)) {
  values.assign(static_cast<size_t>(shape_numel(shape)), 0.0);
}

Tensor::Tensor(std::vector<int> s, std::vector<double> v)
    : shape(std::move(s)), values(std::move(v)) {
  if (shape_numel(shape) != static_cast<int64_t>(values.size())) {
    throw NumericError("tensor value count " + std::to_string(values.size()) +
                       " does not match shape " + shape_str(shape));
  }
}

Tensor Tensor::scalar(double v) { return Tensor({1}, {v}); }

Tensor Tensor::from_vector(std::vector<double> v) {
  const int n = static_cast<int>(v.size());
  return Tensor({n}, std::move(v));
}

Tensor Tensor::zeros(std::vector<int> s) { return Tensor(std::move(s)); }

Tensor Tensor::uniform(std::vector<int> s, double lo, double hi, Rng& rng) {
  Tensor t(std::move(s));
  for (double& v : t.values) v = uniform_range(rng, lo, hi);
  return t;
}

bool Tensor::all_finite() const {
  return std::all_of(values.begin(), values.end(),
                     [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(values.begin(), values.end(), v); }

std::string shape_str(const std::vector<int>& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

}  // namespace s2smix
