#include "s2smix/params.hpp"

#include <cmath>

#include "s2smix/error.hpp"

namespace s2smix {

int ParamSet::add(std::string name, Tensor t) {
  if (find(name) >= 0) throw NumericError("duplicate parameter name: " + name);
  names.push_back(std::move(name));
  tensors.push_back(std::move(t));
  return static_cast<int>(tensors.size()) - 1;
}

int ParamSet::find(const std::string& name) const {
  for (size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int64_t ParamSet::total_size() const {
  int64_t n = 0;
  for (const Tensor& t : tensors) n += t.numel();
  return n;
}

BoundParams bind_params(Graph& g, const ParamSet& params) {
  BoundParams b;
  b.ids.reserve(params.tensors.size());
  for (const Tensor& t : params.tensors) b.ids.push_back(g.leaf(t));
  return b;
}

GradientMap GradientMap::zeros_like(const ParamSet& params) {
  GradientMap m;
  m.grads.reserve(params.tensors.size());
  for (const Tensor& t : params.tensors) m.grads.push_back(Tensor::zeros(t.shape));
  return m;
}

GradientMap GradientMap::from_graph(const Graph& g, const BoundParams& bound) {
  GradientMap m;
  m.grads.reserve(bound.ids.size());
  for (int id : bound.ids) m.grads.push_back(g.grad(id));
  return m;
}

void GradientMap::accumulate(const GradientMap& other, double scale) {
  if (grads.size() != other.grads.size()) throw NumericError("gradient map size mismatch");
  for (size_t i = 0; i < grads.size(); ++i) {
    for (size_t j = 0; j < grads[i].values.size(); ++j) {
      grads[i].values[j] += scale * other.grads[i].values[j];
    }
  }
}

void GradientMap::scale(double s) {
  for (Tensor& t : grads) {
    for (double& v : t.values) v *= s;
  }
}

double GradientMap::global_norm() const {
  double s = 0.0;
  for (const Tensor& t : grads) {
    for (double v : t.values) s += v * v;
  }
  return std::sqrt(s);
}

double GradientMap::max_abs_diff(const GradientMap& other) const {
  if (grads.size() != other.grads.size()) throw NumericError("gradient map size mismatch");
  double m = 0.0;
  for (size_t i = 0; i < grads.size(); ++i) {
    for (size_t j = 0; j < grads[i].values.size(); ++j) {
      m = std::max(m, std::abs(grads[i].values[j] - other.grads[i].values[j]));
    }
  }
  return m;
}

}  // namespace s2smix
