#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s2smix/graph.hpp"
#include "s2smix/tensor.hpp"

namespace s2smix {

// Flat ordered collection of named parameter tensors. The order is the
// canonical one for gradient maps, optimizer state and checkpoints.
struct ParamSet {
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  int add(std::string name, Tensor t);
  int find(const std::string& name) const;  // -1 if absent
  size_t count() const { return tensors.size(); }
  int64_t total_size() const;
};

// Leaf node ids for every tensor of a ParamSet on some graph, in set order.
struct BoundParams {
  std::vector<int> ids;
};

BoundParams bind_params(Graph& g, const ParamSet& params);

// Per-tensor gradients aligned with a ParamSet.
struct GradientMap {
  std::vector<Tensor> grads;

  static GradientMap zeros_like(const ParamSet& params);
  // Reads gradients of bound leaves off a graph after backward().
  static GradientMap from_graph(const Graph& g, const BoundParams& bound);
  void accumulate(const GradientMap& other, double scale = 1.0);
  void scale(double s);
  double global_norm() const;
  double max_abs_diff(const GradientMap& other) const;
};

}  // namespace s2smix
