#include "s2smix/gradcheck.hpp"

#include <cmath>

#include "s2smix/error.hpp"

namespace s2smix {

namespace {

double evaluate(const LossBuilder& build, const ParamSet& params) {
  Graph g;
  BoundParams bound = bind_params(g, params);
  const int loss = build(g, bound);
  return g.value(loss).values[0];
}

}  // namespace

double finite_difference_check(const LossBuilder& build, ParamSet params, double h) {
  if (h <= 0.0) throw NumericError("finite_difference_check: step h must be positive");

  GradientMap analytic;
  {
    Graph g;
    BoundParams bound = bind_params(g, params);
    const int loss = build(g, bound);
    g.backward(loss);
    analytic = GradientMap::from_graph(g, bound);
  }

  double max_rel_err = 0.0;
  for (size_t p = 0; p < params.tensors.size(); ++p) {
    Tensor& t = params.tensors[p];
    for (size_t i = 0; i < t.values.size(); ++i) {
      const double saved = t.values[i];
      t.values[i] = saved + h;
      const double up = evaluate(build, params);
      t.values[i] = saved - h;
      const double down = evaluate(build, params);
      t.values[i] = saved;
      const double central = (up - down) / (2.0 * h);
      const double err = std::abs(analytic.grads[p].values[i] - central) /
                         std::max(1.0, std::abs(central));
      max_rel_err = std::max(max_rel_err, err);
    }
  }
  return max_rel_err;
}

}  // namespace s2smix
