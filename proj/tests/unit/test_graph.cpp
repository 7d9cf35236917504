#include <cmath>
#include <cstring>

#include "doctest.h"
#include "s2smix/dropout.hpp"
#include "s2smix/error.hpp"
#include "s2smix/gradcheck.hpp"
#include "s2smix/graph.hpp"

using namespace s2smix;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.5, double hi = 1.5) {
  return Tensor::uniform(std::move(shape), lo, hi, rng);
}

// Runs the finite-difference harness over a one-op loss at several random
// points; every registered op must pass at 1e-6 relative error.
void check_op_gradient(const char* name,
                       const std::function<ParamSet(Rng&)>& make_params,
                       const LossBuilder& build) {
  for (uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed * 7919 + 13);
    ParamSet params = make_params(rng);
    const double err = finite_difference_check(build, params, 1e-5);
    INFO(name, " seed ", seed);
    CHECK(err < 1e-6);
  }
}

}  // namespace

TEST_CASE("matmul with the identity matrix is the identity") {
  Graph g;
  Tensor eye({3, 3});
  for (int i = 0; i < 3; ++i) eye.at(i, i) = 1.0;
  const int v = g.leaf(Tensor::from_vector({0.5, -2.0, 3.25}));
  const int y = g.matmul(g.leaf(eye), v);
  CHECK(g.value(y).values == std::vector<double>{0.5, -2.0, 3.25});
}

TEST_CASE("matmul matrix-matrix against hand computation") {
  Graph g;
  const int a = g.leaf(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}));
  const int b = g.leaf(Tensor({3, 2}, {7, 8, 9, 10, 11, 12}));
  const Tensor& y = g.value(g.matmul(a, b));
  CHECK(y.shape == std::vector<int>{2, 2});
  CHECK(y.values == std::vector<double>{58, 64, 139, 154});
}

TEST_CASE("elementwise basics") {
  Graph g;
  CHECK(g.value(g.tanh(g.leaf(Tensor::from_vector({0.0})))).values[0] == 0.0);
  CHECK(g.value(g.sigmoid(g.leaf(Tensor::from_vector({0.0})))).values[0] == 0.5);
  const int c = g.concat({g.leaf(Tensor::from_vector({1, 2})), g.leaf(Tensor::from_vector({3}))});
  CHECK(g.value(c).values == std::vector<double>{1, 2, 3});
}

TEST_CASE("shape mismatch reports both shapes") {
  Graph g;
  const int a = g.leaf(Tensor::from_vector({1, 2}));
  const int b = g.leaf(Tensor::from_vector({1, 2, 3}));
  try {
    g.add(a, b);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(2)") != std::string::npos);
    CHECK(msg.find("(3)") != std::string::npos);
  }
}

TEST_CASE("softmax fixed points") {
  Graph g;
  const Tensor& half = g.value(g.softmax(g.leaf(Tensor::from_vector({0.0, 0.0}))));
  CHECK(half.values[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(half.values[1] == doctest::Approx(0.5).epsilon(1e-14));

  // Shift invariance, including a magnitude that would overflow exp().
  for (double c : {-7.0, 0.0, 3.5, 1e6}) {
    const Tensor& s = g.value(g.softmax(g.leaf(Tensor::from_vector({c, c, c, c}))));
    for (double v : s.values) CHECK(v == doctest::Approx(0.25).epsilon(1e-14));
  }

  // softmax([ln 1, ln 3]) = [1/4, 3/4] by direct evaluation.
  const Tensor& s = g.value(g.softmax(g.leaf(Tensor::from_vector({std::log(1.0), std::log(3.0)}))));
  CHECK(s.values[0] == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(s.values[1] == doctest::Approx(0.75).epsilon(1e-14));
}

TEST_CASE("softmax sums to one at random points") {
  Rng rng(11);
  Graph g;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + uniform_int(rng, 9);
    const Tensor& s = g.value(g.softmax(g.leaf(random_tensor({n}, rng, -40.0, 40.0))));
    double sum = 0.0;
    for (double v : s.values) {
      CHECK(v >= 0.0);
      sum += v;
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("log_sum_exp identities") {
  Graph g;
  CHECK(g.value(g.log_sum_exp(g.leaf(Tensor::from_vector({2.75})))).values[0] == 2.75);
  CHECK(g.value(g.log_sum_exp(g.leaf(Tensor::from_vector({0.0, 0.0})))).values[0] ==
        doctest::Approx(std::log(2.0)).epsilon(1e-14));
  // Shift identity and stability under large magnitudes.
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor v = random_tensor({5}, rng, -3.0, 3.0);
    const double c = uniform_range(rng, -800.0, 800.0);
    Tensor shifted = v;
    for (double& x : shifted.values) x += c;
    const double base = g.value(g.log_sum_exp(g.leaf(v))).values[0];
    const double moved = g.value(g.log_sum_exp(g.leaf(shifted))).values[0];
    CHECK(std::abs(moved - (base + c)) < 1e-12 * std::max(1.0, std::abs(base + c)));
  }
}

TEST_CASE("backward of x*x at x = 3 is 6") {
  Graph g;
  const int x = g.leaf(Tensor::scalar(3.0));
  g.backward(g.mul(x, x));
  CHECK(g.grad(x).values[0] == 6.0);
}

TEST_CASE("gradient of log_sum_exp is softmax") {
  Graph g;
  const int v = g.leaf(Tensor::from_vector({0.2, -1.0, 2.5}));
  g.backward(g.log_sum_exp(v));
  const std::vector<double> s = softmax_values(g.value(v).values);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(g.grad(v).values[i] - s[i]) < 1e-14);
}

TEST_CASE("backward requires a scalar loss") {
  Graph g;
  const int v = g.leaf(Tensor::from_vector({1.0, 2.0}));
  CHECK_THROWS_AS(g.backward(g.tanh(v)), NumericError);
}

TEST_CASE("randomized 20-parameter model matches finite differences") {
  // W (3x4), v (4), b (3), s (1): 20 parameters through matmul, tanh, add,
  // log_sum_exp and mul.
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    ParamSet params;
    params.add("w", random_tensor({3, 4}, rng));
    params.add("v", random_tensor({4}, rng));
    params.add("b", random_tensor({3}, rng));
    params.add("s", random_tensor({1}, rng));
    const auto build = [](Graph& g, const BoundParams& bound) {
      const int pre = g.add(g.matmul(bound.ids[0], g.tanh(bound.ids[1])), bound.ids[2]);
      return g.mul(g.log_sum_exp(pre), bound.ids[3]);
    };
    CHECK(params.total_size() == 20);
    CHECK(finite_difference_check(build, params, 1e-5) < 1e-6);
  }
}

TEST_CASE("finite differences are near-exact for quadratics") {
  Rng rng(3);
  ParamSet params;
  params.add("x", random_tensor({6}, rng));
  Tensor a = random_tensor({6}, rng);
  const auto build = [a](Graph& g, const BoundParams& bound) {
    return g.add(g.dot(bound.ids[0], bound.ids[0]), g.dot(g.leaf(a), bound.ids[0]));
  };
  CHECK(finite_difference_check(build, params, 1e-4) < 1e-9);
}

TEST_CASE("finite_difference_check rejects non-positive steps") {
  ParamSet params;
  params.add("x", Tensor::scalar(1.0));
  const auto build = [](Graph& g, const BoundParams& bound) {
    return g.mul(bound.ids[0], bound.ids[0]);
  };
  CHECK_THROWS_AS(finite_difference_check(build, params, 0.0), NumericError);
  CHECK_THROWS_AS(finite_difference_check(build, params, -1e-5), NumericError);
}

TEST_CASE("every registered op matches finite differences at random points") {
  SUBCASE("matmul vector") {
    check_op_gradient(
        "matmul",
        [](Rng& rng) {
          ParamSet p;
          p.add("w", random_tensor({3, 4}, rng));
          p.add("x", random_tensor({4}, rng));
          p.add("u", random_tensor({3}, rng));
          return p;
        },
        [](Graph& g, const BoundParams& b) {
          return g.dot(b.ids[2], g.matmul(b.ids[0], b.ids[1]));
        });
  }
  SUBCASE("matmul matrix") {
    check_op_gradient(
        "matmul2",
        [](Rng& rng) {
          ParamSet p;
          p.add("a", random_tensor({2, 3}, rng));
          p.add("b", random_tensor({3, 2}, rng));
          p.add("x", random_tensor({2}, rng));
          p.add("u", random_tensor({2}, rng));
          return p;
        },
        [](Graph& g, const BoundParams& b) {
          const int y = g.matmul(b.ids[0], b.ids[1]);  // 2x2
          return g.dot(b.ids[3], g.tanh(g.matmul(y, b.ids[2])));
        });
  }
  SUBCASE("add mul tanh sigmoid") {
    check_op_gradient(
        "elementwise",
        [](Rng& rng) {
          ParamSet p;
          p.add("a", random_tensor({5}, rng));
          p.add("b", random_tensor({5}, rng));
          return p;
        },
        [](Graph& g, const BoundParams& b) {
          const int y = g.mul(g.tanh(g.add(b.ids[0], b.ids[1])), g.sigmoid(b.ids[1]));
          return g.log_sum_exp(y);
        });
  }
  SUBCASE("concat slice") {
    check_op_gradient(
        "concat_slice",
        [](Rng& rng) {
          ParamSet p;
          p.add("a", random_tensor({3}, rng));
          p.add("b", random_tensor({4}, rng));
          return p;
        },
        [](Graph& g, const BoundParams& b) {
          const int c = g.concat({b.ids[0], b.ids[1]});
          return g.dot(g.slice(c, 1, 4), g.slice(c, 2, 4));
        });
  }
  SUBCASE("lookup_row") {
    check_op_gradient(
        "lookup",
        [](Rng& rng) {
          ParamSet p;
          p.add("t", random_tensor({4, 3}, rng));
          return p;
        },
        [](Graph& g, const BoundParams& b) {
          return g.dot(g.lookup_row(b.ids[0], 2), g.tanh(g.lookup_row(b.ids[0], 0)));
        });
  }
  SUBCASE("dropout_mask") {
    check_op_gradient(
        "dropout",
        [](Rng& rng) {
          ParamSet p;
          p.add("x", random_tensor({6}, rng));
          return p;
        },
        [](Graph& g, const BoundParams& b) {
          const std::vector<double> mask = {1.25, 0.0, 1.25, 1.25, 0.0, 1.25};
          return g.log_sum_exp(g.dropout_mask(b.ids[0], mask));
        });
  }
  SUBCASE("softmax log_softmax") {
    check_op_gradient(
        "softmaxes",
        [](Rng& rng) {
          ParamSet p;
          p.add("x", random_tensor({5}, rng));
          p.add("u", random_tensor({5}, rng));
          return p;
        },
        [](Graph& g, const BoundParams& b) {
          return g.add(g.dot(b.ids[1], g.softmax(b.ids[0])),
                       g.dot(g.softmax(b.ids[1]), g.log_softmax(b.ids[0])));
        });
  }
  SUBCASE("pick dot smoothed_pick") {
    check_op_gradient(
        "picks",
        [](Rng& rng) {
          ParamSet p;
          p.add("x", random_tensor({5}, rng));
          return p;
        },
        [](Graph& g, const BoundParams& b) {
          const int lp = g.log_softmax(b.ids[0]);
          return g.add(g.pick(lp, 3), g.smoothed_pick(lp, 1, 0.1));
        });
  }
  SUBCASE("weighted_sum_rows") {
    check_op_gradient(
        "weighted_sum",
        [](Rng& rng) {
          ParamSet p;
          p.add("w", random_tensor({3}, rng));
          p.add("r0", random_tensor({4}, rng));
          p.add("r1", random_tensor({4}, rng));
          p.add("r2", random_tensor({4}, rng));
          return p;
        },
        [](Graph& g, const BoundParams& b) {
          const int y = g.weighted_sum_rows(g.softmax(b.ids[0]), {b.ids[1], b.ids[2], b.ids[3]});
          return g.log_sum_exp(y);
        });
  }
  SUBCASE("log_sum_exp") {
    check_op_gradient(
        "lse",
        [](Rng& rng) {
          ParamSet p;
          p.add("x", random_tensor({7}, rng));
          return p;
        },
        [](Graph& g, const BoundParams& b) { return g.log_sum_exp(g.tanh(b.ids[0])); });
  }
}

TEST_CASE("graph replay determinism: identical inputs give bit-identical values") {
  auto build_once = [](uint64_t seed) {
    Rng rng(seed);
    Graph g;
    const int w = g.leaf(random_tensor({4, 4}, rng));
    const int x = g.leaf(random_tensor({4}, rng));
    MaskSource drop(0.3, &rng);
    const int y = g.dropout_mask(g.tanh(g.matmul(w, x)), drop.next_mask(4));
    return g.value(g.log_sum_exp(y)).values[0];
  };
  const double a = build_once(99);
  const double b = build_once(99);
  CHECK(std::memcmp(&a, &b, sizeof(double)) == 0);
}

TEST_CASE("frozen dropout masks replay identically") {
  Rng rng(42);
  MaskSource drop(0.4, &rng);
  drop.freeze();
  drop.begin_pass();
  const std::vector<double> m1 = drop.next_mask(8);
  const std::vector<double> m2 = drop.next_mask(5);
  drop.begin_pass();
  CHECK(drop.next_mask(8) == m1);
  CHECK(drop.next_mask(5) == m2);
  drop.begin_pass();
  CHECK(drop.next_mask(8) == m1);
  // Shape divergence during replay is an error.
  CHECK_THROWS_AS(drop.next_mask(6), NumericError);
}
