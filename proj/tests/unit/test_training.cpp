#include <cmath>
#include <cstring>

#include "doctest.h"
#include "s2smix/error.hpp"
#include "s2smix/trainer.hpp"

using namespace s2smix;

namespace {

ModelConfig small_config(Variant variant, int k, double dropout = 0.0) {
  ModelConfig c;
  c.vocab_size_src = 9;
  c.vocab_size_tgt = 9;
  c.embed_dim = 6;
  c.lstm_dim = 6;
  c.components = k;
  c.variant = variant;
  c.dropout_rate = dropout;
  return c;
}

ModelParams small_model(Variant variant, int k, uint64_t seed = 11, double dropout = 0.0) {
  Rng rng(seed);
  return ModelParams::init(small_config(variant, k, dropout), rng);
}

Batch small_batch() {
  return {
      {{4, 5, 6}, {7, 4}},
      {{8, 4}, {5, 6, 8}},
  };
}

bool params_equal(const ParamSet& a, const ParamSet& b) {
  if (a.count() != b.count()) return false;
  for (size_t i = 0; i < a.count(); ++i) {
    if (a.tensors[i].values.size() != b.tensors[i].values.size()) return false;
    if (std::memcmp(a.tensors[i].values.data(), b.tensors[i].values.data(),
                    a.tensors[i].values.size() * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("label smoothing with eps = 0 is plain cross-entropy") {
  Rng rng(2);
  std::vector<Tensor> logits = {Tensor::uniform({6}, -2.0, 2.0, rng),
                                Tensor::uniform({6}, -2.0, 2.0, rng)};
  const std::vector<int> y = {3, 1};
  double expected = 0.0;
  for (size_t t = 0; t < y.size(); ++t) {
    expected -= log_softmax_values(logits[t].values)[static_cast<size_t>(y[t])];
  }
  CHECK(label_smoothed_nll(logits, y, 0.0) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("label smoothing spreads eps over the other entries") {
  // V = 5, eps = 0.1: q = (0.9, 0.025, 0.025, 0.025, 0.025), summing to 1.
  Rng rng(4);
  const Tensor logits = Tensor::uniform({5}, -1.0, 1.0, rng);
  const std::vector<double> lp = log_softmax_values(logits.values);
  const double eps = 0.1;
  const int truth = 2;
  double expected = -(1.0 - eps) * lp[truth];
  for (int j = 0; j < 5; ++j) {
    if (j != truth) expected -= (eps / 4.0) * lp[static_cast<size_t>(j)];
  }
  CHECK(label_smoothed_nll({logits}, {truth}, eps) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("uniform predictions cost ln V per token for any smoothing") {
  const Tensor logits = Tensor::zeros({7});
  for (double eps : {0.0, 0.1, 0.5}) {
    CHECK(label_smoothed_nll({logits, logits, logits}, {2, 6, 4}, eps) ==
          doctest::Approx(3.0 * std::log(7.0)).epsilon(1e-13));
  }
}

TEST_CASE("label smoothing skips padding positions") {
  Rng rng(9);
  const Tensor logits = Tensor::uniform({6}, -2.0, 2.0, rng);
  const double without = label_smoothed_nll({logits}, {4}, 0.1);
  const double with_pad = label_smoothed_nll({logits, logits}, {4, kPadId}, 0.1);
  CHECK(without == with_pad);
}

TEST_CASE("marginal loss from component log-likelihoods") {
  // K = 1 reduces to the negative log-likelihood.
  CHECK(marginal_loss_from_logliks({-1.25}) == 1.25);
  // Equal components: -(ell + ln K).
  const double ell = -2.0;
  CHECK(marginal_loss_from_logliks({ell, ell, ell, ell}) ==
        doctest::Approx(-(ell + std::log(4.0))).epsilon(1e-14));
  // A dominated sum collapses onto the best component.
  CHECK(marginal_loss_from_logliks({std::log(0.4), -1e5, -1e5, -1e5}) ==
        doctest::Approx(-std::log(0.4)).epsilon(1e-12));
}

TEST_CASE("batch marginal loss with K = 1 is the negative sequence log-probability") {
  const ModelParams params = small_model(Variant::kNone, 1);
  const Batch batch = small_batch();
  double expected = 0.0;
  for (const IdPair& pair : batch) {
    expected -= sequence_log_prob(params, pair.src, with_eos(pair.tgt), 1).total;
  }
  CHECK(marginal_cll_loss(params, batch) == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("posterior fixed points") {
  const std::vector<double> uniform = posterior_from_logliks({-3.0, -3.0, -3.0});
  for (double p : uniform) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-14));

  const std::vector<double> two = posterior_from_logliks({std::log(0.8), std::log(0.2)});
  CHECK(two[0] == doctest::Approx(0.8).epsilon(1e-13));
  CHECK(two[1] == doctest::Approx(0.2).epsilon(1e-13));

  // Direct evaluation: exp(0) : exp(-ln 2) : exp(-ln 2) = 1 : 0.5 : 0.5.
  const std::vector<double> three = posterior_from_logliks({0.0, -std::log(2.0), -std::log(2.0)});
  CHECK(three[0] == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(three[1] == doctest::Approx(0.25).epsilon(1e-13));
  CHECK(three[2] == doctest::Approx(0.25).epsilon(1e-13));
}

TEST_CASE("posterior sums to one and is shift-invariant") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> ell(4);
    for (double& e : ell) e = uniform_range(rng, -50.0, 0.0);
    const std::vector<double> p = posterior_from_logliks(ell);
    double sum = 0.0;
    for (double v : p) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-12);

    const double c = uniform_range(rng, -100.0, 100.0);
    std::vector<double> shifted = ell;
    for (double& e : shifted) e += c;
    const std::vector<double> q = posterior_from_logliks(shifted);
    for (size_t i = 0; i < p.size(); ++i) CHECK(std::abs(p[i] - q[i]) < 1e-12);
  }
}

TEST_CASE("exact EM gradient equals the marginal CLL gradient") {
  const Batch batch = small_batch();
  for (int k : {1, 2, 4}) {
    for (double eps : {0.0, 0.1}) {
      const ModelParams params = small_model(k == 1 ? Variant::kNone : Variant::kBt, k, 31);
      double em_loss = 0.0, cll_loss = 0.0;
      const GradientMap em = exact_em_gradient(params, batch, eps, &em_loss);
      const GradientMap cll = marginal_cll_gradient(params, batch, eps, nullptr, &cll_loss);
      INFO("K = ", k, " eps = ", eps);
      CHECK(std::abs(em_loss - cll_loss) < 1e-10);
      CHECK(em.max_abs_diff(cll) < 1e-8);
    }
  }
}

TEST_CASE("a concentrated posterior reduces the EM gradient to one component") {
  // Push component 2's softmax bias far down so the posterior mass sits on
  // component 1 to well under 1e-12.
  ModelParams params = small_model(Variant::kSf, 2, 77);
  Tensor& mb = params.set.tensors[static_cast<size_t>(params.mb)];
  for (int j = 0; j < params.config.vocab_size_tgt; ++j) mb.at(1, j) = (j % 2 == 0) ? 40.0 : -40.0;
  const Batch batch = {small_batch()[0]};

  const std::vector<double> post = posterior(params, batch[0], 0.0);
  REQUIRE(post[1] < 1e-12);

  const GradientMap em = exact_em_gradient(params, batch, 0.0);
  // Direct gradient of -ell_1.
  Graph g;
  BoundModel m = bind_model(g, params);
  const EncoderOutput enc = encode(m, batch[0].src, nullptr);
  const SequenceScoreNodes nodes = sequence_score_nodes(m, enc, with_eos(batch[0].tgt), 1, 0.0);
  g.backward(nodes.total);
  GradientMap direct = GradientMap::from_graph(g, m.bound);
  direct.scale(-1.0);
  CHECK(em.max_abs_diff(direct) < 1e-8);
}

TEST_CASE("MC sampling posterior shares the posterior code path") {
  const ModelParams params = small_model(Variant::kBt, 3, 13);
  TrainConfig tc;
  tc.label_smoothing = 0.0;
  const IdPair pair = small_batch()[0];
  CHECK(mc_sampling_posterior(params, pair, tc) == posterior(params, pair, 0.0));
}

TEST_CASE("MC gradient is unbiased for the exact EM gradient") {
  const ModelParams params = small_model(Variant::kBt, 2, 5);
  const Batch batch = small_batch();
  TrainConfig tc;
  tc.label_smoothing = 0.1;
  tc.mc_samples = 1;

  const GradientMap exact = exact_em_gradient(params, batch, tc.label_smoothing);

  const int n = 10000;
  GradientMap mean = GradientMap::zeros_like(params.set);
  GradientMap sq = GradientMap::zeros_like(params.set);
  Rng rng(999);
  for (int s = 0; s < n; ++s) {
    const GradientMap sample = em_mc_gradient(params, batch, tc, rng);
    for (size_t p = 0; p < mean.grads.size(); ++p) {
      for (size_t i = 0; i < mean.grads[p].values.size(); ++i) {
        const double v = sample.grads[p].values[i];
        mean.grads[p].values[i] += v;
        sq.grads[p].values[i] += v * v;
      }
    }
  }

  int violations = 0;
  for (size_t p = 0; p < mean.grads.size(); ++p) {
    for (size_t i = 0; i < mean.grads[p].values.size(); ++i) {
      const double m = mean.grads[p].values[i] / n;
      const double var = std::max(0.0, sq.grads[p].values[i] / n - m * m);
      const double se = std::sqrt(var / n);
      if (std::abs(m - exact.grads[p].values[i]) > 3.0 * se + 1e-12) ++violations;
    }
  }
  // Per-coordinate 3-sigma bound; allow a tiny tail fraction of the ~1900
  // coordinates (3 sigma covers 99.7% per coordinate).
  CHECK(violations <= static_cast<int>(params.set.total_size() / 100));
}

TEST_CASE("em_mc with K = 1 follows the exact-CLL trajectory bit for bit") {
  // Dropout on: both modes must consume the same mask stream.
  auto run = [](TrainMode mode) {
    TrainConfig tc;
    tc.batch_size = 2;
    tc.epochs = 3;
    tc.label_smoothing = 0.1;
    tc.mode = mode;
    tc.seed = 17;
    Trainer trainer(small_config(Variant::kNone, 1, 0.2), tc);
    const std::vector<IdPair> data = small_batch();
    return trainer.run(data, data).final_state.params;
  };
  const ModelParams a = run(TrainMode::kExactCll);
  const ModelParams b = run(TrainMode::kEmMc);
  CHECK(params_equal(a.set, b.set));
}

TEST_CASE("zero epochs returns the initialized parameters and an empty log") {
  TrainConfig tc;
  tc.epochs = 0;
  tc.seed = 23;
  const ModelConfig mc = small_config(Variant::kBt, 2);
  Trainer trainer(mc, tc);
  Rng rng(23);
  const ModelParams fresh = ModelParams::init(mc, rng);
  const std::vector<IdPair> data = small_batch();
  const TrainResult result = trainer.run(data, data);
  CHECK(result.epochs.empty());
  CHECK(params_equal(result.best_params.set, fresh.set));
}

TEST_CASE("loss on a one-pair corpus is non-increasing at a small learning rate") {
  TrainConfig tc;
  tc.batch_size = 1;
  tc.epochs = 50;
  tc.adam.learning_rate = 1e-3;
  tc.label_smoothing = 0.0;
  tc.seed = 7;

  struct Capture : TrainLogSink {
    std::vector<double> losses;
    void step_line(int, long long, const std::string&, double loss, double) override {
      losses.push_back(loss);
    }
    void epoch_line(const EpochStats&) override {}
  } capture;

  Trainer trainer(small_config(Variant::kNone, 1, 0.0), tc);
  const std::vector<IdPair> data = {small_batch()[0]};
  trainer.run(data, data, &capture);
  REQUIRE(capture.losses.size() == 50);
  for (size_t i = 1; i < capture.losses.size(); ++i) {
    CHECK(capture.losses[i] <= capture.losses[i - 1] + 1e-9);
  }
}

TEST_CASE("training is reproducible bit for bit under a fixed seed") {
  auto run = [] {
    TrainConfig tc;
    tc.batch_size = 2;
    tc.epochs = 2;
    tc.seed = 51;
    Trainer trainer(small_config(Variant::kBt, 2, 0.2), tc);
    const std::vector<IdPair> data = small_batch();
    return trainer.run(data, data);
  };
  const TrainResult a = run();
  const TrainResult b = run();
  CHECK(params_equal(a.final_state.params.set, b.final_state.params.set));
  CHECK(params_equal(a.best_params.set, b.best_params.set));
  REQUIRE(a.epochs.size() == b.epochs.size());
  for (size_t i = 0; i < a.epochs.size(); ++i) {
    CHECK(a.epochs[i].train_loss == b.epochs[i].train_loss);
    CHECK(a.epochs[i].dev_ppl == b.epochs[i].dev_ppl);
  }
}

TEST_CASE("epoch order is a deterministic permutation keyed by seed and epoch") {
  const std::vector<size_t> a = epoch_order(100, 9, 3);
  const std::vector<size_t> b = epoch_order(100, 9, 3);
  CHECK(a == b);
  CHECK(epoch_order(100, 9, 4) != a);
  std::vector<bool> seen(100, false);
  for (size_t i : a) {
    CHECK(!seen[i]);
    seen[i] = true;
  }
}

TEST_CASE("a non-finite stage-1 log-likelihood aborts the MC step with diagnostics") {
  ModelParams params = small_model(Variant::kSf, 2, 8);
  params.set.tensors[static_cast<size_t>(params.mb)].values[0] =
      std::numeric_limits<double>::quiet_NaN();
  TrainConfig tc;
  tc.label_smoothing = 0.0;
  AdamState adam = AdamState::zeros_like(params.set);
  Rng rng(4);
  const Batch batch = small_batch();
  CHECK_THROWS_AS(em_mc_step(params, batch, adam, tc, rng), NumericError);
}

TEST_CASE("perplexity of the uniform model equals the vocabulary size") {
  ModelParams params = small_model(Variant::kNone, 1, 3);
  // Zero the output layer: uniform over V = 9.
  params.set.tensors[static_cast<size_t>(params.out_w)].fill(0.0);
  params.set.tensors[static_cast<size_t>(params.out_wc)].fill(0.0);
  const std::vector<IdPair> data = small_batch();
  CHECK(perplexity(params, data) == doctest::Approx(9.0).epsilon(1e-10));
}

TEST_CASE("perplexity with K = 1 matches the direct sequence computation") {
  const ModelParams params = small_model(Variant::kNone, 1, 21);
  const std::vector<IdPair> data = small_batch();
  double nll = 0.0;
  int64_t tokens = 0;
  for (const IdPair& pair : data) {
    nll -= sequence_log_prob(params, pair.src, with_eos(pair.tgt), 1).total;
    tokens += static_cast<int64_t>(pair.tgt.size()) + 1;
  }
  CHECK(perplexity(params, data) ==
        doctest::Approx(std::exp(nll / static_cast<double>(tokens))).epsilon(1e-12));
}

TEST_CASE("perplexity is at least one") {
  for (uint64_t seed : {1ULL, 9ULL, 33ULL}) {
    const ModelParams params = small_model(Variant::kAll, 2, seed);
    CHECK(perplexity(params, small_batch()) >= 1.0);
  }
}
