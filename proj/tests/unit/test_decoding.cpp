#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "s2smix/beam.hpp"
#include "s2smix/error.hpp"
#include "s2smix/loss.hpp"

using namespace s2smix;

namespace {

ModelConfig decode_config(Variant variant, int k, int vocab_tgt) {
  ModelConfig c;
  c.vocab_size_src = 8;
  c.vocab_size_tgt = vocab_tgt;
  c.embed_dim = 5;
  c.lstm_dim = 5;
  c.components = k;
  c.variant = variant;
  c.dropout_rate = 0.0;
  return c;
}

ModelParams decode_model(Variant variant, int k, int vocab_tgt, uint64_t seed) {
  Rng rng(seed);
  return ModelParams::init(decode_config(variant, k, vocab_tgt), rng);
}

// Independent oracle: enumerate every content sequence of length 1..max_len,
// score it through sequence_log_prob, and pick the best by (score, lexicographic).
Hypothesis enumerate_best(const ModelParams& params, const std::vector<int>& src, int z,
                          int max_len) {
  const int vocab = params.config.vocab_size_tgt;
  Hypothesis best;
  bool found = false;
  std::vector<std::vector<int>> frontier = {{}};
  for (int len = 1; len <= max_len; ++len) {
    std::vector<std::vector<int>> next;
    for (const std::vector<int>& prefix : frontier) {
      for (int tok = kNumReservedIds; tok < vocab; ++tok) {
        std::vector<int> seq = prefix;
        seq.push_back(tok);
        std::vector<int> terminated = seq;
        terminated.push_back(kEosId);
        const double lp = sequence_log_prob(params, src, terminated, z).total;
        if (!found || lp > best.log_prob ||
            (lp == best.log_prob &&
             std::lexicographical_compare(terminated.begin(), terminated.end(),
                                          best.tokens.begin(), best.tokens.end()))) {
          found = true;
          best.tokens = terminated;
          best.log_prob = lp;
          best.finished = true;
          best.component = z;
        }
        next.push_back(std::move(seq));
      }
    }
    frontier = std::move(next);
  }
  REQUIRE(found);
  return best;
}

}  // namespace

TEST_CASE("greedy decoding equals beam search with width one and is deterministic") {
  for (uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const ModelParams params = decode_model(Variant::kNone, 1, 9, seed);
    const std::vector<int> src = {4, 6, 5};
    const Hypothesis g1 = greedy_decode(params, src, 1, 6);
    const Hypothesis g2 = greedy_decode(params, src, 1, 6);
    CHECK(g1.tokens == g2.tokens);
    CHECK(g1.log_prob == g2.log_prob);
    const std::vector<Hypothesis> beam = beam_search(params, src, 1, 1, 6);
    REQUIRE(beam.size() == 1);
    CHECK(beam[0].tokens == g1.tokens);
    CHECK(beam[0].log_prob == g1.log_prob);
  }
}

TEST_CASE("saturating beam search returns the brute-force optimum") {
  // 4 content tokens, max_len 3, beam 64 >= 4^3: no pruning can occur.
  for (uint64_t seed = 0; seed < 20; ++seed) {
    const ModelParams params = decode_model(Variant::kNone, 1, 8, 1000 + seed);
    const std::vector<int> src = {4, 5};
    const Hypothesis oracle = brute_force_decode(params, src, 1, 3);
    const std::vector<Hypothesis> beam = beam_search(params, src, 1, 64, 3);
    REQUIRE(!beam.empty());
    INFO("seed ", seed);
    CHECK(beam[0].tokens == oracle.tokens);
    CHECK(std::abs(beam[0].log_prob - oracle.log_prob) < 1e-12);
  }
}

TEST_CASE("brute force agrees with the independent enumeration oracle") {
  // 2 content tokens (ids 4, 5) and max_len 2: the candidate space is the
  // six sequences {4},{5},{4,4},{4,5},{5,4},{5,5}, each EOS-terminated.
  const ModelParams params = decode_model(Variant::kNone, 1, 6, 88);
  const std::vector<int> src = {4, 7};
  const Hypothesis oracle = enumerate_best(params, src, 1, 2);
  const Hypothesis bf = brute_force_decode(params, src, 1, 2);
  CHECK(bf.tokens == oracle.tokens);
  CHECK(std::abs(bf.log_prob - oracle.log_prob) < 1e-12);
}

TEST_CASE("brute force with max_len one returns the best single token plus EOS") {
  const ModelParams params = decode_model(Variant::kNone, 1, 9, 5);
  const std::vector<int> src = {5};
  const Hypothesis bf = brute_force_decode(params, src, 1, 1);
  REQUIRE(bf.tokens.size() == 2);
  CHECK(bf.tokens[1] == kEosId);
  CHECK(bf.tokens == enumerate_best(params, src, 1, 1).tokens);
}

TEST_CASE("brute force guards its search space") {
  const ModelParams params = decode_model(Variant::kNone, 1, 40, 2);
  const std::vector<int> src = {4};
  CHECK_THROWS_AS(brute_force_decode(params, src, 1, 5), UsageError);
}

TEST_CASE("beam results are sorted and re-scorable") {
  const ModelParams params = decode_model(Variant::kBt, 2, 10, 321);
  const std::vector<int> src = {4, 5, 6, 7};
  for (int z : {1, 2}) {
    const std::vector<Hypothesis> beam = beam_search(params, src, z, 5, 8);
    REQUIRE(beam.size() == 5);
    for (size_t i = 1; i < beam.size(); ++i) CHECK(beam[i - 1].log_prob >= beam[i].log_prob);
    for (const Hypothesis& h : beam) {
      REQUIRE(h.finished);
      CHECK(h.tokens.back() == kEosId);
      const double recomputed = sequence_log_prob(params, src, h.tokens, z).total;
      CHECK(std::abs(recomputed - h.log_prob) < 1e-10);
    }
  }
}

TEST_CASE("best completed score is monotone in beam width on oracle-checked models") {
  for (uint64_t seed = 0; seed < 6; ++seed) {
    const ModelParams params = decode_model(Variant::kNone, 1, 8, 500 + seed);
    const std::vector<int> src = {6, 4};
    double prev = -1e300;
    for (int b : {1, 2, 4, 8, 16, 32, 64}) {
      const std::vector<Hypothesis> beam = beam_search(params, src, 1, b, 3);
      REQUIRE(!beam.empty());
      CHECK(beam[0].log_prob >= prev - 1e-12);
      prev = std::max(prev, beam[0].log_prob);
    }
    CHECK(std::abs(prev - brute_force_decode(params, src, 1, 3).log_prob) < 1e-12);
  }
}

TEST_CASE("component selection is an argmax with ties to the lowest id") {
  CHECK(select_final_component({-1.2, -0.5, -3.0, -0.9}) == 2);
  CHECK(select_final_component({-0.5, -0.5, -0.5}) == 1);
  CHECK(select_final_component({-2.0, -1.0, -1.0}) == 2);
  // Invariant under a common shift of every component score.
  Rng rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> scores(4);
    for (double& s : scores) s = uniform_range(rng, -30.0, 0.0);
    const double shift = uniform_range(rng, -100.0, 100.0);
    std::vector<double> shifted = scores;
    for (double& s : shifted) s += shift;
    CHECK(select_final_component(scores) == select_final_component(shifted));
  }
}

TEST_CASE("mixture decode with K = 1 is plain beam search") {
  const ModelParams params = decode_model(Variant::kNone, 1, 10, 44);
  const std::vector<int> src = {4, 7, 5};
  const DecodeResult r = mixture_decode(params, src, 4, 8);
  const std::vector<Hypothesis> beam = beam_search(params, src, 1, 4, 8);
  REQUIRE(r.per_component.size() == 1);
  REQUIRE(r.per_component[0].size() == beam.size());
  for (size_t i = 0; i < beam.size(); ++i) {
    CHECK(r.per_component[0][i].tokens == beam[i].tokens);
  }
  CHECK(r.final_component == 1);
  CHECK(r.final.tokens == beam[0].tokens);
}

TEST_CASE("mixture decode emits K x b candidates") {
  const ModelParams params = decode_model(Variant::kAll, 3, 12, 91);
  const std::vector<int> src = {5, 6};
  const DecodeResult r = mixture_decode(params, src, 2, 7);
  REQUIRE(r.per_component.size() == 3);
  int total = 0;
  for (const auto& list : r.per_component) total += static_cast<int>(list.size());
  CHECK(total == 6);
  CHECK(r.final_component >= 1);
  CHECK(r.final_component <= 3);
  // The final candidate is the selected component's own best.
  CHECK(r.final.tokens == r.per_component[static_cast<size_t>(r.final_component - 1)][0].tokens);
}

TEST_CASE("zeroed conditioning tables make every component decode identically") {
  ModelParams params = decode_model(Variant::kAll, 3, 10, 7);
  params.set.tensors[static_cast<size_t>(params.m1)].fill(0.0);
  params.set.tensors[static_cast<size_t>(params.m2)].fill(0.0);
  params.set.tensors[static_cast<size_t>(params.mb)].fill(0.0);
  const std::vector<int> src = {6, 5, 4};
  const DecodeResult r = mixture_decode(params, src, 2, 8);
  for (size_t z = 1; z < r.per_component.size(); ++z) {
    REQUIRE(r.per_component[z].size() == r.per_component[0].size());
    for (size_t i = 0; i < r.per_component[z].size(); ++i) {
      CHECK(r.per_component[z][i].tokens == r.per_component[0][i].tokens);
    }
  }
  CHECK(r.final_component == 1);  // tie broken by lowest component id
  CHECK(r.final.tokens == r.per_component[0][0].tokens);
}

TEST_CASE("diverse beam with gamma = 0 is plain beam search") {
  const ModelParams params = decode_model(Variant::kNone, 1, 10, 15);
  const std::vector<int> src = {4, 5, 6};
  const std::vector<Hypothesis> plain = beam_search(params, src, 1, 4, 8);
  const std::vector<Hypothesis> diverse = diverse_beam_search(params, src, 1, 4, 0.0, 8);
  REQUIRE(plain.size() == diverse.size());
  for (size_t i = 0; i < plain.size(); ++i) {
    CHECK(plain[i].tokens == diverse[i].tokens);
    CHECK(plain[i].log_prob == diverse[i].log_prob);
  }
}

TEST_CASE("a dominating penalty keeps at most one expansion per parent") {
  // With a huge penalty the beam spreads over distinct first tokens: step
  // one picks b siblings of the root, and every later step keeps exactly the
  // top child of each surviving parent.
  const ModelParams params = decode_model(Variant::kNone, 1, 10, 63);
  const std::vector<int> src = {4, 6, 5, 7};
  const std::vector<Hypothesis> hyps = diverse_beam_search(params, src, 1, 3, 1e9, 6);
  REQUIRE(hyps.size() == 3);
  std::set<int> first_tokens;
  for (const Hypothesis& h : hyps) {
    REQUIRE(!h.tokens.empty());
    first_tokens.insert(h.tokens[0]);
  }
  CHECK(first_tokens.size() == 3);
  // Stored scores remain true model log-probabilities.
  for (const Hypothesis& h : hyps) {
    if (!h.finished) continue;
    const double recomputed = sequence_log_prob(params, src, h.tokens, 1).total;
    CHECK(std::abs(recomputed - h.log_prob) < 1e-10);
  }
}

TEST_CASE("max_len bounds content length; the final step closes hypotheses") {
  const ModelParams params = decode_model(Variant::kNone, 1, 10, 29);
  const std::vector<int> src = {4};
  const std::vector<Hypothesis> beam = beam_search(params, src, 1, 3, 2);
  for (const Hypothesis& h : beam) {
    CHECK(h.finished);
    CHECK(static_cast<int>(h.tokens.size()) <= 3);  // <= 2 content + EOS
  }
}

TEST_CASE("default max_len follows the source length") {
  CHECK(default_max_len(7) == 19);
  CHECK(default_max_len(1) == 7);
}

TEST_CASE("beam search validates its arguments") {
  const ModelParams params = decode_model(Variant::kNone, 1, 8, 3);
  const std::vector<int> src = {4};
  CHECK_THROWS_AS(beam_search(params, src, 1, 0, 3), UsageError);
  CHECK_THROWS_AS(diverse_beam_search(params, src, 1, 2, -1.0, 3), UsageError);
}
