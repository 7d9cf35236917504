#include "s2smix/beam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "s2smix/error.hpp"

namespace s2smix {

namespace {

// Candidate expansion during one beam step.
struct Expansion {
  int parent = 0;
  int token = 0;
  double log_prob = 0.0;    // true accumulated score
  double prune_score = 0.0; // log_prob minus any sibling penalty
};

struct LiveHyp {
  std::vector<int> tokens;
  double log_prob = 0.0;
  DecoderState state;
};

bool lex_less(const std::vector<int>& a_prefix, int a_tok, const std::vector<int>& b_prefix,
              int b_tok) {
  const size_t n = std::min(a_prefix.size(), b_prefix.size());
  for (size_t i = 0; i < n; ++i) {
    if (a_prefix[i] != b_prefix[i]) return a_prefix[i] < b_prefix[i];
  }
  if (a_prefix.size() != b_prefix.size()) {
    // Same score but different lengths can only arise for distinct prefixes;
    // compare the next token against the longer prefix.
    if (a_prefix.size() < b_prefix.size()) return a_tok < b_prefix[n];
    return a_prefix[n] < b_tok;
  }
  return a_tok < b_tok;
}

bool tokens_less(const std::vector<int>& a, const std::vector<int>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

double ranked_score(const Hypothesis& h, bool length_norm) {
  if (!length_norm || h.tokens.empty()) return h.log_prob;
  return h.log_prob / static_cast<double>(h.tokens.size());
}

bool hyp_order(const Hypothesis& a, const Hypothesis& b, bool length_norm) {
  const double sa = ranked_score(a, length_norm);
  const double sb = ranked_score(b, length_norm);
  if (sa != sb) return sa > sb;
  return tokens_less(a.tokens, b.tokens);
}

Hypothesis snapshot(Graph& g, const LiveHyp& h, int z, bool finished) {
  Hypothesis out;
  out.tokens = h.tokens;
  out.log_prob = h.log_prob;
  out.component = z;
  out.finished = finished;
  out.s1_h = g.value(h.state.s1_h);
  out.s1_c = g.value(h.state.s1_c);
  out.s2_h = g.value(h.state.s2_h);
  out.s2_c = g.value(h.state.s2_c);
  return out;
}

}  // namespace

int default_max_len(int src_len) { return 2 * src_len + 5; }

int select_final_component(const std::vector<double>& best_log_probs) {
  if (best_log_probs.empty()) throw NumericError("component selection over an empty list");
  int best = 0;
  for (int i = 1; i < static_cast<int>(best_log_probs.size()); ++i) {
    if (best_log_probs[static_cast<size_t>(i)] > best_log_probs[static_cast<size_t>(best)]) {
      best = i;
    }
  }
  return best + 1;
}

std::vector<Hypothesis> diverse_beam_search(const ModelParams& params, std::span<const int> src,
                                            int z, int beam, double gamma, int max_len,
                                            bool length_norm) {
  if (beam < 1) throw UsageError("beam size must be >= 1");
  if (gamma < 0.0) throw UsageError("diverse-beam penalty must be >= 0");
  if (max_len == 0) max_len = default_max_len(static_cast<int>(src.size()));
  if (max_len < 1) throw UsageError("max_len must be >= 1");

  Graph g;
  BoundModel m = bind_model(g, params);
  const EncoderOutput enc = encode(m, src, nullptr);
  const int vocab = params.config.vocab_size_tgt;

  std::vector<LiveHyp> live(1);
  live[0].state = initial_decoder_state(m);
  std::vector<Hypothesis> completed;

  for (int step = 1; step <= max_len + 1 && !live.empty(); ++step) {
    std::vector<Expansion> expansions;
    for (int p = 0; p < static_cast<int>(live.size()); ++p) {
      LiveHyp& hyp = live[static_cast<size_t>(p)];
      const int y_in = hyp.tokens.empty() ? kBosId : hyp.tokens.back();
      const StepResult sr = decoder_step(m, enc, hyp.state, y_in, z, nullptr);
      const Tensor lp = g.value(g.log_softmax(sr.logits));
      hyp.state = sr.state;

      std::vector<Expansion> siblings;
      const bool allow_eos = !hyp.tokens.empty();
      const bool content_allowed = step <= max_len;
      if (allow_eos) {
        siblings.push_back({p, kEosId, hyp.log_prob + lp.at(kEosId), 0.0});
      }
      if (content_allowed) {
        for (int tok = kNumReservedIds; tok < vocab; ++tok) {
          siblings.push_back({p, tok, hyp.log_prob + lp.at(tok), 0.0});
        }
      }
      // Sibling penalty: rank this parent's expansions by model score and
      // debit gamma * rank before global pruning.
      std::sort(siblings.begin(), siblings.end(), [](const Expansion& a, const Expansion& b) {
        if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
        return a.token < b.token;
      });
      for (size_t k = 0; k < siblings.size(); ++k) {
        siblings[k].prune_score = siblings[k].log_prob - gamma * static_cast<double>(k + 1);
      }
      expansions.insert(expansions.end(), siblings.begin(), siblings.end());
    }
    if (expansions.empty()) break;

    std::sort(expansions.begin(), expansions.end(), [&](const Expansion& a, const Expansion& b) {
      if (a.prune_score != b.prune_score) return a.prune_score > b.prune_score;
      return lex_less(live[static_cast<size_t>(a.parent)].tokens, a.token,
                      live[static_cast<size_t>(b.parent)].tokens, b.token);
    });
    if (static_cast<int>(expansions.size()) > beam) expansions.resize(static_cast<size_t>(beam));

    std::vector<LiveHyp> next;
    for (const Expansion& e : expansions) {
      const LiveHyp& parent = live[static_cast<size_t>(e.parent)];
      if (e.token == kEosId) {
        LiveHyp done = parent;
        done.tokens.push_back(kEosId);
        done.log_prob = e.log_prob;
        completed.push_back(snapshot(g, done, z, true));
      } else {
        LiveHyp child = parent;
        child.tokens.push_back(e.token);
        child.log_prob = e.log_prob;
        next.push_back(std::move(child));
      }
    }
    live = std::move(next);

    // Raw scores only shrink with length, so once the b-th completed score
    // beats every live hypothesis nothing can improve.
    if (!length_norm && static_cast<int>(completed.size()) >= beam && !live.empty()) {
      std::vector<double> scores;
      scores.reserve(completed.size());
      for (const Hypothesis& h : completed) scores.push_back(h.log_prob);
      std::nth_element(scores.begin(), scores.begin() + (beam - 1), scores.end(),
                       std::greater<>());
      const double kth = scores[static_cast<size_t>(beam - 1)];
      double best_live = -std::numeric_limits<double>::infinity();
      for (const LiveHyp& h : live) best_live = std::max(best_live, h.log_prob);
      if (best_live <= kth) break;
    }
  }

  std::sort(completed.begin(), completed.end(),
            [&](const Hypothesis& a, const Hypothesis& b) { return hyp_order(a, b, length_norm); });
  if (static_cast<int>(completed.size()) < beam && !live.empty()) {
    std::vector<Hypothesis> unfinished;
    unfinished.reserve(live.size());
    for (const LiveHyp& h : live) unfinished.push_back(snapshot(g, h, z, false));
    std::sort(unfinished.begin(), unfinished.end(),
              [&](const Hypothesis& a, const Hypothesis& b) { return hyp_order(a, b, length_norm); });
    for (Hypothesis& h : unfinished) {
      if (static_cast<int>(completed.size()) >= beam) break;
      completed.push_back(std::move(h));
    }
  }
  if (static_cast<int>(completed.size()) > beam) completed.resize(static_cast<size_t>(beam));
  return completed;
}

std::vector<Hypothesis> beam_search(const ModelParams& params, std::span<const int> src, int z,
                                    int beam, int max_len, bool length_norm) {
  return diverse_beam_search(params, src, z, beam, 0.0, max_len, length_norm);
}

Hypothesis greedy_decode(const ModelParams& params, std::span<const int> src, int z, int max_len) {
  const std::vector<Hypothesis> out = beam_search(params, src, z, 1, max_len, false);
  if (out.empty()) throw NumericError("greedy decode produced no hypothesis");
  return out.front();
}

namespace {

struct BruteBest {
  bool set = false;
  std::vector<int> tokens;
  double log_prob = 0.0;
};

void brute_walk(BoundModel& m, const EncoderOutput& enc, const DecoderState& state, int y_in,
                int z, int depth, int max_len, std::vector<int>& prefix, double prefix_lp,
                BruteBest& best) {
  Graph& g = *m.g;
  const StepResult sr = decoder_step(m, enc, state, y_in, z, nullptr);
  const Tensor lp = g.value(g.log_softmax(sr.logits));
  const int vocab = m.config().vocab_size_tgt;

  if (depth >= 1) {
    const double total = prefix_lp + lp.at(kEosId);
    std::vector<int> tokens = prefix;
    tokens.push_back(kEosId);
    if (!best.set || total > best.log_prob ||
        (total == best.log_prob && tokens_less(tokens, best.tokens))) {
      best.set = true;
      best.tokens = std::move(tokens);
      best.log_prob = total;
    }
  }
  if (depth >= max_len) return;
  for (int tok = kNumReservedIds; tok < vocab; ++tok) {
    prefix.push_back(tok);
    brute_walk(m, enc, sr.state, tok, z, depth + 1, max_len, prefix, prefix_lp + lp.at(tok), best);
    prefix.pop_back();
  }
}

}  // namespace

Hypothesis brute_force_decode(const ModelParams& params, std::span<const int> src, int z,
                              int max_len) {
  if (max_len < 1) throw UsageError("max_len must be >= 1");
  const int branching = params.config.vocab_size_tgt - kNumReservedIds;
  if (branching < 1) throw DataError("brute force decode: vocabulary has no content tokens");
  double space = 1.0;
  for (int i = 0; i < max_len; ++i) {
    space *= branching;
    if (space > 1e6) {
      throw UsageError("brute force search space " + std::to_string(branching) + "^" +
                       std::to_string(max_len) + " exceeds the 10^6 guard");
    }
  }

  Graph g;
  BoundModel m = bind_model(g, params);
  const EncoderOutput enc = encode(m, src, nullptr);
  BruteBest best;
  std::vector<int> prefix;
  brute_walk(m, enc, initial_decoder_state(m), kBosId, z, 0, max_len, prefix, 0.0, best);
  if (!best.set) throw NumericError("brute force decode found no terminated sequence");

  Hypothesis out;
  out.tokens = best.tokens;
  out.log_prob = best.log_prob;
  out.component = z;
  out.finished = true;
  return out;
}

DecodeResult mixture_decode(const ModelParams& params, std::span<const int> src,
                            int beam_per_component, int max_len, double gamma, bool length_norm) {
  const int k = params.config.effective_components();
  DecodeResult result;
  result.per_component.reserve(static_cast<size_t>(k));
  std::vector<double> best_scores;
  best_scores.reserve(static_cast<size_t>(k));
  for (int z = 1; z <= k; ++z) {
    std::vector<Hypothesis> list =
        diverse_beam_search(params, src, z, beam_per_component, gamma, max_len, length_norm);
    if (list.empty()) throw NumericError("beam search returned no hypotheses for component " +
                                         std::to_string(z));
    best_scores.push_back(ranked_score(list.front(), length_norm));
    result.per_component.push_back(std::move(list));
  }
  result.final_component = select_final_component(best_scores);
  result.final = result.per_component[static_cast<size_t>(result.final_component - 1)].front();
  return result;
}

}  // namespace s2smix
