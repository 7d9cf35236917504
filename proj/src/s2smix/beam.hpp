#pragma once

#include <span>
#include <vector>

#include "s2smix/model.hpp"

namespace s2smix {

// Decoding conventions:
//  - Emissions range over the non-reserved target ids plus EOS; PAD, BOS and
//    UNK are never emitted. EOS is admitted from the second step on, so the
//    empty translation is not a candidate.
//  - max_len bounds the number of content tokens; a hypothesis that has not
//    emitted EOS after max_len content tokens is returned unfinished.
//  - Scores are raw summed log-probabilities (no length normalization unless
//    the optional flag is set). Ties are broken by lexicographic token order.

struct Hypothesis {
  std::vector<int> tokens;  // emitted ids; contains the final EOS iff finished
  double log_prob = 0.0;
  int component = 1;
  bool finished = false;
  // Decoder state snapshot (values), for continuing an unfinished decode.
  Tensor s1_h, s1_c, s2_h, s2_c;
};

int default_max_len(int src_len);  // 2 * src_len + 5

// Length-synchronous beam search for component z (1-based) with an optional
// diverse-decoding sibling penalty: at every step the expansions of one
// parent are ranked by model score and the k-th ranked sibling is debited
// gamma * k before global pruning. gamma = 0 is plain beam search. Stored
// hypothesis scores are always true model log-probabilities.
std::vector<Hypothesis> diverse_beam_search(const ModelParams& params, std::span<const int> src,
                                            int z, int beam, double gamma, int max_len = 0,
                                            bool length_norm = false);

std::vector<Hypothesis> beam_search(const ModelParams& params, std::span<const int> src, int z,
                                    int beam, int max_len = 0, bool length_norm = false);

Hypothesis greedy_decode(const ModelParams& params, std::span<const int> src, int z,
                         int max_len = 0);

// Exhaustive argmax over all terminated sequences of 1..max_len content
// tokens; the correctness oracle for beam search. Guards the search space at
// branching^max_len <= 10^6.
Hypothesis brute_force_decode(const ModelParams& params, std::span<const int> src, int z,
                              int max_len);

struct DecodeResult {
  std::vector<std::vector<Hypothesis>> per_component;  // K lists of b each
  int final_component = 1;
  Hypothesis final;
};

// Separate beam search per mixture component; the final output is the
// component-own best candidate with the highest log-probability (ties broken
// by lowest component id).
DecodeResult mixture_decode(const ModelParams& params, std::span<const int> src,
                            int beam_per_component, int max_len = 0, double gamma = 0.0,
                            bool length_norm = false);

// Eq. 14 selection over per-component best scores; exposed for tests.
int select_final_component(const std::vector<double>& best_log_probs);

}  // namespace s2smix
