#pragma once

#include <optional>
#include <string>
#include <vector>

#include "s2smix/loss.hpp"

namespace s2smix {

using TokenSeq = std::vector<std::string>;

// Modified n-gram precision counts plus lengths for one candidate against
// one or more references; addable across sentences for corpus BLEU.
struct BleuStats {
  static constexpr int kMaxOrder = 4;
  long long clipped[kMaxOrder] = {0, 0, 0, 0};
  long long total[kMaxOrder] = {0, 0, 0, 0};
  long long cand_len = 0;
  long long ref_len = 0;  // effective (closest) reference length

  BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(const TokenSeq& candidate, const std::vector<TokenSeq>& references,
                     int max_n = 4);

// Sentence BLEU in [0, 100] with add-one smoothing on the n >= 2 precisions
// (short candidates would otherwise zero out the geometric mean).
double sentence_bleu(const TokenSeq& candidate, const std::vector<TokenSeq>& references,
                     int max_n = 4);

// Corpus BLEU over aggregated counts, no smoothing. Orders with no candidate
// n-grams anywhere in the corpus are excluded from the geometric mean.
double corpus_bleu(const std::vector<TokenSeq>& candidates,
                   const std::vector<std::vector<TokenSeq>>& references, int max_n = 4);

// 100 minus the mean pairwise sentence BLEU over the M(M-1)/2 unordered
// pairs, evaluated as (i = candidate, j = reference); the symmetrize flag
// averages both directions per pair instead.
double div_bleu(const std::vector<TokenSeq>& candidates, bool symmetrize = false);

// 1 - |intersection| / |union| of the candidates' unique n-gram sets.
// An empty union is defined as 0 (with a warning at the call sites that own
// user-facing output).
double div_ngram(const std::vector<TokenSeq>& candidates, int n);

// Mean posterior over a corpus (eps = 0); the clustering diagnostic.
std::vector<double> avg_posterior(const ModelParams& params, const std::vector<IdPair>& data);

struct SentenceMetrics {
  int sentence = 0;
  double bleu = 0.0;  // smoothed sentence BLEU of the selected candidate
  std::optional<double> div_bleu;
  std::optional<double> div_unigram;
  std::optional<double> div_bigram;
};

struct MetricReport {
  double corpus_bleu = 0.0;
  std::optional<double> avg_div_bleu;
  std::optional<double> avg_div_unigram;
  std::optional<double> avg_div_bigram;
  std::vector<SentenceMetrics> per_sentence;
};

// One decoded sentence: all K x b candidates plus the selected one.
struct DecodedSentence {
  std::vector<TokenSeq> candidates;
  TokenSeq selection;
};

// Corpus BLEU of the selections against the references plus diversity
// metrics averaged over sentences (absent when every sentence has a single
// candidate). references[i] must cover decode[i].
MetricReport evaluate(const std::vector<DecodedSentence>& decode,
                      const std::vector<std::vector<TokenSeq>>& references);

}  // namespace s2smix
