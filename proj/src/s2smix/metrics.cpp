#include "s2smix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "s2smix/error.hpp"

namespace s2smix {

namespace {

// N-grams as joined strings; tokens are whitespace-free by construction.
std::map<std::string, long long> ngram_counts(const TokenSeq& tokens, int n) {
  std::map<std::string, long long> counts;
  if (static_cast<int>(tokens.size()) < n) return counts;
  for (size_t i = 0; i + n <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int j = 1; j < n; ++j) {
      key += '\x1f';
      key += tokens[i + static_cast<size_t>(j)];
    }
    ++counts[key];
  }
  return counts;
}

std::set<std::string> ngram_set(const TokenSeq& tokens, int n) {
  std::set<std::string> out;
  for (const auto& [key, cnt] : ngram_counts(tokens, n)) out.insert(key);
  return out;
}

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (int i = 0; i < kMaxOrder; ++i) {
    clipped[i] += other.clipped[i];
    total[i] += other.total[i];
  }
  cand_len += other.cand_len;
  ref_len += other.ref_len;
  return *this;
}

BleuStats bleu_stats(const TokenSeq& candidate, const std::vector<TokenSeq>& references,
                     int max_n) {
  if (references.empty()) throw DataError("bleu: no references given");
  if (max_n < 1 || max_n > BleuStats::kMaxOrder) throw UsageError("bleu: max_n must be in 1..4");

  BleuStats stats;
  stats.cand_len = static_cast<long long>(candidate.size());

  // Effective reference length: closest to the candidate, ties to shorter.
  long long best_ref = static_cast<long long>(references[0].size());
  for (const TokenSeq& ref : references) {
    const long long len = static_cast<long long>(ref.size());
    const long long d_new = std::llabs(len - stats.cand_len);
    const long long d_old = std::llabs(best_ref - stats.cand_len);
    if (d_new < d_old || (d_new == d_old && len < best_ref)) best_ref = len;
  }
  stats.ref_len = best_ref;

  for (int n = 1; n <= max_n; ++n) {
    const auto cand_counts = ngram_counts(candidate, n);
    std::map<std::string, long long> max_ref_counts;
    for (const TokenSeq& ref : references) {
      for (const auto& [key, cnt] : ngram_counts(ref, n)) {
        max_ref_counts[key] = std::max(max_ref_counts[key], cnt);
      }
    }
    for (const auto& [key, cnt] : cand_counts) {
      stats.total[n - 1] += cnt;
      auto it = max_ref_counts.find(key);
      if (it != max_ref_counts.end()) stats.clipped[n - 1] += std::min(cnt, it->second);
    }
  }
  return stats;
}

namespace {

double bleu_from_stats(const BleuStats& stats, int max_n, bool smooth) {
  if (stats.cand_len == 0) return 0.0;
  double log_precision_sum = 0.0;
  int orders = 0;
  for (int n = 1; n <= max_n; ++n) {
    double num = static_cast<double>(stats.clipped[n - 1]);
    double den = static_cast<double>(stats.total[n - 1]);
    if (smooth && n >= 2) {
      num += 1.0;
      den += 1.0;
    }
    if (den == 0.0) continue;  // order absent from the whole corpus
    if (num == 0.0) return 0.0;
    log_precision_sum += std::log(num / den);
    ++orders;
  }
  if (orders == 0) return 0.0;
  const double bp =
      stats.cand_len >= stats.ref_len
          ? 1.0
          : std::exp(1.0 - static_cast<double>(stats.ref_len) / static_cast<double>(stats.cand_len));
  return 100.0 * bp * std::exp(log_precision_sum / orders);
}

}  // namespace

double sentence_bleu(const TokenSeq& candidate, const std::vector<TokenSeq>& references,
                     int max_n) {
  if (candidate.empty()) return 0.0;
  return bleu_from_stats(bleu_stats(candidate, references, max_n), max_n, true);
}

double corpus_bleu(const std::vector<TokenSeq>& candidates,
                   const std::vector<std::vector<TokenSeq>>& references, int max_n) {
  if (candidates.size() != references.size()) {
    throw DataError("corpus_bleu: candidate/reference count mismatch");
  }
  BleuStats agg;
  for (size_t i = 0; i < candidates.size(); ++i) {
    agg += bleu_stats(candidates[i], references[i], max_n);
  }
  return bleu_from_stats(agg, max_n, false);
}

double div_bleu(const std::vector<TokenSeq>& candidates, bool symmetrize) {
  const int m = static_cast<int>(candidates.size());
  if (m < 2) throw DataError("div_bleu requires at least two candidates");
  double sum = 0.0;
  int pairs = 0;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      double b = sentence_bleu(candidates[static_cast<size_t>(i)],
                               {candidates[static_cast<size_t>(j)]});
      if (symmetrize) {
        b = 0.5 * (b + sentence_bleu(candidates[static_cast<size_t>(j)],
                                     {candidates[static_cast<size_t>(i)]}));
      }
      sum += b;
      ++pairs;
    }
  }
  return 100.0 - sum / pairs;
}

double div_ngram(const std::vector<TokenSeq>& candidates, int n) {
  if (static_cast<int>(candidates.size()) < 2) {
    throw DataError("div_ngram requires at least two candidates");
  }
  if (n < 1) throw UsageError("div_ngram: n must be >= 1");
  std::set<std::string> inter = ngram_set(candidates[0], n);
  std::set<std::string> uni = inter;
  for (size_t i = 1; i < candidates.size(); ++i) {
    const std::set<std::string> s = ngram_set(candidates[i], n);
    std::set<std::string> new_inter;
    std::set_intersection(inter.begin(), inter.end(), s.begin(), s.end(),
                          std::inserter(new_inter, new_inter.begin()));
    inter = std::move(new_inter);
    uni.insert(s.begin(), s.end());
  }
  if (uni.empty()) return 0.0;  // no n-grams at all; defined as no diversity
  return 1.0 - static_cast<double>(inter.size()) / static_cast<double>(uni.size());
}

std::vector<double> avg_posterior(const ModelParams& params, const std::vector<IdPair>& data) {
  if (data.empty()) throw DataError("avg_posterior: empty corpus");
  const int k = params.config.effective_components();
  std::vector<double> mean(static_cast<size_t>(k), 0.0);
  for (const IdPair& pair : data) {
    const std::vector<double> post = posterior(params, pair, 0.0);
    for (int z = 0; z < k; ++z) mean[static_cast<size_t>(z)] += post[static_cast<size_t>(z)];
  }
  for (double& v : mean) v /= static_cast<double>(data.size());
  return mean;
}

MetricReport evaluate(const std::vector<DecodedSentence>& decode,
                      const std::vector<std::vector<TokenSeq>>& references) {
  if (decode.size() != references.size()) {
    throw DataError("evaluate: decode covers " + std::to_string(decode.size()) +
                    " sentences but references cover " + std::to_string(references.size()));
  }
  MetricReport report;
  std::vector<TokenSeq> selections;
  selections.reserve(decode.size());

  double sum_db = 0.0, sum_d1 = 0.0, sum_d2 = 0.0;
  int diversity_sentences = 0;
  for (size_t i = 0; i < decode.size(); ++i) {
    const DecodedSentence& d = decode[i];
    if (d.selection.empty()) {
      throw DataError("evaluate: sentence " + std::to_string(i) + " has no selected candidate");
    }
    selections.push_back(d.selection);

    SentenceMetrics sm;
    sm.sentence = static_cast<int>(i);
    sm.bleu = sentence_bleu(d.selection, references[i]);
    if (d.candidates.size() >= 2) {
      sm.div_bleu = div_bleu(d.candidates);
      sm.div_unigram = div_ngram(d.candidates, 1);
      sm.div_bigram = div_ngram(d.candidates, 2);
      sum_db += *sm.div_bleu;
      sum_d1 += *sm.div_unigram;
      sum_d2 += *sm.div_bigram;
      ++diversity_sentences;
    }
    report.per_sentence.push_back(std::move(sm));
  }

  report.corpus_bleu = corpus_bleu(selections, references);
  if (diversity_sentences > 0) {
    report.avg_div_bleu = sum_db / diversity_sentences;
    report.avg_div_unigram = sum_d1 / diversity_sentences;
    report.avg_div_bigram = sum_d2 / diversity_sentences;
  }
  return report;
}

}  // namespace s2smix
