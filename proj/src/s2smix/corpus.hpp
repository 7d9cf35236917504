#pragma once

#include <optional>
#include <string>
#include <vector>

#include "s2smix/vocab.hpp"

namespace s2smix {

struct SentencePair {
  std::vector<std::string> source;
  std::vector<std::string> target;
  // Latent style that generated the pair (synthetic data only). Ground truth
  // for clustering diagnostics, never visible to the model.
  int style = 0;
};

struct CorpusMeta {
  int format_version = 1;
  std::string task;
  uint64_t seed = 0;
  int styles = 1;
};

struct Corpus {
  std::vector<SentencePair> pairs;
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
  CorpusMeta meta;

  size_t size() const { return pairs.size(); }
};

// Splits text on runs of whitespace.
std::vector<std::string> tokenize(const std::string& line);
std::string join_tokens(const std::vector<std::string>& tokens);

// Removes pairs where either side exceeds max_len tokens. Returns the number
// of removed pairs; an empty result is a data error.
int length_filter(Corpus& corpus, int max_len = 50);

// Frequency-sorted vocabulary assignment after the reserved ids; ties broken
// by token string. Builds both side vocabularies from the corpus pairs.
void build_vocab(Corpus& corpus);

// Line-oriented corpus files: one pair per line, source and target separated
// by a single tab, tokens space-separated. Styles sit in a sidecar
// "<split>.styles.txt" (one integer per line), metadata in "header.txt" and
// vocabularies in "vocab.src.txt" / "vocab.tgt.txt" at the directory root.
void save_corpus(const Corpus& corpus, const std::string& dir, const std::string& split);
Corpus load_corpus(const std::string& dir, const std::string& split);

// Raw pair file reader (no vocab/sidecar); used by tests and tooling.
std::vector<SentencePair> read_pair_file(const std::string& path);

// Multi-reference file: source TAB ref1 [TAB ref2 ...] per line.
struct ReferenceSet {
  std::vector<std::string> source;                 // tokens
  std::vector<std::vector<std::string>> references;  // token lists
};
void save_references(const std::vector<ReferenceSet>& refs, const std::string& path);
std::vector<ReferenceSet> load_references(const std::string& path);

}  // namespace s2smix
