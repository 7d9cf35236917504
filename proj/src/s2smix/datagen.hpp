#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s2smix/corpus.hpp"

namespace s2smix {

// Synthetic ambiguous-translation task. Sources are random sequences over a
// 20-token base alphabet (length 3..12). Each pair draws a hidden style
// s in {1..S}; the target is the deterministic style-s transduction of the
// source: every source token is replaced by its style-s synonym and the
// style's marker function word is inserted at a style-dependent slot. Any
// source therefore admits exactly S distinct valid targets, and every target
// identifies its style.
struct GenSpec {
  std::string task = "ambig-v1";
  uint64_t seed = 1;
  int n_train = 5000;
  int n_dev = 400;
  int n_test = 400;
  int styles = 4;
};

struct CorpusBundle {
  Corpus train;
  Corpus dev;
  Corpus test;
  // All S valid references for each test source, in test-pair order.
  std::vector<ReferenceSet> test_references;
};

// Maximum style count the synonym/marker inventory supports.
int max_supported_styles();

// Applies the style transducer (style is 1-based).
std::vector<std::string> style_transduce(const std::vector<std::string>& source, int style);

CorpusBundle gen_ambiguous_corpus(const GenSpec& spec);

int source_alphabet_size();
std::string source_token(int index);

}  // namespace s2smix
