#include "s2smix/datagen.hpp"

#include <algorithm>

#include "s2smix/error.hpp"
#include "s2smix/rng.hpp"

namespace s2smix {

namespace {

constexpr int kAlphabet = 20;
constexpr int kMaxStyles = 12;
constexpr int kMinLen = 3;
constexpr int kMaxLen = 12;
// Fraction of dev/test pairs whose source is reused from train with a
// different style, so diversity is measurable on held-out data.
constexpr double kReuseFraction = 0.6;

std::string two_digits(int i) {
  std::string s = std::to_string(i);
  return s.size() < 2 ? "0" + s : s;
}

std::string synonym(int token_index, int style) {
  return "t" + two_digits(token_index) + "x" + std::to_string(style);
}

std::string marker(int style) { return "f" + std::to_string(style); }

int source_index(const std::string& token) {
  return std::stoi(token.substr(1));
}

std::vector<std::string> random_source(Rng& rng) {
  const int len = kMinLen + uniform_int(rng, kMaxLen - kMinLen + 1);
  std::vector<std::string> out;
  out.reserve(static_cast<size_t>(len));
  for (int i = 0; i < len; ++i) out.push_back(source_token(uniform_int(rng, kAlphabet)));
  return out;
}

}  // namespace

int max_supported_styles() { return kMaxStyles; }

int source_alphabet_size() { return kAlphabet; }

std::string source_token(int index) { return "s" + two_digits(index); }

std::vector<std::string> style_transduce(const std::vector<std::string>& source, int style) {
  if (style < 1 || style > kMaxStyles) {
    throw DataError("style " + std::to_string(style) + " outside supported range");
  }
  std::vector<std::string> target;
  target.reserve(source.size() + 1);
  for (const std::string& tok : source) target.push_back(synonym(source_index(tok), style));
  const int slot = (style - 1) % (static_cast<int>(source.size()) + 1);
  target.insert(target.begin() + slot, marker(style));
  return target;
}

CorpusBundle gen_ambiguous_corpus(const GenSpec& spec) {
  if (spec.styles < 1) throw DataError("style count must be >= 1");
  if (spec.styles > kMaxStyles) {
    throw DataError("style count " + std::to_string(spec.styles) +
                    " exceeds the synonym-table capacity of " + std::to_string(kMaxStyles));
  }
  if (spec.n_train < 1 || spec.n_dev < 1 || spec.n_test < 1) {
    throw DataError("corpus split sizes must be >= 1");
  }

  Rng rng(spec.seed);
  CorpusBundle bundle;

  auto make_pair = [&](std::vector<std::string> source, int style) {
    SentencePair p;
    p.target = style_transduce(source, style);
    p.source = std::move(source);
    p.style = style;
    return p;
  };

  for (int i = 0; i < spec.n_train; ++i) {
    bundle.train.pairs.push_back(make_pair(random_source(rng), 1 + uniform_int(rng, spec.styles)));
  }

  auto make_heldout = [&](int n, Corpus& corpus) {
    for (int i = 0; i < n; ++i) {
      if (spec.styles >= 2 && uniform01(rng) < kReuseFraction) {
        const SentencePair& seen =
            bundle.train.pairs[static_cast<size_t>(uniform_int(rng, spec.n_train))];
        int style = 1 + uniform_int(rng, spec.styles - 1);
        if (style >= seen.style) ++style;  // uniform over styles != seen.style
        corpus.pairs.push_back(make_pair(seen.source, style));
      } else {
        corpus.pairs.push_back(make_pair(random_source(rng), 1 + uniform_int(rng, spec.styles)));
      }
    }
  };
  make_heldout(spec.n_dev, bundle.dev);
  make_heldout(spec.n_test, bundle.test);

  // One shared vocabulary pair over all splits.
  Corpus all;
  for (const Corpus* c : {&bundle.train, &bundle.dev, &bundle.test}) {
    all.pairs.insert(all.pairs.end(), c->pairs.begin(), c->pairs.end());
  }
  build_vocab(all);

  CorpusMeta meta;
  meta.task = spec.task;
  meta.seed = spec.seed;
  meta.styles = spec.styles;
  for (Corpus* c : {&bundle.train, &bundle.dev, &bundle.test}) {
    c->src_vocab = all.src_vocab;
    c->tgt_vocab = all.tgt_vocab;
    c->meta = meta;
  }

  bundle.test_references.reserve(bundle.test.pairs.size());
  for (const SentencePair& p : bundle.test.pairs) {
    ReferenceSet r;
    r.source = p.source;
    for (int s = 1; s <= spec.styles; ++s) r.references.push_back(style_transduce(p.source, s));
    bundle.test_references.push_back(std::move(r));
  }
  return bundle;
}

}  // namespace s2smix
