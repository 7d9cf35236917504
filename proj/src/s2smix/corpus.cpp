#include "s2smix/corpus.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "s2smix/error.hpp"

namespace s2smix {

namespace fs = std::filesystem;

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) tokens.push_back(tok);
  return tokens;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

int length_filter(Corpus& corpus, int max_len) {
  const size_t before = corpus.pairs.size();
  std::erase_if(corpus.pairs, [max_len](const SentencePair& p) {
    return static_cast<int>(p.source.size()) > max_len ||
           static_cast<int>(p.target.size()) > max_len;
  });
  if (corpus.pairs.empty()) {
    throw DataError("length_filter removed every pair (max_len = " + std::to_string(max_len) + ")");
  }
  return static_cast<int>(before - corpus.pairs.size());
}

namespace {

Vocabulary vocab_from_counts(const std::map<std::string, int64_t>& counts) {
  std::vector<std::pair<std::string, int64_t>> items(counts.begin(), counts.end());
  std::sort(items.begin(), items.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocabulary v;
  for (const auto& [tok, cnt] : items) v.add(tok);
  return v;
}

std::string normalize_eol(std::string line) {
  // CRLF input normalized to LF by dropping the trailing CR.
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

void build_vocab(Corpus& corpus) {
  std::map<std::string, int64_t> src_counts, tgt_counts;
  for (const SentencePair& p : corpus.pairs) {
    for (const std::string& t : p.source) ++src_counts[t];
    for (const std::string& t : p.target) ++tgt_counts[t];
  }
  corpus.src_vocab = vocab_from_counts(src_counts);
  corpus.tgt_vocab = vocab_from_counts(tgt_counts);
}

namespace {

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (const std::string& l : lines) out << l << '\n';
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(normalize_eol(line));
  return lines;
}

void write_vocab_file(const Vocabulary& v, const std::string& path) {
  write_lines(path, v.regular_tokens());
}

Vocabulary read_vocab_file(const std::string& path) {
  Vocabulary v;
  for (const std::string& line : read_lines(path)) {
    if (line.empty()) continue;
    v.add(line);
  }
  return v;
}

}  // namespace

void save_corpus(const Corpus& corpus, const std::string& dir, const std::string& split) {
  fs::create_directories(dir);
  {
    std::ofstream out(fs::path(dir) / (split + ".txt"), std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + dir + "/" + split + ".txt");
    for (const SentencePair& p : corpus.pairs) {
      out << join_tokens(p.source) << '\t' << join_tokens(p.target) << '\n';
    }
  }
  {
    std::ofstream out(fs::path(dir) / (split + ".styles.txt"), std::ios::binary);
    for (const SentencePair& p : corpus.pairs) out << p.style << '\n';
  }
  write_vocab_file(corpus.src_vocab, (fs::path(dir) / "vocab.src.txt").string());
  write_vocab_file(corpus.tgt_vocab, (fs::path(dir) / "vocab.tgt.txt").string());
  {
    std::ofstream out(fs::path(dir) / "header.txt", std::ios::binary);
    out << "format_version = " << corpus.meta.format_version << '\n'
        << "task = " << corpus.meta.task << '\n'
        << "seed = " << corpus.meta.seed << '\n'
        << "styles = " << corpus.meta.styles << '\n';
  }
}

std::vector<SentencePair> read_pair_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  std::vector<SentencePair> pairs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = normalize_eol(line);
    if (line.empty()) continue;
    const size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path + ":" + std::to_string(line_no) + ": missing tab separator");
    }
    SentencePair p;
    p.source = tokenize(line.substr(0, tab));
    p.target = tokenize(line.substr(tab + 1));
    if (p.source.empty() || p.target.empty()) {
      throw DataError(path + ":" + std::to_string(line_no) + ": empty source or target side");
    }
    pairs.push_back(std::move(p));
  }
  if (pairs.empty()) throw DataError(path + ": no sentence pairs found");
  return pairs;
}

Corpus load_corpus(const std::string& dir, const std::string& split) {
  Corpus c;
  c.pairs = read_pair_file((fs::path(dir) / (split + ".txt")).string());
  const std::string styles_path = (fs::path(dir) / (split + ".styles.txt")).string();
  if (fs::exists(styles_path)) {
    const std::vector<std::string> lines = read_lines(styles_path);
    size_t k = 0;
    for (const std::string& l : lines) {
      if (l.empty()) continue;
      if (k >= c.pairs.size()) throw DataError(styles_path + ": more styles than pairs");
      c.pairs[k++].style = std::stoi(l);
    }
    if (k != c.pairs.size()) throw DataError(styles_path + ": style count does not match pair count");
  }
  c.src_vocab = read_vocab_file((fs::path(dir) / "vocab.src.txt").string());
  c.tgt_vocab = read_vocab_file((fs::path(dir) / "vocab.tgt.txt").string());
  for (const std::string& line : read_lines((fs::path(dir) / "header.txt").string())) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    std::string key = line.substr(0, eq);
    std::string val = line.substr(eq + 1);
    auto trim = [](std::string s) {
      const size_t b = s.find_first_not_of(" \t");
      const size_t e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    key = trim(key);
    val = trim(val);
    if (key == "format_version") c.meta.format_version = std::stoi(val);
    else if (key == "task") c.meta.task = val;
    else if (key == "seed") c.meta.seed = std::stoull(val);
    else if (key == "styles") c.meta.styles = std::stoi(val);
  }
  return c;
}

void save_references(const std::vector<ReferenceSet>& refs, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  for (const ReferenceSet& r : refs) {
    out << join_tokens(r.source);
    for (const auto& ref : r.references) out << '\t' << join_tokens(ref);
    out << '\n';
  }
}

std::vector<ReferenceSet> load_references(const std::string& path) {
  std::vector<ReferenceSet> out;
  int line_no = 0;
  for (const std::string& raw : read_lines(path)) {
    ++line_no;
    if (raw.empty()) continue;
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      const size_t tab = raw.find('\t', start);
      fields.push_back(raw.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() < 2) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected source and at least one reference");
    }
    ReferenceSet r;
    r.source = tokenize(fields[0]);
    for (size_t i = 1; i < fields.size(); ++i) r.references.push_back(tokenize(fields[i]));
    out.push_back(std::move(r));
  }
  if (out.empty()) throw DataError(path + ": no reference records found");
  return out;
}

}  // namespace s2smix
