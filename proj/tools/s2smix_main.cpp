// Command-line entry points for the S2SMIX lab: corpus generation, training,
// decoding, evaluation, posterior inspection, score re-verification and plot
// emission. One command per process; everything is deterministic given the
// config and seeds. Exit codes: 0 success, 1 usage, 2 data error, 3 numeric
// failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "s2smix/beam.hpp"
#include "s2smix/checkpoint.hpp"
#include "s2smix/config.hpp"
#include "s2smix/datagen.hpp"
#include "s2smix/metrics.hpp"
#include "s2smix/svgplot.hpp"

namespace fs = std::filesystem;
using namespace s2smix;

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::vector<std::string> read_source_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw DataError(path + ": no input sentences");
  return lines;
}

// ---------------------------------------------------------------- gen

void cmd_gen(const std::string& config_path, const std::string& out_dir, bool force) {
  const ExperimentConfig cfg = load_config_file(config_path);
  if (fs::exists(out_dir) && !fs::is_empty(out_dir) && !force) {
    throw UsageError("output directory '" + out_dir + "' exists; pass --force to overwrite");
  }
  GenSpec spec;
  spec.task = cfg.data.task;
  spec.seed = cfg.data.seed;
  spec.n_train = cfg.data.n_train;
  spec.n_dev = cfg.data.n_dev;
  spec.n_test = cfg.data.n_test;
  spec.styles = cfg.data.styles;
  CorpusBundle bundle = gen_ambiguous_corpus(spec);
  int removed = 0;
  removed += length_filter(bundle.train, cfg.data.max_len_filter);
  removed += length_filter(bundle.dev, cfg.data.max_len_filter);
  removed += length_filter(bundle.test, cfg.data.max_len_filter);

  fs::create_directories(out_dir);
  save_corpus(bundle.train, out_dir, "train");
  save_corpus(bundle.dev, out_dir, "dev");
  save_corpus(bundle.test, out_dir, "test");
  save_references(bundle.test_references, (fs::path(out_dir) / "test.refs.txt").string());
  write_config_file(cfg, (fs::path(out_dir) / "config.echo.txt").string());
  std::cout << "generated " << bundle.train.size() << " train / " << bundle.dev.size()
            << " dev / " << bundle.test.size() << " test pairs (styles = " << spec.styles
            << ", length filter removed " << removed << ")\n"
            << "source vocab " << bundle.train.src_vocab.size() << ", target vocab "
            << bundle.train.tgt_vocab.size() << "\n";
}

// ---------------------------------------------------------------- train

class FileLogSink : public TrainLogSink {
 public:
  explicit FileLogSink(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot open for writing: " + path);
    out_ << "type\tepoch\tstep\tmode\tloss\tdev_ppl\tms_per_batch\n";
  }
  void step_line(int epoch, long long step, const std::string& mode, double loss,
                 double ms) override {
    out_ << "step\t" << epoch << '\t' << step << '\t' << mode << '\t' << fmt(loss) << "\t\t"
         << fmt(ms) << '\n';
  }
  void epoch_line(const EpochStats& s) override {
    out_ << "epoch\t" << s.epoch << "\t\t\t" << fmt(s.train_loss) << '\t' << fmt(s.dev_ppl)
         << '\t' << fmt(s.ms_per_batch) << '\n';
    out_.flush();
  }

 private:
  std::ofstream out_;
};

Checkpoint make_checkpoint(const TrainConfig& tc, const TrainingState& state,
                           const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                           double dev_ppl) {
  Checkpoint ckpt;
  ckpt.train_config = tc;
  ckpt.state = state;
  ckpt.src_vocab = src_vocab;
  ckpt.tgt_vocab = tgt_vocab;
  ckpt.dev_ppl = dev_ppl;
  return ckpt;
}

void cmd_train(const std::string& config_path, const std::string& data_dir,
               const std::string& out_dir, const std::string& resume_path, int save_every,
               long long stop_after_steps) {
  const Corpus train_corpus = load_corpus(data_dir, "train");
  const Corpus dev_corpus = load_corpus(data_dir, "dev");
  const std::vector<IdPair> train_data = encode_corpus(train_corpus);
  const std::vector<IdPair> dev_data = encode_corpus(dev_corpus);

  TrainConfig tc;
  std::unique_ptr<Trainer> trainer;
  if (!resume_path.empty()) {
    Checkpoint ckpt = load_checkpoint(resume_path);
    if (ckpt.model_config().vocab_size_src != train_corpus.src_vocab.size() ||
        ckpt.model_config().vocab_size_tgt != train_corpus.tgt_vocab.size()) {
      throw DataError("checkpoint vocabulary sizes do not match the data directory");
    }
    tc = ckpt.train_config;
    trainer = std::make_unique<Trainer>(std::move(ckpt.state), tc);
  } else {
    if (config_path.empty()) throw UsageError("train: --config is required unless resuming");
    const ExperimentConfig cfg = load_config_file(config_path);
    ModelConfig mc = cfg.model;
    mc.vocab_size_src = train_corpus.src_vocab.size();
    mc.vocab_size_tgt = train_corpus.tgt_vocab.size();
    mc.validate();
    tc = cfg.train;
    trainer = std::make_unique<Trainer>(mc, tc);
    fs::create_directories(out_dir);
    write_config_file(cfg, (fs::path(out_dir) / "config.echo.txt").string());
  }
  fs::create_directories(out_dir);

  const std::string last_path = (fs::path(out_dir) / "last.ckpt").string();
  FileLogSink sink((fs::path(out_dir) / "train.log.tsv").string());
  auto on_step = [&](const TrainingState& st) {
    if (save_every > 0 && st.global_step % save_every == 0) {
      save_checkpoint(make_checkpoint(tc, st, train_corpus.src_vocab, train_corpus.tgt_vocab,
                                      st.best_dev_ppl),
                      last_path);
    }
  };

  TrainResult result = trainer->run(train_data, dev_data, &sink, on_step, stop_after_steps);

  save_checkpoint(make_checkpoint(tc, result.final_state, train_corpus.src_vocab,
                                  train_corpus.tgt_vocab, result.best_dev_ppl),
                  last_path);
  TrainingState best_state = result.final_state;
  best_state.params = result.best_params;
  save_checkpoint(make_checkpoint(tc, best_state, train_corpus.src_vocab, train_corpus.tgt_vocab,
                                  result.best_dev_ppl),
                  (fs::path(out_dir) / "best.ckpt").string());

  if (result.diverged) {
    throw NumericError("training diverged (" + result.divergence_message +
                       "); last good checkpoint written to " + out_dir);
  }
  std::cout << "trained " << result.epochs.size() << " epoch(s); best dev perplexity "
            << result.best_dev_ppl << " at epoch " << result.best_epoch << "\n"
            << "checkpoints: " << out_dir << "/best.ckpt, " << out_dir << "/last.ckpt\n";
}

// ---------------------------------------------------------------- decode

void write_decode_file(const std::string& path, const std::vector<DecodeResult>& results,
                       const Vocabulary& tgt_vocab, const std::string& decoder, int beam,
                       double gamma, bool length_norm) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << "# s2smix decode v1\n"
      << "# decoder = " << decoder << " beam = " << beam << " gamma = " << fmt(gamma)
      << " length_norm = " << (length_norm ? 1 : 0) << "\n"
      << "# columns: sentence component rank log_prob selected finished tokens\n";
  for (size_t s = 0; s < results.size(); ++s) {
    const DecodeResult& r = results[s];
    for (size_t z = 0; z < r.per_component.size(); ++z) {
      const auto& list = r.per_component[z];
      for (size_t rank = 0; rank < list.size(); ++rank) {
        const Hypothesis& h = list[rank];
        const bool selected = static_cast<int>(z) + 1 == r.final_component && rank == 0;
        std::vector<int> content = h.tokens;
        if (h.finished && !content.empty()) content.pop_back();  // drop <eos>
        out << s << '\t' << z + 1 << '\t' << rank + 1 << '\t' << fmt(h.log_prob) << '\t'
            << (selected ? 1 : 0) << '\t' << (h.finished ? 1 : 0) << '\t'
            << join_tokens(tgt_vocab.decode(content)) << '\n';
      }
    }
  }
}

void cmd_decode(const std::string& ckpt_path, const std::string& input_path,
                const std::string& out_path, int beam, double gamma, int max_len,
                const std::string& decoder, bool length_norm) {
  if (beam < 1) throw UsageError("beam size must be >= 1");
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const ModelParams& params = ckpt.state.params;
  const std::vector<std::string> lines = read_source_lines(input_path);

  int effective_beam = beam;
  if (decoder == "greedy") {
    if (beam != 1) {
      std::cerr << "warning: greedy decoding ignores --beam " << beam << "\n";
    }
    effective_beam = 1;
  }
  const double effective_gamma = decoder == "diverse" ? gamma : 0.0;

  std::vector<DecodeResult> results;
  results.reserve(lines.size());
  for (const std::string& line : lines) {
    const std::vector<int> src = ckpt.src_vocab.encode(tokenize(line));
    results.push_back(mixture_decode(params, src, effective_beam, max_len, effective_gamma,
                                     length_norm));
  }
  write_decode_file(out_path, results, ckpt.tgt_vocab, decoder, effective_beam, effective_gamma,
                    length_norm);
  std::cout << "decoded " << lines.size() << " sentence(s) with K = "
            << params.config.effective_components() << ", beam " << effective_beam
            << " per component -> " << out_path << "\n";
}

// ---------------------------------------------------------------- decode file parsing

struct DecodeRecord {
  int sentence = 0;
  int component = 1;
  int rank = 1;
  double log_prob = 0.0;
  bool selected = false;
  bool finished = false;
  std::vector<std::string> tokens;
};

std::vector<DecodeRecord> read_decode_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  std::vector<DecodeRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    size_t start = 0;
    while (true) {
      const size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (fields.size() != 7) {
      throw DataError(path + ":" + std::to_string(line_no) + ": expected 7 tab-separated fields");
    }
    DecodeRecord r;
    r.sentence = std::stoi(fields[0]);
    r.component = std::stoi(fields[1]);
    r.rank = std::stoi(fields[2]);
    r.log_prob = std::stod(fields[3]);
    r.selected = fields[4] == "1";
    r.finished = fields[5] == "1";
    r.tokens = tokenize(fields[6]);
    records.push_back(std::move(r));
  }
  if (records.empty()) throw DataError(path + ": no decode records");
  return records;
}

// ---------------------------------------------------------------- evaluate

void cmd_evaluate(const std::string& decode_path, const std::string& refs_path,
                  const std::string& out_prefix) {
  const std::vector<DecodeRecord> records = read_decode_file(decode_path);
  const std::vector<ReferenceSet> refs = load_references(refs_path);

  int max_sentence = -1;
  for (const DecodeRecord& r : records) max_sentence = std::max(max_sentence, r.sentence);
  if (max_sentence + 1 != static_cast<int>(refs.size())) {
    throw DataError("decode output covers " + std::to_string(max_sentence + 1) +
                    " sentences but references cover " + std::to_string(refs.size()));
  }

  std::vector<DecodedSentence> decode(refs.size());
  for (const DecodeRecord& r : records) {
    DecodedSentence& d = decode[static_cast<size_t>(r.sentence)];
    d.candidates.push_back(r.tokens);
    if (r.selected) d.selection = r.tokens;
  }
  for (size_t i = 0; i < decode.size(); ++i) {
    if (decode[i].candidates.empty()) {
      throw DataError("decode output is missing sentence " + std::to_string(i));
    }
  }

  std::vector<std::vector<TokenSeq>> reference_lists;
  reference_lists.reserve(refs.size());
  for (const ReferenceSet& r : refs) reference_lists.push_back(r.references);

  const MetricReport report = evaluate(decode, reference_lists);

  {
    std::ofstream out(out_prefix + ".report.txt", std::ios::binary);
    out << "metric            value\n"
        << "corpus_bleu       " << report.corpus_bleu << "\n";
    if (report.avg_div_bleu) out << "avg_div_bleu      " << *report.avg_div_bleu << "\n";
    if (report.avg_div_unigram) out << "avg_div_unigram   " << *report.avg_div_unigram << "\n";
    if (report.avg_div_bigram) out << "avg_div_bigram    " << *report.avg_div_bigram << "\n";
  }
  {
    std::ofstream out(out_prefix + ".report.csv", std::ios::binary);
    out << "metric,value\n";
    out << "corpus_bleu," << fmt(report.corpus_bleu) << "\n";
    if (report.avg_div_bleu) out << "avg_div_bleu," << fmt(*report.avg_div_bleu) << "\n";
    if (report.avg_div_unigram) out << "avg_div_unigram," << fmt(*report.avg_div_unigram) << "\n";
    if (report.avg_div_bigram) out << "avg_div_bigram," << fmt(*report.avg_div_bigram) << "\n";
  }
  {
    std::ofstream out(out_prefix + ".sentences.csv", std::ios::binary);
    out << "sentence,bleu,div_bleu,div_unigram,div_bigram\n";
    for (const SentenceMetrics& s : report.per_sentence) {
      out << s.sentence << ',' << fmt(s.bleu) << ',';
      if (s.div_bleu) out << fmt(*s.div_bleu);
      out << ',';
      if (s.div_unigram) out << fmt(*s.div_unigram);
      out << ',';
      if (s.div_bigram) out << fmt(*s.div_bigram);
      out << '\n';
    }
  }
  std::cout << "corpus BLEU " << report.corpus_bleu;
  if (report.avg_div_bleu) {
    std::cout << ", div_bleu " << *report.avg_div_bleu << ", div_unigram "
              << *report.avg_div_unigram << ", div_bigram " << *report.avg_div_bigram;
  }
  std::cout << "\nreports written to " << out_prefix << ".report.{txt,csv}\n";
}

// ---------------------------------------------------------------- inspect-posterior

void cmd_inspect_posterior(const std::string& ckpt_path, const std::string& data_dir,
                           const std::string& split, const std::string& out_prefix) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const ModelParams& params = ckpt.state.params;
  const int k = params.config.effective_components();
  if (k == 1) {
    std::cout << "model has a single component; posterior inspection is a no-op\n";
    return;
  }
  const Corpus corpus = load_corpus(data_dir, split);
  const std::vector<IdPair> data = encode_corpus(corpus);

  std::vector<double> mean(static_cast<size_t>(k), 0.0);
  std::ofstream pairs_csv(out_prefix + ".pairs.csv", std::ios::binary);
  pairs_csv << "pair,argmax_component,style";
  for (int z = 1; z <= k; ++z) pairs_csv << ",p" << z;
  pairs_csv << "\n";

  // Cross-tabulation of argmax component vs ground-truth style.
  std::map<std::pair<int, int>, int> crosstab;
  for (size_t i = 0; i < data.size(); ++i) {
    const std::vector<double> post = posterior(params, data[i], 0.0);
    int argmax = 0;
    for (int z = 1; z < k; ++z) {
      if (post[static_cast<size_t>(z)] > post[static_cast<size_t>(argmax)]) argmax = z;
    }
    const int style = corpus.pairs[i].style;
    ++crosstab[{argmax + 1, style}];
    pairs_csv << i << ',' << argmax + 1 << ',' << style;
    for (int z = 0; z < k; ++z) {
      mean[static_cast<size_t>(z)] += post[static_cast<size_t>(z)];
      pairs_csv << ',' << fmt(post[static_cast<size_t>(z)]);
    }
    pairs_csv << '\n';
  }
  for (double& v : mean) v /= static_cast<double>(data.size());

  {
    std::ofstream out(out_prefix + ".avg.csv", std::ios::binary);
    out << "component,mass\n";
    for (int z = 0; z < k; ++z) out << z + 1 << ',' << fmt(mean[static_cast<size_t>(z)]) << '\n';
  }

  // Purity: per argmax component, the dominant style's share.
  std::map<int, int> comp_totals;
  std::map<int, int> comp_best;
  for (const auto& [key, cnt] : crosstab) {
    comp_totals[key.first] += cnt;
    comp_best[key.first] = std::max(comp_best[key.first], 0);
  }
  int agreement = 0;
  for (int z = 1; z <= k; ++z) {
    int best = 0;
    for (const auto& [key, cnt] : crosstab) {
      if (key.first == z) best = std::max(best, cnt);
    }
    agreement += best;
  }
  const double purity = static_cast<double>(agreement) / static_cast<double>(data.size());

  std::cout << "avg posterior:";
  for (int z = 0; z < k; ++z) std::cout << ' ' << mean[static_cast<size_t>(z)];
  std::cout << "\nargmax-component vs style purity: " << purity << "\n"
            << "CSV written to " << out_prefix << ".avg.csv and " << out_prefix << ".pairs.csv\n";
}

// ---------------------------------------------------------------- score

void cmd_score(const std::string& ckpt_path, const std::string& input_path,
               const std::string& decode_path, double tolerance) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  const ModelParams& params = ckpt.state.params;
  const std::vector<std::string> lines = read_source_lines(input_path);
  const std::vector<DecodeRecord> records = read_decode_file(decode_path);

  double max_diff = 0.0;
  for (const DecodeRecord& r : records) {
    if (r.sentence < 0 || r.sentence >= static_cast<int>(lines.size())) {
      throw DataError("decode record references sentence " + std::to_string(r.sentence) +
                      " outside the input file");
    }
    const std::vector<int> src =
        ckpt.src_vocab.encode(tokenize(lines[static_cast<size_t>(r.sentence)]));
    std::vector<int> ids = ckpt.tgt_vocab.encode(r.tokens);
    if (r.finished) ids.push_back(kEosId);
    const double recomputed = prefix_log_prob(params, src, ids, r.component);
    max_diff = std::max(max_diff, std::abs(recomputed - r.log_prob));
  }
  std::cout << "re-scored " << records.size() << " candidates; max |difference| = " << max_diff
            << "\n";
  if (max_diff > tolerance) {
    throw NumericError("recomputed log-probabilities deviate by " + std::to_string(max_diff) +
                       " (tolerance " + std::to_string(tolerance) + ")");
  }
}

// ---------------------------------------------------------------- plot

void cmd_plot(const std::string& train_log, const std::string& posterior_csv,
              const std::string& out_dir) {
  fs::create_directories(out_dir);
  if (!train_log.empty()) {
    std::ifstream in(train_log, std::ios::binary);
    if (!in) throw DataError("cannot open: " + train_log);
    Series loss{"train loss", {}, {}};
    Series ppl{"dev perplexity", {}, {}};
    std::string line;
    while (std::getline(in, line)) {
      std::istringstream ls(line);
      std::string type;
      std::getline(ls, type, '\t');
      if (type != "epoch") continue;
      std::string epoch_s, step_s, mode_s, loss_s, ppl_s, ms_s;
      std::getline(ls, epoch_s, '\t');
      std::getline(ls, step_s, '\t');
      std::getline(ls, mode_s, '\t');
      std::getline(ls, loss_s, '\t');
      std::getline(ls, ppl_s, '\t');
      std::getline(ls, ms_s, '\t');
      loss.x.push_back(std::stod(epoch_s));
      loss.y.push_back(std::stod(loss_s));
      ppl.x.push_back(std::stod(epoch_s));
      ppl.y.push_back(std::stod(ppl_s));
    }
    if (loss.x.empty()) throw DataError(train_log + ": no epoch records");
    {
      std::ofstream csv(fs::path(out_dir) / "train_curves.csv", std::ios::binary);
      csv << "epoch,train_loss,dev_ppl\n";
      for (size_t i = 0; i < loss.x.size(); ++i) {
        csv << loss.x[i] << ',' << fmt(loss.y[i]) << ',' << fmt(ppl.y[i]) << '\n';
      }
    }
    write_line_chart((fs::path(out_dir) / "train_loss.svg").string(), "training loss", {loss});
    write_line_chart((fs::path(out_dir) / "dev_ppl.svg").string(), "dev perplexity", {ppl});
    std::cout << "training curves written to " << out_dir << "\n";
  }
  if (!posterior_csv.empty()) {
    std::ifstream in(posterior_csv, std::ios::binary);
    if (!in) throw DataError("cannot open: " + posterior_csv);
    std::vector<std::string> labels;
    std::vector<double> values;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      const size_t comma = line.find(',');
      if (comma == std::string::npos) continue;
      labels.push_back("z=" + line.substr(0, comma));
      values.push_back(std::stod(line.substr(comma + 1)));
    }
    if (values.empty()) throw DataError(posterior_csv + ": no rows");
    write_bar_chart((fs::path(out_dir) / "avg_posterior.svg").string(),
                    "average posterior mass per component", labels, values);
    std::cout << "posterior bar chart written to " << out_dir << "\n";
  }
  if (train_log.empty() && posterior_csv.empty()) {
    throw UsageError("plot: pass --train-log and/or --posterior");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"s2smix: mixture-of-experts sequence-to-sequence lab"};
  app.require_subcommand(1);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic ambiguous-translation corpus");
  std::string gen_config, gen_out;
  bool gen_force = false;
  gen->add_option("--config", gen_config, "experiment config file")->required();
  gen->add_option("--out", gen_out, "output corpus directory")->required();
  gen->add_flag("--force", gen_force, "overwrite an existing output directory");

  // train
  auto* train = app.add_subcommand("train", "train a model on a generated corpus");
  std::string train_config, train_data, train_out, train_resume;
  int train_save_every = 0;
  long long train_stop_after = 0;
  train->add_option("--config", train_config, "experiment config file");
  train->add_option("--data", train_data, "corpus directory from 'gen'")->required();
  train->add_option("--out", train_out, "output directory for checkpoints and logs")->required();
  train->add_option("--resume", train_resume, "checkpoint to resume from (ignores --config)");
  train->add_option("--save-every", train_save_every,
                    "write last.ckpt every N steps (default 0 = only at the end)");
  train->add_option("--stop-after-steps", train_stop_after,
                    "stop after N global steps (0 = run all epochs); for resume testing");

  // decode
  auto* decode = app.add_subcommand("decode", "decode source sentences with a trained model");
  std::string dec_ckpt, dec_input, dec_out, dec_decoder = "beam";
  int dec_beam = 2, dec_max_len = 0;
  double dec_gamma = 1.0;
  bool dec_length_norm = false;
  decode->add_option("--checkpoint", dec_ckpt, "model checkpoint")->required();
  decode->add_option("--input", dec_input, "source sentences, one per line")->required();
  decode->add_option("--out", dec_out, "decode output file")->required();
  decode->add_option("-b,--beam", dec_beam, "beam size per mixture component (default 2)");
  decode->add_option("--gamma", dec_gamma,
                     "sibling rank penalty for the diverse decoder (default 1.0)");
  decode->add_option("--max-len", dec_max_len,
                     "max content tokens (default 0 = 2 * source length + 5)");
  decode->add_option("--decoder", dec_decoder, "beam | diverse | greedy (default beam)")
      ->check(CLI::IsMember({"beam", "diverse", "greedy"}));
  decode->add_flag("--length-norm", dec_length_norm,
                   "rank hypotheses by length-normalized score (default off)");

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "score a decode output against references");
  std::string eval_decode, eval_refs, eval_out = "eval";
  evaluate->add_option("--decode", eval_decode, "decode output file")->required();
  evaluate->add_option("--refs", eval_refs, "references file (source TAB ref [TAB ref ...])")
      ->required();
  evaluate->add_option("--out-prefix", eval_out, "output file prefix (default 'eval')");

  // inspect-posterior
  auto* inspect = app.add_subcommand("inspect-posterior",
                                     "average posterior and style cross-tabulation");
  std::string ins_ckpt, ins_data, ins_split = "train", ins_out = "posterior";
  inspect->add_option("--checkpoint", ins_ckpt, "model checkpoint")->required();
  inspect->add_option("--data", ins_data, "corpus directory")->required();
  inspect->add_option("--split", ins_split, "corpus split (default train)");
  inspect->add_option("--out-prefix", ins_out, "output file prefix (default 'posterior')");

  // score
  auto* score = app.add_subcommand("score", "re-verify decode output log-probabilities");
  std::string score_ckpt, score_input, score_decode;
  double score_tol = 1e-6;
  score->add_option("--checkpoint", score_ckpt, "model checkpoint")->required();
  score->add_option("--input", score_input, "source sentences used for the decode")->required();
  score->add_option("--decode", score_decode, "decode output file")->required();
  score->add_option("--tolerance", score_tol, "max allowed |difference| (default 1e-6)");

  // plot
  auto* plot = app.add_subcommand("plot", "emit CSV and SVG charts from logs");
  std::string plot_log, plot_posterior, plot_out = "plots";
  plot->add_option("--train-log", plot_log, "train.log.tsv from 'train'");
  plot->add_option("--posterior", plot_posterior, "avg-posterior CSV from 'inspect-posterior'");
  plot->add_option("--out", plot_out, "output directory (default 'plots')");

  try {
    app.parse(argc, argv);
    if (*gen) cmd_gen(gen_config, gen_out, gen_force);
    if (*train) {
      cmd_train(train_config, train_data, train_out, train_resume, train_save_every,
                train_stop_after);
    }
    if (*decode) {
      cmd_decode(dec_ckpt, dec_input, dec_out, dec_beam, dec_gamma, dec_max_len, dec_decoder,
                 dec_length_norm);
    }
    if (*evaluate) cmd_evaluate(eval_decode, eval_refs, eval_out);
    if (*inspect) cmd_inspect_posterior(ins_ckpt, ins_data, ins_split, ins_out);
    if (*score) cmd_score(score_ckpt, score_input, score_decode, score_tol);
    if (*plot) cmd_plot(plot_log, plot_posterior, plot_out);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
