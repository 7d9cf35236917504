#include "s2smix/model.hpp"

#include <algorithm>

#include "s2smix/error.hpp"

namespace s2smix {

Variant variant_from_string(const std::string& s) {
  if (s == "none") return Variant::kNone;
  if (s == "bt") return Variant::kBt;
  if (s == "tp") return Variant::kTp;
  if (s == "sf") return Variant::kSf;
  if (s == "all") return Variant::kAll;
  throw UsageError("unknown variant '" + s + "' (expected none|bt|tp|sf|all)");
}

std::string variant_to_string(Variant v) {
  switch (v) {
    case Variant::kNone: return "none";
    case Variant::kBt: return "bt";
    case Variant::kTp: return "tp";
    case Variant::kSf: return "sf";
    case Variant::kAll: return "all";
  }
  return "?";
}

void ModelConfig::validate() const {
  if (vocab_size_src <= kNumReservedIds || vocab_size_tgt <= kNumReservedIds) {
    throw UsageError("vocabulary sizes must exceed the reserved ids");
  }
  if (embed_dim <= 0 || lstm_dim <= 0) throw UsageError("embed_dim and lstm_dim must be positive");
  if (components < 1) throw UsageError("components must be >= 1");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw UsageError("dropout must lie in [0, 1)");
}

namespace {

// Gate order in the fused LSTM weight matrix: input, forget, candidate,
// output. One weight matrix [4D, X+D] over the concatenated (input, h_prev)
// and one bias [4D]; forget-gate rows biased to 1 at init.
struct LstmDims {
  int input = 0;
  int hidden = 0;
  int rows() const { return 4 * hidden; }
  int cols() const { return input + hidden; }
};

LstmDims enc_dims(const ModelConfig& c) { return {c.embed_dim, c.lstm_dim}; }
LstmDims dec1_dims(const ModelConfig& c) { return {c.embed_dim + 2 * c.lstm_dim, c.lstm_dim}; }
LstmDims dec2_dims(const ModelConfig& c) { return {c.lstm_dim + 2 * c.lstm_dim, c.lstm_dim}; }

}  // namespace

ParameterCount parameter_count(const ModelConfig& config) {
  config.validate();
  const long long d = config.lstm_dim;
  const long long e = config.embed_dim;
  const long long vs = config.vocab_size_src;
  const long long vt = config.vocab_size_tgt;
  const long long k = config.effective_components();

  ParameterCount pc;
  auto table = [&pc](const std::string& name, long long n) {
    pc.per_table.emplace_back(name, n);
    pc.total += n;
  };
  auto lstm = [&](const std::string& name, const LstmDims& dims) {
    table(name + ".w", static_cast<long long>(dims.rows()) * dims.cols());
    table(name + ".b", dims.rows());
  };

  table("src_embed", vs * e);
  table("tgt_embed", vt * e);
  lstm("enc_fwd", enc_dims(config));
  lstm("enc_bwd", enc_dims(config));
  lstm("dec1", dec1_dims(config));
  lstm("dec2", dec2_dims(config));
  table("attn.wh", d * 2 * d);
  table("attn.ws", d * d);
  table("attn.b", d);
  table("attn.v", d);
  table("out.w", vt * d);
  table("out.wc", vt * 2 * d);
  if (config.uses_m1()) table("cond.m1", k * d);
  if (config.uses_m2()) table("cond.m2", k * d);
  if (config.uses_mb()) table("cond.mb", k * vt);

  pc.extra_over_baseline = (config.uses_m1() ? k * d : 0) + (config.uses_m2() ? k * d : 0) +
                           (config.uses_mb() ? k * vt : 0);
  return pc;
}

ModelParams ModelParams::init(const ModelConfig& config, Rng& rng) {
  config.validate();
  const int d = config.lstm_dim;
  const int e = config.embed_dim;
  const int k = config.effective_components();
  constexpr double kScale = 0.08;
  constexpr double kCondScale = 0.02;

  ModelParams p;
  p.config = config;
  auto uni = [&](std::vector<int> shape) {
    return Tensor::uniform(std::move(shape), -kScale, kScale, rng);
  };
  auto lstm_bias = [&](int hidden) {
    Tensor b({4 * hidden});
    for (int i = hidden; i < 2 * hidden; ++i) b.values[static_cast<size_t>(i)] = 1.0;
    return b;
  };

  p.src_embed = p.set.add("src_embed", uni({config.vocab_size_src, e}));
  p.tgt_embed = p.set.add("tgt_embed", uni({config.vocab_size_tgt, e}));
  const LstmDims de = enc_dims(config), d1 = dec1_dims(config), d2 = dec2_dims(config);
  p.enc_fwd_w = p.set.add("enc_fwd.w", uni({de.rows(), de.cols()}));
  p.enc_fwd_b = p.set.add("enc_fwd.b", lstm_bias(d));
  p.enc_bwd_w = p.set.add("enc_bwd.w", uni({de.rows(), de.cols()}));
  p.enc_bwd_b = p.set.add("enc_bwd.b", lstm_bias(d));
  p.dec1_w = p.set.add("dec1.w", uni({d1.rows(), d1.cols()}));
  p.dec1_b = p.set.add("dec1.b", lstm_bias(d));
  p.dec2_w = p.set.add("dec2.w", uni({d2.rows(), d2.cols()}));
  p.dec2_b = p.set.add("dec2.b", lstm_bias(d));
  p.attn_wh = p.set.add("attn.wh", uni({d, 2 * d}));
  p.attn_ws = p.set.add("attn.ws", uni({d, d}));
  p.attn_b = p.set.add("attn.b", uni({d}));
  p.attn_v = p.set.add("attn.v", uni({d}));
  p.out_w = p.set.add("out.w", uni({config.vocab_size_tgt, d}));
  p.out_wc = p.set.add("out.wc", uni({config.vocab_size_tgt, 2 * d}));
  if (config.uses_m1()) {
    p.m1 = p.set.add("cond.m1", Tensor::uniform({k, d}, -kCondScale, kCondScale, rng));
  }
  if (config.uses_m2()) {
    p.m2 = p.set.add("cond.m2", Tensor::uniform({k, d}, -kCondScale, kCondScale, rng));
  }
  if (config.uses_mb()) {
    p.mb = p.set.add("cond.mb", Tensor::uniform({k, config.vocab_size_tgt}, -kCondScale, kCondScale, rng));
  }
  return p;
}

BoundModel bind_model(Graph& g, const ModelParams& params) {
  BoundModel m;
  m.g = &g;
  m.params = &params;
  m.bound = bind_params(g, params.set);
  return m;
}

namespace {

struct LstmNodeState {
  int h = -1, c = -1;
};

// One LSTM cell update; `cond` (if >= 0) is added to the previous hidden
// state, and to the cell state as well when cond_cell is set.
LstmNodeState lstm_step(Graph& g, int w, int b, const LstmNodeState& prev, int input, int cond,
                        bool cond_cell) {
  const int d = g.value(b).dim(0) / 4;
  const int h_in = cond >= 0 ? g.add(prev.h, cond) : prev.h;
  const int c_in = (cond >= 0 && cond_cell) ? g.add(prev.c, cond) : prev.c;
  const int x = g.concat({input, h_in});
  const int pre = g.add(g.matmul(w, x), b);
  const int gate_i = g.sigmoid(g.slice(pre, 0, d));
  const int gate_f = g.sigmoid(g.slice(pre, d, d));
  const int gate_g = g.tanh(g.slice(pre, 2 * d, d));
  const int gate_o = g.sigmoid(g.slice(pre, 3 * d, d));
  LstmNodeState next;
  next.c = g.add(g.mul(gate_f, c_in), g.mul(gate_i, gate_g));
  next.h = g.mul(gate_o, g.tanh(next.c));
  return next;
}

int maybe_drop(Graph& g, int node, MaskSource* drop) {
  if (drop == nullptr || !drop->active()) return node;
  return g.dropout_mask(node, drop->next_mask(g.value(node).dim(0)));
}

int component_row(const BoundModel& m, int z) {
  const int k = m.config().effective_components();
  if (m.config().variant == Variant::kNone) return 0;
  if (z < 1 || z > k) {
    throw NumericError("component z = " + std::to_string(z) + " out of range [1, " +
                       std::to_string(k) + "]");
  }
  return z - 1;
}

}  // namespace

EncoderOutput encode(BoundModel& m, std::span<const int> src, MaskSource* drop) {
  if (src.empty()) throw DataError("encode: source sequence is empty");
  Graph& g = *m.g;
  const ModelConfig& cfg = m.config();
  const int n = static_cast<int>(src.size());

  std::vector<int> emb(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int id = src[static_cast<size_t>(i)];
    if (id < 0 || id >= cfg.vocab_size_src) {
      throw DataError("encode: source token id " + std::to_string(id) +
                      " outside vocabulary of size " + std::to_string(cfg.vocab_size_src));
    }
    emb[static_cast<size_t>(i)] = maybe_drop(g, g.lookup_row(m.id(m.params->src_embed), id), drop);
  }

  const int zero = g.leaf(Tensor::zeros({cfg.lstm_dim}));
  std::vector<int> fwd(static_cast<size_t>(n)), bwd(static_cast<size_t>(n));
  LstmNodeState state{zero, zero};
  for (int i = 0; i < n; ++i) {
    state = lstm_step(g, m.id(m.params->enc_fwd_w), m.id(m.params->enc_fwd_b), state,
                      emb[static_cast<size_t>(i)], -1, false);
    fwd[static_cast<size_t>(i)] = state.h;
  }
  state = {zero, zero};
  for (int i = n - 1; i >= 0; --i) {
    state = lstm_step(g, m.id(m.params->enc_bwd_w), m.id(m.params->enc_bwd_b), state,
                      emb[static_cast<size_t>(i)], -1, false);
    bwd[static_cast<size_t>(i)] = state.h;
  }

  EncoderOutput enc;
  enc.length = n;
  enc.h.reserve(static_cast<size_t>(n));
  enc.wh_h.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int h = g.concat({fwd[static_cast<size_t>(i)], bwd[static_cast<size_t>(i)]});
    enc.h.push_back(h);
    enc.wh_h.push_back(g.matmul(m.id(m.params->attn_wh), h));
  }
  return enc;
}

DecoderState initial_decoder_state(BoundModel& m) {
  Graph& g = *m.g;
  const int zero = g.leaf(Tensor::zeros({m.config().lstm_dim}));
  DecoderState s;
  s.s1_h = s.s1_c = s.s2_h = s.s2_c = zero;
  s.t = 0;
  return s;
}

AttentionResult attend(BoundModel& m, int s1_prev_h, const EncoderOutput& enc) {
  Graph& g = *m.g;
  // e_{t,n} = v^T tanh(W_h h_n + W_s s_{t-1}^1 + b_a)
  const int query = g.add(g.matmul(m.id(m.params->attn_ws), s1_prev_h), m.id(m.params->attn_b));
  std::vector<int> scores;
  scores.reserve(enc.h.size());
  for (int n = 0; n < enc.length; ++n) {
    const int u = g.tanh(g.add(enc.wh_h[static_cast<size_t>(n)], query));
    scores.push_back(g.dot(m.id(m.params->attn_v), u));
  }
  AttentionResult att;
  att.weights = g.softmax(g.concat(scores));
  att.context = g.weighted_sum_rows(att.weights, enc.h);
  return att;
}

StepResult decoder_step(BoundModel& m, const EncoderOutput& enc, const DecoderState& state,
                        int y_in, int z, MaskSource* drop) {
  Graph& g = *m.g;
  const ModelConfig& cfg = m.config();
  if (y_in < 0 || y_in >= cfg.vocab_size_tgt) {
    throw DataError("decoder_step: target token id " + std::to_string(y_in) +
                    " outside vocabulary of size " + std::to_string(cfg.vocab_size_tgt));
  }
  const int row = component_row(m, z);

  const AttentionResult att = attend(m, state.s1_h, enc);
  const int emb = maybe_drop(g, g.lookup_row(m.id(m.params->tgt_embed), y_in), drop);

  const int cond1 = cfg.uses_m1() ? g.lookup_row(m.id(m.params->m1), row) : -1;
  const LstmNodeState s1 = lstm_step(g, m.id(m.params->dec1_w), m.id(m.params->dec1_b),
                                     {state.s1_h, state.s1_c}, g.concat({emb, att.context}),
                                     cond1, cfg.condition_cell);

  const int cond2 = cfg.uses_m2() ? g.lookup_row(m.id(m.params->m2), row) : -1;
  const LstmNodeState s2 = lstm_step(g, m.id(m.params->dec2_w), m.id(m.params->dec2_b),
                                     {state.s2_h, state.s2_c}, g.concat({s1.h, att.context}),
                                     cond2, cfg.condition_cell);

  const int s2_out = maybe_drop(g, s2.h, drop);
  int logits = g.add(g.matmul(m.id(m.params->out_w), s2_out),
                     g.matmul(m.id(m.params->out_wc), att.context));
  if (cfg.uses_mb()) logits = g.add(logits, g.lookup_row(m.id(m.params->mb), row));

  StepResult r;
  r.state = DecoderState{s1.h, s1.c, s2.h, s2.c, state.t + 1};
  r.logits = logits;
  r.attention = att.weights;
  return r;
}

SequenceScoreNodes sequence_score_nodes(BoundModel& m, const EncoderOutput& enc,
                                        std::span<const int> tgt_with_eos, int z,
                                        double label_smoothing, MaskSource* drop) {
  if (tgt_with_eos.empty()) throw DataError("sequence score: target sequence is empty");
  if (tgt_with_eos.back() != kEosId) {
    throw DataError("sequence score: target must end with the end-of-sequence id");
  }
  Graph& g = *m.g;
  DecoderState state = initial_decoder_state(m);
  int prev = kBosId;
  SequenceScoreNodes out;
  out.per_token.reserve(tgt_with_eos.size());
  for (int y : tgt_with_eos) {
    const StepResult step = decoder_step(m, enc, state, prev, z, drop);
    const int lp = g.log_softmax(step.logits);
    const int term =
        label_smoothing > 0.0 ? g.smoothed_pick(lp, y, label_smoothing) : g.pick(lp, y);
    out.per_token.push_back(term);
    out.total = out.total < 0 ? term : g.add(out.total, term);
    state = step.state;
    prev = y;
  }
  return out;
}

SequenceLogProb sequence_log_prob(const ModelParams& params, std::span<const int> src,
                                  std::span<const int> tgt_with_eos, int z,
                                  double label_smoothing, MaskSource* drop) {
  Graph g;
  BoundModel m = bind_model(g, params);
  if (drop != nullptr) drop->begin_pass();
  const EncoderOutput enc = encode(m, src, drop);
  const SequenceScoreNodes nodes = sequence_score_nodes(m, enc, tgt_with_eos, z, label_smoothing, drop);
  SequenceLogProb out;
  out.total = g.value(nodes.total).values[0];
  for (int n : nodes.per_token) out.per_token.push_back(g.value(n).values[0]);
  return out;
}

double prefix_log_prob(const ModelParams& params, std::span<const int> src,
                       std::span<const int> tokens, int z) {
  Graph g;
  BoundModel m = bind_model(g, params);
  const EncoderOutput enc = encode(m, src, nullptr);
  DecoderState state = initial_decoder_state(m);
  int prev = kBosId;
  double total = 0.0;
  for (int y : tokens) {
    const StepResult step = decoder_step(m, enc, state, prev, z, nullptr);
    total += g.value(g.pick(g.log_softmax(step.logits), y)).values[0];
    state = step.state;
    prev = y;
  }
  return total;
}

}  // namespace s2smix
