#pragma once

#include <span>
#include <string>
#include <vector>

#include "s2smix/dropout.hpp"
#include "s2smix/params.hpp"
#include "s2smix/tokens.hpp"

namespace s2smix {

// Where the per-component conditioning vector enters the decoder:
// bottom LSTM layer (bt), top LSTM layer (tp), softmax logits (sf),
// all three (all), or nowhere (none = plain baseline).
enum class Variant { kNone, kBt, kTp, kSf, kAll };

Variant variant_from_string(const std::string& s);
std::string variant_to_string(Variant v);

struct ModelConfig {
  int vocab_size_src = 0;
  int vocab_size_tgt = 0;
  int embed_dim = 512;
  int lstm_dim = 512;
  int components = 1;  // K
  Variant variant = Variant::kNone;
  double dropout_rate = 0.2;
  // Whether the conditioning addition also perturbs the LSTM cell state
  // (default: hidden state only).
  bool condition_cell = false;

  int effective_components() const { return variant == Variant::kNone ? 1 : components; }
  bool uses_m1() const { return variant == Variant::kBt || variant == Variant::kAll; }
  bool uses_m2() const { return variant == Variant::kTp || variant == Variant::kAll; }
  bool uses_mb() const { return variant == Variant::kSf || variant == Variant::kAll; }
  void validate() const;
};

struct ParameterCount {
  std::vector<std::pair<std::string, long long>> per_table;
  long long total = 0;
  long long extra_over_baseline = 0;
};

ParameterCount parameter_count(const ModelConfig& config);

// All learnable weights, addressable both by role and through the flat
// ParamSet (the canonical order for gradients, Adam state and checkpoints).
struct ModelParams {
  ModelConfig config;
  ParamSet set;

  // Indices into `set`; -1 for conditioning tables the variant does not use.
  int src_embed = -1, tgt_embed = -1;
  int enc_fwd_w = -1, enc_fwd_b = -1, enc_bwd_w = -1, enc_bwd_b = -1;
  int dec1_w = -1, dec1_b = -1, dec2_w = -1, dec2_b = -1;
  int attn_wh = -1, attn_ws = -1, attn_b = -1, attn_v = -1;
  int out_w = -1, out_wc = -1;
  int m1 = -1, m2 = -1, mb = -1;

  Tensor& tensor(int handle) { return set.tensors[static_cast<size_t>(handle)]; }
  const Tensor& tensor(int handle) const { return set.tensors[static_cast<size_t>(handle)]; }

  // Uniform(-0.08, 0.08) weights, forget-gate biases at 1.0, conditioning
  // tables at uniform(-0.02, 0.02) to break component symmetry.
  static ModelParams init(const ModelConfig& config, Rng& rng);
};

// A model whose parameters are bound as leaves on a graph. All forward
// functions append nodes to that graph.
struct BoundModel {
  Graph* g = nullptr;
  const ModelParams* params = nullptr;
  BoundParams bound;

  int id(int handle) const { return bound.ids[static_cast<size_t>(handle)]; }
  const ModelConfig& config() const { return params->config; }
};

BoundModel bind_model(Graph& g, const ModelParams& params);

// Shared bidirectional encoder output: one node per source position for
// h_n = [fwd_n; bwd_n] (length 2D) and for the attention precomputation
// W_h h_n. Identical across mixture components and variants.
struct EncoderOutput {
  int length = 0;
  std::vector<int> h;
  std::vector<int> wh_h;
};

EncoderOutput encode(BoundModel& m, std::span<const int> src, MaskSource* drop = nullptr);

struct DecoderState {
  int s1_h = -1, s1_c = -1, s2_h = -1, s2_c = -1;
  int t = 0;
};

DecoderState initial_decoder_state(BoundModel& m);

struct AttentionResult {
  int weights = -1;  // a_t over source positions, sums to 1
  int context = -1;  // c_t = sum_n a_{t,n} h_n
};

AttentionResult attend(BoundModel& m, int s1_prev_h, const EncoderOutput& enc);

struct StepResult {
  DecoderState state;
  int logits = -1;
  int attention = -1;
};

// One decoder step under mixture component z (1-based). Consumes the
// previous state and the input token y_in, returns the next state and the
// logits over the target vocabulary.
StepResult decoder_step(BoundModel& m, const EncoderOutput& enc, const DecoderState& state,
                        int y_in, int z, MaskSource* drop = nullptr);

// Teacher-forced log-probability of the target sequence (which must end with
// EOS) under component z, optionally label-smoothed. Returns the scalar
// total node and per-token nodes.
struct SequenceScoreNodes {
  int total = -1;
  std::vector<int> per_token;
};

SequenceScoreNodes sequence_score_nodes(BoundModel& m, const EncoderOutput& enc,
                                        std::span<const int> tgt_with_eos, int z,
                                        double label_smoothing, MaskSource* drop = nullptr);

// Value-level convenience wrappers (fresh throwaway graph, eval mode unless
// a mask source is supplied).
struct SequenceLogProb {
  double total = 0.0;
  std::vector<double> per_token;
};

SequenceLogProb sequence_log_prob(const ModelParams& params, std::span<const int> src,
                                  std::span<const int> tgt_with_eos, int z,
                                  double label_smoothing = 0.0, MaskSource* drop = nullptr);

// Log-probability of an arbitrary emission prefix (no terminal-EOS
// requirement); the quantity beam hypotheses accumulate.
double prefix_log_prob(const ModelParams& params, std::span<const int> src,
                       std::span<const int> tokens, int z);

}  // namespace s2smix
