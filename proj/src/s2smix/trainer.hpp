#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "s2smix/adam.hpp"
#include "s2smix/corpus.hpp"
#include "s2smix/loss.hpp"

namespace s2smix {

enum class TrainMode { kExactCll, kEmExact, kEmMc };

TrainMode train_mode_from_string(const std::string& s);
std::string train_mode_to_string(TrainMode m);

struct TrainConfig {
  int batch_size = 64;
  int epochs = 15;
  AdamConfig adam;
  double label_smoothing = 0.1;
  TrainMode mode = TrainMode::kExactCll;
  int mc_samples = 1;
  uint64_t seed = 1;
  void validate() const;
};

// Everything needed to continue training bit-exactly from a saved step.
struct TrainingState {
  ModelParams params;
  AdamState adam;
  int epoch = 0;           // completed epochs
  int step_in_epoch = 0;   // completed minibatches within the current epoch
  long long global_step = 0;
  std::string rng_state;
  double best_dev_ppl = std::numeric_limits<double>::infinity();
  int best_epoch = -1;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_ppl = 0.0;
  double ms_per_batch = 0.0;
};

struct TrainResult {
  ModelParams best_params;
  int best_epoch = -1;
  double best_dev_ppl = std::numeric_limits<double>::infinity();
  bool diverged = false;
  std::string divergence_message;
  std::vector<EpochStats> epochs;
  TrainingState final_state;
};

class TrainLogSink {
 public:
  virtual ~TrainLogSink() = default;
  virtual void step_line(int epoch, long long step, const std::string& mode, double loss,
                         double ms) = 0;
  virtual void epoch_line(const EpochStats& stats) = 0;
};

std::vector<IdPair> encode_corpus(const Corpus& corpus);

// Dev-set perplexity: exp of the total marginal negative log-likelihood
// (including the log(1/K) mixing constant) per target token, EOS included.
// No label smoothing, no dropout.
double perplexity(const ModelParams& params, const std::vector<IdPair>& data);

// Monte-Carlo gradient estimate for one minibatch: forward-only component
// log-likelihoods, one sampled component per pair and MC sample, then
// forward+backward on the sampled components only. Unbiased for the exact
// EM gradient.
GradientMap em_mc_gradient(const ModelParams& params, const Batch& batch,
                           const TrainConfig& config, Rng& rng, double* loss_out = nullptr);

// One Algorithm-1 minibatch update: em_mc_gradient followed by the optimizer
// step. Returns the stage-2 loss.
double em_mc_step(ModelParams& params, const Batch& batch, AdamState& adam,
                  const TrainConfig& config, Rng& rng);

// Posterior used by the MC sampler for one pair (stage 1 of Algorithm 1):
// dropout disabled, label smoothing taken from the training objective.
std::vector<double> mc_sampling_posterior(const ModelParams& params, const IdPair& pair,
                                          const TrainConfig& config);

class Trainer {
 public:
  // Fresh run: parameters drawn from the config seed.
  Trainer(const ModelConfig& model_config, const TrainConfig& config);
  // Resume from a restored state.
  Trainer(TrainingState state, const TrainConfig& config);

  // Runs the remaining epochs with per-epoch dev evaluation and best-model
  // selection. `on_step` fires after every applied minibatch update.
  // stop_after_step > 0 halts (possibly mid-epoch) once the global step
  // reaches it, leaving a state that resumes bit-exactly.
  TrainResult run(const std::vector<IdPair>& train_data, const std::vector<IdPair>& dev_data,
                  TrainLogSink* sink = nullptr,
                  const std::function<void(const TrainingState&)>& on_step = {},
                  long long stop_after_step = 0);

  const TrainingState& state() const { return state_; }

 private:
  double train_step(const Batch& batch, Rng& rng);

  TrainConfig config_;
  TrainingState state_;
  ModelParams best_params_;
  bool has_best_ = false;
};

// Deterministic minibatch order for an epoch, derived from (seed, epoch)
// only, so mid-epoch resume can rebuild it without disturbing the main
// RNG stream.
std::vector<size_t> epoch_order(size_t n, uint64_t seed, int epoch);

}  // namespace s2smix
