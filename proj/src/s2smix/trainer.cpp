#include "s2smix/trainer.hpp"

#include <chrono>
#include <cmath>

#include "s2smix/error.hpp"

namespace s2smix {

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "exact_cll") return TrainMode::kExactCll;
  if (s == "em_exact") return TrainMode::kEmExact;
  if (s == "em_mc") return TrainMode::kEmMc;
  throw UsageError("unknown train_mode '" + s + "' (expected exact_cll|em_exact|em_mc)");
}

std::string train_mode_to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kExactCll: return "exact_cll";
    case TrainMode::kEmExact: return "em_exact";
    case TrainMode::kEmMc: return "em_mc";
  }
  return "?";
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (epochs < 0) throw UsageError("epochs must be >= 0");
  if (adam.learning_rate <= 0.0) throw UsageError("learning_rate must be positive");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
    throw UsageError("label_smoothing must lie in [0, 1)");
  }
  if (mc_samples < 1) throw UsageError("mc_samples must be >= 1");
}

std::vector<IdPair> encode_corpus(const Corpus& corpus) {
  std::vector<IdPair> out;
  out.reserve(corpus.pairs.size());
  for (const SentencePair& p : corpus.pairs) {
    IdPair pair;
    pair.src = corpus.src_vocab.encode(p.source);
    pair.tgt = corpus.tgt_vocab.encode(p.target);
    out.push_back(std::move(pair));
  }
  return out;
}

double perplexity(const ModelParams& params, const std::vector<IdPair>& data) {
  if (data.empty()) throw DataError("perplexity: empty corpus");
  const double log_k = std::log(static_cast<double>(params.config.effective_components()));
  double total_nll = 0.0;
  int64_t total_tokens = 0;
  for (const IdPair& pair : data) {
    const std::vector<double> ell = component_logliks(params, pair, 0.0);
    total_nll += -(log_sum_exp_values(ell) - log_k);
    total_tokens += static_cast<int64_t>(pair.tgt.size()) + 1;  // + EOS
  }
  return std::exp(total_nll / static_cast<double>(total_tokens));
}

std::vector<double> mc_sampling_posterior(const ModelParams& params, const IdPair& pair,
                                          const TrainConfig& config) {
  return posterior(params, pair, config.label_smoothing);
}

GradientMap em_mc_gradient(const ModelParams& params, const Batch& batch,
                           const TrainConfig& config, Rng& rng, double* loss_out) {
  const int k = params.config.effective_components();
  MaskSource drop(params.config.dropout_rate, &rng);

  // Stage 1: forward-only posteriors (no dropout), one sampled component per
  // pair and MC sample. K = 1 never consumes randomness.
  std::vector<std::vector<int>> sampled(batch.size());
  for (size_t d = 0; d < batch.size(); ++d) {
    if (k == 1) {
      sampled[d].assign(static_cast<size_t>(config.mc_samples), 1);
      continue;
    }
    const std::vector<double> ell = component_logliks(params, batch[d], config.label_smoothing);
    for (double e : ell) {
      if (!std::isfinite(e)) {
        throw NumericError("em_mc_step: non-finite component log-likelihood in stage 1 (pair " +
                           std::to_string(d) + ")");
      }
    }
    const std::vector<double> post = posterior_from_logliks(ell);
    for (int s = 0; s < config.mc_samples; ++s) {
      sampled[d].push_back(1 + sample_categorical(rng, post));
    }
  }

  // Stage 2: forward + backward on the sampled components only.
  GradientMap acc = GradientMap::zeros_like(params.set);
  const double sample_weight = 1.0 / static_cast<double>(config.mc_samples);
  double total_loss = 0.0;
  for (size_t d = 0; d < batch.size(); ++d) {
    const std::vector<int> tgt = with_eos(batch[d].tgt);
    for (int z : sampled[d]) {
      Graph g;
      BoundModel m = bind_model(g, params);
      drop.begin_pass();
      const EncoderOutput enc = encode(m, batch[d].src, &drop);
      const SequenceScoreNodes nodes =
          sequence_score_nodes(m, enc, tgt, z, config.label_smoothing, &drop);
      const double ell = g.value(nodes.total).values[0];
      if (!std::isfinite(ell)) {
        throw NumericError("em_mc_step: non-finite sampled-component loss in stage 2");
      }
      total_loss += -ell * sample_weight;
      g.backward(nodes.total);
      acc.accumulate(GradientMap::from_graph(g, m.bound), -sample_weight);
    }
  }
  if (loss_out != nullptr) *loss_out = total_loss;
  return acc;
}

double em_mc_step(ModelParams& params, const Batch& batch, AdamState& adam,
                  const TrainConfig& config, Rng& rng) {
  double loss = 0.0;
  GradientMap grads = em_mc_gradient(params, batch, config, rng, &loss);
  adam_step(params.set, std::move(grads), adam, config.adam);
  return loss;
}

std::vector<size_t> epoch_order(size_t n, uint64_t seed, int epoch) {
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(mix_seed(seed, 0x5bd1e995ULL + static_cast<uint64_t>(epoch)));
  for (size_t i = n; i > 1; --i) {
    const size_t j = static_cast<size_t>(uniform_int(rng, static_cast<int>(i)));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

Trainer::Trainer(const ModelConfig& model_config, const TrainConfig& config) : config_(config) {
  config_.validate();
  Rng rng(config.seed);
  state_.params = ModelParams::init(model_config, rng);
  state_.adam = AdamState::zeros_like(state_.params.set);
  state_.rng_state = rng_state_string(rng);
  best_params_ = state_.params;
}

Trainer::Trainer(TrainingState state, const TrainConfig& config)
    : config_(config), state_(std::move(state)) {
  config_.validate();
  best_params_ = state_.params;
  has_best_ = state_.best_epoch >= 0;
}

double Trainer::train_step(const Batch& batch, Rng& rng) {
  switch (config_.mode) {
    case TrainMode::kExactCll: {
      MaskSource drop(state_.params.config.dropout_rate, &rng);
      double loss = 0.0;
      GradientMap grads = marginal_cll_gradient(state_.params, batch, config_.label_smoothing,
                                                drop.active() ? &drop : nullptr, &loss);
      adam_step(state_.params.set, std::move(grads), state_.adam, config_.adam);
      return loss;
    }
    case TrainMode::kEmExact: {
      MaskSource drop(state_.params.config.dropout_rate, &rng);
      double loss = 0.0;
      GradientMap grads = exact_em_gradient(state_.params, batch, config_.label_smoothing, &loss,
                                            drop.active() ? &drop : nullptr);
      adam_step(state_.params.set, std::move(grads), state_.adam, config_.adam);
      return loss;
    }
    case TrainMode::kEmMc:
      return em_mc_step(state_.params, batch, state_.adam, config_, rng);
  }
  throw NumericError("unreachable train mode");
}

TrainResult Trainer::run(const std::vector<IdPair>& train_data,
                         const std::vector<IdPair>& dev_data, TrainLogSink* sink,
                         const std::function<void(const TrainingState&)>& on_step,
                         long long stop_after_step) {
  if (train_data.empty()) throw DataError("train: empty training corpus");
  if (dev_data.empty()) throw DataError("train: empty dev corpus");

  Rng rng(config_.seed);
  rng_restore_state(rng, state_.rng_state);

  TrainResult result;
  const std::string mode_name = train_mode_to_string(config_.mode);
  bool stopped_early = false;

  for (; state_.epoch < config_.epochs; state_.epoch = state_.epoch + 1, state_.step_in_epoch = 0) {
    const std::vector<size_t> order = epoch_order(train_data.size(), config_.seed, state_.epoch);
    const int num_batches =
        static_cast<int>((train_data.size() + config_.batch_size - 1) / config_.batch_size);

    double epoch_loss = 0.0;
    double epoch_ms = 0.0;
    int steps_done = 0;

    for (int b = state_.step_in_epoch; b < num_batches; ++b) {
      Batch batch;
      const size_t begin = static_cast<size_t>(b) * config_.batch_size;
      const size_t end = std::min(train_data.size(), begin + config_.batch_size);
      for (size_t i = begin; i < end; ++i) batch.push_back(train_data[order[i]]);

      const auto t0 = std::chrono::steady_clock::now();
      double loss;
      try {
        loss = train_step(batch, rng);
      } catch (const NumericError& e) {
        result.diverged = true;
        result.divergence_message = e.what();
        break;
      }
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

      if (!std::isfinite(loss)) {
        result.diverged = true;
        result.divergence_message = "training loss is not finite";
        break;
      }

      epoch_loss += loss;
      epoch_ms += ms;
      ++steps_done;
      state_.step_in_epoch = b + 1;
      ++state_.global_step;
      state_.rng_state = rng_state_string(rng);
      if (sink != nullptr) sink->step_line(state_.epoch, state_.global_step, mode_name, loss, ms);
      if (on_step) on_step(state_);
      if (stop_after_step > 0 && state_.global_step >= stop_after_step) {
        stopped_early = true;
        break;
      }
    }

    if (result.diverged || stopped_early) break;

    EpochStats stats;
    stats.epoch = state_.epoch;
    stats.train_loss = epoch_loss;
    stats.dev_ppl = perplexity(state_.params, dev_data);
    stats.ms_per_batch = steps_done > 0 ? epoch_ms / steps_done : 0.0;
    result.epochs.push_back(stats);
    if (sink != nullptr) sink->epoch_line(stats);

    if (stats.dev_ppl < state_.best_dev_ppl) {
      state_.best_dev_ppl = stats.dev_ppl;
      state_.best_epoch = state_.epoch;
      best_params_ = state_.params;
      has_best_ = true;
    }
  }

  result.best_params = has_best_ ? best_params_ : state_.params;
  result.best_epoch = state_.best_epoch;
  result.best_dev_ppl = state_.best_dev_ppl;
  result.final_state = state_;
  return result;
}

}  // namespace s2smix
