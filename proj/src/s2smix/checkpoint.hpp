#pragma once

#include <limits>
#include <string>

#include "s2smix/trainer.hpp"

namespace s2smix {

// Self-describing binary container: magic + version, a plain-text manifest
// (config, training-state scalars, RNG state, vocabularies, tensor table)
// and raw little-endian float64 payloads. Round-trips bit-exactly, so
// training can resume from the saved step.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  TrainConfig train_config;
  TrainingState state;
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
  // Dev perplexity of the stored parameters (meaningful for best-model
  // checkpoints; infinity when not yet evaluated).
  double dev_ppl = std::numeric_limits<double>::infinity();

  const ModelConfig& model_config() const { return state.params.config; }
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace s2smix
