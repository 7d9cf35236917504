#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "s2smix/model.hpp"
#include "s2smix/trainer.hpp"

namespace s2smix {

struct DecodeConfig {
  int beam = 2;
  double gamma = 1.0;     // diverse-beam sibling penalty
  int max_len = 0;        // 0 = 2 * source length + 5
  bool length_norm = false;
};

struct DataConfig {
  std::string task = "ambig-v1";
  uint64_t seed = 1;
  int styles = 4;
  int n_train = 5000;
  int n_dev = 400;
  int n_test = 400;
  int max_len_filter = 50;
};

// One declarative document covering model, training, decoding and data
// generation. Vocabulary sizes are never configured; they come from data.
struct ExperimentConfig {
  ModelConfig model;     // vocab sizes filled in from the corpus
  TrainConfig train;
  DecodeConfig decode;
  DataConfig data;
};

// Flat "key = value" text document; '#' starts a comment. Unknown keys are
// rejected. All keys are optional and default to the values above.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);
std::string config_to_string(const ExperimentConfig& config);
void write_config_file(const ExperimentConfig& config, const std::string& path);

}  // namespace s2smix
