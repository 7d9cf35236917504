#pragma once

#include <vector>

#include "s2smix/error.hpp"
#include "s2smix/rng.hpp"

namespace s2smix {

// Supplies inverted-dropout masks (entries 0 or 1/(1-rate)) to the model
// forward passes. Evaluation passes simply go without a mask source.
//
// Freezing supports gradient checks: the first pass after freeze() samples
// and records every mask; later passes replay the recorded sequence, making
// the loss a deterministic function of the parameters.
class MaskSource {
 public:
  MaskSource(double rate, Rng* rng) : rate_(rate), rng_(rng) {
    if (rate < 0.0 || rate >= 1.0) throw NumericError("dropout rate must lie in [0, 1)");
  }

  bool active() const { return rate_ > 0.0; }

  void freeze() { frozen_ = true; }

  // Marks the start of a forward pass. For a frozen source, one recording
  // pass is followed by replay passes.
  void begin_pass() {
    if (frozen_ && !recorded_.empty()) replaying_ = true;
    cursor_ = 0;
  }

  std::vector<double> next_mask(int n) {
    if (replaying_) {
      if (cursor_ >= recorded_.size() || static_cast<int>(recorded_[cursor_].size()) != n) {
        throw NumericError("frozen dropout replay diverged from the recorded pass");
      }
      return recorded_[cursor_++];
    }
    std::vector<double> mask(static_cast<size_t>(n));
    const double keep_scale = 1.0 / (1.0 - rate_);
    for (double& m : mask) m = (uniform01(*rng_) < rate_) ? 0.0 : keep_scale;
    if (frozen_) recorded_.push_back(mask);
    return mask;
  }

 private:
  double rate_;
  Rng* rng_;
  bool frozen_ = false;
  bool replaying_ = false;
  std::vector<std::vector<double>> recorded_;
  size_t cursor_ = 0;
};

}  // namespace s2smix
