#pragma once

#include <span>
#include <vector>

#include "s2smix/model.hpp"

namespace s2smix {

// A training example in id space (targets exclude BOS/EOS; those are added
// at the model boundary).
struct IdPair {
  std::vector<int> src;
  std::vector<int> tgt;
};

using Batch = std::vector<IdPair>;

std::vector<int> with_eos(std::span<const int> tgt);

// Posterior over components from per-component log-likelihoods (Eq. 16
// shape): softmax over ell. Invariant to adding a constant to every entry.
std::vector<double> posterior_from_logliks(const std::vector<double>& ell);

// Per-pair marginal loss from per-component log-likelihoods:
// -log sum_z exp(ell_z), the uniform-mixing constant log(1/K) omitted.
double marginal_loss_from_logliks(const std::vector<double>& ell);

// Forward-only per-component log-likelihoods ell_z(y|x), z = 1..K. Dropout
// is never applied here; label smoothing is applied when eps > 0.
std::vector<double> component_logliks(const ModelParams& params, const IdPair& pair, double eps = 0.0);

// Posterior P(z | x, y) (Eq. 16 is the eps = 0 case; training-side callers
// pass the objective's eps so that the EM identity stays exact).
std::vector<double> posterior(const ModelParams& params, const IdPair& pair, double eps = 0.0);

// Label-smoothed negative log-likelihood of a logits sequence: per token
// -sum_{y'} q(y') log softmax(logits)[y'] with q(truth) = 1 - eps and
// q(other) = eps / (V - 1), summed over positions.
double label_smoothed_nll(const std::vector<Tensor>& logits_sequence, const std::vector<int>& y,
                          double eps);

// Builds the per-pair marginal conditional log-likelihood loss node
// -log sum_z exp(ell_z) on the bound graph; the encoder is shared across
// components. Returns the loss node and the per-component ell nodes.
struct MarginalLossNodes {
  int loss = -1;
  std::vector<int> ell;
};

MarginalLossNodes marginal_loss_nodes(BoundModel& m, const IdPair& pair, double eps,
                                      MaskSource* drop);

// Batch marginal CLL loss value (sum over pairs).
double marginal_cll_loss(const ModelParams& params, const Batch& batch, double eps = 0.0,
                         MaskSource* drop = nullptr);

// Gradient of the batch marginal CLL loss via per-pair backward passes.
GradientMap marginal_cll_gradient(const ModelParams& params, const Batch& batch, double eps,
                                  MaskSource* drop, double* loss_out = nullptr);

// Eq. 15 route: posterior-weighted sum of per-component gradients of
// -ell_z(y|x). Equals marginal_cll_gradient exactly (up to roundoff) when no
// dropout is applied. A mask source, if given, affects only the gradient
// passes; the posterior weights always come from clean forward passes.
GradientMap exact_em_gradient(const ModelParams& params, const Batch& batch, double eps = 0.0,
                              double* loss_out = nullptr, MaskSource* drop = nullptr);

}  // namespace s2smix
