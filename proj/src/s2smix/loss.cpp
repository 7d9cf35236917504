#include "s2smix/loss.hpp"

#include <cmath>

#include "s2smix/error.hpp"

namespace s2smix {

std::vector<int> with_eos(std::span<const int> tgt) {
  std::vector<int> out(tgt.begin(), tgt.end());
  out.push_back(kEosId);
  return out;
}

std::vector<double> posterior_from_logliks(const std::vector<double>& ell) {
  if (ell.empty()) throw NumericError("posterior: empty log-likelihood vector");
  return softmax_values(ell);
}

double marginal_loss_from_logliks(const std::vector<double>& ell) {
  if (ell.empty()) throw NumericError("marginal loss: empty log-likelihood vector");
  return -log_sum_exp_values(ell);
}

std::vector<double> component_logliks(const ModelParams& params, const IdPair& pair, double eps) {
  const int k = params.config.effective_components();
  const std::vector<int> tgt = with_eos(pair.tgt);
  std::vector<double> ell;
  ell.reserve(static_cast<size_t>(k));
  Graph g;
  BoundModel m = bind_model(g, params);
  const EncoderOutput enc = encode(m, pair.src, nullptr);
  for (int z = 1; z <= k; ++z) {
    const SequenceScoreNodes nodes = sequence_score_nodes(m, enc, tgt, z, eps, nullptr);
    ell.push_back(g.value(nodes.total).values[0]);
  }
  return ell;
}

std::vector<double> posterior(const ModelParams& params, const IdPair& pair, double eps) {
  return posterior_from_logliks(component_logliks(params, pair, eps));
}

double label_smoothed_nll(const std::vector<Tensor>& logits_sequence, const std::vector<int>& y,
                          double eps) {
  if (logits_sequence.size() != y.size()) {
    throw NumericError("label_smoothed_nll: logits/token count mismatch");
  }
  if (!logits_sequence.empty() && logits_sequence[0].dim(0) < 2) {
    throw NumericError("label_smoothed_nll: vocabulary size must be >= 2");
  }
  Graph g;
  double total = 0.0;
  for (size_t t = 0; t < y.size(); ++t) {
    if (y[t] == kPadId) continue;  // padding positions carry no loss
    const int lp = g.log_softmax(g.leaf(logits_sequence[t]));
    const int term = eps > 0.0 ? g.smoothed_pick(lp, y[t], eps) : g.pick(lp, y[t]);
    total -= g.value(term).values[0];
  }
  return total;
}

MarginalLossNodes marginal_loss_nodes(BoundModel& m, const IdPair& pair, double eps,
                                      MaskSource* drop) {
  Graph& g = *m.g;
  const int k = m.config().effective_components();
  const std::vector<int> tgt = with_eos(pair.tgt);
  const EncoderOutput enc = encode(m, pair.src, drop);
  MarginalLossNodes out;
  out.ell.reserve(static_cast<size_t>(k));
  for (int z = 1; z <= k; ++z) {
    out.ell.push_back(sequence_score_nodes(m, enc, tgt, z, eps, drop).total);
  }
  const int stacked = g.concat(out.ell);
  const int lse = g.log_sum_exp(stacked);
  const int minus_one = g.leaf(Tensor::scalar(-1.0));
  out.loss = g.dot(lse, minus_one);
  return out;
}

double marginal_cll_loss(const ModelParams& params, const Batch& batch, double eps,
                         MaskSource* drop) {
  double total = 0.0;
  for (const IdPair& pair : batch) {
    Graph g;
    BoundModel m = bind_model(g, params);
    if (drop != nullptr) drop->begin_pass();
    total += g.value(marginal_loss_nodes(m, pair, eps, drop).loss).values[0];
  }
  return total;
}

GradientMap marginal_cll_gradient(const ModelParams& params, const Batch& batch, double eps,
                                  MaskSource* drop, double* loss_out) {
  GradientMap acc = GradientMap::zeros_like(params.set);
  double total = 0.0;
  for (const IdPair& pair : batch) {
    Graph g;
    BoundModel m = bind_model(g, params);
    if (drop != nullptr) drop->begin_pass();
    const MarginalLossNodes nodes = marginal_loss_nodes(m, pair, eps, drop);
    const double loss = g.value(nodes.loss).values[0];
    if (!std::isfinite(loss)) throw NumericError("marginal CLL loss is not finite");
    total += loss;
    g.backward(nodes.loss);
    acc.accumulate(GradientMap::from_graph(g, m.bound));
  }
  if (loss_out != nullptr) *loss_out = total;
  return acc;
}

GradientMap exact_em_gradient(const ModelParams& params, const Batch& batch, double eps,
                              double* loss_out, MaskSource* drop) {
  GradientMap acc = GradientMap::zeros_like(params.set);
  const int k = params.config.effective_components();
  double total = 0.0;
  for (const IdPair& pair : batch) {
    const std::vector<double> ell = component_logliks(params, pair, eps);
    const std::vector<double> post = posterior_from_logliks(ell);
    total += marginal_loss_from_logliks(ell);
    const std::vector<int> tgt = with_eos(pair.tgt);
    for (int z = 1; z <= k; ++z) {
      Graph g;
      BoundModel m = bind_model(g, params);
      if (drop != nullptr) drop->begin_pass();
      const EncoderOutput enc = encode(m, pair.src, drop);
      const SequenceScoreNodes nodes = sequence_score_nodes(m, enc, tgt, z, eps, drop);
      g.backward(nodes.total);
      // d/dtheta of the loss -log sum_z exp(ell_z) is -sum_z P(z|x,y) d ell_z.
      acc.accumulate(GradientMap::from_graph(g, m.bound), -post[static_cast<size_t>(z - 1)]);
    }
  }
  if (loss_out != nullptr) *loss_out = total;
  return acc;
}

}  // namespace s2smix
