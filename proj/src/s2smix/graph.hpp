#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "s2smix/tensor.hpp"

namespace s2smix {

// Append-only reverse-mode tape. Each op records its inputs and cached
// forward value; backward() walks the tape in reverse, accumulating exact
// vector-Jacobian products into per-node gradient buffers. A fresh graph is
// built per training example; graphs are never reused across steps.
//
// Node handles are plain ints (indices into the tape).

enum class Op : uint8_t {
  kLeaf,
  kMatmul,
  kAdd,
  kMul,
  kTanh,
  kSigmoid,
  kConcat,
  kSlice,
  kLookupRow,
  kDropoutMask,
  kSoftmax,
  kLogSoftmax,
  kLogSumExp,
  kPick,
  kDot,
  kWeightedSumRows,
  kSmoothedPick,
};

const char* op_name(Op op);

class Graph {
 public:
  // Leaves hold externally supplied values (parameters, inputs, constants).
  int leaf(Tensor value);

  // matmul: (m,k)x(k,n)->(m,n) or (m,k)x(k)->(m).
  int matmul(int a, int b);
  int add(int a, int b);        // elementwise, shapes must match
  int mul(int a, int b);        // elementwise (Hadamard)
  int tanh(int a);
  int sigmoid(int a);
  int concat(const std::vector<int>& parts);   // vectors (incl. scalars)
  int slice(int a, int offset, int len);       // vector range view
  int lookup_row(int table, int row);          // matrix row -> vector
  int dropout_mask(int a, std::vector<double> mask);  // elementwise by mask
  int softmax(int a);      // stable, max-subtraction
  int log_softmax(int a);  // stable
  int log_sum_exp(int a);  // vector -> scalar, stable
  int pick(int a, int index);                  // vector element -> scalar
  int dot(int a, int b);                       // vectors -> scalar
  // y = sum_i weights[i] * rows[i]; weights is a vector node of length
  // rows.size(), each row a vector node of equal length.
  int weighted_sum_rows(int weights, const std::vector<int>& rows);
  // Label-smoothed log-probability selection over a log-distribution:
  // (1-eps) * lp[truth] + eps/(V-1) * sum_{j != truth} lp[j].
  int smoothed_pick(int log_probs, int truth, double eps);

  // Reverse-mode pass from a scalar loss node. Populates gradient buffers of
  // every node the loss depends on; leaves not reached keep empty buffers.
  void backward(int loss);

  const Tensor& value(int id) const { return nodes_[static_cast<size_t>(id)].value; }
  // Gradient of the last backward() w.r.t. node id; zeros if unreached.
  Tensor grad(int id) const;

  size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  struct Node {
    Op op;
    std::vector<int> inputs;
    Tensor value;
    Tensor grad;  // lazily allocated during backward
    int index = 0;       // lookup row / pick index / slice offset
    int extent = 0;      // slice length
    double eps = 0.0;    // smoothed_pick
    std::vector<double> mask;  // dropout
  };

  int push(Node n);
  Node& node(int id) { return nodes_[static_cast<size_t>(id)]; }
  const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }
  Tensor& grad_buffer(int id);
  void check_vector(int id, const char* who) const;

  std::vector<Node> nodes_;
};

// Stable softmax / log-sum-exp on raw values; the graph ops and the
// forward-only code paths (posteriors, beam expansion) share these kernels.
std::vector<double> softmax_values(const std::vector<double>& v);
std::vector<double> log_softmax_values(const std::vector<double>& v);
double log_sum_exp_values(const std::vector<double>& v);

}  // namespace s2smix
