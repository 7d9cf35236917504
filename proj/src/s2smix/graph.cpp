#include "s2smix/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "s2smix/error.hpp"

namespace s2smix {

namespace {

// Error messages are built lazily; these checks sit on the hot path.
template <typename MakeMsg>
inline void require(bool cond, MakeMsg&& make_msg) {
  if (!cond) throw NumericError(make_msg());
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kLeaf: return "leaf";
    case Op::kMatmul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kMul: return "mul";
    case Op::kTanh: return "tanh";
    case Op::kSigmoid: return "sigmoid";
    case Op::kConcat: return "concat";
    case Op::kSlice: return "slice";
    case Op::kLookupRow: return "lookup_row";
    case Op::kDropoutMask: return "dropout_mask";
    case Op::kSoftmax: return "softmax";
    case Op::kLogSoftmax: return "log_softmax";
    case Op::kLogSumExp: return "log_sum_exp";
    case Op::kPick: return "pick";
    case Op::kDot: return "dot";
    case Op::kWeightedSumRows: return "weighted_sum_rows";
    case Op::kSmoothedPick: return "smoothed_pick";
  }
  return "?";
}

std::vector<double> softmax_values(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - m);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

std::vector<double> log_softmax_values(const std::vector<double>& v) {
  const double lse = log_sum_exp_values(v);
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = v[i] - lse;
  return out;
}

double log_sum_exp_values(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double x : v) sum += std::exp(x - m);
  return m + std::log(sum);
}

int Graph::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

void Graph::check_vector(int id, const char* who) const {
  if (!node(id).value.is_vector()) {
    throw NumericError(std::string(who) + ": expected a vector, got shape " +
                       shape_str(node(id).value.shape));
  }
}

int Graph::leaf(Tensor value) {
  Node n;
  n.op = Op::kLeaf;
  n.value = std::move(value);
  return push(std::move(n));
}

int Graph::matmul(int a, int b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require(A.is_matrix(), [&] { return std::string("matmul: left operand must be a matrix, got " + shape_str(A.shape)); });
  const int m = A.rows(), k = A.cols();
  Node n;
  n.op = Op::kMatmul;
  n.inputs = {a, b};
  if (B.is_vector()) {
    require(B.dim(0) == k, [&] { return std::string("matmul: shape mismatch " + shape_str(A.shape) + " x " + shape_str(B.shape)); });
    Tensor y({m});
    const double* x = B.values.data();
    for (int i = 0; i < m; ++i) {
      const double* row = A.values.data() + static_cast<size_t>(i) * k;
      // Four independent accumulators keep the FP pipeline full.
      double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
      int j = 0;
      for (; j + 4 <= k; j += 4) {
        a0 += row[j] * x[j];
        a1 += row[j + 1] * x[j + 1];
        a2 += row[j + 2] * x[j + 2];
        a3 += row[j + 3] * x[j + 3];
      }
      for (; j < k; ++j) a0 += row[j] * x[j];
      y.values[static_cast<size_t>(i)] = (a0 + a1) + (a2 + a3);
    }
    n.value = std::move(y);
  } else {
    require(B.is_matrix() && B.rows() == k, [&] { return std::string("matmul: shape mismatch " + shape_str(A.shape) + " x " + shape_str(B.shape)); });
    const int c = B.cols();
    Tensor y({m, c});
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < k; ++j) {
        const double aij = A.at(i, j);
        if (aij == 0.0) continue;
        const double* brow = B.values.data() + static_cast<size_t>(j) * c;
        double* yrow = y.values.data() + static_cast<size_t>(i) * c;
        for (int t = 0; t < c; ++t) yrow[t] += aij * brow[t];
      }
    }
    n.value = std::move(y);
  }
  return push(std::move(n));
}

int Graph::add(int a, int b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require(A.same_shape(B), [&] { return std::string("add: shape mismatch " + shape_str(A.shape) + " vs " + shape_str(B.shape)); });
  Node n;
  n.op = Op::kAdd;
  n.inputs = {a, b};
  n.value = A;
  for (size_t i = 0; i < n.value.values.size(); ++i) n.value.values[i] += B.values[i];
  return push(std::move(n));
}

int Graph::mul(int a, int b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require(A.same_shape(B), [&] { return std::string("mul: shape mismatch " + shape_str(A.shape) + " vs " + shape_str(B.shape)); });
  Node n;
  n.op = Op::kMul;
  n.inputs = {a, b};
  n.value = A;
  for (size_t i = 0; i < n.value.values.size(); ++i) n.value.values[i] *= B.values[i];
  return push(std::move(n));
}

int Graph::tanh(int a) {
  Node n;
  n.op = Op::kTanh;
  n.inputs = {a};
  n.value = value(a);
  for (double& v : n.value.values) v = std::tanh(v);
  return push(std::move(n));
}

int Graph::sigmoid(int a) {
  Node n;
  n.op = Op::kSigmoid;
  n.inputs = {a};
  n.value = value(a);
  for (double& v : n.value.values) v = 1.0 / (1.0 + std::exp(-v));
  return push(std::move(n));
}

int Graph::concat(const std::vector<int>& parts) {
  require(!parts.empty(), [&] { return std::string("concat: needs at least one input"); });
  int total = 0;
  for (int p : parts) {
    check_vector(p, "concat");
    total += value(p).dim(0);
  }
  Node n;
  n.op = Op::kConcat;
  n.inputs = parts;
  Tensor y({total});
  int off = 0;
  for (int p : parts) {
    const Tensor& t = value(p);
    std::copy(t.values.begin(), t.values.end(), y.values.begin() + off);
    off += t.dim(0);
  }
  n.value = std::move(y);
  return push(std::move(n));
}

int Graph::slice(int a, int offset, int len) {
  check_vector(a, "slice");
  const Tensor& A = value(a);
  require(offset >= 0 && len > 0 && offset + len <= A.dim(0), [&] { return std::string("slice: range [" + std::to_string(offset) + ", " + std::to_string(offset + len) + ") out of bounds for shape " + shape_str(A.shape)); });
  Node n;
  n.op = Op::kSlice;
  n.inputs = {a};
  n.index = offset;
  n.extent = len;
  Tensor y({len});
  std::copy(A.values.begin() + offset, A.values.begin() + offset + len, y.values.begin());
  n.value = std::move(y);
  return push(std::move(n));
}

int Graph::lookup_row(int table, int row) {
  const Tensor& T = value(table);
  require(T.is_matrix(), [&] { return std::string("lookup_row: table must be a matrix"); });
  require(row >= 0 && row < T.rows(), [&] { return std::string("lookup_row: row " + std::to_string(row) + " out of range for " + shape_str(T.shape)); });
  Node n;
  n.op = Op::kLookupRow;
  n.inputs = {table};
  n.index = row;
  Tensor y({T.cols()});
  const double* src = T.values.data() + static_cast<size_t>(row) * T.cols();
  std::copy(src, src + T.cols(), y.values.begin());
  n.value = std::move(y);
  return push(std::move(n));
}

int Graph::dropout_mask(int a, std::vector<double> mask) {
  const Tensor& A = value(a);
  require(mask.size() == A.values.size(), [&] { return std::string("dropout_mask: mask size " + std::to_string(mask.size()) + " does not match shape " + shape_str(A.shape)); });
  Node n;
  n.op = Op::kDropoutMask;
  n.inputs = {a};
  n.value = A;
  for (size_t i = 0; i < mask.size(); ++i) n.value.values[i] *= mask[i];
  n.mask = std::move(mask);
  return push(std::move(n));
}

int Graph::softmax(int a) {
  check_vector(a, "softmax");
  Node n;
  n.op = Op::kSoftmax;
  n.inputs = {a};
  n.value = Tensor({value(a).dim(0)}, softmax_values(value(a).values));
  return push(std::move(n));
}

int Graph::log_softmax(int a) {
  check_vector(a, "log_softmax");
  Node n;
  n.op = Op::kLogSoftmax;
  n.inputs = {a};
  n.value = Tensor({value(a).dim(0)}, log_softmax_values(value(a).values));
  return push(std::move(n));
}

int Graph::log_sum_exp(int a) {
  check_vector(a, "log_sum_exp");
  Node n;
  n.op = Op::kLogSumExp;
  n.inputs = {a};
  n.value = Tensor::scalar(log_sum_exp_values(value(a).values));
  return push(std::move(n));
}

int Graph::pick(int a, int index) {
  check_vector(a, "pick");
  require(index >= 0 && index < value(a).dim(0), [&] { return std::string("pick: index " + std::to_string(index) + " out of range for " + shape_str(value(a).shape)); });
  Node n;
  n.op = Op::kPick;
  n.inputs = {a};
  n.index = index;
  n.value = Tensor::scalar(value(a).at(index));
  return push(std::move(n));
}

int Graph::dot(int a, int b) {
  check_vector(a, "dot");
  check_vector(b, "dot");
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  require(A.dim(0) == B.dim(0), [&] { return std::string("dot: shape mismatch " + shape_str(A.shape) + " vs " + shape_str(B.shape)); });
  double acc = 0.0;
  for (size_t i = 0; i < A.values.size(); ++i) acc += A.values[i] * B.values[i];
  Node n;
  n.op = Op::kDot;
  n.inputs = {a, b};
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

int Graph::weighted_sum_rows(int weights, const std::vector<int>& rows) {
  check_vector(weights, "weighted_sum_rows");
  require(!rows.empty(), [&] { return std::string("weighted_sum_rows: needs at least one row"); });
  require(value(weights).dim(0) == static_cast<int>(rows.size()), [&] { return std::string("weighted_sum_rows: weight count " + shape_str(value(weights).shape) + " vs " + std::to_string(rows.size()) + " rows"); });
  const int width = value(rows[0]).dim(0);
  Node n;
  n.op = Op::kWeightedSumRows;
  n.inputs.reserve(rows.size() + 1);
  n.inputs.push_back(weights);
  Tensor y({width});
  const Tensor& w = value(weights);
  for (size_t i = 0; i < rows.size(); ++i) {
    check_vector(rows[i], "weighted_sum_rows");
    require(value(rows[i]).dim(0) == width, [&] { return std::string("weighted_sum_rows: row width mismatch"); });
    n.inputs.push_back(rows[i]);
    const double wi = w.at(static_cast<int64_t>(i));
    const Tensor& r = value(rows[i]);
    for (int j = 0; j < width; ++j) y.values[static_cast<size_t>(j)] += wi * r.at(j);
  }
  n.value = std::move(y);
  return push(std::move(n));
}

int Graph::smoothed_pick(int log_probs, int truth, double eps) {
  check_vector(log_probs, "smoothed_pick");
  const Tensor& lp = value(log_probs);
  const int v = lp.dim(0);
  require(v >= 2, [&] { return std::string("smoothed_pick: vocabulary size must be >= 2, got " + std::to_string(v)); });
  require(truth >= 0 && truth < v, [&] { return std::string("smoothed_pick: truth index out of range"); });
  require(eps >= 0.0 && eps < 1.0, [&] { return std::string("smoothed_pick: eps must lie in [0, 1)"); });
  const double off = eps / (v - 1);
  double acc = 0.0;
  for (int j = 0; j < v; ++j) acc += (j == truth ? 1.0 - eps : off) * lp.at(j);
  Node n;
  n.op = Op::kSmoothedPick;
  n.inputs = {log_probs};
  n.index = truth;
  n.eps = eps;
  n.value = Tensor::scalar(acc);
  return push(std::move(n));
}

Tensor& Graph::grad_buffer(int id) {
  Node& n = node(id);
  if (n.grad.values.empty()) n.grad = Tensor::zeros(n.value.shape);
  return n.grad;
}

Tensor Graph::grad(int id) const {
  const Node& n = node(id);
  if (n.grad.values.empty()) return Tensor::zeros(n.value.shape);
  return n.grad;
}

void Graph::backward(int loss) {
  require(loss >= 0 && loss < static_cast<int>(nodes_.size()), [&] { return std::string("backward: invalid loss node"); });
  require(node(loss).value.is_scalar(), [&] { return std::string("backward: loss must be a scalar, got shape " + shape_str(node(loss).value.shape)); });
  for (Node& n : nodes_) n.grad.values.clear();
  grad_buffer(loss).values[0] = 1.0;

  for (int id = loss; id >= 0; --id) {
    Node& n = node(id);
    if (n.grad.values.empty()) continue;  // loss does not depend on this node
    const Tensor& g = n.grad;
    switch (n.op) {
      case Op::kLeaf:
        break;
      case Op::kMatmul: {
        const Tensor& A = value(n.inputs[0]);
        const Tensor& B = value(n.inputs[1]);
        Tensor& ga = grad_buffer(n.inputs[0]);
        Tensor& gb = grad_buffer(n.inputs[1]);
        const int m = A.rows(), k = A.cols();
        if (B.is_vector()) {
          const double* x = B.values.data();
          double* gx = gb.values.data();
          for (int i = 0; i < m; ++i) {
            const double gi = g.at(i);
            if (gi == 0.0) continue;
            double* garow = ga.values.data() + static_cast<size_t>(i) * k;
            const double* arow = A.values.data() + static_cast<size_t>(i) * k;
            for (int j = 0; j < k; ++j) garow[j] += gi * x[j];
            for (int j = 0; j < k; ++j) gx[j] += gi * arow[j];
          }
        } else {
          const int c = B.cols();
          // gA = g B^T ; gB = A^T g
          for (int i = 0; i < m; ++i) {
            const double* grow = g.values.data() + static_cast<size_t>(i) * c;
            for (int j = 0; j < k; ++j) {
              const double* brow = B.values.data() + static_cast<size_t>(j) * c;
              double acc = 0.0;
              for (int t = 0; t < c; ++t) acc += grow[t] * brow[t];
              ga.at(i, j) += acc;
            }
          }
          for (int j = 0; j < k; ++j) {
            double* gbrow = gb.values.data() + static_cast<size_t>(j) * c;
            for (int i = 0; i < m; ++i) {
              const double aij = A.at(i, j);
              if (aij == 0.0) continue;
              const double* grow = g.values.data() + static_cast<size_t>(i) * c;
              for (int t = 0; t < c; ++t) gbrow[t] += aij * grow[t];
            }
          }
        }
        break;
      }
      case Op::kAdd: {
        Tensor& ga = grad_buffer(n.inputs[0]);
        Tensor& gb = grad_buffer(n.inputs[1]);
        for (size_t i = 0; i < g.values.size(); ++i) {
          ga.values[i] += g.values[i];
          gb.values[i] += g.values[i];
        }
        break;
      }
      case Op::kMul: {
        const Tensor& A = value(n.inputs[0]);
        const Tensor& B = value(n.inputs[1]);
        Tensor& ga = grad_buffer(n.inputs[0]);
        Tensor& gb = grad_buffer(n.inputs[1]);
        for (size_t i = 0; i < g.values.size(); ++i) {
          ga.values[i] += g.values[i] * B.values[i];
          gb.values[i] += g.values[i] * A.values[i];
        }
        break;
      }
      case Op::kTanh: {
        Tensor& ga = grad_buffer(n.inputs[0]);
        for (size_t i = 0; i < g.values.size(); ++i) {
          const double y = n.value.values[i];
          ga.values[i] += g.values[i] * (1.0 - y * y);
        }
        break;
      }
      case Op::kSigmoid: {
        Tensor& ga = grad_buffer(n.inputs[0]);
        for (size_t i = 0; i < g.values.size(); ++i) {
          const double y = n.value.values[i];
          ga.values[i] += g.values[i] * y * (1.0 - y);
        }
        break;
      }
      case Op::kConcat: {
        int off = 0;
        for (int p : n.inputs) {
          Tensor& gp = grad_buffer(p);
          const int len = gp.dim(0);
          for (int i = 0; i < len; ++i) gp.values[static_cast<size_t>(i)] += g.values[static_cast<size_t>(off + i)];
          off += len;
        }
        break;
      }
      case Op::kSlice: {
        Tensor& ga = grad_buffer(n.inputs[0]);
        for (int i = 0; i < n.extent; ++i) {
          ga.values[static_cast<size_t>(n.index + i)] += g.values[static_cast<size_t>(i)];
        }
        break;
      }
      case Op::kLookupRow: {
        Tensor& gt = grad_buffer(n.inputs[0]);
        const int c = gt.cols();
        double* row = gt.values.data() + static_cast<size_t>(n.index) * c;
        for (int i = 0; i < c; ++i) row[i] += g.values[static_cast<size_t>(i)];
        break;
      }
      case Op::kDropoutMask: {
        Tensor& ga = grad_buffer(n.inputs[0]);
        for (size_t i = 0; i < g.values.size(); ++i) ga.values[i] += g.values[i] * n.mask[i];
        break;
      }
      case Op::kSoftmax: {
        Tensor& ga = grad_buffer(n.inputs[0]);
        const std::vector<double>& y = n.value.values;
        double gy = 0.0;
        for (size_t i = 0; i < y.size(); ++i) gy += g.values[i] * y[i];
        for (size_t i = 0; i < y.size(); ++i) ga.values[i] += y[i] * (g.values[i] - gy);
        break;
      }
      case Op::kLogSoftmax: {
        Tensor& ga = grad_buffer(n.inputs[0]);
        double gsum = 0.0;
        for (double gv : g.values) gsum += gv;
        for (size_t i = 0; i < g.values.size(); ++i) {
          ga.values[i] += g.values[i] - std::exp(n.value.values[i]) * gsum;
        }
        break;
      }
      case Op::kLogSumExp: {
        Tensor& ga = grad_buffer(n.inputs[0]);
        const std::vector<double> s = softmax_values(value(n.inputs[0]).values);
        const double g0 = g.values[0];
        for (size_t i = 0; i < s.size(); ++i) ga.values[i] += g0 * s[i];
        break;
      }
      case Op::kPick: {
        Tensor& ga = grad_buffer(n.inputs[0]);
        ga.values[static_cast<size_t>(n.index)] += g.values[0];
        break;
      }
      case Op::kDot: {
        const Tensor& A = value(n.inputs[0]);
        const Tensor& B = value(n.inputs[1]);
        Tensor& ga = grad_buffer(n.inputs[0]);
        Tensor& gb = grad_buffer(n.inputs[1]);
        const double g0 = g.values[0];
        for (size_t i = 0; i < A.values.size(); ++i) {
          ga.values[i] += g0 * B.values[i];
          gb.values[i] += g0 * A.values[i];
        }
        break;
      }
      case Op::kWeightedSumRows: {
        const Tensor& w = value(n.inputs[0]);
        Tensor& gw = grad_buffer(n.inputs[0]);
        const int rows = static_cast<int>(n.inputs.size()) - 1;
        for (int i = 0; i < rows; ++i) {
          const Tensor& r = value(n.inputs[static_cast<size_t>(i) + 1]);
          Tensor& gr = grad_buffer(n.inputs[static_cast<size_t>(i) + 1]);
          double acc = 0.0;
          const double wi = w.at(i);
          for (size_t j = 0; j < g.values.size(); ++j) {
            acc += g.values[j] * r.values[j];
            gr.values[j] += wi * g.values[j];
          }
          gw.values[static_cast<size_t>(i)] += acc;
        }
        break;
      }
      case Op::kSmoothedPick: {
        Tensor& ga = grad_buffer(n.inputs[0]);
        const int v = static_cast<int>(ga.values.size());
        const double off = n.eps / (v - 1);
        const double g0 = g.values[0];
        for (int j = 0; j < v; ++j) {
          ga.values[static_cast<size_t>(j)] += g0 * (j == n.index ? 1.0 - n.eps : off);
        }
        break;
      }
    }
  }
}

}  // namespace s2smix
