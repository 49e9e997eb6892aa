#pragma once

// Reverse-mode automatic differentiation over small dense tensors.
//
// A Graph is an arena of Nodes created in topological (construction) order;
// backward() walks that order in reverse and accumulates with += so shared
// subexpressions and repeated parameter uses are handled exactly. The arena
// is reused across graphs (clear() keeps buffer capacity), which matters for
// training loops that build one graph per token.

#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "seglid/rng.hpp"
#include "seglid/tensor.hpp"

namespace seglid {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

inline void glorot_fill(Tensor& t, int fan_in, int fan_out, Rng& rng) {
  double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (double& v : t.data) v = rng.uniform(-bound, bound);
}

// Owns all trainable parameters of a model in a stable, deterministic order.
class ParamStore {
 public:
  Parameter* add(const std::string& name, std::vector<int> shape) {
    if (find(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    items_.push_back(Parameter{name, Tensor(shape), Tensor(std::move(shape))});
    return &items_.back();
  }

  // Matrices: uniform(-sqrt(6/(fan_in+fan_out)), +...). fan_in = cols, fan_out = rows.
  Parameter* add_glorot(const std::string& name, int rows, int cols, Rng& rng) {
    Parameter* p = add(name, {rows, cols});
    glorot_fill(p->value, cols, rows, rng);
    return p;
  }

  // Biases and other vectors start at zero.
  Parameter* add_zeros(const std::string& name, int dim) { return add(name, {dim}); }

  Parameter* find(const std::string& name) {
    for (auto& p : items_)
      if (p.name == name) return &p;
    return nullptr;
  }

  void zero_grad() {
    for (auto& p : items_) p.grad.fill(0.0);
  }

  size_t size() const { return items_.size(); }
  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

 private:
  std::deque<Parameter> items_;  // stable addresses, insertion order
};

enum class Op : uint8_t {
  kInput,
  kParam,
  kLookup,
  kMatmul,
  kAdd,
  kAddN,
  kSub,
  kCMul,
  kScale,
  kTanh,
  kSigmoid,
  kRelu,
  kLogSoftmax,
  kLogSumExp,
  kConcat,
  kSlice,
  kSum,
  kDropout,
};

struct Node {
  Tensor value;
  Tensor grad;
  Op op = Op::kInput;
  std::vector<Node*> parents;
  Parameter* param = nullptr;
  int a0 = 0;                // slice offset / lookup row
  double c = 0.0;            // scale factor / dropout rate
  std::vector<double> mask;  // dropout keep mask, already scaled
  size_t idx = 0;
};

inline double stable_logsumexp(const double* x, size_t n) {
  double m = kNegInf;
  for (size_t i = 0; i < n; ++i)
    if (x[i] > m) m = x[i];
  if (m == kNegInf) return kNegInf;
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += std::exp(x[i] - m);
  return m + std::log(s);
}

// Unrolled dot product: fixed association order keeps results reproducible
// while letting the compiler vectorize the independent accumulators.
inline double dot(const double* a, const double* b, int n) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  int i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

inline void axpy(double a, const double* x, double* y, int n) {
  for (int i = 0; i < n; ++i) y[i] += a * x[i];
}

class Graph {
 public:
  explicit Graph(bool training = false, Rng* rng = nullptr) : training_(training), rng_(rng) {}

  void set_training(bool t, Rng* rng = nullptr) {
    training_ = t;
    if (rng) rng_ = rng;
  }
  bool training() const { return training_; }

  void clear() { used_ = 0; }
  size_t size() const { return used_; }

  Node* input(Tensor v) {
    check_no_nan(v.data, "input");
    Node* n = fresh(Op::kInput, v.shape);
    n->value.data = std::move(v.data);
    return n;
  }

  Node* input_vec(std::vector<double> v) {
    check_no_nan(v, "input_vec");
    Node* n = fresh(Op::kInput, {static_cast<int>(v.size())});
    n->value.data = std::move(v);
    return n;
  }

  Node* scalar(double v) { return input_vec({v}); }

  Node* param(Parameter* p) {
    Node* n = fresh(Op::kParam, p->value.shape);
    n->value.data = p->value.data;
    n->param = p;
    return n;
  }

  // Row `row` of an embedding table; gradient flows straight into the table.
  Node* lookup(Parameter* table, int row) {
    if (table->value.rank() != 2) throw std::invalid_argument("lookup: table must be rank 2");
    if (row < 0 || row >= table->value.rows()) throw std::out_of_range("lookup: row out of range");
    int d = table->value.cols();
    Node* n = fresh(Op::kLookup, {d});
    const double* src = table->value.data.data() + static_cast<size_t>(row) * d;
    std::copy(src, src + d, n->value.data.begin());
    n->param = table;
    n->a0 = row;
    return n;
  }

  // [m,k]x[k,n] -> [m,n]; [m,k]x[k] -> [m].
  Node* matmul(Node* a, Node* b) {
    if (a->value.rank() != 2) throw std::invalid_argument("matmul: lhs must be rank 2");
    int m = a->value.rows(), k = a->value.cols();
    Node* n;
    if (b->value.rank() == 1) {
      if (b->value.rows() != k) throw std::invalid_argument("matmul: inner dimensions differ");
      n = fresh(Op::kMatmul, {m}, {a, b});
      for (int i = 0; i < m; ++i)
        n->value.data[i] = dot(&a->value.data[static_cast<size_t>(i) * k], b->value.data.data(), k);
    } else {
      if (b->value.rows() != k) throw std::invalid_argument("matmul: inner dimensions differ");
      int c = b->value.cols();
      n = fresh(Op::kMatmul, {m, c}, {a, b});
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < c; ++j) {
          double s = 0;
          for (int t = 0; t < k; ++t) s += a->value.at(i, t) * b->value.at(t, j);
          n->value.at(i, j) = s;
        }
    }
    return n;
  }

  Node* add(Node* a, Node* b) {
    check_same(a, b, "add");
    Node* n = fresh(Op::kAdd, a->value.shape, {a, b});
    for (size_t i = 0; i < n->value.size(); ++i) n->value.data[i] = a->value.data[i] + b->value.data[i];
    return n;
  }

  Node* add_n(const std::vector<Node*>& xs) {
    if (xs.empty()) throw std::invalid_argument("add_n: no inputs");
    for (Node* x : xs) check_same(xs[0], x, "add_n");
    Node* n = fresh(Op::kAddN, xs[0]->value.shape, xs);
    for (size_t i = 0; i < n->value.size(); ++i) {
      double s = 0;
      for (Node* x : xs) s += x->value.data[i];
      n->value.data[i] = s;
    }
    return n;
  }

  Node* sub(Node* a, Node* b) {
    check_same(a, b, "sub");
    Node* n = fresh(Op::kSub, a->value.shape, {a, b});
    for (size_t i = 0; i < n->value.size(); ++i) n->value.data[i] = a->value.data[i] - b->value.data[i];
    return n;
  }

  Node* cmul(Node* a, Node* b) {
    check_same(a, b, "cmul");
    Node* n = fresh(Op::kCMul, a->value.shape, {a, b});
    for (size_t i = 0; i < n->value.size(); ++i) n->value.data[i] = a->value.data[i] * b->value.data[i];
    return n;
  }

  Node* scale(Node* a, double c) {
    Node* n = fresh(Op::kScale, a->value.shape, {a});
    n->c = c;
    for (size_t i = 0; i < n->value.size(); ++i) n->value.data[i] = c * a->value.data[i];
    return n;
  }

  Node* tanh(Node* a) {
    Node* n = fresh(Op::kTanh, a->value.shape, {a});
    for (size_t i = 0; i < n->value.size(); ++i) n->value.data[i] = std::tanh(a->value.data[i]);
    return n;
  }

  Node* sigmoid(Node* a) {
    Node* n = fresh(Op::kSigmoid, a->value.shape, {a});
    for (size_t i = 0; i < n->value.size(); ++i) n->value.data[i] = 1.0 / (1.0 + std::exp(-a->value.data[i]));
    return n;
  }

  Node* relu(Node* a) {
    Node* n = fresh(Op::kRelu, a->value.shape, {a});
    for (size_t i = 0; i < n->value.size(); ++i) n->value.data[i] = a->value.data[i] > 0 ? a->value.data[i] : 0.0;
    return n;
  }

  // Vector -> vector, normalized along axis 0 (the only axis).
  Node* log_softmax(Node* a, int axis = 0) {
    check_vector_axis(a, axis, "log_softmax");
    Node* n = fresh(Op::kLogSoftmax, a->value.shape, {a});
    double lse = stable_logsumexp(a->value.data.data(), a->value.size());
    for (size_t i = 0; i < n->value.size(); ++i) n->value.data[i] = a->value.data[i] - lse;
    return n;
  }

  // Vector -> scalar.
  Node* logsumexp(Node* a, int axis = 0) {
    check_vector_axis(a, axis, "logsumexp");
    Node* n = fresh(Op::kLogSumExp, {1}, {a});
    n->value.data[0] = stable_logsumexp(a->value.data.data(), a->value.size());
    return n;
  }

  // Concatenation of vectors along axis 0. Also used to stack scalar scores.
  Node* concat(const std::vector<Node*>& xs, int axis = 0) {
    if (xs.empty()) throw std::invalid_argument("concat: no inputs");
    if (axis != 0) throw std::invalid_argument("concat: only axis 0 is supported");
    int total = 0;
    for (Node* x : xs) {
      if (x->value.rank() != 1) throw std::invalid_argument("concat: inputs must be vectors");
      total += x->value.rows();
    }
    Node* n = fresh(Op::kConcat, {total}, xs);
    size_t off = 0;
    for (Node* x : xs) {
      std::copy(x->value.data.begin(), x->value.data.end(), n->value.data.begin() + off);
      off += x->value.size();
    }
    return n;
  }

  Node* concat(Node* a, Node* b, int axis = 0) { return concat(std::vector<Node*>{a, b}, axis); }

  Node* slice(Node* a, int offset, int len) {
    if (a->value.rank() != 1) throw std::invalid_argument("slice: input must be a vector");
    if (offset < 0 || len < 1 || offset + len > a->value.rows()) throw std::out_of_range("slice: bad range");
    Node* n = fresh(Op::kSlice, {len}, {a});
    n->a0 = offset;
    std::copy(a->value.data.begin() + offset, a->value.data.begin() + offset + len, n->value.data.begin());
    return n;
  }

  Node* pick(Node* a, int i) { return slice(a, i, 1); }

  Node* sum(Node* a) {
    Node* n = fresh(Op::kSum, {1}, {a});
    double s = 0;
    for (double v : a->value.data) s += v;
    n->value.data[0] = s;
    return n;
  }

  // Inverted dropout: identity when not training (returns the input node).
  Node* dropout(Node* a, double rate) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0, 1)");
    if (!training_ || rate == 0.0) return a;
    if (!rng_) throw std::logic_error("dropout: training graph has no rng");
    Node* n = fresh(Op::kDropout, a->value.shape, {a});
    n->c = rate;
    n->mask.resize(a->value.size());
    double keep = 1.0 - rate;
    for (size_t i = 0; i < n->mask.size(); ++i) {
      n->mask[i] = rng_->bernoulli(keep) ? 1.0 / keep : 0.0;
      n->value.data[i] = a->value.data[i] * n->mask[i];
    }
    return n;
  }

  // Backpropagates d(loss)/d(node) into every node and accumulates parameter
  // gradients into their ParamStore slots (with +=, not overwrite).
  void backward(Node* loss) {
    if (loss->value.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
    loss->grad.data[0] = 1.0;
    for (size_t k = loss->idx + 1; k-- > 0;) {
      Node* n = &pool_[k];
      backprop(n);
    }
  }

 private:
  // NaN is always a bug; -inf is a legitimate log-zero sentinel in lattices.
  static void check_no_nan(const std::vector<double>& v, const char* who) {
    for (double x : v)
      if (std::isnan(x)) throw std::invalid_argument(std::string(who) + ": NaN input");
  }

  void check_same(Node* a, Node* b, const char* who) {
    if (!a->value.same_shape(b->value))
      throw std::invalid_argument(std::string(who) + ": shape mismatch");
  }

  void check_vector_axis(Node* a, int axis, const char* who) {
    if (a->value.rank() != 1) throw std::invalid_argument(std::string(who) + ": input must be a vector");
    if (axis != 0) throw std::invalid_argument(std::string(who) + ": only axis 0 is supported");
  }

  Node* fresh(Op op, const std::vector<int>& shape, std::vector<Node*> parents = {}) {
    if (used_ == pool_.size()) pool_.emplace_back();
    Node* n = &pool_[used_];
    n->idx = used_++;
    n->op = op;
    n->value.reset(shape);
    n->grad.reset(shape);
    n->parents = std::move(parents);
    n->param = nullptr;
    n->a0 = 0;
    n->c = 0.0;
    return n;
  }

  void backprop(Node* n) {
    const double* g = n->grad.data.data();
    switch (n->op) {
      case Op::kInput:
        break;
      case Op::kParam:
        for (size_t i = 0; i < n->grad.size(); ++i) n->param->grad.data[i] += g[i];
        break;
      case Op::kLookup: {
        int d = n->param->value.cols();
        double* dst = n->param->grad.data.data() + static_cast<size_t>(n->a0) * d;
        for (int i = 0; i < d; ++i) dst[i] += g[i];
        break;
      }
      case Op::kMatmul: {
        Node* a = n->parents[0];
        Node* b = n->parents[1];
        int m = a->value.rows(), k = a->value.cols();
        if (b->value.rank() == 1) {
          for (int i = 0; i < m; ++i) {
            axpy(g[i], b->value.data.data(), &a->grad.data[static_cast<size_t>(i) * k], k);
            axpy(g[i], &a->value.data[static_cast<size_t>(i) * k], b->grad.data.data(), k);
          }
        } else {
          int c = b->value.cols();
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < c; ++j) {
              double gij = n->grad.at(i, j);
              for (int t = 0; t < k; ++t) {
                a->grad.at(i, t) += gij * b->value.at(t, j);
                b->grad.at(t, j) += gij * a->value.at(i, t);
              }
            }
        }
        break;
      }
      case Op::kAdd:
        for (size_t i = 0; i < n->grad.size(); ++i) {
          n->parents[0]->grad.data[i] += g[i];
          n->parents[1]->grad.data[i] += g[i];
        }
        break;
      case Op::kAddN:
        for (Node* p : n->parents)
          for (size_t i = 0; i < n->grad.size(); ++i) p->grad.data[i] += g[i];
        break;
      case Op::kSub:
        for (size_t i = 0; i < n->grad.size(); ++i) {
          n->parents[0]->grad.data[i] += g[i];
          n->parents[1]->grad.data[i] -= g[i];
        }
        break;
      case Op::kCMul:
        for (size_t i = 0; i < n->grad.size(); ++i) {
          n->parents[0]->grad.data[i] += g[i] * n->parents[1]->value.data[i];
          n->parents[1]->grad.data[i] += g[i] * n->parents[0]->value.data[i];
        }
        break;
      case Op::kScale:
        for (size_t i = 0; i < n->grad.size(); ++i) n->parents[0]->grad.data[i] += n->c * g[i];
        break;
      case Op::kTanh:
        for (size_t i = 0; i < n->grad.size(); ++i) {
          double y = n->value.data[i];
          n->parents[0]->grad.data[i] += g[i] * (1.0 - y * y);
        }
        break;
      case Op::kSigmoid:
        for (size_t i = 0; i < n->grad.size(); ++i) {
          double y = n->value.data[i];
          n->parents[0]->grad.data[i] += g[i] * y * (1.0 - y);
        }
        break;
      case Op::kRelu:
        for (size_t i = 0; i < n->grad.size(); ++i)
          if (n->parents[0]->value.data[i] > 0) n->parents[0]->grad.data[i] += g[i];
        break;
      case Op::kLogSoftmax: {
        double gsum = 0;
        for (size_t i = 0; i < n->grad.size(); ++i) gsum += g[i];
        for (size_t i = 0; i < n->grad.size(); ++i)
          n->parents[0]->grad.data[i] += g[i] - std::exp(n->value.data[i]) * gsum;
        break;
      }
      case Op::kLogSumExp: {
        Node* a = n->parents[0];
        double lse = n->value.data[0];
        if (lse == kNegInf) break;
        for (size_t i = 0; i < a->value.size(); ++i)
          a->grad.data[i] += g[0] * std::exp(a->value.data[i] - lse);
        break;
      }
      case Op::kConcat: {
        size_t off = 0;
        for (Node* p : n->parents) {
          for (size_t i = 0; i < p->grad.size(); ++i) p->grad.data[i] += g[off + i];
          off += p->grad.size();
        }
        break;
      }
      case Op::kSlice:
        for (size_t i = 0; i < n->grad.size(); ++i) n->parents[0]->grad.data[n->a0 + i] += g[i];
        break;
      case Op::kSum:
        for (size_t i = 0; i < n->parents[0]->grad.size(); ++i) n->parents[0]->grad.data[i] += g[0];
        break;
      case Op::kDropout:
        for (size_t i = 0; i < n->grad.size(); ++i) n->parents[0]->grad.data[i] += g[i] * n->mask[i];
        break;
    }
  }

  std::deque<Node> pool_;
  size_t used_ = 0;
  bool training_ = false;
  Rng* rng_ = nullptr;
};

}  // namespace seglid
