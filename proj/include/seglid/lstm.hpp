#pragma once

// LSTM cell with fused gate matrices, plus a bidirectional encoder helper.
// Gate order in the fused pre-activation vector: input, forget, output, update.

#include <string>
#include <vector>

#include "seglid/graph.hpp"

namespace seglid {

struct LstmParams {
  Parameter* Wx = nullptr;  // [4H, In]
  Parameter* Wh = nullptr;  // [4H, H]
  Parameter* b = nullptr;   // [4H]
  int input_dim = 0;
  int hidden = 0;

  LstmParams() = default;

  static LstmParams create(ParamStore& store, const std::string& prefix, int input, int hidden, Rng& rng) {
    LstmParams p;
    p.input_dim = input;
    p.hidden = hidden;
    p.Wx = store.add(prefix + ".Wx", {4 * hidden, input});
    glorot_fill(p.Wx->value, input, hidden, rng);  // per-gate fan: input -> hidden
    p.Wh = store.add(prefix + ".Wh", {4 * hidden, hidden});
    glorot_fill(p.Wh->value, hidden, hidden, rng);
    p.b = store.add_zeros(prefix + ".b", 4 * hidden);
    return p;
  }

  static LstmParams bind(ParamStore& store, const std::string& prefix) {
    LstmParams p;
    p.Wx = store.find(prefix + ".Wx");
    p.Wh = store.find(prefix + ".Wh");
    p.b = store.find(prefix + ".b");
    if (!p.Wx || !p.Wh || !p.b) throw std::runtime_error("missing lstm parameters: " + prefix);
    p.hidden = p.Wh->value.cols();
    p.input_dim = p.Wx->value.cols();
    return p;
  }
};

struct LstmState {
  Node* h = nullptr;  // null means zero vector
  Node* c = nullptr;
};

inline LstmState lstm_step(Graph& g, const LstmParams& p, const LstmState& prev, Node* x) {
  int H = p.hidden;
  Node* pre = g.add(g.matmul(g.param(p.Wx), x), g.param(p.b));
  if (prev.h) pre = g.add(pre, g.matmul(g.param(p.Wh), prev.h));
  Node* i = g.sigmoid(g.slice(pre, 0, H));
  Node* f = g.sigmoid(g.slice(pre, H, H));
  Node* o = g.sigmoid(g.slice(pre, 2 * H, H));
  Node* u = g.tanh(g.slice(pre, 3 * H, H));
  LstmState next;
  next.c = prev.c ? g.add(g.cmul(f, prev.c), g.cmul(i, u)) : g.cmul(i, u);
  next.h = g.cmul(o, g.tanh(next.c));
  return next;
}

inline std::vector<Node*> lstm_run(Graph& g, const LstmParams& p, const std::vector<Node*>& xs,
                                   bool reverse = false) {
  std::vector<Node*> hs(xs.size());
  LstmState state;
  for (size_t k = 0; k < xs.size(); ++k) {
    size_t at = reverse ? xs.size() - 1 - k : k;
    state = lstm_step(g, p, state, xs[at]);
    hs[at] = state.h;
  }
  return hs;
}

// Stacked bidirectional encoder; output per position is concat(fwd, bwd).
struct BiLstm {
  std::vector<LstmParams> fwd, bwd;

  static BiLstm create(ParamStore& store, const std::string& prefix, int input, int hidden, int layers,
                       Rng& rng) {
    BiLstm b;
    int in = input;
    for (int l = 0; l < layers; ++l) {
      std::string lp = prefix + ".l" + std::to_string(l);
      b.fwd.push_back(LstmParams::create(store, lp + ".fwd", in, hidden, rng));
      b.bwd.push_back(LstmParams::create(store, lp + ".bwd", in, hidden, rng));
      in = 2 * hidden;
    }
    return b;
  }

  static BiLstm bind(ParamStore& store, const std::string& prefix, int layers) {
    BiLstm b;
    for (int l = 0; l < layers; ++l) {
      std::string lp = prefix + ".l" + std::to_string(l);
      b.fwd.push_back(LstmParams::bind(store, lp + ".fwd"));
      b.bwd.push_back(LstmParams::bind(store, lp + ".bwd"));
    }
    return b;
  }

  std::vector<Node*> encode(Graph& g, std::vector<Node*> xs) const {
    for (size_t l = 0; l < fwd.size(); ++l) {
      std::vector<Node*> f = lstm_run(g, fwd[l], xs, false);
      std::vector<Node*> r = lstm_run(g, bwd[l], xs, true);
      for (size_t k = 0; k < xs.size(); ++k) xs[k] = g.concat(f[k], r[k]);
    }
    return xs;
  }

  // Final states of both directions, concatenated (used as a word encoding).
  Node* final_states(Graph& g, const std::vector<Node*>& xs_in) const {
    std::vector<Node*> xs = xs_in;
    Node* out = nullptr;
    for (size_t l = 0; l < fwd.size(); ++l) {
      std::vector<Node*> f = lstm_run(g, fwd[l], xs, false);
      std::vector<Node*> r = lstm_run(g, bwd[l], xs, true);
      out = g.concat(f.back(), r.front());
      for (size_t k = 0; k < xs.size(); ++k) xs[k] = g.concat(f[k], r[k]);
    }
    return out;
  }
};

}  // namespace seglid
