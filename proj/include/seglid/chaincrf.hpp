#pragma once

// Linear-chain CRF primitives shared by the feature-based tagger and the
// character segmenter. Emissions are a row-major [n, Y] matrix; transitions
// are [Y+1, Y] with the extra row (index Y) holding BOS->y scores. Structural
// constraints enter as -inf transition entries; everything runs in log space.
//
// Tie-breaking is fixed once here: among maximal-score label sequences the
// Viterbi decoder returns the lexicographically smallest one (labels compared
// by index, left to right). The suffix-max recurrence makes that a greedy
// front-to-back choice.

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "seglid/checkpoint.hpp"  // fmt17
#include "seglid/graph.hpp"       // kNegInf, stable_logsumexp

namespace seglid {

struct ChainDecodeResult {
  std::vector<int> labels;
  double score = kNegInf;
};

inline double chain_gold_score(const double* emit, const double* trans, int n, int Y,
                               const int* labels) {
  double s = trans[static_cast<size_t>(Y) * Y + labels[0]] + emit[labels[0]];
  for (int t = 1; t < n; ++t)
    s += trans[static_cast<size_t>(labels[t - 1]) * Y + labels[t]] + emit[static_cast<size_t>(t) * Y + labels[t]];
  return s;
}

inline double chain_log_partition(const double* emit, const double* trans, int n, int Y) {
  std::vector<double> alpha(Y), next(Y), cand(Y);
  for (int y = 0; y < Y; ++y) alpha[y] = trans[static_cast<size_t>(Y) * Y + y] + emit[y];
  for (int t = 1; t < n; ++t) {
    for (int y = 0; y < Y; ++y) {
      for (int p = 0; p < Y; ++p) cand[p] = alpha[p] + trans[static_cast<size_t>(p) * Y + y];
      next[y] = stable_logsumexp(cand.data(), Y) + emit[static_cast<size_t>(t) * Y + y];
    }
    alpha.swap(next);
  }
  double z = stable_logsumexp(alpha.data(), Y);
  if (z == kNegInf) throw std::runtime_error("chain has no admissible label sequence");
  return z;
}

// Posterior expectations for gradient computation. node_marginal is [n, Y];
// edge_marginal is [Y+1, Y]: row Y holds the t=0 (BOS) marginals, rows y' < Y
// hold sums over t >= 1 of p(y_{t-1}=y', y_t=y).
struct ChainInference {
  double log_z = 0.0;
  std::vector<double> node_marginal;
  std::vector<double> edge_marginal;
};

inline ChainInference chain_forward_backward(const double* emit, const double* trans, int n, int Y) {
  std::vector<double> alpha(static_cast<size_t>(n) * Y), beta(static_cast<size_t>(n) * Y);
  std::vector<double> cand(Y);
  for (int y = 0; y < Y; ++y) alpha[y] = trans[static_cast<size_t>(Y) * Y + y] + emit[y];
  for (int t = 1; t < n; ++t)
    for (int y = 0; y < Y; ++y) {
      for (int p = 0; p < Y; ++p)
        cand[p] = alpha[static_cast<size_t>(t - 1) * Y + p] + trans[static_cast<size_t>(p) * Y + y];
      alpha[static_cast<size_t>(t) * Y + y] = stable_logsumexp(cand.data(), Y) + emit[static_cast<size_t>(t) * Y + y];
    }
  for (int y = 0; y < Y; ++y) beta[static_cast<size_t>(n - 1) * Y + y] = 0.0;
  for (int t = n - 2; t >= 0; --t)
    for (int y = 0; y < Y; ++y) {
      for (int q = 0; q < Y; ++q)
        cand[q] = trans[static_cast<size_t>(y) * Y + q] + emit[static_cast<size_t>(t + 1) * Y + q] +
                  beta[static_cast<size_t>(t + 1) * Y + q];
      beta[static_cast<size_t>(t) * Y + y] = stable_logsumexp(cand.data(), Y);
    }

  ChainInference out;
  for (int y = 0; y < Y; ++y) cand[y] = alpha[static_cast<size_t>(n - 1) * Y + y];
  out.log_z = stable_logsumexp(cand.data(), Y);
  if (out.log_z == kNegInf) throw std::runtime_error("chain has no admissible label sequence");

  out.node_marginal.assign(static_cast<size_t>(n) * Y, 0.0);
  for (int t = 0; t < n; ++t)
    for (int y = 0; y < Y; ++y) {
      double l = alpha[static_cast<size_t>(t) * Y + y] + beta[static_cast<size_t>(t) * Y + y] - out.log_z;
      out.node_marginal[static_cast<size_t>(t) * Y + y] = l == kNegInf ? 0.0 : std::exp(l);
    }
  out.edge_marginal.assign(static_cast<size_t>(Y + 1) * Y, 0.0);
  for (int y = 0; y < Y; ++y)
    out.edge_marginal[static_cast<size_t>(Y) * Y + y] = out.node_marginal[y];
  for (int t = 1; t < n; ++t)
    for (int p = 0; p < Y; ++p) {
      double ap = alpha[static_cast<size_t>(t - 1) * Y + p];
      if (ap == kNegInf) continue;
      for (int y = 0; y < Y; ++y) {
        double l = ap + trans[static_cast<size_t>(p) * Y + y] + emit[static_cast<size_t>(t) * Y + y] +
                   beta[static_cast<size_t>(t) * Y + y] - out.log_z;
        if (l != kNegInf) out.edge_marginal[static_cast<size_t>(p) * Y + y] += std::exp(l);
      }
    }
  return out;
}

inline ChainDecodeResult chain_viterbi(const double* emit, const double* trans, int n, int Y) {
  // v[t][y]: best suffix score with label y at position t (emission included).
  std::vector<double> v(static_cast<size_t>(n) * Y);
  for (int y = 0; y < Y; ++y)
    v[static_cast<size_t>(n - 1) * Y + y] = emit[static_cast<size_t>(n - 1) * Y + y];
  for (int t = n - 2; t >= 0; --t)
    for (int y = 0; y < Y; ++y) {
      double best = kNegInf;
      for (int q = 0; q < Y; ++q) {
        double s = trans[static_cast<size_t>(y) * Y + q] + v[static_cast<size_t>(t + 1) * Y + q];
        if (s > best) best = s;
      }
      v[static_cast<size_t>(t) * Y + y] = best == kNegInf ? kNegInf : best + emit[static_cast<size_t>(t) * Y + y];
    }

  ChainDecodeResult out;
  out.labels.resize(n);
  double best = kNegInf;
  int pick = -1;
  for (int y = 0; y < Y; ++y) {
    double s = trans[static_cast<size_t>(Y) * Y + y] + v[y];
    if (s > best) {
      best = s;
      pick = y;
    }
  }
  if (pick < 0) throw std::runtime_error("chain has no admissible label sequence");
  out.labels[0] = pick;
  out.score = best;
  for (int t = 1; t < n; ++t) {
    int prev = out.labels[t - 1];
    best = kNegInf;
    pick = -1;
    for (int y = 0; y < Y; ++y) {
      double s = trans[static_cast<size_t>(prev) * Y + y] + v[static_cast<size_t>(t) * Y + y];
      if (s > best) {
        best = s;
        pick = y;
      }
    }
    out.labels[t] = pick;
  }
  return out;
}

// Test oracle: every admissible label sequence with its score.
inline std::vector<ChainDecodeResult> chain_enumerate(const double* emit, const double* trans, int n,
                                                      int Y) {
  if (n > 8) throw std::invalid_argument("chain_enumerate limited to n <= 8");
  std::vector<ChainDecodeResult> out;
  std::vector<int> labels(n, 0);
  while (true) {
    double s = chain_gold_score(emit, trans, n, Y, labels.data());
    if (s != kNegInf) out.push_back(ChainDecodeResult{labels, s});
    int t = n - 1;
    while (t >= 0 && labels[t] == Y - 1) labels[t--] = 0;
    if (t < 0) break;
    ++labels[t];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Feature-based training: dataset of chains with per-position feature-id
// lists; parameters are a per-feature weight table W [F, Y] plus transitions
// T [Y+1, Y]. Objective = sum over chains of (gold score - logZ) minus
// l2/2 * ||theta||^2; gradients point uphill.

struct CrfDataset {
  // feats[c][t] = active feature ids at position t of chain c
  std::vector<std::vector<std::vector<int>>> feats;
  std::vector<std::vector<int>> labels;  // gold label ids, aligned with feats
  size_t size() const { return feats.size(); }
};

namespace detail {
inline void chain_emissions(const std::vector<std::vector<int>>& feats, const double* W, int Y,
                            std::vector<double>& emit) {
  int n = static_cast<int>(feats.size());
  emit.assign(static_cast<size_t>(n) * Y, 0.0);
  for (int t = 0; t < n; ++t) {
    double* row = emit.data() + static_cast<size_t>(t) * Y;
    for (int f : feats[t]) {
      const double* w = W + static_cast<size_t>(f) * Y;
      for (int y = 0; y < Y; ++y) row[y] += w[y];
    }
  }
}
}  // namespace detail

// trans_mask, if given, is a [Y+1, Y] structural mask (0 or -inf) added to the
// trained transition weights for all scoring; masked entries receive no
// gradient because their posterior mass is zero and gold never uses them.
inline double crf_objective(const CrfDataset& data, int F, int Y, const double* W, const double* T,
                            double l2, const double* trans_mask, double* gW, double* gT) {
  std::vector<double> t_eff(static_cast<size_t>(Y + 1) * Y);
  for (size_t i = 0; i < t_eff.size(); ++i) t_eff[i] = T[i] + (trans_mask ? trans_mask[i] : 0.0);
  if (gW) std::fill(gW, gW + static_cast<size_t>(F) * Y, 0.0);
  if (gT) std::fill(gT, gT + static_cast<size_t>(Y + 1) * Y, 0.0);

  double obj = 0.0;
  std::vector<double> emit;
  for (size_t c = 0; c < data.size(); ++c) {
    const auto& feats = data.feats[c];
    const auto& gold = data.labels[c];
    int n = static_cast<int>(feats.size());
    if (n == 0) throw std::invalid_argument("empty chain in CRF dataset");
    detail::chain_emissions(feats, W, Y, emit);
    ChainInference inf = chain_forward_backward(emit.data(), t_eff.data(), n, Y);
    obj += chain_gold_score(emit.data(), t_eff.data(), n, Y, gold.data()) - inf.log_z;
    if (gW) {
      for (int t = 0; t < n; ++t) {
        const double* mu = inf.node_marginal.data() + static_cast<size_t>(t) * Y;
        for (int f : feats[t]) {
          double* g = gW + static_cast<size_t>(f) * Y;
          g[gold[t]] += 1.0;
          for (int y = 0; y < Y; ++y) g[y] -= mu[y];
        }
      }
    }
    if (gT) {
      gT[static_cast<size_t>(Y) * Y + gold[0]] += 1.0;
      for (int t = 1; t < n; ++t) gT[static_cast<size_t>(gold[t - 1]) * Y + gold[t]] += 1.0;
      for (size_t i = 0; i < t_eff.size(); ++i) gT[i] -= inf.edge_marginal[i];
    }
  }

  double norm2 = 0.0;
  for (size_t i = 0; i < static_cast<size_t>(F) * Y; ++i) norm2 += W[i] * W[i];
  for (size_t i = 0; i < static_cast<size_t>(Y + 1) * Y; ++i) norm2 += T[i] * T[i];
  obj -= 0.5 * l2 * norm2;
  if (gW)
    for (size_t i = 0; i < static_cast<size_t>(F) * Y; ++i) gW[i] -= l2 * W[i];
  if (gT)
    for (size_t i = 0; i < static_cast<size_t>(Y + 1) * Y; ++i) gT[i] -= l2 * T[i];
  return obj;
}

// Full-batch gradient ascent with step halving: a step that fails to improve
// the objective is undone and retried at half the rate (counting as an epoch).
inline void crf_fit(const CrfDataset& data, int F, int Y, std::vector<double>& W, std::vector<double>& T,
                    double l2, int epochs, double lr, const double* trans_mask, std::ostream* log,
                    const char* log_prefix) {
  std::vector<double> gW(static_cast<size_t>(F) * Y), gT(static_cast<size_t>(Y + 1) * Y);
  std::vector<double> w_prev, t_prev;
  double obj = crf_objective(data, F, Y, W.data(), T.data(), l2, trans_mask, gW.data(), gT.data());
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    w_prev = W;
    t_prev = T;
    for (size_t i = 0; i < W.size(); ++i) W[i] += lr * gW[i];
    for (size_t i = 0; i < T.size(); ++i) T[i] += lr * gT[i];
    double next = crf_objective(data, F, Y, W.data(), T.data(), l2, trans_mask, gW.data(), gT.data());
    if (next < obj) {
      W = w_prev;
      T = t_prev;
      lr *= 0.5;
      crf_objective(data, F, Y, W.data(), T.data(), l2, trans_mask, gW.data(), gT.data());
    } else {
      obj = next;
    }
    if (log) *log << log_prefix << "epoch " << epoch << " objective " << fmt17(obj) << "\n";
  }
}

}  // namespace seglid
