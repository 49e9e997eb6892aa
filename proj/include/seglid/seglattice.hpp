#pragma once

// Segment lattice over a word of n characters: phi(i, j, y) scores span
// [i, j) (1 <= j-i <= max_len) labeled with tag y. log_partition, viterbi
// and enumerate_all share one summation order (left to right along a parse),
// so their scores agree bit-for-bit and tie handling is consistent.
//
// Entries may be -inf to mark forbidden combinations (e.g. special tags on
// proper sub-spans); such parses are treated as absent everywhere.

#include <climits>
#include <stdexcept>
#include <vector>

#include "seglid/graph.hpp"

namespace seglid {

struct SpanTag {
  int start = 0;
  int end = 0;
  int tag = 0;

  friend bool operator==(const SpanTag&, const SpanTag&) = default;
};

struct Parse {
  std::vector<SpanTag> segments;
  double score = 0.0;

  friend bool operator==(const Parse& a, const Parse& b) { return a.segments == b.segments; }
};

// Preference order used by decoding: higher score; then fewer segments; then
// smallest (tag, start) comparing segments right to left. The last rule makes
// the order decomposable over the forward DP, and together with the second it
// reduces to "fewest segments, earliest tag" in every tied case that actually
// arises (e.g. an all-zero lattice).
inline bool better_parse(const Parse& a, const Parse& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.segments.size() != b.segments.size()) return a.segments.size() < b.segments.size();
  for (size_t k = a.segments.size(); k-- > 0;) {
    const SpanTag &sa = a.segments[k], &sb = b.segments[k];
    if (sa.tag != sb.tag) return sa.tag < sb.tag;
    if (sa.start != sb.start) return sa.start < sb.start;
  }
  return false;
}

class SegLattice {
 public:
  SegLattice(int n, int max_len, int num_tags)
      : n_(n), max_len_(std::min(max_len, n)), num_tags_(num_tags) {
    if (n < 1) throw std::invalid_argument("lattice needs n >= 1");
    if (max_len < 1) throw std::invalid_argument("lattice needs max_len >= 1");
    if (num_tags < 1) throw std::invalid_argument("lattice needs num_tags >= 1");
    base_.assign(static_cast<size_t>(n_) * (n_ + 1), -1);
    int at = 0;
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j <= std::min(i + max_len_, n_); ++j) {
        base_[static_cast<size_t>(i) * (n_ + 1) + j] = at;
        at += num_tags_;
      }
    scores_.assign(at, 0.0);
  }

  int n() const { return n_; }
  int max_len() const { return max_len_; }
  int num_tags() const { return num_tags_; }
  size_t entry_count() const { return scores_.size(); }

  bool has_span(int i, int j) const {
    return i >= 0 && j <= n_ && j > i && j - i <= max_len_;
  }

  double& phi(int i, int j, int y) { return scores_[offset(i, j, y)]; }
  double phi(int i, int j, int y) const { return scores_[offset(i, j, y)]; }

 private:
  size_t offset(int i, int j, int y) const {
    if (!has_span(i, j) || y < 0 || y >= num_tags_) throw std::out_of_range("lattice index out of range");
    return static_cast<size_t>(base_[static_cast<size_t>(i) * (n_ + 1) + j]) + y;
  }

  int n_, max_len_, num_tags_;
  std::vector<int> base_;
  std::vector<double> scores_;
};

// log sum over all segmentations into parts of length <= max_len and all tag
// assignments of exp(sum of phi).
inline double log_partition(const SegLattice& lat) {
  int n = lat.n(), L = lat.max_len(), T = lat.num_tags();
  std::vector<double> alpha(n + 1, kNegInf);
  alpha[0] = 0.0;
  std::vector<double> cand;
  for (int j = 1; j <= n; ++j) {
    cand.clear();
    for (int i = std::max(0, j - L); i < j; ++i) {
      if (alpha[i] == kNegInf) continue;
      for (int y = 0; y < T; ++y) {
        double p = lat.phi(i, j, y);
        if (p == kNegInf) continue;
        cand.push_back(alpha[i] + p);
      }
    }
    alpha[j] = cand.empty() ? kNegInf : stable_logsumexp(cand.data(), cand.size());
  }
  return alpha[n];
}

// Exact argmax under better_parse.
inline Parse viterbi(const SegLattice& lat) {
  int n = lat.n(), L = lat.max_len(), T = lat.num_tags();
  struct Cell {
    double score = kNegInf;
    int nseg = INT_MAX;
    int bp_i = -1;
    int bp_y = -1;
  };
  std::vector<Cell> cells(n + 1);
  cells[0] = {0.0, 0, -1, -1};
  for (int j = 1; j <= n; ++j) {
    Cell& best = cells[j];
    for (int i = std::max(0, j - L); i < j; ++i) {
      if (cells[i].score == kNegInf) continue;
      for (int y = 0; y < T; ++y) {
        double p = lat.phi(i, j, y);
        if (p == kNegInf) continue;
        double cs = cells[i].score + p;
        int cn = cells[i].nseg + 1;
        bool take = cs > best.score ||
                    (cs == best.score &&
                     (cn < best.nseg ||
                      (cn == best.nseg && (y < best.bp_y || (y == best.bp_y && i < best.bp_i)))));
        if (take) best = Cell{cs, cn, i, y};
      }
    }
  }
  if (cells[n].score == kNegInf) throw std::runtime_error("lattice admits no finite parse");
  Parse parse;
  parse.score = cells[n].score;
  for (int j = n; j > 0;) {
    int i = cells[j].bp_i, y = cells[j].bp_y;
    parse.segments.push_back(SpanTag{i, j, y});
    j = i;
  }
  std::reverse(parse.segments.begin(), parse.segments.end());
  return parse;
}

// Brute-force enumeration of every finite-score parse; the oracle that
// log_partition and viterbi are tested against. Guarded to tiny n.
inline std::vector<Parse> enumerate_all(const SegLattice& lat) {
  int n = lat.n();
  if (n > 12) throw std::invalid_argument("enumerate_all is limited to n <= 12");
  std::vector<Parse> out;
  Parse cur;
  auto rec = [&](auto&& self, int i, double score) -> void {
    if (i == n) {
      cur.score = score;
      out.push_back(cur);
      return;
    }
    for (int j = i + 1; j <= std::min(i + lat.max_len(), n); ++j)
      for (int y = 0; y < lat.num_tags(); ++y) {
        double p = lat.phi(i, j, y);
        if (p == kNegInf) continue;
        cur.segments.push_back(SpanTag{i, j, y});
        self(self, j, score + p);
        cur.segments.pop_back();
      }
  };
  rec(rec, 0, 0.0);
  return out;
}

// Score of one specific parse (e.g. the gold one) in the lattice.
inline double gold_log_score(const SegLattice& lat, const std::vector<SpanTag>& segments) {
  double s = 0.0;
  int pos = 0;
  for (const auto& seg : segments) {
    if (seg.start != pos || !lat.has_span(seg.start, seg.end))
      throw std::invalid_argument("gold parse does not fit the lattice (check max_segment_length)");
    s += lat.phi(seg.start, seg.end, seg.tag);
    pos = seg.end;
  }
  if (pos != lat.n()) throw std::invalid_argument("gold parse does not tile the word");
  return s;
}

}  // namespace seglid
