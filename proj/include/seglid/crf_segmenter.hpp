#pragma once

// Character-level CRF segmenter over role labels {B, I} x monolingual tags.
// Structural transitions forbid I(y) after any label with tag != y, so a
// label sequence always spells a tiling segmentation. Training maximizes the
// unconstrained (masked) likelihood of gold role sequences on tokens whose
// tags are all monolingual; at pipeline time the decoder is additionally
// constrained so the B-labels spell a given composed tag sequence in order.

#include <algorithm>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "seglid/chaincrf.hpp"
#include "seglid/checkpoint.hpp"
#include "seglid/corpus.hpp"

namespace seglid {

struct CrfSegmenterConfig {
  double l2 = 0.1;
  int epochs = 50;
  double lr = 1.0;

  void validate() const {
    if (l2 < 0.0) throw std::invalid_argument("l2 must be >= 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (lr <= 0.0) throw std::invalid_argument("lr must be > 0");
  }
};

class CrfSegmenterModel {
 public:
  // Role ids: B(tag m) = 2m, I(tag m) = 2m + 1.
  static std::vector<std::string> features(const std::u32string& u, size_t t) {
    size_t n = u.size();
    auto ch = [&](size_t i) { return utf8_encode(u.substr(i, 1)); };
    std::vector<std::string> out;
    out.push_back("c=" + ch(t));
    out.push_back("p=" + (t > 0 ? ch(t - 1) : std::string("<s>")));
    out.push_back("n=" + (t + 1 < n ? ch(t + 1) : std::string("</s>")));
    if (t > 0) out.push_back("pc=" + utf8_encode(u.substr(t - 1, 2)));
    if (t + 1 < n) out.push_back("cn=" + utf8_encode(u.substr(t, 2)));
    out.push_back("s" + std::to_string(std::min<size_t>(t, 4)));
    out.push_back("e" + std::to_string(std::min<size_t>(n - 1 - t, 4)));
    return out;
  }

  static CrfSegmenterModel train(const Corpus& corpus, const TagSet& tags,
                                 const CrfSegmenterConfig& cfg, std::ostream* log = nullptr,
                                 const char* log_prefix = "") {
    cfg.validate();
    CrfSegmenterModel m;
    m.cfg_ = cfg;
    m.tags_ = tags.monolingual;
    for (size_t i = 0; i < m.tags_.size(); ++i) m.tag_index_[m.tags_[i]] = static_cast<int>(i);
    if (m.tags_.empty()) throw std::invalid_argument("tag set has no monolingual tags");

    CrfDataset data;
    for (const auto& s : corpus.sentences)
      for (const auto& tok : s.tokens) {
        bool eligible = true;
        for (const auto& seg : tok.segments)
          if (!tags.is_monolingual(seg.tag)) eligible = false;
        if (!eligible) continue;
        std::u32string u = utf8_decode(tok.surface);
        std::vector<std::vector<int>> feats;
        std::vector<int> labels(u.size());
        for (size_t t = 0; t < u.size(); ++t) {
          std::vector<int> ids;
          for (const auto& f : features(u, t)) ids.push_back(m.intern(f));
          feats.push_back(std::move(ids));
        }
        for (const auto& seg : tok.segments) {
          int y = m.tag_index_.at(seg.tag);
          labels[seg.start] = 2 * y;
          for (int t = seg.start + 1; t < seg.end; ++t) labels[t] = 2 * y + 1;
        }
        data.feats.push_back(std::move(feats));
        data.labels.push_back(std::move(labels));
      }
    if (data.size() == 0) throw std::invalid_argument("no all-monolingual tokens to train segmenter on");

    int R = static_cast<int>(2 * m.tags_.size());
    int F = static_cast<int>(m.feat_names_.size());
    m.W_.assign(static_cast<size_t>(F) * R, 0.0);
    m.T_.assign(static_cast<size_t>(R + 1) * R, 0.0);
    std::vector<double> mask = m.transition_mask();
    crf_fit(data, F, R, m.W_, m.T_, cfg.l2, cfg.epochs, cfg.lr, mask.data(), log, log_prefix);
    return m;
  }

  // Splits `surface` so the segment tags equal the composed tag sequence in
  // order. m = 1 passes through (special tags included); otherwise runs the
  // constrained Viterbi. Ties prefer earlier boundaries.
  SegmentedToken segment(const std::string& surface, const std::string& composed_tag) const {
    std::vector<std::string> pieces = detail::split_on(composed_tag, TagSet::kSeparator);
    if (pieces.empty() || composed_tag.empty())
      throw std::invalid_argument("malformed composed tag: '" + composed_tag + "'");
    for (size_t i = 0; i < pieces.size(); ++i) {
      if (pieces[i].empty()) throw std::invalid_argument("malformed composed tag: '" + composed_tag + "'");
      if (i > 0 && pieces[i] == pieces[i - 1])
        throw std::invalid_argument("composed tag repeats adjacent labels: '" + composed_tag + "'");
    }
    std::u32string u = utf8_decode(surface);
    int n = static_cast<int>(u.size());
    int mseg = static_cast<int>(pieces.size());
    if (n == 0) throw std::invalid_argument("empty surface");

    SegmentedToken out;
    out.surface = surface;
    if (mseg == 1) {
      out.segments.push_back(Segment{0, n, pieces[0]});
      return out;
    }
    if (mseg > n)
      throw std::invalid_argument("composed tag has more labels than characters: '" + composed_tag +
                                  "' on '" + surface + "'");

    int R = static_cast<int>(2 * tags_.size());
    std::vector<int> roleB(mseg), roleI(mseg);
    for (int k = 0; k < mseg; ++k) {
      auto it = tag_index_.find(pieces[k]);
      if (it == tag_index_.end())
        throw std::invalid_argument("composed tag uses unknown monolingual label: " + pieces[k]);
      roleB[k] = 2 * it->second;
      roleI[k] = 2 * it->second + 1;
    }

    std::vector<double> emit(static_cast<size_t>(n) * R, 0.0);
    for (int t = 0; t < n; ++t)
      for (const auto& f : features(u, t)) {
        auto it = feat_index_.find(f);
        if (it == feat_index_.end()) continue;
        const double* w = W_.data() + static_cast<size_t>(it->second) * R;
        for (int r = 0; r < R; ++r) emit[static_cast<size_t>(t) * R + r] += w[r];
      }
    std::vector<double> mask = transition_mask();
    auto tr = [&](int from, int to) { return T_[static_cast<size_t>(from) * R + to] + mask[static_cast<size_t>(from) * R + to]; };
    auto em = [&](int t, int r) { return emit[static_cast<size_t>(t) * R + r]; };

    // v[k][t]: best suffix score with segment k starting at char t, excluding
    // the transition into its B label. Admissible starts for segment k are
    // t in [k, n - (mseg - k)].
    std::vector<std::vector<double>> v(mseg, std::vector<double>(n + 1, kNegInf));
    for (int k = mseg - 1; k >= 0; --k)
      for (int t = k; t <= n - (mseg - k); ++t) {
        if (k == mseg - 1) {
          double s = em(t, roleB[k]);
          int prev = roleB[k];
          for (int x = t + 1; x < n; ++x) {
            s += tr(prev, roleI[k]) + em(x, roleI[k]);
            prev = roleI[k];
          }
          v[k][t] = s;
        } else {
          double inner = em(t, roleB[k]);
          int prev = roleB[k];
          double best = kNegInf;
          for (int tn = t + 1; tn <= n - (mseg - k - 1); ++tn) {
            double s = inner + tr(prev, roleB[k + 1]) + v[k + 1][tn];
            if (s > best) best = s;
            if (tn < n) {
              inner += tr(prev, roleI[k]) + em(tn, roleI[k]);
              prev = roleI[k];
            }
          }
          v[k][t] = best;
        }
      }

    // Greedy front-to-back choice of the earliest boundary among ties.
    std::vector<int> starts(mseg);
    starts[0] = 0;
    for (int k = 0; k + 1 < mseg; ++k) {
      int t = starts[k];
      double inner = em(t, roleB[k]);
      int prev = roleB[k];
      double best = kNegInf;
      int pick = -1;
      for (int tn = t + 1; tn <= n - (mseg - k - 1); ++tn) {
        double s = inner + tr(prev, roleB[k + 1]) + v[k + 1][tn];
        if (s > best) {
          best = s;
          pick = tn;
        }
        if (tn < n) {
          inner += tr(prev, roleI[k]) + em(tn, roleI[k]);
          prev = roleI[k];
        }
      }
      if (pick < 0) throw std::runtime_error("no admissible segmentation");  // unreachable: mseg <= n
      starts[k + 1] = pick;
    }
    for (int k = 0; k < mseg; ++k)
      out.segments.push_back(Segment{starts[k], k + 1 < mseg ? starts[k + 1] : n, pieces[k]});
    return out;
  }

  const std::vector<std::string>& monolingual_tags() const { return tags_; }
  const CrfSegmenterConfig& config() const { return cfg_; }

  std::vector<double> transition_mask() const {
    int R = static_cast<int>(2 * tags_.size());
    std::vector<double> mask(static_cast<size_t>(R + 1) * R, 0.0);
    for (int from = 0; from <= R; ++from)
      for (int to = 0; to < R; ++to) {
        if (to % 2 == 0) continue;                        // B(y) reachable from anything
        if (from == R || from / 2 != to / 2) mask[static_cast<size_t>(from) * R + to] = kNegInf;
      }
    return mask;
  }

  void save(std::ostream& os) const {
    CheckpointWriter w(os);
    w.header("crf_segmenter", {{"l2", fmt17(cfg_.l2)},
                               {"epochs", std::to_string(cfg_.epochs)},
                               {"lr", fmt17(cfg_.lr)}});
    w.strings("tags", tags_);
    int R = static_cast<int>(2 * tags_.size());
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    rows.reserve(feat_names_.size());
    for (size_t f = 0; f < feat_names_.size(); ++f)
      rows.emplace_back(feat_names_[f],
                        std::vector<double>(W_.begin() + static_cast<long>(f) * R,
                                            W_.begin() + static_cast<long>(f + 1) * R));
    w.feats("weights", rows, R);
    w.param_raw("transitions", {R + 1, R}, T_);
    w.end();
  }

  static CrfSegmenterModel load(CheckpointReader& r) {
    if (r.kind() != "crf_segmenter")
      throw CheckpointError("expected crf_segmenter checkpoint, got " + r.kind());
    CrfSegmenterModel m;
    m.cfg_.l2 = r.meta_double("l2");
    m.cfg_.epochs = static_cast<int>(r.meta_int("epochs"));
    m.cfg_.lr = r.meta_double("lr");
    for (std::string sec = r.next_section(); sec != "end"; sec = r.next_section()) {
      if (sec == "strings" && r.args()[0] == "tags") {
        m.tags_ = r.read_strings();
      } else if (sec == "strings" && r.args()[0] == "run_config") {
        r.read_strings();
      } else if (sec == "feats") {
        int R = 0;
        auto rows = r.read_feats(&R);
        m.W_.clear();
        for (auto& [name, wts] : rows) {
          m.intern(name);
          m.W_.insert(m.W_.end(), wts.begin(), wts.end());
        }
      } else if (sec == "param") {
        std::vector<int> shape;
        r.read_param_raw(&shape, &m.T_);
      } else {
        throw CheckpointError("unexpected checkpoint section: " + sec);
      }
    }
    if (m.tags_.empty()) throw CheckpointError("crf_segmenter checkpoint missing tags");
    size_t R = 2 * m.tags_.size();
    if (m.T_.size() != (R + 1) * R) throw CheckpointError("crf_segmenter transition shape mismatch");
    for (size_t i = 0; i < m.tags_.size(); ++i) m.tag_index_[m.tags_[i]] = static_cast<int>(i);
    return m;
  }

 private:
  int intern(const std::string& feat) {
    auto [it, fresh] = feat_index_.try_emplace(feat, static_cast<int>(feat_names_.size()));
    if (fresh) feat_names_.push_back(feat);
    return it->second;
  }

  std::vector<std::string> tags_;  // monolingual tags, model order
  std::unordered_map<std::string, int> tag_index_;
  std::vector<std::string> feat_names_;
  std::unordered_map<std::string, int> feat_index_;
  std::vector<double> W_;  // [F, 2|tags|]
  std::vector<double> T_;  // [2|tags|+1, 2|tags|]
  CrfSegmenterConfig cfg_;
};

}  // namespace seglid
