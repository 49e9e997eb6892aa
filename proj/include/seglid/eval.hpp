#pragma once

// Metrics: segment precision/recall/F1 with segments as units (boundary-only
// or boundary+label matching), character-level tag accuracy, the same
// restricted to gold-mixed words, a composed-word-tag confusion matrix, and
// over/under-segmentation rates.

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "seglid/corpus.hpp"
#include "seglid/pipeline.hpp"
#include "seglid/stats.hpp"  // round_half_up_2dp

namespace seglid {

enum class MatchMode { kBoundary, kBoundaryAndLabel };

struct MatchCounts {
  long n_gold = 0, n_pred = 0, n_correct = 0;
  MatchCounts& operator+=(const MatchCounts& o) {
    n_gold += o.n_gold;
    n_pred += o.n_pred;
    n_correct += o.n_correct;
    return *this;
  }
};

inline MatchCounts match_segments(const SegmentedToken& gold, const SegmentedToken& pred,
                                  MatchMode mode) {
  if (gold.surface != pred.surface)
    throw std::invalid_argument("surface mismatch: '" + gold.surface + "' vs '" + pred.surface + "'");
  MatchCounts c;
  c.n_gold = static_cast<long>(gold.segments.size());
  c.n_pred = static_cast<long>(pred.segments.size());
  for (const auto& p : pred.segments)
    for (const auto& g : gold.segments)
      if (p.start == g.start && p.end == g.end &&
          (mode == MatchMode::kBoundary || p.tag == g.tag)) {
        ++c.n_correct;
        break;
      }
  return c;
}

struct Prf {
  double p = 0.0, r = 0.0, f1 = 0.0;
};

inline Prf prf(const MatchCounts& c) {
  Prf out;
  out.p = c.n_pred > 0 ? static_cast<double>(c.n_correct) / static_cast<double>(c.n_pred) : 0.0;
  out.r = c.n_gold > 0 ? static_cast<double>(c.n_correct) / static_cast<double>(c.n_gold) : 0.0;
  out.f1 = out.p + out.r > 0.0 ? 2.0 * out.p * out.r / (out.p + out.r) : 0.0;
  return out;
}

namespace detail {

inline void check_aligned(const Corpus& gold, const Corpus& pred) {
  if (gold.sentences.size() != pred.sentences.size())
    throw std::invalid_argument("corpora have different sentence counts");
  for (size_t s = 0; s < gold.sentences.size(); ++s) {
    const auto& gs = gold.sentences[s];
    const auto& ps = pred.sentences[s];
    if (gs.tokens.size() != ps.tokens.size())
      throw std::invalid_argument("sentence " + std::to_string(s + 1) + " has mismatched token counts");
    for (size_t t = 0; t < gs.tokens.size(); ++t)
      if (gs.tokens[t].surface != ps.tokens[t].surface)
        throw std::invalid_argument("sentence " + std::to_string(s + 1) + " token " + std::to_string(t + 1) +
                                    " surface mismatch");
  }
}

inline std::vector<std::string> char_tags(const SegmentedToken& tok) {
  std::vector<std::string> tags(tok.char_length());
  for (const auto& seg : tok.segments)
    for (int i = seg.start; i < seg.end; ++i) tags[i] = seg.tag;
  return tags;
}

}  // namespace detail

using TokenPairs = std::vector<std::pair<const SegmentedToken*, const SegmentedToken*>>;

inline TokenPairs aligned_tokens(const Corpus& gold, const Corpus& pred) {
  detail::check_aligned(gold, pred);
  TokenPairs out;
  for (size_t s = 0; s < gold.sentences.size(); ++s)
    for (size_t t = 0; t < gold.sentences[s].tokens.size(); ++t)
      out.emplace_back(&gold.sentences[s].tokens[t], &pred.sentences[s].tokens[t]);
  return out;
}

// Token positions whose GOLD token is mixed (>= 2 segments). Predicted-mixed
// gold-unmixed tokens are excluded even from the precision denominator.
inline TokenPairs mixed_only(const TokenPairs& pairs) {
  TokenPairs out;
  for (const auto& pr : pairs)
    if (pr.first->segments.size() >= 2) out.push_back(pr);
  return out;
}

inline MatchCounts match_all(const TokenPairs& pairs, MatchMode mode) {
  MatchCounts total;
  for (const auto& [g, p] : pairs) total += match_segments(*g, *p, mode);
  return total;
}

inline double char_accuracy(const TokenPairs& pairs) {
  long total = 0, correct = 0;
  for (const auto& [g, p] : pairs) {
    std::vector<std::string> gt = detail::char_tags(*g), pt = detail::char_tags(*p);
    total += static_cast<long>(gt.size());
    for (size_t i = 0; i < gt.size(); ++i)
      if (gt[i] == pt[i]) ++correct;
  }
  return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

// rows = predicted composed tags, columns = gold composed tags.
struct ConfusionMatrix {
  std::vector<std::string> tags;      // union of observed composed tags, sorted
  std::vector<std::vector<long>> counts;  // counts[pred][gold]

  long column_total(size_t g) const {
    long s = 0;
    for (size_t p = 0; p < tags.size(); ++p) s += counts[p][g];
    return s;
  }

  // Column-normalized, rounded to 2 decimals (columns need not sum to 1
  // after rounding). Raw counts stay available above.
  double normalized(size_t p, size_t g) const {
    long tot = column_total(g);
    return tot > 0 ? round_half_up_2dp(static_cast<double>(counts[p][g]) / static_cast<double>(tot)) : 0.0;
  }

  std::string render_csv() const {
    std::string out = "pred\\gold";
    for (const auto& t : tags) out += "," + t;
    out += "\n";
    char buf[32];
    for (size_t p = 0; p < tags.size(); ++p) {
      out += tags[p];
      for (size_t g = 0; g < tags.size(); ++g) {
        std::snprintf(buf, sizeof buf, ",%.2f", normalized(p, g));
        out += buf;
      }
      out += "\n";
    }
    out += "counts\\gold";
    for (const auto& t : tags) out += "," + t;
    out += "\n";
    for (size_t p = 0; p < tags.size(); ++p) {
      out += tags[p];
      for (size_t g = 0; g < tags.size(); ++g) out += "," + std::to_string(counts[p][g]);
      out += "\n";
    }
    return out;
  }
};

inline ConfusionMatrix confusion_matrix(const TokenPairs& pairs) {
  std::set<std::string> tag_set;
  for (const auto& [g, p] : pairs) {
    tag_set.insert(composed_word_tag(*g));
    tag_set.insert(composed_word_tag(*p));
  }
  ConfusionMatrix m;
  m.tags.assign(tag_set.begin(), tag_set.end());
  std::map<std::string, size_t> index;
  for (size_t i = 0; i < m.tags.size(); ++i) index[m.tags[i]] = i;
  m.counts.assign(m.tags.size(), std::vector<long>(m.tags.size(), 0));
  for (const auto& [g, p] : pairs) ++m.counts[index[composed_word_tag(*p)]][index[composed_word_tag(*g)]];
  return m;
}

// (oversegmentation, undersegmentation): fraction of tokens with more
// (fewer) predicted segments than gold.
inline std::pair<double, double> seg_error_rates(const TokenPairs& pairs) {
  if (pairs.empty()) return {0.0, 0.0};
  long over = 0, under = 0;
  for (const auto& [g, p] : pairs) {
    if (p->segments.size() > g->segments.size()) ++over;
    if (p->segments.size() < g->segments.size()) ++under;
  }
  double n = static_cast<double>(pairs.size());
  return {static_cast<double>(over) / n, static_cast<double>(under) / n};
}

struct EvalReport {
  Prf seg, tag;                   // boundary / boundary+label, all tokens
  double char_acc = 0.0;
  Prf mixed_seg, mixed_tag;       // restricted to gold-mixed tokens
  double mixed_char_acc = 0.0;
  bool mixed_empty = false;       // no gold-mixed tokens: mixed metrics forced to 0
  double overseg = 0.0, underseg = 0.0;
  long n_tokens = 0, n_mixed_tokens = 0;
  ConfusionMatrix confusion;
  PipelineDiagnostics diagnostics;

  std::string render_text(const std::string& system) const {
    char buf[256];
    std::string out;
    out += "scope        Seg-P   Seg-R   Seg-F1  Tag-P   Tag-R   Tag-F1  CharAcc\n";
    auto row = [&](const char* scope, const Prf& s, const Prf& t, double ca) {
      std::snprintf(buf, sizeof buf, "%-12s %-7.4f %-7.4f %-7.4f %-7.4f %-7.4f %-7.4f %-7.4f\n", scope,
                    s.p, s.r, s.f1, t.p, t.r, t.f1, ca);
      out += buf;
    };
    row("all", seg, tag, char_acc);
    row("mixed-only", mixed_seg, mixed_tag, mixed_char_acc);
    std::snprintf(buf, sizeof buf,
                  "system %s | tokens %ld | gold-mixed %ld%s\n"
                  "oversegmentation %.4f | undersegmentation %.4f\n",
                  system.c_str(), n_tokens, n_mixed_tokens, mixed_empty ? " (none: metrics 0)" : "",
                  overseg, underseg);
    out += buf;
    if (diagnostics.fallback_overlong_tag || diagnostics.collapsed_invalid) {
      std::snprintf(buf, sizeof buf, "diagnostics: overlong-tag fallbacks %ld | collapsed outputs %ld\n",
                    diagnostics.fallback_overlong_tag, diagnostics.collapsed_invalid);
      out += buf;
    }
    out += "note: mixed-only precision counts predicted segments on gold-mixed tokens only\n";
    return out;
  }

  std::string render_csv(const std::string& system) const {
    char buf[512];
    std::string out =
        "system,scope,seg_p,seg_r,seg_f1,tag_p,tag_r,tag_f1,char_acc,overseg,underseg,n_tokens,n_mixed,"
        "mixed_empty,fallback_overlong,collapsed\n";
    std::snprintf(buf, sizeof buf, "%s,all,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%ld,%ld,%d,%ld,%ld\n",
                  system.c_str(), seg.p, seg.r, seg.f1, tag.p, tag.r, tag.f1, char_acc, overseg, underseg,
                  n_tokens, n_mixed_tokens, mixed_empty ? 1 : 0, diagnostics.fallback_overlong_tag,
                  diagnostics.collapsed_invalid);
    out += buf;
    std::snprintf(buf, sizeof buf, "%s,mixed_only,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,,,%ld,%ld,%d,,\n",
                  system.c_str(), mixed_seg.p, mixed_seg.r, mixed_seg.f1, mixed_tag.p, mixed_tag.r,
                  mixed_tag.f1, mixed_char_acc, n_mixed_tokens, n_mixed_tokens, mixed_empty ? 1 : 0);
    out += buf;
    return out;
  }
};

inline EvalReport evaluate(const Corpus& gold, const Corpus& pred,
                           const PipelineDiagnostics* diag = nullptr) {
  TokenPairs pairs = aligned_tokens(gold, pred);
  EvalReport r;
  r.n_tokens = static_cast<long>(pairs.size());
  r.seg = prf(match_all(pairs, MatchMode::kBoundary));
  r.tag = prf(match_all(pairs, MatchMode::kBoundaryAndLabel));
  r.char_acc = char_accuracy(pairs);
  TokenPairs mixed = mixed_only(pairs);
  r.n_mixed_tokens = static_cast<long>(mixed.size());
  if (mixed.empty()) {
    r.mixed_empty = true;
  } else {
    r.mixed_seg = prf(match_all(mixed, MatchMode::kBoundary));
    r.mixed_tag = prf(match_all(mixed, MatchMode::kBoundaryAndLabel));
    r.mixed_char_acc = char_accuracy(mixed);
  }
  auto [over, under] = seg_error_rates(pairs);
  r.overseg = over;
  r.underseg = under;
  r.confusion = confusion_matrix(pairs);
  if (diag) r.diagnostics = *diag;
  return r;
}

}  // namespace seglid
