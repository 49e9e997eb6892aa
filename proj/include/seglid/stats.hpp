#pragma once

// Corpus composition statistics: token and unique-type counts per composed
// word-level tag, a MIXED row for multi-segment words, and a breakdown of
// mixed words by their tag sequence.

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "seglid/corpus.hpp"

namespace seglid {

inline double round_half_up_2dp(double v) {
  return std::floor(v * 100.0 + 0.5) / 100.0;
}

inline double pct(long long part, long long whole) {
  if (whole == 0) return 0.0;
  return round_half_up_2dp(100.0 * static_cast<double>(part) / static_cast<double>(whole));
}

struct StatsRow {
  std::string label;
  long long tokens = 0;
  double token_pct = 0.0;
  long long unique_types = 0;
  double unique_pct = 0.0;

  friend bool operator==(const StatsRow&, const StatsRow&) = default;
};

struct StatsTable {
  std::vector<StatsRow> rows;              // one per tag, then MIXED
  std::vector<StatsRow> mixed_breakdown;   // one per observed tag sequence
  long long total_tokens = 0;
  long long total_unique = 0;

  friend bool operator==(const StatsTable&, const StatsTable&) = default;

  std::string render_text() const {
    auto fmt = [](const StatsRow& r, const char* indent) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%s%-16s %8lld %7.2f %8lld %7.2f\n", indent, r.label.c_str(),
                    r.tokens, r.token_pct, r.unique_types, r.unique_pct);
      return std::string(buf);
    };
    std::string out;
    char head[256];
    std::snprintf(head, sizeof(head), "%-16s %8s %7s %8s %7s\n", "tag", "tokens", "tok%", "types",
                  "type%");
    out += head;
    for (const auto& r : rows) out += fmt(r, "");
    for (const auto& r : mixed_breakdown) out += fmt(r, "  ");
    char tail[128];
    std::snprintf(tail, sizeof(tail), "%-16s %8lld %7s %8lld\n", "total", total_tokens, "",
                  total_unique);
    out += tail;
    return out;
  }

  std::string render_csv() const {
    auto line = [](const char* kind, const StatsRow& r) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%s,%s,%lld,%.2f,%lld,%.2f\n", kind, r.label.c_str(), r.tokens,
                    r.token_pct, r.unique_types, r.unique_pct);
      return std::string(buf);
    };
    std::string out = "kind,label,tokens,token_pct,unique_types,unique_pct\n";
    for (const auto& r : rows) out += line("tag", r);
    for (const auto& r : mixed_breakdown) out += line("mixed_seq", r);
    char tail[128];
    std::snprintf(tail, sizeof(tail), "total,,%lld,,%lld,\n", total_tokens, total_unique);
    out += tail;
    return out;
  }
};

namespace detail {

// Shared by compute_stats and the synthetic generator's self-report so both
// turn raw counts into a table the same way; the counts themselves are
// gathered independently.
struct StatsCounts {
  std::map<std::string, long long> tag_tokens;                  // single-segment tokens by tag
  std::map<std::string, std::set<std::string>> tag_types;
  std::map<std::string, long long> mixed_tokens;                // by space-joined tag sequence
  std::map<std::string, std::set<std::string>> mixed_types;
  std::set<std::string> all_types;
  std::set<std::string> mixed_all_types;
  long long total = 0;
  long long mixed_total = 0;

  void add(const std::string& surface, const std::vector<std::string>& tags) {
    ++total;
    all_types.insert(surface);
    if (tags.size() == 1) {
      ++tag_tokens[tags[0]];
      tag_types[tags[0]].insert(surface);
    } else {
      std::string seq;
      for (size_t i = 0; i < tags.size(); ++i) {
        if (i) seq += ' ';
        seq += tags[i];
      }
      ++mixed_total;
      ++mixed_tokens[seq];
      mixed_types[seq].insert(surface);
      mixed_all_types.insert(surface);
    }
  }

  StatsTable assemble(const TagSet& tagset) const {
    StatsTable t;
    t.total_tokens = total;
    t.total_unique = static_cast<long long>(all_types.size());
    for (const auto& tag : tagset.all()) {
      StatsRow r;
      r.label = tag;
      auto it = tag_tokens.find(tag);
      r.tokens = it == tag_tokens.end() ? 0 : it->second;
      auto ty = tag_types.find(tag);
      r.unique_types = ty == tag_types.end() ? 0 : static_cast<long long>(ty->second.size());
      r.token_pct = pct(r.tokens, t.total_tokens);
      r.unique_pct = pct(r.unique_types, t.total_unique);
      t.rows.push_back(std::move(r));
    }
    StatsRow mixed;
    mixed.label = "MIXED";
    mixed.tokens = mixed_total;
    mixed.unique_types = static_cast<long long>(mixed_all_types.size());
    mixed.token_pct = pct(mixed.tokens, t.total_tokens);
    mixed.unique_pct = pct(mixed.unique_types, t.total_unique);
    t.rows.push_back(mixed);
    // Breakdown percentages are relative to the MIXED row.
    std::vector<std::pair<std::string, long long>> seqs(mixed_tokens.begin(), mixed_tokens.end());
    std::sort(seqs.begin(), seqs.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    for (const auto& [seq, count] : seqs) {
      StatsRow r;
      r.label = seq;
      r.tokens = count;
      r.unique_types = static_cast<long long>(mixed_types.at(seq).size());
      r.token_pct = pct(r.tokens, mixed.tokens);
      r.unique_pct = pct(r.unique_types, mixed.unique_types);
      t.mixed_breakdown.push_back(std::move(r));
    }
    return t;
  }
};

}  // namespace detail

inline StatsTable compute_stats(const Corpus& corpus, const TagSet& tagset) {
  detail::StatsCounts counts;
  for (const auto& sent : corpus.sentences)
    for (const auto& tok : sent.tokens) {
      std::vector<std::string> tags;
      tags.reserve(tok.segments.size());
      for (const auto& s : tok.segments) tags.push_back(s.tag);
      counts.add(tok.surface, tags);
    }
  return counts.assemble(tagset);
}

}  // namespace seglid
