#pragma once

// Synthetic corpus generator: two artificial languages with disjoint
// alphabets, word = root (+ affix), and with probability mixed_token_rate a
// token is a root from one language plus an affix from the other, gold-
// segmented at the morpheme boundary.
//
// Two mechanisms keep boundary placement from reducing to per-character
// alphabet lookup, mimicking what makes real intra-word code-switching hard:
//
//  * assimilation (assim_rate): a mixed token's affix-initial character is
//    rewritten with a character of the *root* language, the way borrowed
//    suffixes pick up buffer consonants / harmony vowels from the host stem.
//    The gold boundary stays at the morpheme boundary, so the surface
//    alphabet switch no longer coincides with the gold switch point and the
//    affix has to be recognized as a unit.
//
//  * a novel tier (novel_char_count tail characters per alphabet) appearing
//    only inside freshly coined mixed-token affixes (novel_affix_rate),
//    which keeps the test vocabulary open.

#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "seglid/corpus.hpp"
#include "seglid/rng.hpp"
#include "seglid/stats.hpp"

namespace seglid {

struct SynthConfig {
  std::u32string alphabet_a;
  std::u32string alphabet_b;
  int roots_a = 60;
  int roots_b = 60;
  int affixes_a = 20;
  int affixes_b = 20;
  double mixed_token_rate = 0.10;
  int sent_len_min = 4;
  int sent_len_max = 8;
  int n_sentences = 1200;
  uint64_t seed = 42;
  int novel_char_count = 120;       // tail of each alphabet, coined affixes only
  double novel_affix_rate = 0.15;   // fraction of mixed-token affixes that are coined
  double assim_rate = 0.25;         // fraction of mixed-token affixes with an assimilated first char
  double mono_affix_rate = 0.40;    // fraction of monolingual tokens taking an affix
  std::string tag_a = "LA";
  std::string tag_b = "LB";

  int root_len_min = 3, root_len_max = 6;
  int affix_len_min = 2, affix_len_max = 3;

  static SynthConfig defaults() {
    SynthConfig c;
    c.alphabet_a = U"abcdefghijkl";
    for (char32_t ch = U'Ā'; ch < U'Ā' + 120; ++ch) c.alphabet_a.push_back(ch);
    c.alphabet_b = U"opqrstuvwxyz";
    for (char32_t ch = U'а'; ch < U'а' + 120; ++ch) c.alphabet_b.push_back(ch);
    return c;
  }

  void validate() const {
    if (alphabet_a.empty() || alphabet_b.empty()) throw std::invalid_argument("empty alphabet");
    std::set<char32_t> a(alphabet_a.begin(), alphabet_a.end());
    for (char32_t c : alphabet_b)
      if (a.count(c)) throw std::invalid_argument("alphabets are not disjoint");
    if (std::set<char32_t>(alphabet_a.begin(), alphabet_a.end()).size() != alphabet_a.size() ||
        std::set<char32_t>(alphabet_b.begin(), alphabet_b.end()).size() != alphabet_b.size())
      throw std::invalid_argument("alphabet contains repeated characters");
    if (mixed_token_rate < 0.0 || mixed_token_rate > 1.0)
      throw std::invalid_argument("mixed_token_rate must be in [0, 1]");
    if (novel_affix_rate < 0.0 || novel_affix_rate > 1.0)
      throw std::invalid_argument("novel_affix_rate must be in [0, 1]");
    if (assim_rate < 0.0 || assim_rate > 1.0)
      throw std::invalid_argument("assim_rate must be in [0, 1]");
    if (mono_affix_rate < 0.0 || mono_affix_rate > 1.0)
      throw std::invalid_argument("mono_affix_rate must be in [0, 1]");
    if (novel_char_count < 0 ||
        static_cast<size_t>(novel_char_count) + 4 > alphabet_a.size() ||
        static_cast<size_t>(novel_char_count) + 4 > alphabet_b.size())
      throw std::invalid_argument("novel_char_count leaves too few common characters");
    if (sent_len_min < 1 || sent_len_max < sent_len_min) throw std::invalid_argument("bad sentence length range");
    if (root_len_min < 1 || root_len_max < root_len_min) throw std::invalid_argument("bad root length range");
    if (affix_len_min < 1 || affix_len_max < affix_len_min) throw std::invalid_argument("bad affix length range");
    if (roots_a < 1 || roots_b < 1 || affixes_a < 1 || affixes_b < 1)
      throw std::invalid_argument("lexicon sizes must be >= 1");
    if (n_sentences < 0) throw std::invalid_argument("n_sentences must be >= 0");
    if (tag_a == tag_b) throw std::invalid_argument("tags must differ");
    TagSet::validate_name(tag_a);
    TagSet::validate_name(tag_b);
  }
};

struct SynthResult {
  Corpus corpus;
  StatsTable gold_stats;  // counted token-by-token during generation
  TagSet tagset;
};

namespace detail {

inline std::u32string synth_string(Rng& rng, const std::u32string& pool, int len_min, int len_max) {
  int len = len_min + rng.next_int(len_max - len_min + 1);
  std::u32string s;
  s.reserve(len);
  for (int i = 0; i < len; ++i) s.push_back(pool[rng.next_int(static_cast<int>(pool.size()))]);
  return s;
}

inline std::vector<std::u32string> synth_lexicon(Rng& rng, const std::u32string& pool, int size,
                                                 int len_min, int len_max) {
  std::set<std::u32string> seen;
  std::vector<std::u32string> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < size) {
    if (++attempts > size * 1000) throw std::runtime_error("alphabet too small for requested lexicon");
    std::u32string s = synth_string(rng, pool, len_min, len_max);
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace detail

inline SynthResult synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);

  size_t common_a_n = cfg.alphabet_a.size() - cfg.novel_char_count;
  size_t common_b_n = cfg.alphabet_b.size() - cfg.novel_char_count;
  std::u32string common[2] = {cfg.alphabet_a.substr(0, common_a_n), cfg.alphabet_b.substr(0, common_b_n)};
  std::u32string novel[2] = {cfg.alphabet_a.substr(common_a_n), cfg.alphabet_b.substr(common_b_n)};
  std::string tag[2] = {cfg.tag_a, cfg.tag_b};

  std::vector<std::u32string> roots[2], affixes[2];
  roots[0] = detail::synth_lexicon(rng, common[0], cfg.roots_a, cfg.root_len_min, cfg.root_len_max);
  roots[1] = detail::synth_lexicon(rng, common[1], cfg.roots_b, cfg.root_len_min, cfg.root_len_max);
  affixes[0] = detail::synth_lexicon(rng, common[0], cfg.affixes_a, cfg.affix_len_min, cfg.affix_len_max);
  affixes[1] = detail::synth_lexicon(rng, common[1], cfg.affixes_b, cfg.affix_len_min, cfg.affix_len_max);

  auto pick = [&](const std::vector<std::u32string>& v) { return v[rng.next_int(static_cast<int>(v.size()))]; };

  // A coined affix places one novel-tier character inside otherwise common
  // characters, usually at the affix-initial (boundary) position.
  auto coin_affix = [&](int lang) {
    std::u32string s = detail::synth_string(rng, common[lang], cfg.affix_len_min, cfg.affix_len_max);
    if (!novel[lang].empty()) {
      int pos = 0;
      if (s.size() > 1 && !rng.bernoulli(0.7)) pos = 1 + rng.next_int(static_cast<int>(s.size()) - 1);
      s[pos] = novel[lang][rng.next_int(static_cast<int>(novel[lang].size()))];
    }
    return s;
  };

  SynthResult res;
  res.tagset = TagSet({std::min(cfg.tag_a, cfg.tag_b), std::max(cfg.tag_a, cfg.tag_b)}, {});
  detail::StatsCounts counts;

  for (int si = 0; si < cfg.n_sentences; ++si) {
    Sentence sent;
    int len = cfg.sent_len_min + rng.next_int(cfg.sent_len_max - cfg.sent_len_min + 1);
    for (int ti = 0; ti < len; ++ti) {
      SegmentedToken tok;
      if (rng.bernoulli(cfg.mixed_token_rate)) {
        int x = rng.next_int(2), y = 1 - x;
        std::u32string root = pick(roots[x]);
        std::u32string affix = rng.bernoulli(cfg.novel_affix_rate) ? coin_affix(y) : pick(affixes[y]);
        if (affix.size() > 1 && rng.bernoulli(cfg.assim_rate))
          affix[0] = common[x][rng.next_int(static_cast<int>(common[x].size()))];
        tok.surface = utf8_encode(root + affix);
        int r = static_cast<int>(root.size()), n = r + static_cast<int>(affix.size());
        tok.segments = {Segment{0, r, tag[x]}, Segment{r, n, tag[y]}};
        counts.add(tok.surface, {tag[x], tag[y]});
      } else {
        int x = rng.next_int(2);
        std::u32string w = pick(roots[x]);
        if (rng.bernoulli(cfg.mono_affix_rate)) w += pick(affixes[x]);
        tok.surface = utf8_encode(w);
        tok.segments = {Segment{0, static_cast<int>(w.size()), tag[x]}};
        counts.add(tok.surface, {tag[x]});
      }
      sent.tokens.push_back(std::move(tok));
    }
    res.corpus.sentences.push_back(std::move(sent));
  }

  res.gold_stats = counts.assemble(res.tagset);
  return res;
}

}  // namespace seglid
