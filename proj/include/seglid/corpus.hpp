#pragma once

// Corpus data model and the token-per-line file format:
//
//   surface<TAB>seg1|seg2|...<TAB>tag1|tag2|...
//
// Blank line ends a sentence; lines starting with '#' carry sentence
// comments. Files are UTF-8 with LF endings, and all offsets count Unicode
// scalar values. A composed word-level tag joins segment tags with '_'
// (e.g. DE_TR); adjacent segments with equal tags are unrepresentable.

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "seglid/rng.hpp"
#include "seglid/utf8.hpp"

namespace seglid {

struct ParseError : std::runtime_error {
  int line;
  int col;
  ParseError(int line_, int col_, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line_) + ", col " + std::to_string(col_) + ": " + msg),
        line(line_),
        col(col_) {}
};

// Tag inventory. Monolingual tags may label segments of mixed words; special
// tags (OTHER, AMBIG, LANG3, NE.*) only ever label whole words.
struct TagSet {
  std::vector<std::string> monolingual;
  std::vector<std::string> special;
  static constexpr char kSeparator = '_';

  TagSet() = default;
  TagSet(std::vector<std::string> mono, std::vector<std::string> spec)
      : monolingual(std::move(mono)), special(std::move(spec)) {
    std::unordered_set<std::string> seen;
    for (const auto& t : monolingual) {
      validate_name(t);
      if (t.find(kSeparator) != std::string::npos)
        throw std::invalid_argument("monolingual tag may not contain '_': " + t);
      if (!seen.insert(t).second) throw std::invalid_argument("duplicate tag: " + t);
    }
    for (const auto& t : special) {
      validate_name(t);
      if (!seen.insert(t).second) throw std::invalid_argument("duplicate tag: " + t);
    }
  }

  static void validate_name(const std::string& t) {
    if (t.empty()) throw std::invalid_argument("empty tag name");
    for (char c : t)
      if (c == '|' || c == ' ' || c == '\t' || c == '\n' || c == '\r')
        throw std::invalid_argument("tag name contains whitespace or '|': " + t);
  }

  // Naming convention used when no explicit tag set is given.
  static bool special_name(const std::string& t) {
    return t == "OTHER" || t == "AMBIG" || t == "LANG3" || t.rfind("NE.", 0) == 0;
  }

  static TagSet infer(const std::vector<std::string>& tags) {
    std::vector<std::string> mono, spec;
    std::unordered_set<std::string> seen;
    for (const auto& t : tags) {
      if (!seen.insert(t).second) continue;
      (special_name(t) ? spec : mono).push_back(t);
    }
    std::sort(mono.begin(), mono.end());
    std::sort(spec.begin(), spec.end());
    return TagSet(std::move(mono), std::move(spec));
  }

  bool is_monolingual(const std::string& t) const {
    return std::find(monolingual.begin(), monolingual.end(), t) != monolingual.end();
  }
  bool is_special(const std::string& t) const {
    return std::find(special.begin(), special.end(), t) != special.end();
  }
  bool contains(const std::string& t) const { return is_monolingual(t) || is_special(t); }

  // All tags, monolingual first; this order defines tag indices everywhere.
  std::vector<std::string> all() const {
    std::vector<std::string> out = monolingual;
    out.insert(out.end(), special.begin(), special.end());
    return out;
  }

  friend bool operator==(const TagSet&, const TagSet&) = default;
};

struct Segment {
  int start = 0;  // inclusive, in scalar values
  int end = 0;    // exclusive
  std::string tag;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct SegmentedToken {
  std::string surface;  // UTF-8
  std::vector<Segment> segments;

  SegmentedToken() = default;
  SegmentedToken(std::string surface_, std::vector<Segment> segments_)
      : surface(std::move(surface_)), segments(std::move(segments_)) {}

  int char_length() const { return static_cast<int>(utf8_length(surface)); }

  std::string segment_text(size_t i) const {
    return utf8_substr(surface, segments[i].start, segments[i].end);
  }

  // Checks the tiling / tag invariants; returns a message on failure.
  std::optional<std::string> check(const TagSet& tags) const {
    if (surface.empty()) return "empty surface";
    if (surface[0] == '#') return "surface may not begin with '#'";  // would serialize as a comment
    for (char c : surface) {
      if (static_cast<unsigned char>(c) <= 0x20) return "surface contains whitespace or control characters";
      if (c == '|') return "surface may not contain '|'";  // segment separator
    }
    int n = char_length();
    if (segments.empty()) return "token has no segments";
    int pos = 0;
    for (size_t i = 0; i < segments.size(); ++i) {
      const Segment& s = segments[i];
      if (s.start != pos) return "segments do not tile the surface";
      if (s.end <= s.start) return "empty segment";
      if (!tags.contains(s.tag)) return "unknown tag: " + s.tag;
      if (i > 0 && segments[i - 1].tag == s.tag) return "adjacent segments share a tag";
      if (segments.size() > 1 && !tags.is_monolingual(s.tag))
        return "special tag on multi-segment token: " + s.tag;
      pos = s.end;
    }
    if (pos != n) return "segments do not tile the surface";
    return std::nullopt;
  }

  void validate(const TagSet& tags) const {
    if (auto err = check(tags)) throw std::invalid_argument(*err + " in token '" + surface + "'");
  }

  friend bool operator==(const SegmentedToken&, const SegmentedToken&) = default;
};

struct Sentence {
  std::vector<SegmentedToken> tokens;
  std::string comment;  // raw-source provenance, '\n'-joined if multi-line

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Corpus {
  std::vector<Sentence> sentences;

  size_t token_count() const {
    size_t n = 0;
    for (const auto& s : sentences) n += s.tokens.size();
    return n;
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Word-level tag: segment tags joined with '_' (single-segment: the tag).
inline std::string composed_word_tag(const SegmentedToken& tok) {
  std::string out;
  for (size_t i = 0; i < tok.segments.size(); ++i) {
    if (i) out += TagSet::kSeparator;
    out += tok.segments[i].tag;
  }
  return out;
}

namespace detail {

inline std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  size_t start = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

}  // namespace detail

inline Corpus parse_corpus(const std::string& text, const TagSet& tags) {
  Corpus corpus;
  Sentence cur;
  bool cur_used = false;

  auto flush = [&]() {
    if (cur_used) {
      corpus.sentences.push_back(std::move(cur));
      cur = Sentence{};
      cur_used = false;
    }
  };

  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      if (pos == text.size()) break;
      nl = text.size();
    }
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();

    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      std::string c = line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1);
      if (!cur.comment.empty()) cur.comment += '\n';
      cur.comment += c;
      cur_used = true;
      continue;
    }

    std::vector<std::string> cols = detail::split_on(line, '\t');
    if (cols.size() != 3)
      throw ParseError(line_no, 1, "expected 3 tab-separated columns, got " + std::to_string(cols.size()));
    const std::string& surface = cols[0];
    int col_segs = static_cast<int>(cols[0].size()) + 2;
    int col_tags = col_segs + static_cast<int>(cols[1].size()) + 1;

    if (surface.empty()) throw ParseError(line_no, 1, "empty surface form");
    for (char c : surface)
      if (static_cast<unsigned char>(c) <= 0x20)
        throw ParseError(line_no, 1, "surface form contains whitespace or control characters");

    std::vector<std::string> seg_strs = detail::split_on(cols[1], '|');
    std::vector<std::string> tag_strs = detail::split_on(cols[2], '|');
    if (seg_strs.size() != tag_strs.size())
      throw ParseError(line_no, col_tags, "tag count does not match segment count");

    std::string joined;
    for (const auto& s : seg_strs) joined += s;
    if (joined != surface) throw ParseError(line_no, col_segs, "segment concatenation does not equal surface");

    SegmentedToken tok;
    tok.surface = surface;
    int off = 0;
    for (size_t i = 0; i < seg_strs.size(); ++i) {
      if (seg_strs[i].empty()) throw ParseError(line_no, col_segs, "empty segment string");
      int len;
      try {
        len = static_cast<int>(utf8_length(seg_strs[i]));
      } catch (const Utf8Error& e) {
        throw ParseError(line_no, col_segs, e.what());
      }
      if (!tags.contains(tag_strs[i])) throw ParseError(line_no, col_tags, "unknown tag: " + tag_strs[i]);
      tok.segments.push_back(Segment{off, off + len, tag_strs[i]});
      off += len;
    }
    if (auto err = tok.check(tags)) throw ParseError(line_no, col_segs, *err);
    cur.tokens.push_back(std::move(tok));
    cur_used = true;
  }
  flush();
  return corpus;
}

inline std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const auto& sent : corpus.sentences) {
    if (!sent.comment.empty()) {
      for (const auto& piece : detail::split_on(sent.comment, '\n')) {
        out += "# ";
        out += piece;
        out += '\n';
      }
    }
    for (const auto& tok : sent.tokens) {
      out += tok.surface;
      out += '\t';
      for (size_t i = 0; i < tok.segments.size(); ++i) {
        if (i) out += '|';
        out += tok.segment_text(i);
      }
      out += '\t';
      for (size_t i = 0; i < tok.segments.size(); ++i) {
        if (i) out += '|';
        out += tok.segments[i].tag;
      }
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

// Collects the tag inventory of a file before full parsing, so callers can
// infer a TagSet by naming convention.
inline std::vector<std::string> scan_tags(const std::string& text) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& line : detail::split_on(text, '\n')) {
    if (line.empty() || line[0] == '#') continue;
    auto cols = detail::split_on(line, '\t');
    if (cols.size() != 3) continue;
    std::string tagcol = cols[2];
    if (!tagcol.empty() && tagcol.back() == '\r') tagcol.pop_back();
    for (const auto& t : detail::split_on(tagcol, '|'))
      if (!t.empty() && seen.insert(t).second) out.push_back(t);
  }
  return out;
}

// Deterministic sentence-level shuffle, then split. Sentences keep their
// original relative order inside each side.
inline std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, size_t n_train, uint64_t seed) {
  size_t n = corpus.sentences.size();
  if (n_train > n) throw std::invalid_argument("n_train exceeds corpus size");
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  std::vector<size_t> tr(idx.begin(), idx.begin() + n_train), te(idx.begin() + n_train, idx.end());
  std::sort(tr.begin(), tr.end());
  std::sort(te.begin(), te.end());
  Corpus train, test;
  for (size_t i : tr) train.sentences.push_back(corpus.sentences[i]);
  for (size_t i : te) test.sentences.push_back(corpus.sentences[i]);
  return {std::move(train), std::move(test)};
}

struct Fold {
  Corpus train;
  Corpus dev;
};

inline std::vector<Fold> kfold(const Corpus& corpus, int k, uint64_t seed) {
  size_t n = corpus.sentences.size();
  if (k < 2 || static_cast<size_t>(k) > n) throw std::invalid_argument("k must be in [2, #sentences]");
  std::vector<size_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);
  std::vector<Fold> folds(k);
  size_t base = n / k, extra = n % k, at = 0;
  for (int f = 0; f < k; ++f) {
    size_t len = base + (static_cast<size_t>(f) < extra ? 1 : 0);
    std::vector<size_t> dev(idx.begin() + at, idx.begin() + at + len);
    at += len;
    std::sort(dev.begin(), dev.end());
    std::unordered_set<size_t> in_dev(dev.begin(), dev.end());
    for (size_t i = 0; i < n; ++i) {
      if (in_dev.count(i))
        folds[f].dev.sentences.push_back(corpus.sentences[i]);
      else
        folds[f].train.sentences.push_back(corpus.sentences[i]);
    }
  }
  return folds;
}

// Character inventory of a training corpus; id 0 is reserved for UNK.
struct Alphabet {
  std::u32string chars;  // sorted by scalar value
  std::unordered_map<char32_t, int> index;

  static Alphabet build(const Corpus& corpus) {
    std::unordered_set<char32_t> seen;
    for (const auto& s : corpus.sentences)
      for (const auto& t : s.tokens)
        for (char32_t c : utf8_decode(t.surface)) seen.insert(c);
    Alphabet a;
    a.chars.assign(seen.begin(), seen.end());
    std::sort(a.chars.begin(), a.chars.end());
    a.rebuild_index();
    return a;
  }

  static Alphabet from_chars(std::u32string chars) {
    Alphabet a;
    a.chars = std::move(chars);
    a.rebuild_index();
    return a;
  }

  void rebuild_index() {
    index.clear();
    for (size_t i = 0; i < chars.size(); ++i) index[chars[i]] = static_cast<int>(i) + 1;
  }

  int id(char32_t c) const {
    auto it = index.find(c);
    return it == index.end() ? 0 : it->second;
  }

  int size() const { return static_cast<int>(chars.size()) + 1; }
};

}  // namespace seglid
