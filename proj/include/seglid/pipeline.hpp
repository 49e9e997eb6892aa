#pragma once

// Pipeline systems: a word-level tagger proposes a composed tag per token; a
// segmenter places boundaries for composite tags. A predicted composite with
// more labels than the word has characters cannot be realized — those tokens
// fall back to a single segment under the first label, counted in the
// diagnostics.

#include <functional>
#include <string>
#include <vector>

#include "seglid/corpus.hpp"
#include "seglid/crf_segmenter.hpp"

namespace seglid {

struct PipelineDiagnostics {
  long fallback_overlong_tag = 0;  // composite labels longer than the word
  long collapsed_invalid = 0;      // char-tagger outputs collapsed to one segment
};

using SentenceTagger = std::function<std::vector<std::string>(const std::vector<std::string>&)>;

inline Sentence pipeline_predict(const SentenceTagger& tagger, const CrfSegmenterModel& segmenter,
                                 const Sentence& in, PipelineDiagnostics* diag = nullptr) {
  Sentence out;
  out.comment = in.comment;
  if (in.tokens.empty()) return out;
  std::vector<std::string> words;
  words.reserve(in.tokens.size());
  for (const auto& t : in.tokens) words.push_back(t.surface);
  std::vector<std::string> labels = tagger(words);
  if (labels.size() != words.size()) throw std::runtime_error("tagger returned wrong label count");

  out.tokens.reserve(words.size());
  for (size_t i = 0; i < words.size(); ++i) {
    std::vector<std::string> pieces = detail::split_on(labels[i], TagSet::kSeparator);
    int n = static_cast<int>(utf8_length(words[i]));
    if (static_cast<int>(pieces.size()) > n) {
      SegmentedToken tok;
      tok.surface = words[i];
      tok.segments.push_back(Segment{0, n, pieces[0]});
      out.tokens.push_back(std::move(tok));
      if (diag) ++diag->fallback_overlong_tag;
      continue;
    }
    out.tokens.push_back(segmenter.segment(words[i], labels[i]));
  }
  return out;
}

}  // namespace seglid
