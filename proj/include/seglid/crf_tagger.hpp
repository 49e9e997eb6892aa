#pragma once

// Feature-based linear-chain CRF over composed word tags (mixed words carry
// labels like "DE_TR"). Emissions come from an exact feature dictionary built
// on the training data; trained by full-batch gradient ascent on the l2-
// regularized conditional log-likelihood.

#include <algorithm>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "seglid/chaincrf.hpp"
#include "seglid/checkpoint.hpp"
#include "seglid/corpus.hpp"

namespace seglid {

struct CrfTaggerConfig {
  double l2 = 0.1;
  int epochs = 50;
  double lr = 1.0;  // initial full-batch step; halved on non-improvement

  void validate() const {
    if (l2 < 0.0) throw std::invalid_argument("l2 must be >= 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (lr <= 0.0) throw std::invalid_argument("lr must be > 0");
  }
};

class CrfTaggerModel {
 public:
  // Feature templates: lowercased word identity (ASCII fold), prefixes and
  // suffixes of 1..4 scalar values, contains-digit, contains-punctuation,
  // the set of character bigrams, and the neighboring word identities.
  static std::vector<std::string> features(const std::vector<std::string>& words, size_t t) {
    auto lower = [](const std::string& s) {
      std::string out = s;
      for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      return out;
    };
    const std::string w = lower(words[t]);
    std::u32string u = utf8_decode(w);
    size_t n = u.size();

    std::vector<std::string> out;
    out.push_back("w=" + w);
    for (size_t k = 1; k <= 4 && k <= n; ++k) {
      out.push_back("p" + std::to_string(k) + "=" + utf8_encode(u.substr(0, k)));
      out.push_back("s" + std::to_string(k) + "=" + utf8_encode(u.substr(n - k)));
    }
    bool digit = false, punct = false;
    for (char32_t c : u) {
      if (c >= U'0' && c <= U'9') digit = true;
      if (c < 0x80 && std::ispunct(static_cast<int>(c))) punct = true;
    }
    if (digit) out.push_back("has_digit");
    if (punct) out.push_back("has_punct");
    std::set<std::string> bigrams;
    for (size_t i = 0; i + 1 < n; ++i) bigrams.insert(utf8_encode(u.substr(i, 2)));
    for (const auto& b : bigrams) out.push_back("bg=" + b);
    out.push_back("pw=" + (t > 0 ? lower(words[t - 1]) : std::string("<s>")));
    out.push_back("nw=" + (t + 1 < words.size() ? lower(words[t + 1]) : std::string("</s>")));
    return out;
  }

  static CrfTaggerModel train(const Corpus& corpus, const CrfTaggerConfig& cfg,
                              std::ostream* log = nullptr, const char* log_prefix = "") {
    cfg.validate();
    CrfTaggerModel m;
    m.cfg_ = cfg;

    std::set<std::string> label_set;
    for (const auto& s : corpus.sentences)
      for (const auto& t : s.tokens) label_set.insert(composed_word_tag(t));
    if (label_set.empty()) throw std::invalid_argument("training corpus has no tokens");
    m.labels_.assign(label_set.begin(), label_set.end());
    for (size_t i = 0; i < m.labels_.size(); ++i) m.label_index_[m.labels_[i]] = static_cast<int>(i);

    CrfDataset data;
    for (const auto& s : corpus.sentences) {
      if (s.tokens.empty()) continue;
      std::vector<std::string> words;
      for (const auto& t : s.tokens) words.push_back(t.surface);
      std::vector<std::vector<int>> sent_feats;
      std::vector<int> sent_labels;
      for (size_t t = 0; t < words.size(); ++t) {
        std::vector<int> ids;
        for (const auto& f : features(words, t)) ids.push_back(m.intern(f));
        sent_feats.push_back(std::move(ids));
        sent_labels.push_back(m.label_index_.at(composed_word_tag(s.tokens[t])));
      }
      data.feats.push_back(std::move(sent_feats));
      data.labels.push_back(std::move(sent_labels));
    }

    int Y = static_cast<int>(m.labels_.size());
    int F = static_cast<int>(m.feat_names_.size());
    m.W_.assign(static_cast<size_t>(F) * Y, 0.0);
    m.T_.assign(static_cast<size_t>(Y + 1) * Y, 0.0);
    crf_fit(data, F, Y, m.W_, m.T_, cfg.l2, cfg.epochs, cfg.lr, nullptr, log, log_prefix);
    return m;
  }

  std::vector<std::string> predict(const std::vector<std::string>& words) const {
    if (words.empty()) throw std::invalid_argument("empty sentence");
    int Y = static_cast<int>(labels_.size());
    int n = static_cast<int>(words.size());
    std::vector<double> emit(static_cast<size_t>(n) * Y, 0.0);
    for (int t = 0; t < n; ++t)
      for (const auto& f : features(words, t)) {
        auto it = feat_index_.find(f);
        if (it == feat_index_.end()) continue;  // unseen at test time
        const double* w = W_.data() + static_cast<size_t>(it->second) * Y;
        for (int y = 0; y < Y; ++y) emit[static_cast<size_t>(t) * Y + y] += w[y];
      }
    ChainDecodeResult d = chain_viterbi(emit.data(), T_.data(), n, Y);
    std::vector<std::string> out;
    out.reserve(n);
    for (int y : d.labels) out.push_back(labels_[y]);
    return out;
  }

  const std::vector<std::string>& labels() const { return labels_; }
  const CrfTaggerConfig& config() const { return cfg_; }

  void save(std::ostream& os) const {
    CheckpointWriter w(os);
    w.header("crf_tagger", {{"l2", fmt17(cfg_.l2)},
                            {"epochs", std::to_string(cfg_.epochs)},
                            {"lr", fmt17(cfg_.lr)}});
    w.strings("labels", labels_);
    int Y = static_cast<int>(labels_.size());
    std::vector<std::pair<std::string, std::vector<double>>> rows;
    rows.reserve(feat_names_.size());
    for (size_t f = 0; f < feat_names_.size(); ++f)
      rows.emplace_back(feat_names_[f],
                        std::vector<double>(W_.begin() + static_cast<long>(f) * Y,
                                            W_.begin() + static_cast<long>(f + 1) * Y));
    w.feats("weights", rows, Y);
    w.param_raw("transitions", {Y + 1, Y}, T_);
    w.end();
  }

  static CrfTaggerModel load(CheckpointReader& r) {
    if (r.kind() != "crf_tagger") throw CheckpointError("expected crf_tagger checkpoint, got " + r.kind());
    CrfTaggerModel m;
    m.cfg_.l2 = r.meta_double("l2");
    m.cfg_.epochs = static_cast<int>(r.meta_int("epochs"));
    m.cfg_.lr = r.meta_double("lr");
    for (std::string sec = r.next_section(); sec != "end"; sec = r.next_section()) {
      if (sec == "strings" && r.args()[0] == "labels") {
        m.labels_ = r.read_strings();
      } else if (sec == "strings" && r.args()[0] == "run_config") {
        r.read_strings();
      } else if (sec == "feats") {
        int Y = 0;
        auto rows = r.read_feats(&Y);
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
    if (m.labels_.empty()) throw CheckpointError("crf_tagger checkpoint missing labels");
    if (m.T_.size() != (m.labels_.size() + 1) * m.labels_.size())
      throw CheckpointError("crf_tagger transition shape mismatch");
    for (size_t i = 0; i < m.labels_.size(); ++i) m.label_index_[m.labels_[i]] = static_cast<int>(i);
    return m;
  }

 private:
  int intern(const std::string& feat) {
    auto [it, fresh] = feat_index_.try_emplace(feat, static_cast<int>(feat_names_.size()));
    if (fresh) feat_names_.push_back(feat);
    return it->second;
  }

  std::vector<std::string> labels_;
  std::unordered_map<std::string, int> label_index_;
  std::vector<std::string> feat_names_;  // insertion order = checkpoint order
  std::unordered_map<std::string, int> feat_index_;
  std::vector<double> W_;  // [F, Y]
  std::vector<double> T_;  // [Y+1, Y], row Y = BOS
  CrfTaggerConfig cfg_;
};

}  // namespace seglid
