#pragma once

// Character-tagging baseline: a bidirectional LSTM tags every character with
// a language ID (characters inherit the ID of the gold segment covering them
// at training time); maximal runs of equal predicted tags become segments.

#include <algorithm>
#include <ostream>
#include <string>
#include <vector>

#include "seglid/checkpoint.hpp"
#include "seglid/corpus.hpp"
#include "seglid/graph.hpp"
#include "seglid/lstm.hpp"
#include "seglid/optim.hpp"

namespace seglid {

struct CharTaggerConfig {
  int char_dim = 100;
  int hidden = 50;  // per direction; concat = 100
  int layers = 1;
  double dropout = 0.25;
  int epochs = 30;
  uint64_t seed = 1;
  OptimizerConfig optimizer = OptimizerConfig::sgd(0.1);

  void validate() const {
    if (char_dim < 1 || hidden < 1 || layers < 1) throw std::invalid_argument("dimensions must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  }
};

class CharTaggerModel {
 public:
  CharTaggerModel(TagSet tags, Alphabet alphabet, CharTaggerConfig cfg)
      : tags_(std::move(tags)), alphabet_(std::move(alphabet)), cfg_(cfg) {
    cfg_.validate();
    tag_names_ = tags_.all();
    Rng rng(Rng::derive(cfg_.seed, 0));
    store_.add_glorot("char_emb", alphabet_.size(), cfg_.char_dim, rng);
    enc_ = BiLstm::create(store_, "enc", cfg_.char_dim, cfg_.hidden, cfg_.layers, rng);
    store_.add_glorot("proj.W", static_cast<int>(tag_names_.size()), 2 * cfg_.hidden, rng);
    store_.add_zeros("proj.b", static_cast<int>(tag_names_.size()));
    bind();
  }

  const TagSet& tagset() const { return tags_; }
  const CharTaggerConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }

  int tag_id(const std::string& t) const {
    for (size_t i = 0; i < tag_names_.size(); ++i)
      if (tag_names_[i] == t) return static_cast<int>(i);
    throw std::invalid_argument("tag not in model tag set: " + t);
  }

  // Per-character log-probabilities, [n] nodes of dim |tags|.
  std::vector<Node*> char_log_probs(Graph& g, const std::u32string& chars) const {
    if (chars.empty()) throw std::invalid_argument("empty surface");
    std::vector<Node*> xs;
    xs.reserve(chars.size());
    for (char32_t c : chars) xs.push_back(g.lookup(char_emb_, alphabet_.id(c)));
    std::vector<Node*> hs = enc_.encode(g, xs);
    std::vector<Node*> out;
    out.reserve(hs.size());
    for (Node* h : hs) {
      h = g.dropout(h, cfg_.dropout);
      out.push_back(g.log_softmax(g.add(g.matmul(g.param(proj_W_), h), g.param(proj_b_))));
    }
    return out;
  }

  Node* loss(Graph& g, const SegmentedToken& tok) const {
    std::u32string chars = utf8_decode(tok.surface);
    std::vector<int> gold(chars.size());
    for (const auto& seg : tok.segments)
      for (int t = seg.start; t < seg.end; ++t) gold[t] = tag_id(seg.tag);
    std::vector<Node*> lp = char_log_probs(g, chars);
    std::vector<Node*> nll;
    nll.reserve(lp.size());
    for (size_t t = 0; t < lp.size(); ++t) nll.push_back(g.scale(g.pick(lp[t], gold[t]), -1.0));
    return nll.size() == 1 ? nll[0] : g.add_n(nll);
  }

  // Argmax per character, then run-length merge. A multi-run prediction that
  // uses a word-level-only tag cannot form a valid token; such words collapse
  // to a single segment under the majority character tag (ties: tag order),
  // counted via `collapsed`.
  SegmentedToken predict(const std::string& surface, long* collapsed = nullptr) const {
    std::u32string chars = utf8_decode(surface);
    Graph g;
    std::vector<Node*> lp = char_log_probs(g, chars);
    std::vector<int> pred(chars.size());
    for (size_t t = 0; t < chars.size(); ++t) {
      const Tensor& v = lp[t]->value;
      int best = 0;
      for (int y = 1; y < static_cast<int>(v.size()); ++y)
        if (v.data[y] > v.data[best]) best = y;
      pred[t] = best;
    }

    SegmentedToken out;
    out.surface = surface;
    int start = 0;
    for (size_t t = 1; t <= pred.size(); ++t)
      if (t == pred.size() || pred[t] != pred[t - 1]) {
        out.segments.push_back(Segment{start, static_cast<int>(t), tag_names_[pred[start]]});
        start = static_cast<int>(t);
      }

    if (out.segments.size() > 1) {
      bool has_special = false;
      for (const auto& seg : out.segments)
        if (tags_.is_special(seg.tag)) has_special = true;
      if (has_special) {
        std::vector<int> votes(tag_names_.size(), 0);
        for (int y : pred) ++votes[y];
        int best = 0;
        for (int y = 1; y < static_cast<int>(votes.size()); ++y)
          if (votes[y] > votes[best]) best = y;
        out.segments.assign(1, Segment{0, static_cast<int>(chars.size()), tag_names_[best]});
        if (collapsed) ++*collapsed;
      }
    }
    return out;
  }

  Sentence predict_sentence(const Sentence& in, long* collapsed = nullptr) const {
    Sentence out;
    out.comment = in.comment;
    out.tokens.reserve(in.tokens.size());
    for (const auto& tok : in.tokens) out.tokens.push_back(predict(tok.surface, collapsed));
    return out;
  }

  static CharTaggerModel train(const Corpus& corpus, const TagSet& tags, const CharTaggerConfig& cfg,
                               std::ostream* loss_log = nullptr) {
    cfg.validate();
    std::vector<const SegmentedToken*> toks;
    for (const auto& s : corpus.sentences)
      for (const auto& t : s.tokens) toks.push_back(&t);
    if (toks.empty()) throw std::invalid_argument("training corpus has no tokens");

    CharTaggerModel model(tags, Alphabet::build(corpus), cfg);
    Optimizer opt(cfg.optimizer);
    Rng rng(Rng::derive(cfg.seed, 1));
    std::vector<size_t> order(toks.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Graph g(true, &rng);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
      rng.shuffle(order);
      double total = 0.0;
      for (size_t k : order) {
        g.clear();
        Node* l = model.loss(g, *toks[k]);
        total += l->value.data[0];
        g.backward(l);
        opt.step(model.store_);
      }
      if (loss_log)
        *loss_log << "epoch " << epoch << " mean_loss " << fmt17(total / static_cast<double>(toks.size()))
                  << "\n";
    }
    return model;
  }

  void save(std::ostream& os) const {
    CheckpointWriter w(os);
    w.header("charbilstm", {{"char_dim", std::to_string(cfg_.char_dim)},
                            {"hidden", std::to_string(cfg_.hidden)},
                            {"layers", std::to_string(cfg_.layers)},
                            {"dropout", fmt17(cfg_.dropout)},
                            {"epochs", std::to_string(cfg_.epochs)},
                            {"seed", std::to_string(cfg_.seed)},
                            {"optimizer", cfg_.optimizer.kind},
                            {"lr", fmt17(cfg_.optimizer.lr)},
                            {"beta1", fmt17(cfg_.optimizer.beta1)},
                            {"beta2", fmt17(cfg_.optimizer.beta2)},
                            {"eps", fmt17(cfg_.optimizer.eps)}});
    w.alphabet(alphabet_.chars);
    w.strings("mono_tags", tags_.monolingual);
    w.strings("special_tags", tags_.special);
    w.params(store_);
    w.end();
  }

  static CharTaggerModel load(CheckpointReader& r) {
    if (r.kind() != "charbilstm") throw CheckpointError("expected charbilstm checkpoint, got " + r.kind());
    CharTaggerConfig cfg;
    cfg.char_dim = static_cast<int>(r.meta_int("char_dim"));
    cfg.hidden = static_cast<int>(r.meta_int("hidden"));
    cfg.layers = static_cast<int>(r.meta_int("layers"));
    cfg.dropout = r.meta_double("dropout");
    cfg.epochs = static_cast<int>(r.meta_int("epochs"));
    cfg.seed = static_cast<uint64_t>(r.meta_int("seed"));
    cfg.optimizer.kind = r.meta_str("optimizer");
    cfg.optimizer.lr = r.meta_double("lr");
    cfg.optimizer.beta1 = r.meta_double("beta1");
    cfg.optimizer.beta2 = r.meta_double("beta2");
    cfg.optimizer.eps = r.meta_double("eps");

    std::u32string alpha;
    std::vector<std::string> mono, special;
    ParamStore store;
    for (std::string sec = r.next_section(); sec != "end"; sec = r.next_section()) {
      if (sec == "alphabet") {
        alpha = r.read_alphabet();
      } else if (sec == "strings") {
        if (r.args()[0] == "mono_tags")
          mono = r.read_strings();
        else if (r.args()[0] == "special_tags")
          special = r.read_strings();
        else if (r.args()[0] == "run_config")
          r.read_strings();
        else
          throw CheckpointError("unexpected strings section: " + r.args()[0]);
      } else if (sec == "param") {
        r.read_param(store);
      } else {
        throw CheckpointError("unexpected checkpoint section: " + sec);
      }
    }
    return CharTaggerModel(TagSet(std::move(mono), std::move(special)), Alphabet::from_chars(alpha), cfg,
                           std::move(store));
  }

 private:
  CharTaggerModel(TagSet tags, Alphabet alphabet, CharTaggerConfig cfg, ParamStore store)
      : tags_(std::move(tags)), alphabet_(std::move(alphabet)), cfg_(cfg), store_(std::move(store)) {
    cfg_.validate();
    tag_names_ = tags_.all();
    bind();
  }

  void bind() {
    auto need = [&](const char* name) {
      Parameter* p = store_.find(name);
      if (!p) throw CheckpointError(std::string("missing parameter: ") + name);
      return p;
    };
    char_emb_ = need("char_emb");
    enc_ = BiLstm::bind(store_, "enc", cfg_.layers);
    proj_W_ = need("proj.W");
    proj_b_ = need("proj.b");
  }

  TagSet tags_;
  Alphabet alphabet_;
  CharTaggerConfig cfg_;
  ParamStore store_;
  std::vector<std::string> tag_names_;
  Parameter* char_emb_ = nullptr;
  BiLstm enc_;
  Parameter *proj_W_ = nullptr, *proj_b_ = nullptr;
};

}  // namespace seglid
