#pragma once

// Hierarchical BiLSTM word tagger: each token is embedded as
// concat(word embedding, final states of a character BiLSTM) — 50 + 50 = 100
// inputs — fed through a sentence-level BiLSTM (hidden 100 = 50 per
// direction) into a softmax over composed word tags ("DE", "DE_TR", ...).
// Mixed words are predicted directly as their composed tag; a downstream
// segmenter places the boundaries.

#include <algorithm>
#include <ostream>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "seglid/checkpoint.hpp"
#include "seglid/corpus.hpp"
#include "seglid/graph.hpp"
#include "seglid/lstm.hpp"
#include "seglid/optim.hpp"

namespace seglid {

struct WordTaggerConfig {
  int word_dim = 50;
  int char_dim = 25;
  int char_hidden = 25;  // per direction; final states concat = 50
  int sent_hidden = 50;  // per direction; outputs 100
  double dropout = 0.25;
  int epochs = 30;
  uint64_t seed = 1;
  OptimizerConfig optimizer = OptimizerConfig::sgd(0.1);

  void validate() const {
    if (word_dim < 1 || char_dim < 1 || char_hidden < 1 || sent_hidden < 1)
      throw std::invalid_argument("dimensions must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  }
};

class WordTaggerModel {
 public:
  WordTaggerModel(std::vector<std::string> labels, std::vector<std::string> vocab, Alphabet alphabet,
                  WordTaggerConfig cfg)
      : labels_(std::move(labels)), vocab_(std::move(vocab)), alphabet_(std::move(alphabet)), cfg_(cfg) {
    cfg_.validate();
    if (labels_.empty()) throw std::invalid_argument("empty label set");
    index_maps();
    Rng rng(Rng::derive(cfg_.seed, 0));
    store_.add_glorot("word_emb", static_cast<int>(vocab_.size()) + 1, cfg_.word_dim, rng);  // row 0 = UNK
    store_.add_glorot("char_emb", alphabet_.size(), cfg_.char_dim, rng);
    char_enc_ = BiLstm::create(store_, "cenc", cfg_.char_dim, cfg_.char_hidden, 1, rng);
    sent_enc_ = BiLstm::create(store_, "senc", cfg_.word_dim + 2 * cfg_.char_hidden, cfg_.sent_hidden, 1, rng);
    store_.add_glorot("proj.W", static_cast<int>(labels_.size()), 2 * cfg_.sent_hidden, rng);
    store_.add_zeros("proj.b", static_cast<int>(labels_.size()));
    bind();
  }

  const std::vector<std::string>& labels() const { return labels_; }
  const WordTaggerConfig& config() const { return cfg_; }
  ParamStore& params() { return store_; }

  int word_id(const std::string& w) const {
    auto it = vocab_index_.find(w);
    return it == vocab_index_.end() ? 0 : it->second;
  }

  Node* word_repr(Graph& g, const std::string& surface) const {
    std::u32string chars = utf8_decode(surface);
    if (chars.empty()) throw std::invalid_argument("empty surface");
    std::vector<Node*> xs;
    xs.reserve(chars.size());
    for (char32_t c : chars) xs.push_back(g.lookup(char_emb_, alphabet_.id(c)));
    Node* r = g.concat(g.lookup(word_emb_, word_id(surface)), char_enc_.final_states(g, xs));
    return g.dropout(r, cfg_.dropout);
  }

  // One log-probability vector over composed labels per token.
  std::vector<Node*> sentence_log_probs(Graph& g, const std::vector<std::string>& words) const {
    if (words.empty()) throw std::invalid_argument("empty sentence");
    std::vector<Node*> xs;
    xs.reserve(words.size());
    for (const auto& w : words) xs.push_back(word_repr(g, w));
    std::vector<Node*> hs = sent_enc_.encode(g, xs);
    std::vector<Node*> out;
    out.reserve(hs.size());
    for (Node* h : hs) {
      h = g.dropout(h, cfg_.dropout);
      out.push_back(g.log_softmax(g.add(g.matmul(g.param(proj_W_), h), g.param(proj_b_))));
    }
    return out;
  }

  Node* loss(Graph& g, const Sentence& sent) const {
    std::vector<std::string> words;
    std::vector<int> gold;
    for (const auto& t : sent.tokens) {
      words.push_back(t.surface);
      gold.push_back(label_id(composed_word_tag(t)));
    }
    std::vector<Node*> lp = sentence_log_probs(g, words);
    std::vector<Node*> nll;
    nll.reserve(lp.size());
    for (size_t t = 0; t < lp.size(); ++t) nll.push_back(g.scale(g.pick(lp[t], gold[t]), -1.0));
    return nll.size() == 1 ? nll[0] : g.add_n(nll);
  }

  std::vector<std::string> predict(const std::vector<std::string>& words) const {
    Graph g;
    std::vector<Node*> lp = sentence_log_probs(g, words);
    std::vector<std::string> out;
    out.reserve(lp.size());
    for (Node* n : lp) {
      const Tensor& v = n->value;
      int best = 0;
      for (int y = 1; y < static_cast<int>(v.size()); ++y)
        if (v.data[y] > v.data[best]) best = y;
      out.push_back(labels_[best]);
    }
    return out;
  }

  static WordTaggerModel train(const Corpus& corpus, const WordTaggerConfig& cfg,
                               std::ostream* loss_log = nullptr) {
    cfg.validate();
    std::set<std::string> label_set, vocab_set;
    std::vector<const Sentence*> sents;
    for (const auto& s : corpus.sentences) {
      if (s.tokens.empty()) continue;
      sents.push_back(&s);
      for (const auto& t : s.tokens) {
        label_set.insert(composed_word_tag(t));
        vocab_set.insert(t.surface);
      }
    }
    if (sents.empty()) throw std::invalid_argument("training corpus has no tokens");

    WordTaggerModel model(std::vector<std::string>(label_set.begin(), label_set.end()),
                          std::vector<std::string>(vocab_set.begin(), vocab_set.end()),
                          Alphabet::build(corpus), cfg);
    Optimizer opt(cfg.optimizer);
    Rng rng(Rng::derive(cfg.seed, 1));
    std::vector<size_t> order(sents.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    Graph g(true, &rng);
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
      rng.shuffle(order);
      double total = 0.0;
      long n_tokens = 0;
      for (size_t k : order) {
        g.clear();
        Node* l = model.loss(g, *sents[k]);
        total += l->value.data[0];
        n_tokens += static_cast<long>(sents[k]->tokens.size());
        g.backward(l);
        opt.step(model.store_);
      }
      if (loss_log)
        *loss_log << "epoch " << epoch << " mean_loss " << fmt17(total / static_cast<double>(n_tokens))
                  << "\n";
    }
    return model;
  }

  void save(std::ostream& os) const {
    CheckpointWriter w(os);
    w.header("bilstm_tagger", {{"word_dim", std::to_string(cfg_.word_dim)},
                               {"char_dim", std::to_string(cfg_.char_dim)},
                               {"char_hidden", std::to_string(cfg_.char_hidden)},
                               {"sent_hidden", std::to_string(cfg_.sent_hidden)},
                               {"dropout", fmt17(cfg_.dropout)},
                               {"epochs", std::to_string(cfg_.epochs)},
                               {"seed", std::to_string(cfg_.seed)},
                               {"optimizer", cfg_.optimizer.kind},
                               {"lr", fmt17(cfg_.optimizer.lr)},
                               {"beta1", fmt17(cfg_.optimizer.beta1)},
                               {"beta2", fmt17(cfg_.optimizer.beta2)},
                               {"eps", fmt17(cfg_.optimizer.eps)}});
    w.alphabet(alphabet_.chars);
    w.strings("labels", labels_);
    w.strings("vocab", vocab_);
    w.params(store_);
    w.end();
  }

  static WordTaggerModel load(CheckpointReader& r) {
    if (r.kind() != "bilstm_tagger")
      throw CheckpointError("expected bilstm_tagger checkpoint, got " + r.kind());
    WordTaggerConfig cfg;
    cfg.word_dim = static_cast<int>(r.meta_int("word_dim"));
    cfg.char_dim = static_cast<int>(r.meta_int("char_dim"));
    cfg.char_hidden = static_cast<int>(r.meta_int("char_hidden"));
    cfg.sent_hidden = static_cast<int>(r.meta_int("sent_hidden"));
    cfg.dropout = r.meta_double("dropout");
    cfg.epochs = static_cast<int>(r.meta_int("epochs"));
    cfg.seed = static_cast<uint64_t>(r.meta_int("seed"));
    cfg.optimizer.kind = r.meta_str("optimizer");
    cfg.optimizer.lr = r.meta_double("lr");
    cfg.optimizer.beta1 = r.meta_double("beta1");
    cfg.optimizer.beta2 = r.meta_double("beta2");
    cfg.optimizer.eps = r.meta_double("eps");

    std::u32string alpha;
    std::vector<std::string> labels, vocab;
    ParamStore store;
    for (std::string sec = r.next_section(); sec != "end"; sec = r.next_section()) {
      if (sec == "alphabet") {
        alpha = r.read_alphabet();
      } else if (sec == "strings") {
        if (r.args()[0] == "labels")
          labels = r.read_strings();
        else if (r.args()[0] == "vocab")
          vocab = r.read_strings();
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
    return WordTaggerModel(std::move(labels), std::move(vocab), Alphabet::from_chars(alpha), cfg,
                           std::move(store));
  }

 private:
  WordTaggerModel(std::vector<std::string> labels, std::vector<std::string> vocab, Alphabet alphabet,
                  WordTaggerConfig cfg, ParamStore store)
      : labels_(std::move(labels)),
        vocab_(std::move(vocab)),
        alphabet_(std::move(alphabet)),
        cfg_(cfg),
        store_(std::move(store)) {
    cfg_.validate();
    if (labels_.empty()) throw CheckpointError("bilstm_tagger checkpoint missing labels");
    index_maps();
    bind();
  }

  void index_maps() {
    for (size_t i = 0; i < labels_.size(); ++i) label_index_[labels_[i]] = static_cast<int>(i);
    for (size_t i = 0; i < vocab_.size(); ++i) vocab_index_[vocab_[i]] = static_cast<int>(i) + 1;
  }

  int label_id(const std::string& l) const {
    auto it = label_index_.find(l);
    if (it == label_index_.end()) throw std::invalid_argument("label not in model: " + l);
    return it->second;
  }

  void bind() {
    auto need = [&](const char* name) {
      Parameter* p = store_.find(name);
      if (!p) throw CheckpointError(std::string("missing parameter: ") + name);
      return p;
    };
    word_emb_ = need("word_emb");
    char_emb_ = need("char_emb");
    char_enc_ = BiLstm::bind(store_, "cenc", 1);
    sent_enc_ = BiLstm::bind(store_, "senc", 1);
    proj_W_ = need("proj.W");
    proj_b_ = need("proj.b");
  }

  std::vector<std::string> labels_;
  std::vector<std::string> vocab_;
  Alphabet alphabet_;
  WordTaggerConfig cfg_;
  ParamStore store_;
  std::unordered_map<std::string, int> label_index_;
  std::unordered_map<std::string, int> vocab_index_;  // ids start at 1; 0 = UNK
  Parameter *word_emb_ = nullptr, *char_emb_ = nullptr;
  BiLstm char_enc_, sent_enc_;
  Parameter *proj_W_ = nullptr, *proj_b_ = nullptr;
};

}  // namespace seglid
