#pragma once

// Segmental recurrent model: a globally normalized joint distribution over
// (segmentation, tag sequence) pairs of a word.
//
//   p(t, e | x) = exp(sum_k phi(i_k, j_k, y_k)) / Z(x)
//
// phi scores span [i, j) with tag y from: a segment embedding produced by a
// small bidirectional composer over the span's character embeddings (its
// initial states seeded from the word-level contextual encodings at the span
// boundaries), a tag embedding, and a bucketed length embedding. Training
// minimizes -log p of the gold parse: log Z comes from the forward recurrence
//   alpha_j = logsumexp_{i, y} (alpha_i + phi(i, j, y)),
// built inside the autodiff graph. Special (word-level-only) tags are masked
// to -inf on every span except the whole word.

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "seglid/checkpoint.hpp"
#include "seglid/corpus.hpp"
#include "seglid/graph.hpp"
#include "seglid/lstm.hpp"
#include "seglid/optim.hpp"
#include "seglid/seglattice.hpp"

namespace seglid {

struct SegRnnConfig {
  int char_dim = 64;           // input layer: character embedding size
  int encoder_hidden = 64;     // contextual encoder, per direction
  int encoder_layers = 1;
  int tag_dim = 32;
  int seg_dim = 16;
  int len_dim = 4;
  int len_buckets = 9;         // lengths 1..8 distinct, 9+ share a bucket
  int scorer_hidden = 32;
  int max_segment_length = 0;  // 0 = unbounded (whole word)
  double dropout = 0.0;        // applied to encodings while training
  int epochs = 30;
  uint64_t seed = 1;
  OptimizerConfig optimizer = OptimizerConfig::adam(0.001);

  void validate() const {
    for (int d : {char_dim, encoder_hidden, encoder_layers, tag_dim, seg_dim, len_dim, len_buckets,
                  scorer_hidden})
      if (d < 1) throw std::invalid_argument("segrnn dimensions must be >= 1");
    if (max_segment_length < 0) throw std::invalid_argument("max_segment_length must be >= 0");
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must be in [0, 1)");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  }
};

class SegRnnModel {
 public:
  SegRnnModel(TagSet tags, Alphabet alphabet, SegRnnConfig cfg)
      : tags_(std::move(tags)), alphabet_(std::move(alphabet)), cfg_(cfg) {
    cfg_.validate();
    tag_names_ = tags_.all();
    n_mono_ = static_cast<int>(tags_.monolingual.size());
    if (tag_names_.empty()) throw std::invalid_argument("empty tag set");
    Rng rng(Rng::derive(cfg_.seed, 0));
    store_.add_glorot("char_emb", alphabet_.size(), cfg_.char_dim, rng);
    encoder_ = BiLstm::create(store_, "enc", cfg_.char_dim, cfg_.encoder_hidden, cfg_.encoder_layers, rng);
    int enc_out = 2 * cfg_.encoder_hidden;
    store_.add_glorot("comp.fseed.W", cfg_.seg_dim, enc_out, rng);
    store_.add_zeros("comp.fseed.b", cfg_.seg_dim);
    store_.add_glorot("comp.bseed.W", cfg_.seg_dim, enc_out, rng);
    store_.add_zeros("comp.bseed.b", cfg_.seg_dim);
    comp_fwd_ = LstmParams::create(store_, "comp.fwd", cfg_.char_dim, cfg_.seg_dim, rng);
    comp_bwd_ = LstmParams::create(store_, "comp.bwd", cfg_.char_dim, cfg_.seg_dim, rng);
    store_.add_glorot("seg.W", cfg_.seg_dim, 2 * cfg_.seg_dim, rng);
    store_.add_zeros("seg.b", cfg_.seg_dim);
    store_.add_glorot("tag_emb", static_cast<int>(tag_names_.size()), cfg_.tag_dim, rng);
    store_.add_glorot("len_emb", cfg_.len_buckets, cfg_.len_dim, rng);
    store_.add_glorot("scorer.seg.W", cfg_.scorer_hidden, cfg_.seg_dim, rng);
    store_.add_glorot("scorer.tag.W", cfg_.scorer_hidden, cfg_.tag_dim, rng);
    store_.add_glorot("scorer.len.W", cfg_.scorer_hidden, cfg_.len_dim, rng);
    store_.add_zeros("scorer.b", cfg_.scorer_hidden);
    store_.add_glorot("scorer.out.W", 1, cfg_.scorer_hidden, rng);
    store_.add_zeros("scorer.out.b", 1);
    bind();
  }

  const TagSet& tagset() const { return tags_; }
  const Alphabet& alphabet() const { return alphabet_; }
  const SegRnnConfig& config() const { return cfg_; }
  const std::vector<std::string>& tag_names() const { return tag_names_; }
  ParamStore& params() { return store_; }

  int tag_id(const std::string& t) const {
    for (size_t i = 0; i < tag_names_.size(); ++i)
      if (tag_names_[i] == t) return static_cast<int>(i);
    throw std::invalid_argument("tag not in model tag set: " + t);
  }

  int effective_max_len(int n) const {
    return cfg_.max_segment_length > 0 ? std::min(cfg_.max_segment_length, n) : n;
  }

  // Contextual encodings: one vector per character, concat(fwd, bwd) states.
  // Dropout is applied here (training graphs only).
  std::vector<Node*> encode_word(Graph& g, const std::u32string& chars) const {
    if (chars.empty()) throw std::invalid_argument("cannot encode an empty word");
    std::vector<Node*> xs;
    xs.reserve(chars.size());
    for (char32_t c : chars) xs.push_back(g.lookup(char_emb_, alphabet_.id(c)));
    std::vector<Node*> hs = encoder_.encode(g, xs);
    for (Node*& h : hs) h = g.dropout(h, cfg_.dropout);
    return hs;
  }

  // Scalar phi nodes for every admissible (i, j, y); nullptr marks masked
  // special-tag entries on proper sub-spans.
  struct NodeLattice {
    int n = 0, L = 0, T = 0;
    std::vector<Node*> phi;
    Node*& at(int i, int j, int y) {
      return phi[(static_cast<size_t>(i) * (n + 1) + j) * T + y];
    }
    Node* at(int i, int j, int y) const {
      return phi[(static_cast<size_t>(i) * (n + 1) + j) * T + y];
    }
  };

  NodeLattice score_spans(Graph& g, const std::u32string& chars) const {
    int n = static_cast<int>(chars.size());
    int L = effective_max_len(n);
    int T = static_cast<int>(tag_names_.size());
    std::vector<Node*> emb;
    emb.reserve(n);
    for (char32_t c : chars) emb.push_back(g.lookup(char_emb_, alphabet_.id(c)));
    std::vector<Node*> enc = encode_word(g, chars);

    // Composer tips shared across spans: one forward run per start, one
    // backward run per end, seeded from the boundary encodings.
    std::vector<std::vector<Node*>> ftip(n), btip(n + 1);
    for (int i = 0; i < n; ++i) {
      ftip[i].assign(n + 1, nullptr);
      LstmState st;
      st.h = g.tanh(g.add(g.matmul(g.param(fseed_W_), enc[i]), g.param(fseed_b_)));
      for (int j = i + 1; j <= std::min(i + L, n); ++j) {
        st = lstm_step(g, comp_fwd_, st, emb[j - 1]);
        ftip[i][j] = st.h;
      }
    }
    for (int j = 1; j <= n; ++j) {
      btip[j].assign(n, nullptr);
      LstmState st;
      st.h = g.tanh(g.add(g.matmul(g.param(bseed_W_), enc[j - 1]), g.param(bseed_b_)));
      for (int i = j - 1; i >= std::max(0, j - L); --i) {
        st = lstm_step(g, comp_bwd_, st, emb[i]);
        btip[j][i] = st.h;
      }
    }

    // Per-tag and per-bucket scorer contributions are shared across spans.
    Node* sc_b = g.param(sc_b_);
    std::vector<Node*> tag_h(T);
    for (int y = 0; y < T; ++y)
      tag_h[y] = g.matmul(g.param(sc_tag_W_), g.lookup(tag_emb_, y));
    std::vector<Node*> len_h(cfg_.len_buckets, nullptr);

    NodeLattice lat;
    lat.n = n;
    lat.L = L;
    lat.T = T;
    lat.phi.assign(static_cast<size_t>(n + 1) * (n + 1) * T, nullptr);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j <= std::min(i + L, n); ++j) {
        Node* seg = g.tanh(
            g.add(g.matmul(g.param(seg_W_), g.concat(ftip[i][j], btip[j][i])), g.param(seg_b_)));
        int bucket = std::min(j - i, cfg_.len_buckets) - 1;
        if (!len_h[bucket]) len_h[bucket] = g.matmul(g.param(sc_len_W_), g.lookup(len_emb_, bucket));
        Node* span_part = g.add(g.add(g.matmul(g.param(sc_seg_W_), seg), len_h[bucket]), sc_b);
        bool whole = (i == 0 && j == n);
        for (int y = 0; y < T; ++y) {
          if (y >= n_mono_ && !whole) continue;  // special tags label whole words only
          Node* hidden = g.tanh(g.add(span_part, tag_h[y]));
          lat.at(i, j, y) = g.add(g.matmul(g.param(sc_out_W_), hidden), g.param(sc_out_b_));
        }
      }
    return lat;
  }

  // Plain-number lattice (eval mode); masked entries hold -inf.
  SegLattice score_lattice(const std::u32string& chars) const {
    Graph g;
    NodeLattice nodes = score_spans(g, chars);
    SegLattice lat(nodes.n, nodes.L, nodes.T);
    for (int i = 0; i < nodes.n; ++i)
      for (int j = i + 1; j <= std::min(i + nodes.L, nodes.n); ++j)
        for (int y = 0; y < nodes.T; ++y) {
          Node* p = nodes.at(i, j, y);
          lat.phi(i, j, y) = p ? p->value.data[0] : kNegInf;
        }
    return lat;
  }

  // In-graph forward recurrence; returns alpha_n = log Z.
  Node* log_partition_node(Graph& g, const NodeLattice& lat) const {
    std::vector<Node*> alpha(lat.n + 1, nullptr);
    std::vector<Node*> cand;
    for (int j = 1; j <= lat.n; ++j) {
      cand.clear();
      for (int i = std::max(0, j - lat.L); i < j; ++i) {
        if (i > 0 && !alpha[i]) continue;
        for (int y = 0; y < lat.T; ++y) {
          Node* p = lat.at(i, j, y);
          if (!p) continue;
          cand.push_back(i > 0 ? g.add(alpha[i], p) : p);
        }
      }
      if (!cand.empty()) alpha[j] = g.logsumexp(g.concat(cand));
    }
    if (!alpha[lat.n]) throw std::runtime_error("no admissible parse for word");
    return alpha[lat.n];
  }

  // -log p(gold parse | word).
  Node* loss(Graph& g, const SegmentedToken& tok) const {
    std::u32string chars = utf8_decode(tok.surface);
    NodeLattice lat = score_spans(g, chars);
    std::vector<Node*> gold;
    for (const auto& seg : tok.segments) {
      if (seg.end - seg.start > lat.L)
        throw std::invalid_argument("gold segment longer than max_segment_length in '" + tok.surface + "'");
      Node* p = lat.at(seg.start, seg.end, tag_id(seg.tag));
      if (!p) throw std::invalid_argument("gold parse uses a masked span/tag in '" + tok.surface + "'");
      gold.push_back(p);
    }
    Node* gold_score = gold.size() == 1 ? gold[0] : g.add_n(gold);
    return g.sub(log_partition_node(g, lat), gold_score);
  }

  // Exact argmax parse; adjacent equal-tag spans in the raw argmax are merged
  // so the output always satisfies the token invariants.
  SegmentedToken decode(const std::string& surface) const {
    std::u32string chars = utf8_decode(surface);
    SegLattice lat = score_lattice(chars);
    Parse best = viterbi(lat);
    SegmentedToken out;
    out.surface = surface;
    for (const auto& st : best.segments) {
      const std::string& tag = tag_names_[st.tag];
      if (!out.segments.empty() && out.segments.back().tag == tag)
        out.segments.back().end = st.end;
      else
        out.segments.push_back(Segment{st.start, st.end, tag});
    }
    return out;
  }

  Sentence predict_sentence(const Sentence& in) const {
    Sentence out;
    out.comment = in.comment;
    out.tokens.reserve(in.tokens.size());
    for (const auto& tok : in.tokens) out.tokens.push_back(decode(tok.surface));
    return out;
  }

  static SegRnnModel train(const Corpus& corpus, const TagSet& tags, const SegRnnConfig& cfg,
                           std::ostream* loss_log = nullptr) {
    cfg.validate();
    std::vector<const SegmentedToken*> toks;
    for (const auto& s : corpus.sentences)
      for (const auto& t : s.tokens) toks.push_back(&t);
    if (toks.empty()) throw std::invalid_argument("training corpus has no tokens");
    if (cfg.max_segment_length > 0)
      for (const auto* t : toks)
        for (const auto& seg : t->segments)
          if (seg.end - seg.start > cfg.max_segment_length)
            throw std::invalid_argument("gold segment longer than max_segment_length in '" + t->surface +
                                        "'");

    SegRnnModel model(tags, Alphabet::build(corpus), cfg);
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
    w.header("segrnn", {{"char_dim", std::to_string(cfg_.char_dim)},
                        {"encoder_hidden", std::to_string(cfg_.encoder_hidden)},
                        {"encoder_layers", std::to_string(cfg_.encoder_layers)},
                        {"tag_dim", std::to_string(cfg_.tag_dim)},
                        {"seg_dim", std::to_string(cfg_.seg_dim)},
                        {"len_dim", std::to_string(cfg_.len_dim)},
                        {"len_buckets", std::to_string(cfg_.len_buckets)},
                        {"scorer_hidden", std::to_string(cfg_.scorer_hidden)},
                        {"max_segment_length", std::to_string(cfg_.max_segment_length)},
                        {"dropout", fmt17(cfg_.dropout)},
                        {"epochs", std::to_string(cfg_.epochs)},
                        {"seed", std::to_string(cfg_.seed)},
                        {"optimizer", cfg_.optimizer.kind},
                        {"lr", fmt17(cfg_.optimizer.lr)},
                        {"beta1", fmt17(cfg_.optimizer.beta1)},
                        {"beta2", fmt17(cfg_.optimizer.beta2)},
                        {"eps", fmt17(cfg_.optimizer.eps)},
                        {"n_mono", std::to_string(n_mono_)}});
    w.alphabet(alphabet_.chars);
    w.strings("mono_tags", tags_.monolingual);
    w.strings("special_tags", tags_.special);
    w.params(store_);
    w.end();
  }

  static SegRnnModel load(CheckpointReader& r) {
    if (r.kind() != "segrnn") throw CheckpointError("expected segrnn checkpoint, got " + r.kind());
    SegRnnConfig cfg;
    cfg.char_dim = static_cast<int>(r.meta_int("char_dim"));
    cfg.encoder_hidden = static_cast<int>(r.meta_int("encoder_hidden"));
    cfg.encoder_layers = static_cast<int>(r.meta_int("encoder_layers"));
    cfg.tag_dim = static_cast<int>(r.meta_int("tag_dim"));
    cfg.seg_dim = static_cast<int>(r.meta_int("seg_dim"));
    cfg.len_dim = static_cast<int>(r.meta_int("len_dim"));
    cfg.len_buckets = static_cast<int>(r.meta_int("len_buckets"));
    cfg.scorer_hidden = static_cast<int>(r.meta_int("scorer_hidden"));
    cfg.max_segment_length = static_cast<int>(r.meta_int("max_segment_length"));
    cfg.dropout = r.meta_double("dropout");
    cfg.epochs = static_cast<int>(r.meta_int("epochs"));
    cfg.seed = static_cast<uint64_t>(r.meta_int("seed"));
    cfg.optimizer.kind = r.meta_str("optimizer");
    cfg.optimizer.lr = r.meta_double("lr");
    cfg.optimizer.beta1 = r.meta_double("beta1");
    cfg.optimizer.beta2 = r.meta_double("beta2");
    cfg.optimizer.eps = r.meta_double("eps");

    std::u32string alpha_chars;
    std::vector<std::string> mono, special;
    ParamStore store;
    for (std::string sec = r.next_section(); sec != "end"; sec = r.next_section()) {
      if (sec == "alphabet") {
        alpha_chars = r.read_alphabet();
      } else if (sec == "strings") {
        if (r.args()[0] == "mono_tags")
          mono = r.read_strings();
        else if (r.args()[0] == "special_tags")
          special = r.read_strings();
        else
          throw CheckpointError("unexpected strings section: " + r.args()[0]);
      } else if (sec == "param") {
        r.read_param(store);
      } else {
        throw CheckpointError("unexpected checkpoint section: " + sec);
      }
    }
    return SegRnnModel(TagSet(std::move(mono), std::move(special)), Alphabet::from_chars(alpha_chars), cfg,
                       std::move(store));
  }

 private:
  // Load path: adopt a fully populated store and bind handles by name.
  SegRnnModel(TagSet tags, Alphabet alphabet, SegRnnConfig cfg, ParamStore store)
      : tags_(std::move(tags)), alphabet_(std::move(alphabet)), cfg_(cfg), store_(std::move(store)) {
    cfg_.validate();
    tag_names_ = tags_.all();
    n_mono_ = static_cast<int>(tags_.monolingual.size());
    bind();
  }

  void bind() {
    auto need = [&](const char* name) {
      Parameter* p = store_.find(name);
      if (!p) throw CheckpointError(std::string("missing parameter: ") + name);
      return p;
    };
    char_emb_ = need("char_emb");
    encoder_ = BiLstm::bind(store_, "enc", cfg_.encoder_layers);
    fseed_W_ = need("comp.fseed.W");
    fseed_b_ = need("comp.fseed.b");
    bseed_W_ = need("comp.bseed.W");
    bseed_b_ = need("comp.bseed.b");
    comp_fwd_ = LstmParams::bind(store_, "comp.fwd");
    comp_bwd_ = LstmParams::bind(store_, "comp.bwd");
    seg_W_ = need("seg.W");
    seg_b_ = need("seg.b");
    tag_emb_ = need("tag_emb");
    len_emb_ = need("len_emb");
    sc_seg_W_ = need("scorer.seg.W");
    sc_tag_W_ = need("scorer.tag.W");
    sc_len_W_ = need("scorer.len.W");
    sc_b_ = need("scorer.b");
    sc_out_W_ = need("scorer.out.W");
    sc_out_b_ = need("scorer.out.b");
  }

  TagSet tags_;
  Alphabet alphabet_;
  SegRnnConfig cfg_;
  ParamStore store_;
  std::vector<std::string> tag_names_;
  int n_mono_ = 0;

  Parameter* char_emb_ = nullptr;
  BiLstm encoder_;
  Parameter *fseed_W_ = nullptr, *fseed_b_ = nullptr, *bseed_W_ = nullptr, *bseed_b_ = nullptr;
  LstmParams comp_fwd_, comp_bwd_;
  Parameter *seg_W_ = nullptr, *seg_b_ = nullptr;
  Parameter *tag_emb_ = nullptr, *len_emb_ = nullptr;
  Parameter *sc_seg_W_ = nullptr, *sc_tag_W_ = nullptr, *sc_len_W_ = nullptr, *sc_b_ = nullptr;
  Parameter *sc_out_W_ = nullptr, *sc_out_b_ = nullptr;
};

}  // namespace seglid
