// seglid: subword language identification for intra-word code-switching.
//
// Subcommands: train, eval, predict, stats, synth, cv. Settings resolve as
// defaults < config file < flags; the fully resolved set is logged and
// embedded in every output file. Exit codes: 0 ok, 1 runtime failure,
// 2 usage/config error.

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "seglid/char_tagger.hpp"
#include "seglid/corpus.hpp"
#include "seglid/crf_segmenter.hpp"
#include "seglid/crf_tagger.hpp"
#include "seglid/eval.hpp"
#include "seglid/pipeline.hpp"
#include "seglid/run_config.hpp"
#include "seglid/segrnn.hpp"
#include "seglid/stats.hpp"
#include "seglid/synth.hpp"
#include "seglid/word_tagger.hpp"

namespace {

using namespace seglid;
namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << content;
  if (!out.flush()) throw std::runtime_error("write failed: " + path);
  std::cout << "wrote " << path << "\n";
}

// '#'-comment header carrying a format tag plus the resolved config.
std::string comment_header(const char* format_tag, const RunConfig& cfg) {
  std::string out = std::string("# ") + format_tag + "\n";
  for (const auto& line : cfg.render()) out += "# config " + line + "\n";
  return out;
}

void log_config(const char* cmd, const RunConfig& cfg) {
  std::cout << "command " << cmd << "\n";
  for (const auto& line : cfg.render()) std::cout << "config " << line << "\n";
}

void set_if_absent(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (!cfg.has(key)) cfg.set(key, value);
}

// Copies "epoch ..." lines into dst with a phase prefix.
void append_prefixed(std::string& dst, const std::string& src, const char* prefix) {
  size_t pos = 0;
  while (pos < src.size()) {
    size_t nl = src.find('\n', pos);
    if (nl == std::string::npos) nl = src.size();
    dst += prefix;
    dst.append(src, pos, nl - pos);
    dst += '\n';
    pos = nl + 1;
  }
}

Corpus parse_corpus_file(const std::string& path, TagSet* tags_out = nullptr) {
  std::string text = read_file(path);
  TagSet tags = TagSet::infer(scan_tags(text));
  Corpus c = parse_corpus(text, tags);
  if (tags_out) *tags_out = std::move(tags);
  return c;
}

const std::set<std::string> kSystems = {"segrnn", "charbilstm", "bilstm_pipeline", "crf_pipeline"};

// ---------------------------------------------------------------------------
// train

void run_train(RunConfig cfg) {
  set_if_absent(cfg, "system", "segrnn");
  std::string system = cfg.get_str("system");
  if (!kSystems.count(system)) throw UsageError("unknown system: " + system);

  std::set<std::string> allowed = {"system", "train", "model", "out", "seed", "epochs", "lr"};
  if (system == "segrnn") {
    allowed.insert("max_segment_length");
    allowed.insert("dropout");
  } else if (system == "charbilstm" || system == "bilstm_pipeline") {
    allowed.insert("dropout");
  }
  if (system == "bilstm_pipeline" || system == "crf_pipeline") allowed.insert("l2");
  cfg.require_keys_in(allowed);

  set_if_absent(cfg, "seed", "1");
  set_if_absent(cfg, "epochs", system == "crf_pipeline" ? "50" : "30");
  if (system == "segrnn") {
    set_if_absent(cfg, "lr", "0.001");
    set_if_absent(cfg, "dropout", "0");
    set_if_absent(cfg, "max_segment_length", "0");
  } else if (system == "crf_pipeline") {
    set_if_absent(cfg, "lr", "1");
    set_if_absent(cfg, "l2", "0.1");
  } else {
    set_if_absent(cfg, "lr", "0.1");
    set_if_absent(cfg, "dropout", "0.25");
    if (system == "bilstm_pipeline") set_if_absent(cfg, "l2", "0.1");
  }
  std::string train_path = cfg.require_str("train");
  std::string out_dir = cfg.require_str("out");
  set_if_absent(cfg, "model", (fs::path(out_dir) / "model.ckpt").string());
  log_config("train", cfg);

  uint64_t seed = cfg.get_u64("seed", 1);
  int epochs = static_cast<int>(cfg.get_int("epochs", 30));
  double lr = cfg.get_double("lr", 0.0);

  TagSet tags({}, {});
  Corpus corpus = parse_corpus_file(train_path, &tags);

  std::ostringstream ckpt;
  {
    CheckpointWriter wrap(ckpt);
    wrap.header("run", {{"system", system}});
    wrap.strings("run_config", cfg.render());
    wrap.end();
  }
  std::string log_body;

  if (system == "segrnn") {
    SegRnnConfig mc;
    mc.seed = seed;
    mc.epochs = epochs;
    mc.optimizer = OptimizerConfig::adam(lr);
    mc.dropout = cfg.get_double("dropout", 0.0);
    mc.max_segment_length = static_cast<int>(cfg.get_int("max_segment_length", 0));
    std::ostringstream log;
    SegRnnModel m = SegRnnModel::train(corpus, tags, mc, &log);
    append_prefixed(log_body, log.str(), "");
    m.save(ckpt);
  } else if (system == "charbilstm") {
    CharTaggerConfig mc;
    mc.seed = seed;
    mc.epochs = epochs;
    mc.optimizer = OptimizerConfig::sgd(lr);
    mc.dropout = cfg.get_double("dropout", 0.25);
    std::ostringstream log;
    CharTaggerModel m = CharTaggerModel::train(corpus, tags, mc, &log);
    append_prefixed(log_body, log.str(), "");
    m.save(ckpt);
  } else if (system == "bilstm_pipeline") {
    WordTaggerConfig tc;
    tc.seed = seed;
    tc.epochs = epochs;
    tc.optimizer = OptimizerConfig::sgd(lr);
    tc.dropout = cfg.get_double("dropout", 0.25);
    std::ostringstream tlog;
    WordTaggerModel wt = WordTaggerModel::train(corpus, tc, &tlog);
    append_prefixed(log_body, tlog.str(), "tagger ");
    CrfSegmenterConfig sc;
    sc.l2 = cfg.get_double("l2", 0.1);
    std::ostringstream slog;
    CrfSegmenterModel sg = CrfSegmenterModel::train(corpus, tags, sc, &slog, "");
    append_prefixed(log_body, slog.str(), "segmenter ");
    wt.save(ckpt);
    sg.save(ckpt);
  } else {  // crf_pipeline
    CrfTaggerConfig tc;
    tc.epochs = epochs;
    tc.lr = lr;
    tc.l2 = cfg.get_double("l2", 0.1);
    std::ostringstream tlog;
    CrfTaggerModel ct = CrfTaggerModel::train(corpus, tc, &tlog, "");
    append_prefixed(log_body, tlog.str(), "tagger ");
    CrfSegmenterConfig sc;
    sc.epochs = epochs;
    sc.lr = lr;
    sc.l2 = cfg.get_double("l2", 0.1);
    std::ostringstream slog;
    CrfSegmenterModel sg = CrfSegmenterModel::train(corpus, tags, sc, &slog, "");
    append_prefixed(log_body, slog.str(), "segmenter ");
    ct.save(ckpt);
    sg.save(ckpt);
  }

  write_file(cfg.get_str("model"), ckpt.str());
  write_file((fs::path(out_dir) / "loss_log.txt").string(),
             comment_header("seglid-losslog 1", cfg) + log_body);
}

// ---------------------------------------------------------------------------
// model loading + prediction dispatch

struct LoadedSystem {
  std::string system;
  std::function<Sentence(const Sentence&)> predict;
  std::shared_ptr<PipelineDiagnostics> diag = std::make_shared<PipelineDiagnostics>();
};

LoadedSystem load_system(const std::string& path) {
  auto is = std::make_shared<std::istringstream>(read_file(path));
  CheckpointReader wrap(*is);
  if (wrap.kind() != "run")
    throw std::runtime_error("checkpoint missing run wrapper (kind=" + wrap.kind() + ")");
  for (std::string sec = wrap.next_section(); sec != "end"; sec = wrap.next_section()) {
    if (sec == "strings")
      wrap.read_strings();
    else
      throw CheckpointError("unexpected section in run wrapper: " + sec);
  }
  LoadedSystem out;
  out.system = wrap.meta_str("system");
  if (out.system == "segrnn") {
    CheckpointReader r(*is);
    auto m = std::make_shared<SegRnnModel>(SegRnnModel::load(r));
    out.predict = [m, is](const Sentence& s) { return m->predict_sentence(s); };
  } else if (out.system == "charbilstm") {
    CheckpointReader r(*is);
    auto m = std::make_shared<CharTaggerModel>(CharTaggerModel::load(r));
    auto d = out.diag;
    out.predict = [m, d, is](const Sentence& s) { return m->predict_sentence(s, &d->collapsed_invalid); };
  } else if (out.system == "bilstm_pipeline") {
    CheckpointReader rt(*is);
    auto wt = std::make_shared<WordTaggerModel>(WordTaggerModel::load(rt));
    CheckpointReader rs(*is);
    auto sg = std::make_shared<CrfSegmenterModel>(CrfSegmenterModel::load(rs));
    auto d = out.diag;
    out.predict = [wt, sg, d, is](const Sentence& s) {
      return pipeline_predict([&](const std::vector<std::string>& w) { return wt->predict(w); }, *sg, s,
                              d.get());
    };
  } else if (out.system == "crf_pipeline") {
    CheckpointReader rt(*is);
    auto ct = std::make_shared<CrfTaggerModel>(CrfTaggerModel::load(rt));
    CheckpointReader rs(*is);
    auto sg = std::make_shared<CrfSegmenterModel>(CrfSegmenterModel::load(rs));
    auto d = out.diag;
    out.predict = [ct, sg, d, is](const Sentence& s) {
      return pipeline_predict([&](const std::vector<std::string>& w) { return ct->predict(w); }, *sg, s,
                              d.get());
    };
  } else {
    throw std::runtime_error("unknown system in checkpoint: " + out.system);
  }
  return out;
}

Corpus predict_corpus(const LoadedSystem& sys, const Corpus& input) {
  Corpus out;
  out.sentences.reserve(input.sentences.size());
  for (const auto& s : input.sentences) out.sentences.push_back(sys.predict(s));
  return out;
}

// ---------------------------------------------------------------------------
// eval

void write_report_files(const std::string& out_dir, const RunConfig& cfg, const std::string& system,
                        const EvalReport& rep) {
  std::string text = comment_header("seglid-report 1", cfg) + rep.render_text(system);
  std::cout << rep.render_text(system);
  write_file((fs::path(out_dir) / "report.txt").string(), text);
  write_file((fs::path(out_dir) / "report.csv").string(),
             comment_header("seglid-report-csv 1", cfg) + rep.render_csv(system));
  write_file((fs::path(out_dir) / "confusion.csv").string(),
             comment_header("seglid-confusion-csv 1", cfg) + rep.confusion.render_csv());
}

void run_eval(RunConfig cfg) {
  cfg.require_keys_in({"system", "model", "test", "out"});
  std::string test_path = cfg.require_str("test");
  std::string out_dir = cfg.require_str("out");
  bool oracle = cfg.get_str("system") == "oracle";
  if (!oracle && !cfg.has("model"))
    throw UsageError("eval needs --model (or --system oracle for the gold-vs-gold report)");
  log_config("eval", cfg);

  Corpus gold = parse_corpus_file(test_path);
  if (oracle) {
    EvalReport rep = evaluate(gold, gold);
    write_report_files(out_dir, cfg, "oracle", rep);
    return;
  }
  LoadedSystem sys = load_system(cfg.get_str("model"));
  Corpus pred = predict_corpus(sys, gold);
  EvalReport rep = evaluate(gold, pred, sys.diag.get());
  write_report_files(out_dir, cfg, sys.system, rep);
  write_file((fs::path(out_dir) / "predictions.tsv").string(),
             comment_header("seglid-corpus 1", cfg) + "\n" + serialize_corpus(pred));
}

// ---------------------------------------------------------------------------
// predict

void run_predict(RunConfig cfg) {
  cfg.require_keys_in({"model", "test", "out"});
  std::string input_path = cfg.require_str("test");
  std::string out_dir = cfg.require_str("out");
  log_config("predict", cfg);

  LoadedSystem sys = load_system(cfg.require_str("model"));
  std::string text = read_file(input_path);

  Corpus input;
  size_t pos = 0;
  int line_no = 0;
  while (pos <= text.size()) {
    size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      if (pos == text.size()) break;
      nl = text.size();
    }
    std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    Sentence sent;
    std::istringstream ls(line);
    std::string word;
    while (ls >> word) {
      if (word[0] == '#' || word.find('|') != std::string::npos)
        throw std::runtime_error("line " + std::to_string(line_no) +
                                 ": token not representable in corpus format: '" + word + "'");
      utf8_length(word);  // reject malformed UTF-8 up front
      SegmentedToken tok;
      tok.surface = word;
      sent.tokens.push_back(std::move(tok));
    }
    if (!sent.tokens.empty()) input.sentences.push_back(std::move(sent));
  }

  Corpus pred = predict_corpus(sys, input);
  write_file((fs::path(out_dir) / "predictions.tsv").string(),
             comment_header("seglid-corpus 1", cfg) + "\n" + serialize_corpus(pred));
}

// ---------------------------------------------------------------------------
// stats

void run_stats(RunConfig cfg) {
  cfg.require_keys_in({"train", "out"});
  std::string path = cfg.require_str("train");
  log_config("stats", cfg);

  TagSet tags({}, {});
  Corpus corpus = parse_corpus_file(path, &tags);
  StatsTable table = compute_stats(corpus, tags);
  std::cout << table.render_text();
  if (cfg.has("out")) {
    write_file((fs::path(cfg.get_str("out")) / "stats.txt").string(),
               comment_header("seglid-stats 1", cfg) + table.render_text());
    write_file((fs::path(cfg.get_str("out")) / "stats.csv").string(),
               comment_header("seglid-stats-csv 1", cfg) + table.render_csv());
  }
}

// ---------------------------------------------------------------------------
// synth

void run_synth(RunConfig cfg) {
  cfg.require_keys_in({"out", "seed", "n_sentences", "n_train", "mixed_rate"});
  set_if_absent(cfg, "seed", "42");
  set_if_absent(cfg, "n_sentences", "1200");
  set_if_absent(cfg, "n_train", "1000");
  set_if_absent(cfg, "mixed_rate", "0.1");
  std::string out_dir = cfg.require_str("out");
  log_config("synth", cfg);

  SynthConfig sc = SynthConfig::defaults();
  sc.seed = cfg.get_u64("seed", 42);
  sc.n_sentences = static_cast<int>(cfg.get_int("n_sentences", 1200));
  sc.mixed_token_rate = cfg.get_double("mixed_rate", 0.1);
  int n_train = static_cast<int>(cfg.get_int("n_train", 1000));
  if (n_train < 1 || n_train >= sc.n_sentences)
    throw UsageError("n_train must be in [1, n_sentences)");

  SynthResult r = synth_generate(sc);
  Corpus train, test;
  train.sentences.assign(r.corpus.sentences.begin(), r.corpus.sentences.begin() + n_train);
  test.sentences.assign(r.corpus.sentences.begin() + n_train, r.corpus.sentences.end());

  std::string header = comment_header("seglid-corpus 1", cfg) + "\n";
  write_file((fs::path(out_dir) / "full.tsv").string(), header + serialize_corpus(r.corpus));
  write_file((fs::path(out_dir) / "train.tsv").string(), header + serialize_corpus(train));
  write_file((fs::path(out_dir) / "test.tsv").string(), header + serialize_corpus(test));
  write_file((fs::path(out_dir) / "stats.txt").string(),
             comment_header("seglid-stats 1", cfg) + r.gold_stats.render_text());
  write_file((fs::path(out_dir) / "stats.csv").string(),
             comment_header("seglid-stats-csv 1", cfg) + r.gold_stats.render_csv());
}

// ---------------------------------------------------------------------------
// cv

void run_cv(RunConfig cfg) {
  set_if_absent(cfg, "system", "segrnn");
  std::string system = cfg.get_str("system");
  if (!kSystems.count(system)) throw UsageError("unknown system: " + system);
  cfg.require_keys_in({"system", "train", "out", "seed", "epochs", "k", "lr", "l2", "dropout",
                       "max_segment_length"});
  set_if_absent(cfg, "seed", "1");
  set_if_absent(cfg, "k", "5");
  std::string train_path = cfg.require_str("train");
  std::string out_dir = cfg.require_str("out");
  log_config("cv", cfg);

  int k = static_cast<int>(cfg.get_int("k", 5));
  uint64_t seed = cfg.get_u64("seed", 1);
  TagSet tags({}, {});
  Corpus corpus = parse_corpus_file(train_path, &tags);
  std::vector<Fold> folds = kfold(corpus, k, seed);

  auto train_fold = [&](const Corpus& train, uint64_t fold_seed) -> LoadedSystem {
    LoadedSystem sys;
    sys.system = system;
    int epochs = static_cast<int>(cfg.get_int("epochs", system == "crf_pipeline" ? 50 : 30));
    if (system == "segrnn") {
      SegRnnConfig mc;
      mc.seed = fold_seed;
      mc.epochs = epochs;
      mc.optimizer = OptimizerConfig::adam(cfg.get_double("lr", 0.001));
      mc.dropout = cfg.get_double("dropout", 0.0);
      mc.max_segment_length = static_cast<int>(cfg.get_int("max_segment_length", 0));
      auto m = std::make_shared<SegRnnModel>(SegRnnModel::train(train, tags, mc));
      sys.predict = [m](const Sentence& s) { return m->predict_sentence(s); };
    } else if (system == "charbilstm") {
      CharTaggerConfig mc;
      mc.seed = fold_seed;
      mc.epochs = epochs;
      mc.optimizer = OptimizerConfig::sgd(cfg.get_double("lr", 0.1));
      mc.dropout = cfg.get_double("dropout", 0.25);
      auto m = std::make_shared<CharTaggerModel>(CharTaggerModel::train(train, tags, mc));
      auto d = sys.diag;
      sys.predict = [m, d](const Sentence& s) { return m->predict_sentence(s, &d->collapsed_invalid); };
    } else if (system == "bilstm_pipeline") {
      WordTaggerConfig tc;
      tc.seed = fold_seed;
      tc.epochs = epochs;
      tc.optimizer = OptimizerConfig::sgd(cfg.get_double("lr", 0.1));
      tc.dropout = cfg.get_double("dropout", 0.25);
      auto wt = std::make_shared<WordTaggerModel>(WordTaggerModel::train(train, tc));
      CrfSegmenterConfig sc;
      sc.l2 = cfg.get_double("l2", 0.1);
      auto sg = std::make_shared<CrfSegmenterModel>(CrfSegmenterModel::train(train, tags, sc));
      auto d = sys.diag;
      sys.predict = [wt, sg, d](const Sentence& s) {
        return pipeline_predict([&](const std::vector<std::string>& w) { return wt->predict(w); }, *sg, s,
                                d.get());
      };
    } else {
      CrfTaggerConfig tc;
      tc.epochs = epochs;
      tc.lr = cfg.get_double("lr", 1.0);
      tc.l2 = cfg.get_double("l2", 0.1);
      auto ct = std::make_shared<CrfTaggerModel>(CrfTaggerModel::train(train, tc));
      CrfSegmenterConfig sc;
      sc.epochs = epochs;
      sc.lr = cfg.get_double("lr", 1.0);
      sc.l2 = cfg.get_double("l2", 0.1);
      auto sg = std::make_shared<CrfSegmenterModel>(CrfSegmenterModel::train(train, tags, sc));
      auto d = sys.diag;
      sys.predict = [ct, sg, d](const Sentence& s) {
        return pipeline_predict([&](const std::vector<std::string>& w) { return ct->predict(w); }, *sg, s,
                                d.get());
      };
    }
    return sys;
  };

  struct MetricCol {
    const char* name;
    std::function<double(const EvalReport&)> get;
  };
  std::vector<MetricCol> cols = {
      {"seg_p", [](const EvalReport& r) { return r.seg.p; }},
      {"seg_r", [](const EvalReport& r) { return r.seg.r; }},
      {"seg_f1", [](const EvalReport& r) { return r.seg.f1; }},
      {"tag_p", [](const EvalReport& r) { return r.tag.p; }},
      {"tag_r", [](const EvalReport& r) { return r.tag.r; }},
      {"tag_f1", [](const EvalReport& r) { return r.tag.f1; }},
      {"char_acc", [](const EvalReport& r) { return r.char_acc; }},
      {"mixed_seg_f1", [](const EvalReport& r) { return r.mixed_seg.f1; }},
      {"mixed_tag_f1", [](const EvalReport& r) { return r.mixed_tag.f1; }},
      {"mixed_char_acc", [](const EvalReport& r) { return r.mixed_char_acc; }},
  };
  std::vector<std::vector<double>> values(cols.size());

  for (int i = 0; i < k; ++i) {
    LoadedSystem sys = train_fold(folds[i].train, Rng::derive(seed, static_cast<uint64_t>(i) + 1));
    Corpus pred = predict_corpus(sys, folds[i].dev);
    EvalReport rep = evaluate(folds[i].dev, pred, sys.diag.get());
    for (size_t c = 0; c < cols.size(); ++c) values[c].push_back(cols[c].get(rep));
    std::string tag = "fold" + std::to_string(i + 1);
    write_file((fs::path(out_dir) / (tag + "_report.txt")).string(),
               comment_header("seglid-report 1", cfg) + rep.render_text(system + " " + tag));
    write_file((fs::path(out_dir) / (tag + "_report.csv")).string(),
               comment_header("seglid-report-csv 1", cfg) + rep.render_csv(system + " " + tag));
    std::cout << tag << " done\n";
  }

  char buf[160];
  std::string txt = "metric mean stdev\n";
  std::string csv = "metric,mean,stdev\n";
  for (size_t c = 0; c < cols.size(); ++c) {
    double mean = 0.0;
    for (double v : values[c]) mean += v;
    mean /= static_cast<double>(k);
    double var = 0.0;
    for (double v : values[c]) var += (v - mean) * (v - mean);
    double stdev = k > 1 ? std::sqrt(var / static_cast<double>(k - 1)) : 0.0;
    std::snprintf(buf, sizeof buf, "%s %.6f %.6f\n", cols[c].name, mean, stdev);
    txt += buf;
    std::snprintf(buf, sizeof buf, "%s,%.6f,%.6f\n", cols[c].name, mean, stdev);
    csv += buf;
  }
  std::cout << txt;
  write_file((fs::path(out_dir) / "cv_summary.txt").string(),
             comment_header("seglid-cv 1", cfg) + txt);
  write_file((fs::path(out_dir) / "cv_summary.csv").string(),
             comment_header("seglid-cv-csv 1", cfg) + csv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"subword language identification for intra-word code-switching"};
  app.require_subcommand(1);

  struct Flags {
    std::string config, system, train, test, model, out, seed, epochs, k;
  };

  auto add_common = [](CLI::App* sub, Flags& f) {
    sub->add_option("--config", f.config, "key=value config file ('#' comments)");
    sub->add_option("--system", f.system, "segrnn | charbilstm | bilstm_pipeline | crf_pipeline");
    sub->add_option("--train", f.train, "training / input corpus path");
    sub->add_option("--test", f.test, "test corpus / prediction input path");
    sub->add_option("--model", f.model, "checkpoint path");
    sub->add_option("--out", f.out, "output directory");
    sub->add_option("--seed", f.seed, "master RNG seed");
    sub->add_option("--epochs", f.epochs, "training epochs");
    sub->add_option("--k", f.k, "cross-validation folds");
  };

  Flags flags;
  std::function<void(RunConfig)> handler;
  for (const char* name : {"train", "eval", "predict", "stats", "synth", "cv"}) {
    CLI::App* sub = app.add_subcommand(name, name + std::string(" subcommand"));
    add_common(sub, flags);
    sub->callback([&, name]() {
      handler = name == std::string("train")     ? run_train
                : name == std::string("eval")    ? run_eval
                : name == std::string("predict") ? run_predict
                : name == std::string("stats")   ? run_stats
                : name == std::string("synth")   ? run_synth
                                                 : run_cv;
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    RunConfig cfg;
    auto put = [&](const char* key, const std::string& v) {
      if (!v.empty()) cfg.set(key, v);
    };
    put("system", flags.system);
    put("train", flags.train);
    put("test", flags.test);
    put("model", flags.model);
    put("out", flags.out);
    put("seed", flags.seed);
    put("epochs", flags.epochs);
    put("k", flags.k);
    if (!flags.config.empty()) cfg.merge_file_text(read_file(flags.config));
    handler(std::move(cfg));
    return 0;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
