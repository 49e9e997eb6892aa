#pragma once

// Versioned text checkpoint format shared by every model:
//
//   seglid-checkpoint 1 kind=<model> key=value ...
//   alphabet <k>            followed by one line of k hex scalar values
//   strings <name> <k>      followed by k lines (tags, vocab, labels)
//   param <name> <rank> <dims...>   followed by one line of values
//   feats <name> <k> <cols>         followed by k lines: feature + weights
//   end
//
// Doubles are printed with 17 significant digits, so save -> load -> save is
// byte-identical and values round-trip bit-exactly.

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "seglid/graph.hpp"
#include "seglid/utf8.hpp"

namespace seglid {

constexpr int kCheckpointVersion = 1;

struct CheckpointError : std::runtime_error {
  explicit CheckpointError(const std::string& what) : std::runtime_error(what) {}
};

inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& s) {
  const char* p = s.c_str();
  char* endp = nullptr;
  double v = std::strtod(p, &endp);
  if (endp == p || *endp != '\0') throw CheckpointError("bad numeric value: " + s);
  return v;
}

class CheckpointWriter {
 public:
  explicit CheckpointWriter(std::ostream& os) : os_(os) {}

  void header(const std::string& kind, const std::vector<std::pair<std::string, std::string>>& meta) {
    os_ << "seglid-checkpoint " << kCheckpointVersion << " kind=" << kind;
    for (const auto& [k, v] : meta) os_ << ' ' << k << '=' << v;
    os_ << '\n';
  }

  void alphabet(const std::u32string& chars) {
    os_ << "alphabet " << chars.size() << '\n';
    for (size_t i = 0; i < chars.size(); ++i) {
      if (i) os_ << ' ';
      char buf[16];
      std::snprintf(buf, sizeof(buf), "%x", static_cast<unsigned>(chars[i]));
      os_ << buf;
    }
    os_ << '\n';
  }

  void strings(const std::string& name, const std::vector<std::string>& items) {
    os_ << "strings " << name << ' ' << items.size() << '\n';
    for (const auto& s : items) os_ << s << '\n';
  }

  void param(const Parameter& p) { param_raw(p.name, p.value.shape, p.value.data); }

  void param_raw(const std::string& name, const std::vector<int>& shape, const std::vector<double>& data) {
    os_ << "param " << name << ' ' << shape.size();
    for (int d : shape) os_ << ' ' << d;
    os_ << '\n';
    for (size_t i = 0; i < data.size(); ++i) {
      if (i) os_ << ' ';
      os_ << fmt17(data[i]);
    }
    os_ << '\n';
  }

  void params(const ParamStore& store) {
    for (const auto& p : store) param(p);
  }

  void feats(const std::string& name, const std::vector<std::pair<std::string, std::vector<double>>>& rows,
             int cols) {
    os_ << "feats " << name << ' ' << rows.size() << ' ' << cols << '\n';
    for (const auto& [feat, w] : rows) {
      os_ << feat;
      for (double v : w) os_ << ' ' << fmt17(v);
      os_ << '\n';
    }
  }

  void end() { os_ << "end\n"; }

 private:
  std::ostream& os_;
};

class CheckpointReader {
 public:
  explicit CheckpointReader(std::istream& is) : is_(is) {
    std::string line = next_line("header");
    std::istringstream ls(line);
    std::string magic;
    int version = 0;
    ls >> magic >> version;
    if (magic != "seglid-checkpoint") throw CheckpointError("not a seglid checkpoint");
    if (version != kCheckpointVersion)
      throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    std::string kv;
    while (ls >> kv) {
      size_t eq = kv.find('=');
      if (eq == std::string::npos) throw CheckpointError("malformed header field: " + kv);
      meta_[kv.substr(0, eq)] = kv.substr(eq + 1);
    }
    if (!meta_.count("kind")) throw CheckpointError("checkpoint header missing kind");
  }

  const std::string& kind() const { return meta_.at("kind"); }
  const std::map<std::string, std::string>& meta() const { return meta_; }

  std::string meta_str(const std::string& key) const {
    auto it = meta_.find(key);
    if (it == meta_.end()) throw CheckpointError("checkpoint header missing " + key);
    return it->second;
  }
  long long meta_int(const std::string& key) const { return std::stoll(meta_str(key)); }
  double meta_double(const std::string& key) const { return parse_double(meta_str(key)); }

  // Returns the keyword of the next section ("alphabet", "strings", "param",
  // "feats", "end") and leaves its arguments in args().
  const std::string& next_section() {
    std::string line = next_line("section");
    std::istringstream ls(line);
    ls >> section_;
    args_.clear();
    std::string a;
    while (ls >> a) args_.push_back(a);
    return section_;
  }

  const std::vector<std::string>& args() const { return args_; }

  std::u32string read_alphabet() {
    size_t k = arg_count(0, "alphabet");
    std::u32string out;
    out.reserve(k);
    std::istringstream ls(next_line("alphabet data"));
    for (size_t i = 0; i < k; ++i) {
      std::string hex;
      if (!(ls >> hex)) throw CheckpointError("truncated alphabet section");
      out.push_back(static_cast<char32_t>(std::stoul(hex, nullptr, 16)));
    }
    return out;
  }

  std::vector<std::string> read_strings() {
    size_t k = arg_count(1, "strings");
    std::vector<std::string> out;
    out.reserve(k);
    for (size_t i = 0; i < k; ++i) out.push_back(next_line("strings data"));
    return out;
  }

  // Reads the current param section into `store`, creating the parameter.
  Parameter* read_param(ParamStore& store) {
    std::vector<int> shape;
    std::vector<double> data;
    std::string name = read_param_raw(&shape, &data);
    Parameter* p = store.add(name, shape);
    p->value.data = std::move(data);
    return p;
  }

  std::string read_param_raw(std::vector<int>* shape, std::vector<double>* data) {
    if (args_.size() < 2) throw CheckpointError("malformed param section");
    std::string name = args_[0];
    int rank = std::stoi(args_[1]);
    if (static_cast<int>(args_.size()) != 2 + rank) throw CheckpointError("malformed param dims: " + name);
    shape->clear();
    size_t count = 1;
    for (int i = 0; i < rank; ++i) {
      int d = std::stoi(args_[2 + i]);
      if (d < 1) throw CheckpointError("bad param dim: " + name);
      shape->push_back(d);
      count *= static_cast<size_t>(d);
    }
    data->assign(count, 0.0);
    std::istringstream ls(next_line("param data"));
    std::string tok;
    for (size_t i = 0; i < count; ++i) {
      if (!(ls >> tok)) throw CheckpointError("truncated param values: " + name);
      (*data)[i] = parse_double(tok);
    }
    return name;
  }

  std::vector<std::pair<std::string, std::vector<double>>> read_feats(int* cols_out = nullptr) {
    if (args_.size() != 3) throw CheckpointError("malformed feats section");
    size_t k = std::stoull(args_[1]);
    int cols = std::stoi(args_[2]);
    if (cols_out) *cols_out = cols;
    std::vector<std::pair<std::string, std::vector<double>>> out;
    out.reserve(k);
    for (size_t i = 0; i < k; ++i) {
      std::istringstream ls(next_line("feats data"));
      std::string feat, tok;
      if (!(ls >> feat)) throw CheckpointError("truncated feats section");
      std::vector<double> w(cols);
      for (int j = 0; j < cols; ++j) {
        if (!(ls >> tok)) throw CheckpointError("truncated feats row: " + feat);
        w[j] = parse_double(tok);
      }
      out.emplace_back(std::move(feat), std::move(w));
    }
    return out;
  }

 private:
  std::string next_line(const char* what) {
    std::string line;
    if (!std::getline(is_, line)) throw CheckpointError(std::string("unexpected end of checkpoint in ") + what);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  }

  size_t arg_count(size_t pos, const char* who) {
    if (args_.size() <= pos) throw CheckpointError(std::string("malformed ") + who + " section");
    return std::stoull(args_[pos]);
  }

  std::istream& is_;
  std::map<std::string, std::string> meta_;
  std::string section_;
  std::vector<std::string> args_;
};

}  // namespace seglid
