#include "hyperinv/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "hyperinv/errors.hpp"

namespace hyperinv::cli {

namespace {

using nlohmann::json;

class LineParser {
 public:
  LineParser(std::string_view text, std::size_t line, const std::string& origin)
      : s_(text), line_(line), origin_(origin) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(origin_ + ":" + std::to_string(line_) + ": " + what, line_);
  }

  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  bool at_end_or_comment() {
    skip_space();
    return pos_ >= s_.size() || s_[pos_] == '#';
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }

  std::string bare_key() {
    skip_space();
    const auto start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_' || s_[pos_] == '-'))
      ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(s_.substr(start, pos_ - start));
  }

  void expect(char c) {
    skip_space();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  json value() {
    skip_space();
    const char c = peek();
    if (c == '"') return basic_string();
    if (c == '\'') return literal_string();
    if (c == '[') return array();
    return scalar();
  }

 private:
  json basic_string() {
    ++pos_;
    std::string out;
    while (pos_ < s_.size() && s_[pos_] != '"') {
      char ch = s_[pos_++];
      if (ch == '\\') {
        if (pos_ >= s_.size()) fail("unterminated escape");
        const char e = s_[pos_++];
        switch (e) {
          case 'n': ch = '\n'; break;
          case 't': ch = '\t'; break;
          case '"': ch = '"'; break;
          case '\\': ch = '\\'; break;
          default: fail(std::string("unsupported escape \\") + e);
        }
      }
      out.push_back(ch);
    }
    if (pos_ >= s_.size()) fail("unterminated string");
    ++pos_;
    return out;
  }

  json literal_string() {
    ++pos_;
    const auto end = s_.find('\'', pos_);
    if (end == std::string_view::npos) fail("unterminated string");
    std::string out(s_.substr(pos_, end - pos_));
    pos_ = end + 1;
    return out;
  }

  json array() {
    ++pos_;
    json out = json::array();
    for (;;) {
      skip_space();
      if (peek() == ']') {
        ++pos_;
        return out;
      }
      if (peek() == '[') fail("nested arrays are not supported");
      out.push_back(value());
      skip_space();
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  json scalar() {
    const auto start = pos_;
    while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ']' && s_[pos_] != '#' && s_[pos_] != ' ' &&
           s_[pos_] != '\t')
      ++pos_;
    std::string tok(s_.substr(start, pos_ - start));
    if (tok.empty()) fail("expected a value");
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string digits;
    for (char ch : tok)
      if (ch != '_') digits.push_back(ch);
    const bool is_float = digits.find_first_of(".eE") != std::string::npos || digits == "inf" ||
                          digits == "+inf" || digits == "-inf" || digits == "nan";
    const char* b = digits.data();
    const char* e = b + digits.size();
    if (*b == '+') ++b;
    if (is_float) {
      double v = 0.0;
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || p != e) fail("invalid number '" + tok + "'");
      return v;
    }
    if (*b == '-') {
      std::int64_t v = 0;
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || p != e) fail("invalid value '" + tok + "'");
      return v;
    }
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e) fail("invalid value '" + tok + "' (strings must be quoted)");
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t line_;
  const std::string& origin_;
};

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, p);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string toml_value(const json& v) {
  if (v.is_string()) return json(v.get<std::string>()).dump();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_number()) return v.dump();
  if (v.is_array()) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + toml_value(v[i]);
    return out + "]";
  }
  throw ContractError("value cannot be written as TOML: " + v.dump());
}

enum class Kind { uint, real, boolean, string, uint_list, string_list };

const std::map<std::string, Kind>& train_keys() {
  static const std::map<std::string, Kind> keys{
      {"epochs", Kind::uint},        {"batch_size", Kind::uint},      {"lr", Kind::real},
      {"schedule", Kind::string},    {"milestones", Kind::uint_list}, {"gamma", Kind::real},
      {"weight_decay", Kind::real},  {"augment_samples", Kind::uint}, {"parametrization", Kind::string},
      {"grad_clip", Kind::real},     {"max_steps", Kind::uint},       {"temperature", Kind::real},
      {"hidden_dim", Kind::uint},    {"activation", Kind::string},    {"projection_dim", Kind::uint},
      {"batch_statistics", Kind::boolean}};
  return keys;
}

std::string kind_name(Kind k) {
  switch (k) {
    case Kind::uint: return "a non-negative integer";
    case Kind::real: return "a number";
    case Kind::boolean: return "true or false";
    case Kind::string: return "a string";
    case Kind::uint_list: return "an array of non-negative integers";
    case Kind::string_list: return "an array of strings";
  }
  return "a value";
}

bool matches(const json& v, Kind k) {
  switch (k) {
    case Kind::uint: return v.is_number_unsigned();
    case Kind::real: return v.is_number();
    case Kind::boolean: return v.is_boolean();
    case Kind::string: return v.is_string();
    case Kind::uint_list:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number_unsigned(); });
    case Kind::string_list:
      return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); });
  }
  return false;
}

class SectionReader {
 public:
  SectionReader(const TomlDocument& doc, std::string section) : doc_(doc), section_(std::move(section)) {
    if (section_.empty()) {
      node_ = &doc.root;
    } else if (doc.root.contains(section_)) {
      node_ = &doc.root.at(section_);
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const auto line = doc_.line_of(section_, key);
    const std::string where = section_.empty() ? key : "[" + section_ + "] " + key;
    throw ParseError("line " + std::to_string(line) + ": " + where + ": " + what, line);
  }

  const json* get(const std::string& key, Kind kind) {
    if (!node_ || !node_->contains(key)) return nullptr;
    seen_.insert(key);
    const json& v = node_->at(key);
    if (!matches(v, kind)) fail(key, "expected " + kind_name(kind) + ", got " + v.dump());
    return &v;
  }

  template <class T>
  void read(const std::string& key, Kind kind, T& out) {
    if (const json* v = get(key, kind)) out = v->get<T>();
  }

  void read_train(training::TrainConfig& config) {
    if (!node_) return;
    for (const auto& [key, kind] : train_keys()) {
      const json* v = get(key, kind);
      if (!v) continue;
      try {
        config = training::TrainConfig::from_json(json{{key, *v}}, config);
      } catch (const std::exception& e) {
        fail(key, e.what());
      }
    }
  }

  /// Every key not consumed by a read is an error.
  void finish() const {
    if (!node_) return;
    for (const auto& [key, value] : node_->items()) {
      if (section_.empty() && value.is_object()) continue;
      if (!seen_.count(key)) fail(key, "unknown key");
    }
  }

  const std::string& section() const { return section_; }

 private:
  const TomlDocument& doc_;
  std::string section_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

void write_train(std::ostringstream& os, const training::TrainConfig& c) {
  const json j = c.to_json();
  for (const auto& [key, kind] : train_keys()) os << key << " = " << toml_value(j.at(key)) << "\n";
}

}  // namespace

std::size_t TomlDocument::line_of(const std::string& section, const std::string& key) const {
  const auto it = lines.find(section + "." + key);
  return it == lines.end() ? 0 : it->second;
}

TomlDocument parse_toml(const std::string& text, const std::string& origin) {
  TomlDocument doc;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    LineParser p(raw, line_no, origin);
    if (p.at_end_or_comment()) continue;
    if (p.peek() == '[') {
      p.expect('[');
      if (p.peek() == '[') p.fail("arrays of tables are not supported");
      section = p.bare_key();
      p.expect(']');
      if (!p.at_end_or_comment()) p.fail("unexpected text after section header");
      if (doc.root.contains(section)) p.fail("duplicate section [" + section + "]");
      doc.root[section] = nlohmann::json::object();
      doc.lines[section + "."] = line_no;
      continue;
    }
    const std::string key = p.bare_key();
    if (p.peek() == '.') p.fail("dotted keys are not supported");
    p.expect('=');
    auto value = p.value();
    if (!p.at_end_or_comment()) p.fail("unexpected text after value");
    auto& table = section.empty() ? doc.root : doc.root[section];
    if (table.contains(key)) p.fail("duplicate key '" + key + "'");
    table[key] = std::move(value);
    doc.lines[section + "." + key] = line_no;
  }
  return doc;
}

TomlDocument load_toml(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open config file " + path.string(), 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_toml(buf.str(), path.string());
}

RunConfig run_config_from_toml(const TomlDocument& doc) {
  static const std::set<std::string> sections{"data",    "pretrain", "contrastive", "downstream",
                                              "measure", "sweep",    "bound"};
  for (const auto& [name, value] : doc.root.items()) {
    if (value.is_object() && !sections.count(name)) {
      const auto line = doc.line_of(name, "");
      throw ParseError("line " + std::to_string(line) + ": unknown section [" + name + "]", line);
    }
  }
  RunConfig c;

  SectionReader top(doc, "");
  top.read("seed", Kind::uint, c.seed);
  top.finish();

  SectionReader data(doc, "data");
  if (const auto* v = data.get("source", Kind::string)) {
    try {
      c.data.source = data::source_from_string(v->get<std::string>());
    } catch (const ContractError& e) {
      data.fail("source", e.what());
    }
    if (c.data.source == data::Source::kmnist) data.fail("source", "use \"mnist\" (MNIST pre-training, KMNIST downstream)");
  }
  data.read("dir", Kind::string, c.data.dir);
  data.read("pretrain_per_class", Kind::uint, c.data.pretrain_per_class);
  data.read("pool_per_class", Kind::uint, c.data.pool_per_class);
  data.read("test_per_class", Kind::uint, c.data.test_per_class);
  data.read("seed", Kind::uint, c.data.seed);
  data.finish();

  SectionReader pre(doc, "pretrain");
  pre.read("kind", Kind::string, c.pretrain_kind);
  if (c.pretrain_kind != "multitask" && c.pretrain_kind != "contrastive") {
    pre.fail("kind", "expected \"multitask\" or \"contrastive\"");
  }
  pre.read("baseline", Kind::boolean, c.train_baseline);
  if (const auto* v = pre.get("baseline_augmentation", Kind::string)) {
    try {
      c.baseline_augmentation = training::mtl_augmentation_from_string(v->get<std::string>());
    } catch (const ContractError& e) {
      pre.fail("baseline_augmentation", e.what());
    }
  }
  pre.read_train(c.pretrain);
  pre.finish();

  SectionReader con(doc, "contrastive");
  con.read("images", Kind::uint, c.contrastive_data.images);
  con.read_train(c.contrastive);
  con.finish();

  SectionReader down(doc, "downstream");
  down.read("tasks", Kind::string_list, c.downstream_protocol.tasks);
  down.read("n", Kind::uint_list, c.downstream_protocol.n);
  down.read("seeds", Kind::uint_list, c.downstream_protocol.seeds);
  std::size_t levels = static_cast<std::size_t>(c.downstream_protocol.levels);
  down.read("levels", Kind::uint, levels);
  if (levels < 2) down.fail("levels", "must be at least 2");
  c.downstream_protocol.levels = static_cast<int>(levels);
  for (const auto& t : c.downstream_protocol.tasks) {
    try {
      data::label_field_from_string(t);
    } catch (const ContractError& e) {
      down.fail("tasks", e.what());
    }
  }
  down.read_train(c.downstream);
  down.finish();

  SectionReader measure(doc, "measure");
  measure.read("points", Kind::uint, c.measure.points);
  measure.read("images", Kind::uint, c.measure.images);
  measure.read("draws", Kind::uint, c.measure.draws);
  if (c.measure.points < 2) measure.fail("points", "must be at least 2");
  measure.finish();

  SectionReader sweep(doc, "sweep");
  sweep.read("tasks", Kind::string_list, c.sweep.tasks);
  sweep.read("n_per_class", Kind::uint, c.sweep.n_per_class);
  sweep.read("seeds", Kind::uint_list, c.sweep.seeds);
  sweep.read("points", Kind::uint, c.sweep.points);
  for (const auto& t : c.sweep.tasks) {
    try {
      data::label_field_from_string(t);
    } catch (const ContractError& e) {
      sweep.fail("tasks", e.what());
    }
  }
  sweep.finish();

  SectionReader bound(doc, "bound");
  bound.read("task", Kind::string, c.bound.task);
  bound.read("n_per_class", Kind::uint, c.bound.n_per_class);
  bound.read("trials", Kind::uint, c.bound.trials);
  bound.read("delta", Kind::real, c.bound.delta);
  if (!(c.bound.delta > 0.0 && c.bound.delta <= 1.0)) bound.fail("delta", "must lie in (0, 1]");
  try {
    data::label_field_from_string(c.bound.task);
  } catch (const ContractError& e) {
    bound.fail("task", e.what());
  }
  bound.finish();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) { return run_config_from_toml(load_toml(path)); }

std::string RunConfig::to_toml() const {
  std::ostringstream os;
  os << "seed = " << seed << "\n\n[data]\n"
     << "source = " << toml_value(data::to_string(data.source)) << "\n"
     << "dir = " << toml_value(data.dir) << "\n"
     << "pretrain_per_class = " << data.pretrain_per_class << "\n"
     << "pool_per_class = " << data.pool_per_class << "\n"
     << "test_per_class = " << data.test_per_class << "\n"
     << "seed = " << data.seed << "\n\n[pretrain]\n"
     << "kind = " << toml_value(pretrain_kind) << "\n"
     << "baseline = " << (train_baseline ? "true" : "false") << "\n"
     << "baseline_augmentation = " << toml_value(training::to_string(baseline_augmentation)) << "\n";
  write_train(os, pretrain);
  os << "\n[contrastive]\nimages = " << contrastive_data.images << "\n";
  write_train(os, contrastive);
  os << "\n[downstream]\n"
     << "tasks = " << toml_value(downstream_protocol.tasks) << "\n"
     << "n = " << toml_value(downstream_protocol.n) << "\n"
     << "seeds = " << toml_value(downstream_protocol.seeds) << "\n"
     << "levels = " << downstream_protocol.levels << "\n";
  write_train(os, downstream);
  os << "\n[measure]\npoints = " << measure.points << "\nimages = " << measure.images << "\ndraws = " << measure.draws
     << "\n\n[sweep]\n"
     << "tasks = " << toml_value(sweep.tasks) << "\n"
     << "n_per_class = " << sweep.n_per_class << "\n"
     << "seeds = " << toml_value(sweep.seeds) << "\n"
     << "points = " << sweep.points << "\n\n[bound]\n"
     << "task = " << toml_value(bound.task) << "\n"
     << "n_per_class = " << bound.n_per_class << "\n"
     << "trials = " << bound.trials << "\n"
     << "delta = " << format_double(bound.delta) << "\n";
  return os.str();
}

nlohmann::json RunConfig::to_json() const {
  return parse_toml(to_toml()).root;
}

}  // namespace hyperinv::cli
