// Copyright 2026 The HistoSynth Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "histosynth/config/run_config.h"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace histosynth::config {
namespace {

std::string Trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void FailAt(int line, const std::string& what) {
  throw ConfigError("line " + std::to_string(line) + ": " + what);
}

bool IsIdentifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

// Drops a trailing comment that is not inside a string.
std::string StripComment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

std::optional<std::string> ParseString(const std::string& s) {
  if (s.size() < 2 || s.front() != '"' || s.back() != '"') return std::nullopt;
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\') {
      if (i + 2 >= s.size()) return std::nullopt;
      const char n = s[++i];
      if (n == '"' || n == '\\') out.push_back(n);
      else if (n == 'n') out.push_back('\n');
      else return std::nullopt;
    } else if (s[i] == '"') {
      return std::nullopt;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

std::optional<std::int64_t> ParseInt(const std::string& s) {
  std::int64_t v = 0;
  const char* end = s.data() + s.size();
  const char* begin = s.data() + (!s.empty() && s[0] == '+' ? 1 : 0);
  auto r = std::from_chars(begin, end, v);
  if (r.ec != std::errc() || r.ptr != end || begin == end) return std::nullopt;
  return v;
}

std::optional<double> ParseFloat(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* end = s.data() + s.size();
  const char* begin = s.data() + (s[0] == '+' ? 1 : 0);
  auto r = std::from_chars(begin, end, v);
  if (r.ec != std::errc() || r.ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::vector<std::string> SplitArray(const std::string& body, int line) {
  std::vector<std::string> parts;
  std::string cur;
  bool in_string = false;
  for (std::size_t i = 0; i < body.size(); ++i) {
    const char c = body[i];
    if (c == '"' && (i == 0 || body[i - 1] != '\\')) in_string = !in_string;
    if (c == ',' && !in_string) {
      parts.push_back(Trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (in_string) FailAt(line, "unterminated string in array");
  const std::string last = Trim(cur);
  if (!last.empty()) parts.push_back(last);
  for (const std::string& p : parts) {
    if (p.empty()) FailAt(line, "empty array element");
  }
  return parts;
}

Value ParseValue(const std::string& raw, int line) {
  if (raw.empty()) FailAt(line, "missing value");
  if (raw == "true") return true;
  if (raw == "false") return false;
  if (raw.front() == '"') {
    auto s = ParseString(raw);
    if (!s) FailAt(line, "malformed string " + raw);
    return *s;
  }
  if (raw.front() == '[') {
    if (raw.back() != ']') FailAt(line, "arrays must close on the same line");
    const std::vector<std::string> parts = SplitArray(raw.substr(1, raw.size() - 2), line);
    if (!parts.empty() && parts.front().front() == '"') {
      std::vector<std::string> out;
      for (const std::string& p : parts) {
        auto s = ParseString(p);
        if (!s) FailAt(line, "array mixes strings and non-strings");
        out.push_back(*s);
      }
      return out;
    }
    std::vector<double> out;
    for (const std::string& p : parts) {
      auto v = ParseFloat(p);
      if (!v) FailAt(line, "bad number '" + p + "' in array");
      out.push_back(*v);
    }
    return out;
  }
  if (auto i = ParseInt(raw)) return *i;
  if (auto f = ParseFloat(raw)) return *f;
  FailAt(line, "cannot parse value '" + raw + "'");
}

std::string TypeName(const Value& v) {
  switch (v.index()) {
    case 0:
      return "boolean";
    case 1:
      return "integer";
    case 2:
      return "float";
    case 3:
      return "string";
    case 4:
      return "number array";
    default:
      return "string array";
  }
}

class Binder {
 public:
  explicit Binder(const Document& doc) : doc_(doc) {}

  void Int(const std::string& key, int& out) {
    std::int64_t v = out;
    Int64(key, v);
    if (v < INT32_MIN || v > INT32_MAX) Fail(key, "integer out of range");
    out = static_cast<int>(v);
  }
  void Int64(const std::string& key, std::int64_t& out) {
    if (const Entry* e = Take(key)) {
      if (!std::holds_alternative<std::int64_t>(e->value)) Mistyped(key, *e, "integer");
      out = std::get<std::int64_t>(e->value);
    }
  }
  void UInt64(const std::string& key, std::uint64_t& out) {
    std::int64_t v = static_cast<std::int64_t>(out);
    Int64(key, v);
    if (v < 0) Fail(key, "must be non-negative");
    out = static_cast<std::uint64_t>(v);
  }
  void Float(const std::string& key, double& out) {
    if (const Entry* e = Take(key)) {
      if (std::holds_alternative<double>(e->value)) out = std::get<double>(e->value);
      else if (std::holds_alternative<std::int64_t>(e->value)) out = static_cast<double>(std::get<std::int64_t>(e->value));
      else Mistyped(key, *e, "number");
    }
  }
  void Bool(const std::string& key, bool& out) {
    if (const Entry* e = Take(key)) {
      if (!std::holds_alternative<bool>(e->value)) Mistyped(key, *e, "boolean");
      out = std::get<bool>(e->value);
    }
  }
  void String(const std::string& key, std::string& out) {
    if (const Entry* e = Take(key)) {
      if (!std::holds_alternative<std::string>(e->value)) Mistyped(key, *e, "string");
      out = std::get<std::string>(e->value);
    }
  }
  void Floats(const std::string& key, std::vector<double>& out) {
    if (const Entry* e = Take(key)) {
      if (!std::holds_alternative<std::vector<double>>(e->value)) Mistyped(key, *e, "number array");
      out = std::get<std::vector<double>>(e->value);
    }
  }
  void Strings(const std::string& key, std::vector<std::string>& out) {
    if (const Entry* e = Take(key)) {
      if (!std::holds_alternative<std::vector<std::string>>(e->value)) Mistyped(key, *e, "string array");
      out = std::get<std::vector<std::string>>(e->value);
    }
  }
  /// Rejects whatever was not bound.
  void Finish() const {
    for (const auto& [key, entry] : doc_) {
      if (!used_.contains(key)) FailAt(entry.line, "unknown key '" + key + "'");
    }
  }
  [[noreturn]] void Fail(const std::string& key, const std::string& what) const {
    auto it = doc_.find(key);
    FailAt(it == doc_.end() ? 0 : it->second.line, key + ": " + what);
  }

 private:
  const Entry* Take(const std::string& key) {
    auto it = doc_.find(key);
    if (it == doc_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }
  [[noreturn]] void Mistyped(const std::string& key, const Entry& e, const char* want) const {
    FailAt(e.line, key + ": expected " + std::string(want) + ", got " + TypeName(e.value));
  }

  const Document& doc_;
  std::set<std::string> used_;
};

std::string FormatFloat(double v) {
  char buf[40];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string Quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

Document ParseDocument(const std::string& text) {
  Document doc;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  std::set<std::string> sections;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = Trim(StripComment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') FailAt(line, "malformed section header");
      section = Trim(std::string_view(s).substr(1, s.size() - 2));
      if (!IsIdentifier(section)) FailAt(line, "bad section name '" + section + "'");
      if (!sections.insert(section).second) FailAt(line, "duplicate section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) FailAt(line, "expected key = value");
    const std::string key = Trim(std::string_view(s).substr(0, eq));
    if (!IsIdentifier(key)) FailAt(line, "bad key '" + key + "'");
    const std::string full = section.empty() ? key : section + "." + key;
    if (doc.contains(full)) FailAt(line, "duplicate key '" + full + "'");
    doc[full] = Entry{ParseValue(Trim(std::string_view(s).substr(eq + 1)), line), line};
  }
  return doc;
}

RunConfig BindRunConfig(const Document& doc) {
  RunConfig c;
  Binder b(doc);
  b.UInt64("seed", c.seed);

  b.String("data.manifest", c.data.manifest);
  b.Int("data.corpus_size", c.data.corpus_size);
  b.Int("data.width", c.data.width);
  b.Int("data.height", c.data.height);
  b.Float("data.split_fraction", c.data.split_fraction);

  b.Float("mask.mean_distance", c.mask.mean_distance);
  b.String("mask.resolution", c.mask.resolution);
  b.Int("mask.air_threshold", c.mask.thresholds.air_threshold);
  b.Int("mask.cell_threshold", c.mask.thresholds.cell_threshold);
  std::string mode = c.mask.thresholds.mode == mask::ThresholdSpec::Mode::kOtsu ? "otsu" : "fixed";
  b.String("mask.threshold_mode", mode);

  b.Int("generator.base_channels", c.generator.base_channels);
  b.Int("generator.n_downsample", c.generator.n_downsample);
  b.Int("generator.n_resblocks", c.generator.n_resblocks);

  b.Int("discriminator.n_scales", c.discriminator.n_scales);
  b.Int("discriminator.n_layers", c.discriminator.n_layers);
  b.Int("discriminator.base_channels", c.discriminator.base_channels);

  b.Float("train.lr", c.train.lr);
  b.Float("train.beta1", c.train.beta1);
  b.Float("train.beta2", c.train.beta2);
  b.Int("train.batch_size", c.train.batch_size);
  b.Int("train.epochs_constant", c.train.epochs_constant);
  b.Int("train.epochs_decay", c.train.epochs_decay);
  b.Float("train.lambda_fm", c.train.lambda_fm);
  b.Float("train.init_std", c.train.init_std);
  std::string loss = std::string(gan::GanLossModeName(c.train.loss_mode));
  b.String("train.loss_mode", loss);
  b.Int64("train.max_steps", c.train_max_steps);

  b.Strings("eval.embedders", c.eval.embedders);
  b.Floats("eval.frequencies", c.eval.frequencies);
  b.Int64("eval.steps_per_model", c.eval.steps_per_model);
  b.Int("eval.n_eval", c.eval.n_eval);

  b.Int("seg.depth", c.seg.model.depth);
  b.Int("seg.base_channels", c.seg.model.base_channels);
  b.Int64("seg.steps", c.seg.steps);
  b.Float("seg.lr", c.seg.lr);
  b.Float("seg.ce_weight", c.seg.ce_weight);
  b.Bool("seg.augment_flips", c.seg.augment_flips);

  b.String("turing.host", c.turing.host);
  b.Int("turing.port", c.turing.port);
  b.String("turing.sessions_dir", c.turing.sessions_dir);
  b.Finish();

  if (mode == "fixed") c.mask.thresholds.mode = mask::ThresholdSpec::Mode::kFixed;
  else if (mode == "otsu") c.mask.thresholds.mode = mask::ThresholdSpec::Mode::kOtsu;
  else b.Fail("mask.threshold_mode", "must be \"fixed\" or \"otsu\"");
  if (!core::ParseResolution(c.mask.resolution)) {
    b.Fail("mask.resolution", "must be polygons, polygons_noise or polygons_air_cells");
  }
  try {
    c.train.loss_mode = gan::ParseGanLossMode(loss);
  } catch (const std::exception& e) {
    b.Fail("train.loss_mode", e.what());
  }
  c.train.seed = c.seed;
  c.seg.seed = c.seed;

  try {
    c.generator.Validate();
    c.discriminator.Validate();
    c.train.Validate();
    c.seg.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.data.corpus_size < 2) throw ConfigError("data.corpus_size must be at least 2");
  if (c.data.width <= 0 || c.data.height <= 0) throw ConfigError("data.width and data.height must be positive");
  if (!(c.data.split_fraction > 0.0 && c.data.split_fraction < 1.0)) {
    throw ConfigError("data.split_fraction must be in (0, 1)");
  }
  if (!(c.mask.mean_distance >= 1.0)) throw ConfigError("mask.mean_distance must be >= 1");
  if (c.train_max_steps < 0) throw ConfigError("train.max_steps must be non-negative");
  if (c.eval.embedders.empty()) throw ConfigError("eval.embedders must not be empty");
  if (c.eval.steps_per_model <= 0) throw ConfigError("eval.steps_per_model must be positive");
  if (c.eval.n_eval < 2) throw ConfigError("eval.n_eval must be at least 2");
  if (c.turing.port < 0 || c.turing.port > 65535) throw ConfigError("turing.port out of range");
  return c;
}

RunConfig ParseRunConfig(const std::string& text) { return BindRunConfig(ParseDocument(text)); }

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return ParseRunConfig(text.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string FormatRunConfig(const RunConfig& c) {
  std::ostringstream o;
  auto floats = [](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + FormatFloat(v[i]);
    return s + "]";
  };
  auto strings = [](const std::vector<std::string>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + Quote(v[i]);
    return s + "]";
  };
  o << "seed = " << c.seed << "\n\n";
  o << "[data]\n"
    << "manifest = " << Quote(c.data.manifest) << "\n"
    << "corpus_size = " << c.data.corpus_size << "\n"
    << "width = " << c.data.width << "\n"
    << "height = " << c.data.height << "\n"
    << "split_fraction = " << FormatFloat(c.data.split_fraction) << "\n\n";
  o << "[mask]\n"
    << "mean_distance = " << FormatFloat(c.mask.mean_distance) << "\n"
    << "resolution = " << Quote(c.mask.resolution) << "\n"
    << "air_threshold = " << c.mask.thresholds.air_threshold << "\n"
    << "cell_threshold = " << c.mask.thresholds.cell_threshold << "\n"
    << "threshold_mode = " << Quote(c.mask.thresholds.mode == mask::ThresholdSpec::Mode::kOtsu ? "otsu" : "fixed")
    << "\n\n";
  o << "[generator]\n"
    << "base_channels = " << c.generator.base_channels << "\n"
    << "n_downsample = " << c.generator.n_downsample << "\n"
    << "n_resblocks = " << c.generator.n_resblocks << "\n\n";
  o << "[discriminator]\n"
    << "n_scales = " << c.discriminator.n_scales << "\n"
    << "n_layers = " << c.discriminator.n_layers << "\n"
    << "base_channels = " << c.discriminator.base_channels << "\n\n";
  o << "[train]\n"
    << "lr = " << FormatFloat(c.train.lr) << "\n"
    << "beta1 = " << FormatFloat(c.train.beta1) << "\n"
    << "beta2 = " << FormatFloat(c.train.beta2) << "\n"
    << "batch_size = " << c.train.batch_size << "\n"
    << "epochs_constant = " << c.train.epochs_constant << "\n"
    << "epochs_decay = " << c.train.epochs_decay << "\n"
    << "lambda_fm = " << FormatFloat(c.train.lambda_fm) << "\n"
    << "init_std = " << FormatFloat(c.train.init_std) << "\n"
    << "loss_mode = " << Quote(std::string(gan::GanLossModeName(c.train.loss_mode))) << "\n"
    << "max_steps = " << c.train_max_steps << "\n\n";
  o << "[eval]\n"
    << "embedders = " << strings(c.eval.embedders) << "\n"
    << "frequencies = " << floats(c.eval.frequencies) << "\n"
    << "steps_per_model = " << c.eval.steps_per_model << "\n"
    << "n_eval = " << c.eval.n_eval << "\n\n";
  o << "[seg]\n"
    << "depth = " << c.seg.model.depth << "\n"
    << "base_channels = " << c.seg.model.base_channels << "\n"
    << "steps = " << c.seg.steps << "\n"
    << "lr = " << FormatFloat(c.seg.lr) << "\n"
    << "ce_weight = " << FormatFloat(c.seg.ce_weight) << "\n"
    << "augment_flips = " << (c.seg.augment_flips ? "true" : "false") << "\n\n";
  o << "[turing]\n"
    << "host = " << Quote(c.turing.host) << "\n"
    << "port = " << c.turing.port << "\n"
    << "sessions_dir = " << Quote(c.turing.sessions_dir) << "\n";
  return o.str();
}

void EchoRunConfig(const RunConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "configs");
  std::ofstream out(dir / "configs" / "run_config.toml");
  if (!out) throw std::runtime_error("cannot write " + (dir / "configs" / "run_config.toml").string());
  out << FormatRunConfig(config);
}

}  // namespace histosynth::config
