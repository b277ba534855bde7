#pragma once

// Scenario files: `key = value` lines grouped under [model], [mixing],
// [ladder] and [run]. `#` starts a comment. Values are arithmetic expressions
// over numbers, `pi`, + - * / ( ) and sqrt(), comma lists, bracketed 3-vectors
// `[hx, hy, hz]`, booleans and bare words. Unknown sections or keys, duplicate
// keys and malformed values are errors that name the line or the key.

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "conelab/dispersion_lab.hpp"
#include "conelab/errors.hpp"
#include "conelab/flavour_mixing.hpp"
#include "conelab/oscillation.hpp"
#include "conelab/spectral_core.hpp"

namespace conelab {

namespace scenario_detail {

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view text) : s_(text) {}

  double parse() {
    const double v = expr();
    skip_ws();
    if (pos_ != s_.size()) error("unexpected '" + std::string(1, s_[pos_]) + "'");
    return v;
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;

  [[noreturn]] void error(const std::string& msg) const {
    throw Error(ErrorKind::Validation, "bad number '" + std::string(s_) + "': " + msg);
  }

  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  double expr() {
    double v = term();
    for (;;) {
      if (accept('+')) v += term();
      else if (accept('-')) v -= term();
      else return v;
    }
  }

  double term() {
    double v = factor();
    for (;;) {
      if (accept('*')) v *= factor();
      else if (accept('/')) v /= factor();
      else return v;
    }
  }

  double factor() {
    if (accept('+')) return factor();
    if (accept('-')) return -factor();
    if (accept('(')) {
      const double v = expr();
      if (!accept(')')) error("missing ')'");
      return v;
    }
    skip_ws();
    if (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) {
      const auto start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const auto word = s_.substr(start, pos_ - start);
      if (word == "pi") return kPi;
      if (word == "sqrt") {
        if (!accept('(')) error("sqrt needs '('");
        const double v = expr();
        if (!accept(')')) error("missing ')'");
        return std::sqrt(v);
      }
      error("unknown name '" + std::string(word) + "'");
    }
    double v = 0.0;
    auto res = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (res.ec != std::errc()) error("expected a number");
    pos_ = static_cast<std::size_t>(res.ptr - s_.data());
    return v;
  }
};

/// Split on commas that are not nested in () or [].
inline std::vector<std::string> split_top_level(std::string_view s) {
  std::vector<std::string> out;
  int depth = 0;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '(' || c == '[') ++depth;
    else if (c == ')' || c == ']') --depth;
    else if (c == ',' && depth == 0) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  out.push_back(trim(s.substr(start)));
  return out;
}

}  // namespace scenario_detail

inline double parse_number(std::string_view text) { return scenario_detail::ExpressionParser(text).parse(); }

struct ScenarioEntry {
  std::string value;
  int line = 0;
};

/// Raw section -> key -> value table with line numbers.
using ScenarioTable = std::map<std::string, std::map<std::string, ScenarioEntry>>;

enum class RhoForm { Explicit, Su2, DoubleLayer };

struct ModelSection {
  int n = 0;
  RhoForm form = RhoForm::Explicit;
  std::vector<double> rho;
  double rho_norm = 1.0;
  double theta = 0.0;
  double phi = 0.0;
  double t_x = 1.0;
  double t_y = 1.0;
  std::vector<double> onsite_diag;
  std::vector<Vec3> onsite_h;

  BlochModel build() const {
    RhoVector r = form == RhoForm::Su2           ? su2_rho(n)
                  : form == RhoForm::DoubleLayer ? double_layer_rho(rho_norm, theta, phi)
                                                 : RhoVector(rho);
    CMatrix onsite = CMatrix::Zero(r.n(), r.n());
    if (!onsite_h.empty()) onsite += block_onsite(onsite_h);
    for (std::size_t i = 0; i < onsite_diag.size(); ++i) onsite(i, i) += onsite_diag[i];
    return BlochModel(std::move(r), t_x, t_y, std::move(onsite));
  }
};

struct MixingSection {
  PmnsParams pmns;
  std::array<Vec3, 3> h{Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
  double t_x = 1.0;
  double t_y = 1.0;

  MixingSpec build() const {
    MixingSpec s{pmns, h, t_x, t_y};
    s.validate();
    return s;
  }
};

struct LadderSection {
  int species = 1;
  double coupling = 1.0;
  double light_speed = 1.0;
  std::optional<double> p_min;
  std::optional<double> p_max;
  int n_samples = 16;
  double angle = 0.0;

  LadderMixModel build() const {
    LadderMixModel m{species, coupling, light_speed};
    m.validate();
    return m;
  }
};

struct RunSection {
  std::optional<std::string> subcommand;
  std::string out = "out";
  long seed = 0;
  std::optional<int> nk;
  double loop_radius = 0.1;
  int n_loop = 128;
  double fd_delta = 1e-4;
  std::optional<double> p_mag;
  double p_angle = 0.0;
  std::optional<double> kx;
  std::optional<double> ky;
  double t_min = 0.0;
  std::optional<double> t_max;
  int n_times = 201;
  Branch branch = Branch::Negative;
  int n_dirs = 64;
  std::optional<double> p_mag_alt;
  std::optional<double> t_probe;
  std::vector<double> deltas{0.0, kPi / 2.0, kPi, 3.0 * kPi / 2.0};

  std::vector<double> times() const {
    std::vector<double> t(static_cast<std::size_t>(n_times));
    for (int i = 0; i < n_times; ++i)
      t[i] = n_times == 1 ? t_min : t_min + (*t_max - t_min) * i / (n_times - 1);
    return t;
  }

  /// Explicit (kx, ky) if given, else K + p_mag (cos p_angle, sin p_angle).
  Vec2 momentum() const {
    if (kx && ky) return {*kx, *ky};
    return momentum_near_node(*p_mag, p_angle);
  }
};

struct Scenario {
  std::string source_path;
  std::string source_text;
  std::optional<ModelSection> model;
  std::optional<MixingSection> mixing;
  std::optional<LadderSection> ladder;
  RunSection run;
};

/// Tokenize a scenario into sections and keys, checking only the structure.
inline ScenarioTable parse_scenario_table(std::string_view text) {
  ScenarioTable table;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  auto err = [&](const std::string& msg) {
    throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = scenario_detail::trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') err("unterminated section header");
      section = scenario_detail::trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) err("empty section name");
      if (table.count(section)) err("duplicate section [" + section + "]");
      table[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) err("expected 'key = value'");
    if (section.empty()) err("key outside of any section");
    const std::string key = scenario_detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = scenario_detail::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) err("missing key");
    if (value.empty()) err("missing value for '" + key + "'");
    auto& keys = table[section];
    if (keys.count(key)) err("duplicate key '" + key + "'");
    keys[key] = {value, line_no};
  }
  return table;
}

namespace scenario_detail {

class SectionReader {
 public:
  SectionReader(std::string name, const std::map<std::string, ScenarioEntry>& entries,
                std::set<std::string> allowed)
      : name_(std::move(name)), entries_(entries) {
    for (const auto& [key, entry] : entries_)
      if (!allowed.count(key))
        throw Error(ErrorKind::Validation,
                    name_ + "." + key + ": unknown key (line " + std::to_string(entry.line) + ")");
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  [[noreturn]] void invalid(const std::string& key, const std::string& msg) const {
    std::string where;
    if (auto it = entries_.find(key); it != entries_.end()) where = " (line " + std::to_string(it->second.line) + ")";
    throw Error(ErrorKind::Validation, name_ + "." + key + ": " + msg + where);
  }

  template <class F>
  auto wrap(const std::string& key, F&& f) const -> decltype(f(std::string())) {
    const auto& v = entries_.at(key).value;
    try {
      return f(v);
    } catch (const Error& e) {
      const std::string msg = e.what();
      if (msg.rfind(name_ + "." + key + ":", 0) == 0) throw;
      invalid(key, msg);
    }
  }

  double number(const std::string& key) const {
    return wrap(key, [&](const std::string& v) {
      const double x = parse_number(v);
      if (!std::isfinite(x)) invalid(key, "value must be finite");
      return x;
    });
  }

  std::optional<double> opt_number(const std::string& key) const {
    return has(key) ? std::optional<double>(number(key)) : std::nullopt;
  }

  double number_or(const std::string& key, double def) const { return has(key) ? number(key) : def; }

  int integer(const std::string& key) const {
    const double x = number(key);
    if (x != std::floor(x) || std::abs(x) > 1e9) invalid(key, "expected an integer");
    return static_cast<int>(x);
  }

  int integer_or(const std::string& key, int def) const { return has(key) ? integer(key) : def; }

  bool boolean(const std::string& key) const {
    const auto& v = entries_.at(key).value;
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    invalid(key, "expected true or false");
  }

  std::string word(const std::string& key) const { return entries_.at(key).value; }

  std::vector<double> list(const std::string& key) const {
    return wrap(key, [&](const std::string& v) {
      std::vector<double> out;
      for (const auto& item : split_top_level(v)) {
        if (item.empty()) invalid(key, "empty list element");
        out.push_back(parse_number(item));
      }
      return out;
    });
  }

  Vec3 vec3_from(const std::string& key, std::string_view item) const {
    const std::string t = trim(item);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']') invalid(key, "expected [x, y, z]");
    const auto parts = split_top_level(std::string_view(t).substr(1, t.size() - 2));
    if (parts.size() != 3) invalid(key, "expected three components");
    return {parse_number(parts[0]), parse_number(parts[1]), parse_number(parts[2])};
  }

  Vec3 vec3(const std::string& key) const {
    return wrap(key, [&](const std::string& v) { return vec3_from(key, v); });
  }

  std::vector<Vec3> vec3_list(const std::string& key) const {
    return wrap(key, [&](const std::string& v) {
      std::vector<Vec3> out;
      for (const auto& item : split_top_level(v)) out.push_back(vec3_from(key, item));
      return out;
    });
  }

 private:
  std::string name_;
  const std::map<std::string, ScenarioEntry>& entries_;
};

inline ModelSection read_model(const SectionReader& r) {
  ModelSection m;
  const int forms = int(r.has("rho")) + int(r.has("su2") && r.boolean("su2")) + int(r.has("theta") || r.has("phi"));
  if (forms != 1)
    throw Error(ErrorKind::Validation, "model: exactly one of rho, su2 = true, or (theta, phi) must be given");
  if (r.has("rho")) {
    m.form = RhoForm::Explicit;
    m.rho = r.list("rho");
    m.n = static_cast<int>(m.rho.size()) + 1;
    if (r.has("n") && r.integer("n") != m.n) r.invalid("n", "does not match the length of rho plus one");
  } else if (r.has("su2") && r.boolean("su2")) {
    m.form = RhoForm::Su2;
    if (!r.has("n")) throw Error(ErrorKind::Validation, "model.n: required with su2 = true");
    m.n = r.integer("n");
    if (m.n < 2) r.invalid("n", "must be >= 2");
  } else {
    m.form = RhoForm::DoubleLayer;
    if (!r.has("theta") || !r.has("phi")) throw Error(ErrorKind::Validation, "model: theta and phi go together");
    m.theta = r.number("theta");
    m.phi = r.number("phi");
    m.rho_norm = r.number_or("rho_norm", 1.0);
    m.n = 4;
    if (r.has("n") && r.integer("n") != 4) r.invalid("n", "double-layer parametrization has n = 4");
  }
  if (r.has("rho_norm") && m.form != RhoForm::DoubleLayer) r.invalid("rho_norm", "only valid with theta, phi");
  m.t_x = r.number_or("t_x", 1.0);
  m.t_y = r.number_or("t_y", 1.0);
  if (r.has("onsite_diag")) {
    m.onsite_diag = r.list("onsite_diag");
    if (static_cast<int>(m.onsite_diag.size()) != m.n) r.invalid("onsite_diag", "needs n entries");
  }
  if (r.has("onsite_h")) {
    m.onsite_h = r.vec3_list("onsite_h");
    if (static_cast<int>(m.onsite_h.size()) * 2 != m.n) r.invalid("onsite_h", "needs n/2 vectors");
  }
  return m;
}

inline MixingSection read_mixing(const SectionReader& r) {
  MixingSection m;
  m.pmns.theta12 = r.number_or("theta12", 0.0);
  m.pmns.theta13 = r.number_or("theta13", 0.0);
  m.pmns.theta23 = r.number_or("theta23", 0.0);
  m.pmns.delta = r.number_or("delta", 0.0);
  m.t_x = r.number_or("t_x", 1.0);
  m.t_y = r.number_or("t_y", 1.0);
  const bool explicit_h = r.has("h1") || r.has("h2") || r.has("h3");
  if (r.has("h") && explicit_h) throw Error(ErrorKind::Validation, "mixing: give either h or h1/h2/h3, not both");
  if (r.has("h")) {
    const Vec3 h = r.vec3("h");
    m.h = {Vec3::Zero(), h, Vec3(-h)};
  } else {
    for (int i = 0; i < 3; ++i) {
      const std::string key = "h" + std::to_string(i + 1);
      if (r.has(key)) m.h[i] = r.vec3(key);
    }
  }
  return m;
}

inline LadderSection read_ladder(const SectionReader& r) {
  LadderSection l;
  l.species = r.integer_or("N", 1);
  if (l.species < 1) r.invalid("N", "must be >= 1");
  l.coupling = r.number_or("g", 1.0);
  if (!(l.coupling > 0.0)) r.invalid("g", "must be > 0");
  l.light_speed = r.number_or("c_l", 1.0);
  if (l.light_speed == 0.0) r.invalid("c_l", "must be nonzero");
  l.p_min = r.opt_number("p_min");
  l.p_max = r.opt_number("p_max");
  l.n_samples = r.integer_or("n_samples", 16);
  if (l.n_samples < 8) r.invalid("n_samples", "must be >= 8");
  l.angle = r.number_or("angle", 0.0);
  return l;
}

inline RunSection read_run(const SectionReader& r) {
  RunSection run;
  if (r.has("subcommand")) run.subcommand = r.word("subcommand");
  if (r.has("out")) run.out = r.word("out");
  if (r.has("seed")) run.seed = r.integer("seed");
  if (r.has("nk")) run.nk = r.integer("nk");
  run.loop_radius = r.number_or("loop_radius", 0.1);
  run.n_loop = r.integer_or("n_loop", 128);
  run.fd_delta = r.number_or("fd_delta", 1e-4);
  run.p_mag = r.opt_number("p_mag");
  run.p_angle = r.number_or("p_angle", 0.0);
  run.kx = r.opt_number("kx");
  run.ky = r.opt_number("ky");
  if (run.kx.has_value() != run.ky.has_value()) throw Error(ErrorKind::Validation, "run: kx and ky go together");
  if (run.kx && run.p_mag) throw Error(ErrorKind::Validation, "run: give either p_mag or (kx, ky), not both");
  run.t_min = r.number_or("t_min", 0.0);
  run.t_max = r.opt_number("t_max");
  run.n_times = r.integer_or("n_times", 201);
  if (run.n_times < 1) r.invalid("n_times", "must be >= 1");
  if (r.has("branch")) {
    const auto b = r.word("branch");
    if (b == "negative") run.branch = Branch::Negative;
    else if (b == "positive") run.branch = Branch::Positive;
    else r.invalid("branch", "expected negative or positive");
  }
  run.n_dirs = r.integer_or("n_dirs", 64);
  run.p_mag_alt = r.opt_number("p_mag_alt");
  run.t_probe = r.opt_number("t_probe");
  if (r.has("deltas")) run.deltas = r.list("deltas");
  return run;
}

}  // namespace scenario_detail

inline Scenario parse_scenario_text(std::string_view text, std::string source_path = {}) {
  using scenario_detail::SectionReader;
  const ScenarioTable table = parse_scenario_table(text);
  static const std::map<std::string, std::set<std::string>> allowed{
      {"model", {"n", "rho", "su2", "theta", "phi", "rho_norm", "t_x", "t_y", "onsite_diag", "onsite_h"}},
      {"mixing", {"theta12", "theta13", "theta23", "delta", "h", "h1", "h2", "h3", "t_x", "t_y"}},
      {"ladder", {"N", "g", "c_l", "p_min", "p_max", "n_samples", "angle"}},
      {"run",
       {"subcommand", "out", "seed", "nk", "loop_radius", "n_loop", "fd_delta", "p_mag", "p_angle", "kx", "ky",
        "t_min", "t_max", "n_times", "branch", "n_dirs", "p_mag_alt", "t_probe", "deltas"}},
  };
  for (const auto& [name, keys] : table)
    if (!allowed.count(name)) {
      const int line = keys.empty() ? 0 : keys.begin()->second.line;
      throw Error(ErrorKind::Validation, "[" + name + "]: unknown section" +
                                             (line ? " (near line " + std::to_string(line) + ")" : std::string()));
    }

  Scenario s;
  s.source_path = std::move(source_path);
  s.source_text = std::string(text);
  static const std::map<std::string, ScenarioEntry> empty;
  auto reader = [&](const std::string& name) {
    auto it = table.find(name);
    return SectionReader(name, it == table.end() ? empty : it->second, allowed.at(name));
  };
  if (table.count("model")) s.model = scenario_detail::read_model(reader("model"));
  if (table.count("mixing")) s.mixing = scenario_detail::read_mixing(reader("mixing"));
  if (table.count("ladder")) s.ladder = scenario_detail::read_ladder(reader("ladder"));
  s.run = scenario_detail::read_run(reader("run"));
  return s;
}

inline Scenario parse_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open scenario file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario_text(buf.str(), path.string());
}

}  // namespace conelab
