#pragma once

// Experiment configuration: a strict sectioned key = value format.
//
//   # comment
//   experiment = compress-sweep
//   seed = 7
//
//   [protocol]
//   name = xor_coin
//   n = 2
//   L = 4
//
//   [compression]
//   ell = [1, 2, 3, 4]
//   thresholds = [1/100]
//
// Values are integers, decimals, fractions a/b, bare words, "quoted strings"
// or flat lists [a, b, ...]. Unknown sections and keys, duplicates and
// missing required records are errors reported with line numbers.

#include "forge/error.hpp"
#include "forge/rational.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace forge::cli {

enum class ExperimentKind {
  kSimulate,
  kCompressSweep,
  kSecuritySweep,
  kReduction,
  kHybridChain,
  kPublicCoinCheck,
  kVerifyClaims,
  kChernoff
};

inline const std::vector<std::pair<std::string, ExperimentKind>>& experiment_names() {
  static const std::vector<std::pair<std::string, ExperimentKind>> names = {
      {"simulate", ExperimentKind::kSimulate},           {"compress-sweep", ExperimentKind::kCompressSweep},
      {"security-sweep", ExperimentKind::kSecuritySweep}, {"reduction", ExperimentKind::kReduction},
      {"hybrid-chain", ExperimentKind::kHybridChain},     {"publiccoin-check", ExperimentKind::kPublicCoinCheck},
      {"verify-claims", ExperimentKind::kVerifyClaims},   {"chernoff", ExperimentKind::kChernoff}};
  return names;
}

inline std::string to_string(ExperimentKind k) {
  for (const auto& [name, kind] : experiment_names())
    if (kind == k) return name;
  return "?";
}

struct ProtocolSection {
  std::string name;
  std::map<std::string, std::uint32_t> args;  // n, d, L, m as given
};

struct CompressionSection {
  std::vector<std::uint32_t> ell;
  std::string source = "sampled";  // sampled | all | bijective
  std::uint64_t samples = 500;
  std::vector<Rational> thresholds;
};

struct SecuritySection {
  std::uint32_t t = 0;
  std::vector<std::uint64_t> M;
  Rational delta = 0;
  std::vector<Rational> slacks{Rational(0)};
};

struct SamplingSection {
  std::uint64_t B = 10000;
  double gamma = 0.01;
  double confidence = 0.95;
  std::uint64_t z = 0;
};

struct AdversarySection {
  std::string strategy = "passive";  // passive | greedy_majority | last_speaker
  std::vector<std::uint32_t> t{0};
  std::uint32_t target = 1;
};

struct ClaimsSection {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> cases{{3, 3}};  // (|U|, M)
  std::vector<Rational> eps{Rational(1, 10), Rational(1, 4), Rational(1, 2), Rational(9, 10)};
  std::uint64_t pinsker_samples = 1000;
  std::uint32_t k = 3;
};

struct PublicCoinSection {
  std::string name;
  std::map<std::string, std::uint32_t> args;
};

struct Limits {
  std::uint64_t cap = kDefaultEnumerationCap;
  std::uint64_t game_tree_cap = std::uint64_t{1} << 22;
  std::uint32_t ell_r_cap = 8;
  unsigned workers = 1;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::kSimulate;
  std::uint64_t seed = 0;
  std::optional<std::string> output_dir;
  std::optional<ProtocolSection> protocol;
  std::optional<CompressionSection> compression;
  std::optional<SecuritySection> security;
  std::optional<SamplingSection> sampling;
  std::optional<AdversarySection> adversary;
  std::optional<ClaimsSection> claims;
  std::optional<PublicCoinSection> publiccoin;
  Limits limits;
  std::string text;  // source, hashed into reports
};

struct ConfigDiagnostic {
  int line = 0;  // 0 when not tied to a line
  std::string field;
  std::string message;

  std::string str() const {
    return (line ? "line " + std::to_string(line) + ": " : std::string()) + field +
           (message == "required" ? " required" : ": " + message);
  }
};

struct ParseResult {
  std::optional<ExperimentConfig> config;
  std::vector<ConfigDiagnostic> errors;
  bool ok() const { return config.has_value() && errors.empty(); }
};

/// Help text: every key with its default.
inline std::string config_reference() {
  return R"(Config keys (defaults in parentheses):
  experiment = simulate | compress-sweep | security-sweep | reduction | hybrid-chain
               | publiccoin-check | verify-claims | chernoff   (required)
  seed = <u64> (0)          output_dir = "<path>" (.)
  [protocol]     name = xor_coin | majority_coin | xor_selection | leader_election_mod_n; n, d, L, m (1; m = L)
  [compression]  ell = <int> | [ints]; source = sampled | all | bijective (sampled); samples (500);
                 thresholds = [rationals] ([])
  [security]     t (0); M = [ints] (required); delta (0); slacks = [rationals] ([0])
  [sampling]     B (10000); gamma (0.01); confidence (0.95); z (0)
  [adversary]    strategy = passive | greedy_majority | last_speaker (passive); t = [ints] ([0]); target (1)
  [claims]       cases = [|U|xM, ...] ([3x3]); eps = [rationals] ([1/10, 1/4, 1/2, 9/10]);
                 pinsker_samples (1000); k (3)
  [publiccoin]   name = and_protocol | fresh_slices | parity_reveal; n, d, L, ell_r
  [limits]       cap (16777216); game_tree_cap (4194304); ell_r_cap (8); workers (1)
)";
}

namespace detail {

struct Value {
  std::string text;               // scalar text, quotes removed
  bool quoted = false;
  bool list = false;
  std::vector<std::string> items;  // list elements
  int line = 0;
};

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

/// Drops a trailing comment that is not inside quotes.
inline std::string strip_comment(const std::string& s) {
  bool in_quotes = false;
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] == '"') in_quotes = !in_quotes;
    if (!in_quotes && (s[k] == '#' || s[k] == ';')) return s.substr(0, k);
  }
  return s;
}

inline std::optional<std::string> unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  if (s.find('"') != std::string::npos) return std::nullopt;
  return s;
}

using Section = std::map<std::string, Value>;

class Reader {
 public:
  Reader(std::string section, const Section& values, std::vector<ConfigDiagnostic>& errors)
      : section_(std::move(section)), values_(values), errors_(errors) {}

  std::string field(const std::string& key) const { return section_.empty() ? key : section_ + "." + key; }

  const Value* find(const std::string& key) {
    used_.push_back(key);
    auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
  }

  void error(const Value* v, const std::string& key, const std::string& message) {
    errors_.push_back({v ? v->line : 0, field(key), message});
  }

  std::optional<std::uint64_t> u64(const Value& v, const std::string& key, const std::string& text) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos || text.size() > 19) {
      error(&v, key, "expected a nonnegative integer, got '" + text + "'");
      return std::nullopt;
    }
    return std::stoull(text);
  }

  /// True if the key was present and parsed.
  template <class T>
  bool scalar_u(const std::string& key, T& out, bool required = false) {
    const Value* v = find(key);
    if (!v) {
      if (required) error(nullptr, key, "required");
      return false;
    }
    if (v->list) {
      error(v, key, "expected a single integer");
      return false;
    }
    auto x = u64(*v, key, v->text);
    if (!x) return false;
    if (*x > std::numeric_limits<T>::max()) {
      error(v, key, "value out of range");
      return false;
    }
    out = static_cast<T>(*x);
    return true;
  }

  template <class T>
  void list_u(const std::string& key, std::vector<T>& out, bool required = false) {
    const Value* v = find(key);
    if (!v) {
      if (required) error(nullptr, key, "required");
      return;
    }
    std::vector<T> parsed;
    for (const auto& item : v->list ? v->items : std::vector<std::string>{v->text}) {
      auto x = u64(*v, key, item);
      if (!x) return;
      if (*x > std::numeric_limits<T>::max()) return error(v, key, "value out of range");
      parsed.push_back(static_cast<T>(*x));
    }
    if (parsed.empty()) return error(v, key, "list must not be empty");
    out = std::move(parsed);
  }

  void rational(const std::string& key, Rational& out) {
    const Value* v = find(key);
    if (!v) return;
    if (v->list) return error(v, key, "expected a single number");
    if (auto r = parse_rational(v->text))
      out = *r;
    else
      error(v, key, "expected a number or fraction, got '" + v->text + "'");
  }

  void list_rational(const std::string& key, std::vector<Rational>& out) {
    const Value* v = find(key);
    if (!v) return;
    std::vector<Rational> parsed;
    for (const auto& item : v->list ? v->items : std::vector<std::string>{v->text}) {
      auto r = parse_rational(item);
      if (!r) return error(v, key, "expected numbers or fractions, got '" + item + "'");
      parsed.push_back(*r);
    }
    out = std::move(parsed);
  }

  void real(const std::string& key, double& out) {
    const Value* v = find(key);
    if (!v) return;
    if (v->list) return error(v, key, "expected a single number");
    if (auto r = parse_rational(v->text))
      out = to_double(*r);
    else
      error(v, key, "expected a number, got '" + v->text + "'");
  }

  void string(const std::string& key, std::string& out, bool required = false) {
    const Value* v = find(key);
    if (!v) {
      if (required) error(nullptr, key, "required");
      return;
    }
    if (v->list) return error(v, key, "expected a single word or string");
    out = v->text;
  }

  void reject_unknown() {
    for (const auto& [key, v] : values_)
      if (std::find(used_.begin(), used_.end(), key) == used_.end()) error(&v, key, "unknown key");
  }

 private:
  std::string section_;
  const Section& values_;
  std::vector<ConfigDiagnostic>& errors_;
  std::vector<std::string> used_;
};

inline void read_args(Reader& r, std::map<std::string, std::uint32_t>& args,
                      std::initializer_list<const char*> keys) {
  for (const char* key : keys) {
    std::uint32_t v = 0;
    if (r.scalar_u(key, v)) args[key] = v;
  }
}

}  // namespace detail

inline ParseResult parse_config(const std::string& text) {
  using detail::Value;
  ParseResult result;
  auto& errors = result.errors;
  static const std::vector<std::string> kSections = {"",         "protocol",  "compression", "security", "sampling",
                                                     "adversary", "claims", "publiccoin",  "limits"};
  std::map<std::string, detail::Section> sections;
  std::map<std::string, int> section_lines;
  std::string current;
  sections[current];

  std::istringstream in(text);
  std::string raw;
  for (int line = 1; std::getline(in, raw); ++line) {
    const std::string s = detail::trim(detail::strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[' && s.find('=') == std::string::npos) {
      if (s.back() != ']') {
        errors.push_back({line, "config", "malformed section header '" + s + "'"});
        continue;
      }
      current = detail::trim(s.substr(1, s.size() - 2));
      if (std::find(kSections.begin(), kSections.end(), current) == kSections.end() || current.empty()) {
        errors.push_back({line, current, "unknown section"});
        current = "\x01";  // swallow its keys
        continue;
      }
      if (auto it = section_lines.find(current); it != section_lines.end()) {
        errors.push_back({line, current,
                          "duplicate section (first at line " + std::to_string(it->second) + ", again at line " +
                              std::to_string(line) + ")"});
      }
      section_lines.emplace(current, line);
      sections[current];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      errors.push_back({line, current, "expected 'key = value', got '" + s + "'"});
      continue;
    }
    if (current == "\x01") continue;
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string rhs = detail::trim(s.substr(eq + 1));
    const std::string field = current.empty() ? key : current + "." + key;
    if (key.empty() || key.find_first_of(" \t\"[]") != std::string::npos) {
      errors.push_back({line, field, "invalid key"});
      continue;
    }
    Value v;
    v.line = line;
    if (!rhs.empty() && rhs.front() == '[') {
      if (rhs.back() != ']') {
        errors.push_back({line, field, "unterminated list"});
        continue;
      }
      v.list = true;
      const std::string body = detail::trim(rhs.substr(1, rhs.size() - 2));
      bool bad = false;
      if (!body.empty()) {
        std::stringstream items(body);
        std::string item;
        while (std::getline(items, item, ',')) {
          auto u = detail::unquote(detail::trim(item));
          if (!u || u->empty()) {
            bad = true;
            break;
          }
          v.items.push_back(*u);
        }
      }
      if (bad) {
        errors.push_back({line, field, "malformed list element"});
        continue;
      }
    } else {
      auto u = detail::unquote(rhs);
      if (!u || rhs.empty()) {
        errors.push_back({line, field, "malformed value"});
        continue;
      }
      v.quoted = rhs.front() == '"';
      v.text = *u;
    }
    auto& sec = sections[current];
    if (auto it = sec.find(key); it != sec.end()) {
      errors.push_back({line, field,
                        "duplicate key (first at line " + std::to_string(it->second.line) + ", again at line " +
                            std::to_string(line) + ")"});
      continue;
    }
    sec.emplace(key, std::move(v));
  }

  ExperimentConfig cfg;
  cfg.text = text;
  {
    detail::Reader r("", sections[""], errors);
    std::string name;
    r.string("experiment", name, true);
    if (!name.empty()) {
      bool found = false;
      for (const auto& [n, k] : experiment_names())
        if (n == name) {
          cfg.experiment = k;
          found = true;
        }
      if (!found) r.error(r.find("experiment"), "experiment", "unknown experiment '" + name + "'");
    }
    r.scalar_u("seed", cfg.seed);
    std::string out;
    r.string("output_dir", out);
    if (!out.empty()) cfg.output_dir = out;
    r.reject_unknown();
  }
  auto has = [&](const char* s) { return sections.count(s) > 0; };
  if (has("protocol")) {
    detail::Reader r("protocol", sections["protocol"], errors);
    ProtocolSection p;
    r.string("name", p.name, true);
    detail::read_args(r, p.args, {"n", "d", "L", "m"});
    r.reject_unknown();
    cfg.protocol = p;
  }
  if (has("compression")) {
    detail::Reader r("compression", sections["compression"], errors);
    CompressionSection c;
    r.list_u("ell", c.ell, true);
    r.string("source", c.source);
    if (c.source != "sampled" && c.source != "all" && c.source != "bijective")
      r.error(r.find("source"), "source", "expected sampled, all or bijective");
    r.scalar_u("samples", c.samples);
    r.list_rational("thresholds", c.thresholds);
    r.reject_unknown();
    cfg.compression = c;
  }
  if (has("security")) {
    detail::Reader r("security", sections["security"], errors);
    SecuritySection s;
    r.scalar_u("t", s.t);
    r.list_u("M", s.M, true);
    r.rational("delta", s.delta);
    r.list_rational("slacks", s.slacks);
    r.reject_unknown();
    cfg.security = s;
  }
  if (has("sampling")) {
    detail::Reader r("sampling", sections["sampling"], errors);
    SamplingSection s;
    r.scalar_u("B", s.B);
    r.real("gamma", s.gamma);
    r.real("confidence", s.confidence);
    r.scalar_u("z", s.z);
    if (s.B < 1) r.error(r.find("B"), "B", "B >= 1 required");
    if (!(s.confidence > 0 && s.confidence < 1)) r.error(r.find("confidence"), "confidence", "must lie in (0,1)");
    r.reject_unknown();
    cfg.sampling = s;
  }
  if (has("adversary")) {
    detail::Reader r("adversary", sections["adversary"], errors);
    AdversarySection a;
    r.string("strategy", a.strategy);
    if (a.strategy != "passive" && a.strategy != "greedy_majority" && a.strategy != "last_speaker")
      r.error(r.find("strategy"), "strategy", "expected passive, greedy_majority or last_speaker");
    r.list_u("t", a.t);
    r.scalar_u("target", a.target);
    r.reject_unknown();
    cfg.adversary = a;
  }
  if (has("claims")) {
    detail::Reader r("claims", sections["claims"], errors);
    ClaimsSection c;
    if (const Value* v = r.find("cases")) {
      std::vector<std::pair<std::uint32_t, std::uint32_t>> cases;
      for (const auto& item : v->list ? v->items : std::vector<std::string>{v->text}) {
        const auto x = item.find('x');
        const std::string a = item.substr(0, x), b = x == std::string::npos ? "" : item.substr(x + 1);
        auto u = r.u64(*v, "cases", a), m = r.u64(*v, "cases", b);
        if (!u || !m || *u < 1 || *m < 1 || *u > 64 || *m > 1u << 16) {
          r.error(v, "cases", "expected entries like 3x2 (|U| x M)");
          break;
        }
        cases.emplace_back(static_cast<std::uint32_t>(*u), static_cast<std::uint32_t>(*m));
      }
      if (!cases.empty()) c.cases = cases;
    }
    r.list_rational("eps", c.eps);
    r.scalar_u("pinsker_samples", c.pinsker_samples);
    r.scalar_u("k", c.k);
    r.reject_unknown();
    cfg.claims = c;
  }
  if (has("publiccoin")) {
    detail::Reader r("publiccoin", sections["publiccoin"], errors);
    PublicCoinSection p;
    r.string("name", p.name, true);
    detail::read_args(r, p.args, {"n", "d", "L", "ell_r"});
    r.reject_unknown();
    cfg.publiccoin = p;
  }
  if (has("limits")) {
    detail::Reader r("limits", sections["limits"], errors);
    r.scalar_u("cap", cfg.limits.cap);
    r.scalar_u("game_tree_cap", cfg.limits.game_tree_cap);
    r.scalar_u("ell_r_cap", cfg.limits.ell_r_cap);
    r.scalar_u("workers", cfg.limits.workers);
    r.reject_unknown();
  }

  auto require = [&](bool present, const char* field) {
    if (!present) errors.push_back({0, field, "required"});
  };
  switch (cfg.experiment) {
    case ExperimentKind::kSimulate:
    case ExperimentKind::kChernoff:
      require(cfg.protocol.has_value(), "protocol");
      if (cfg.experiment == ExperimentKind::kChernoff) require(cfg.sampling.has_value(), "sampling");
      if (cfg.adversary && cfg.adversary->strategy != "passive") require(cfg.sampling.has_value(), "sampling");
      break;
    case ExperimentKind::kCompressSweep:
      require(cfg.protocol.has_value(), "protocol");
      require(cfg.compression.has_value(), "compression");
      break;
    case ExperimentKind::kSecuritySweep:
    case ExperimentKind::kHybridChain:
    case ExperimentKind::kReduction:
      require(cfg.protocol.has_value(), "protocol");
      require(cfg.compression.has_value(), "compression");
      require(cfg.security.has_value(), "security");
      if (cfg.experiment == ExperimentKind::kReduction) require(cfg.sampling.has_value(), "sampling");
      break;
    case ExperimentKind::kPublicCoinCheck:
      require(cfg.publiccoin.has_value(), "publiccoin");
      break;
    case ExperimentKind::kVerifyClaims:
      require(cfg.claims.has_value(), "claims");
      break;
  }
  if (errors.empty()) result.config = std::move(cfg);
  return result;
}

}  // namespace forge::cli
