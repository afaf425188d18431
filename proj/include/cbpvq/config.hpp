#pragma once

// Run configuration and the language instance it selects: effect signature,
// truth space and modality set.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "modality.hpp"
#include "signature.hpp"
#include "truth.hpp"

namespace cbpvq {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string signature = "prob";
  std::string truth_space;  // empty: derived from the signature
  StoreConfig store{{"l", "r"}, 3};
  std::vector<std::string> errors{"e"};
  std::map<std::string, std::map<std::string, std::string>> error_valuation;  // modality -> error -> value text
  double tolerance = 1e-9;
  std::size_t explore_width = 16;
  std::uint64_t fuel = 64;
  std::size_t suite_size = 3;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> numerals;  // extra numeral pool entries
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  s = s.substr(b, e - b + 1);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front()) s = s.substr(1, s.size() - 2);
  return s;
}

inline std::vector<std::string> parse_list(const std::string& raw) {
  std::string s = trim(raw);
  if (s.empty() || s.front() != '[' || s.back() != ']') throw ConfigError("expected a list like [a, b], got '" + raw + "'");
  s = s.substr(1, s.size() - 2);
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& raw) {
  std::istringstream in(trim(raw));
  T v{};
  in >> v;
  if (!in || !in.eof()) throw ConfigError("'" + key + "' expects a number, got '" + raw + "'");
  return v;
}

}  // namespace detail

/// Applies one `key = value` setting.
inline void apply_setting(RunConfig& cfg, const std::string& key, const std::string& raw) {
  using namespace detail;
  const std::string value = trim(raw);
  if (key == "signature") {
    cfg.signature = value;
  } else if (key == "truth_space") {
    cfg.truth_space = value;
  } else if (key == "locations") {
    cfg.store.locations = parse_list(value);
  } else if (key == "value_bound") {
    cfg.store.value_bound = parse_number<std::uint64_t>(key, value);
  } else if (key == "errors") {
    cfg.errors = parse_list(value);
  } else if (key.rfind("error_valuation.", 0) == 0) {
    const std::string rest = key.substr(std::string("error_valuation.").size());
    const auto dot = rest.find('.');
    if (dot == std::string::npos) throw ConfigError("expected error_valuation.<modality>.<error>, got '" + key + "'");
    cfg.error_valuation[rest.substr(0, dot)][rest.substr(dot + 1)] = value;
  } else if (key == "tolerance") {
    cfg.tolerance = parse_number<double>(key, value);
  } else if (key == "explore_width") {
    cfg.explore_width = parse_number<std::size_t>(key, value);
  } else if (key == "fuel") {
    cfg.fuel = parse_number<std::uint64_t>(key, value);
  } else if (key == "suite_size") {
    cfg.suite_size = parse_number<std::size_t>(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "numerals") {
    cfg.numerals.clear();
    for (const auto& n : parse_list(value)) cfg.numerals.push_back(parse_number<std::uint64_t>(key, n));
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

/// Key-value configuration text, one `key = value` per line; `#` starts a
/// comment.
inline RunConfig parse_config(const std::string& text, RunConfig cfg = {}) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    if (detail::trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    try {
      apply_setting(cfg, detail::trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

inline RunConfig load_config_file(const std::string& path, RunConfig cfg = {}) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read configuration file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), std::move(cfg));
}

// ----- instance ------------------------------------------------------------------

struct Instance {
  EffectSignature signature;
  TruthSpace space;
  std::vector<ModalitySpec> modalities;
  std::map<std::string, bool> error_lift_boolean;  // membership of each q_f in O⁺
  std::size_t explore_width = 16;

  const ModalitySpec* modality(const std::string& name) const {
    for (const auto& q : modalities)
      if (q.name == name) return &q;
    return nullptr;
  }
  const ModalitySpec& require_modality(const std::string& name) const {
    if (const auto* q = modality(name)) return *q;
    std::string known;
    for (const auto& q : modalities) known += (known.empty() ? "" : ", ") + q.name;
    throw ConfigError("unknown modality '" + name + "' (this instance has: " + known + ")");
  }
};

namespace detail {
inline SpaceKind space_kind_from_name(const std::string& s) {
  if (s == "bool" || s == "boolean") return SpaceKind::boolean;
  if (s == "unit" || s == "[0,1]") return SpaceKind::unit;
  if (s == "sets" || s == "P(S)") return SpaceKind::state_sets;
  if (s == "probs" || s == "[0,1]^S") return SpaceKind::state_probs;
  if (s == "cost" || s == "[0,inf]") return SpaceKind::cost;
  throw ConfigError("unknown truth_space '" + s + "'");
}
}  // namespace detail

/// Builds the instance for `signature`: a '+'-separated subset of
/// {prob, store, cost, nondet, error}.
inline Instance make_instance(const RunConfig& cfg) {
  std::vector<std::string> parts;
  {
    std::stringstream ss(cfg.signature);
    std::string p;
    while (std::getline(ss, p, '+')) {
      p = detail::trim(p);
      if (!p.empty()) parts.push_back(p);
    }
  }
  auto has = [&](const char* p) { return std::find(parts.begin(), parts.end(), p) != parts.end(); };
  for (const auto& p : parts)
    if (p != "prob" && p != "store" && p != "cost" && p != "nondet" && p != "error")
      throw ConfigError("unknown signature component '" + p + "'");
  if (parts.empty()) throw ConfigError("empty signature");
  const bool prob = has("prob"), store = has("store"), cost = has("cost"), nondet = has("nondet"), error = has("error");
  if (cost && (prob || store)) throw ConfigError("cost cannot be combined with prob or store");

  std::vector<OpDescriptor> ops;
  if (prob) ops.push_back(ops::por());
  if (nondet) ops.push_back(ops::nor());
  if (store) {
    if (cfg.store.locations.empty()) throw ConfigError("store signature needs at least one location");
    ops.push_back(ops::lookup(cfg.store.locations));
    ops.push_back(ops::update(cfg.store.locations));
  }
  if (cost) ops.push_back(ops::cost());
  if (error) {
    if (cfg.errors.empty()) throw ConfigError("error signature needs at least one error label");
    ops.push_back(ops::raise(cfg.errors));
  }

  ModalitySpec base;
  std::vector<SpaceKind> allowed;
  if (prob && store) {
    base = modality_EG(cfg.store);
    allowed = {SpaceKind::state_probs};
  } else if (prob) {
    base = modality_E();
    allowed = {SpaceKind::unit};
  } else if (store) {
    base = modality_G(cfg.store);
    allowed = {SpaceKind::state_sets, SpaceKind::state_probs};
  } else if (cost) {
    base = modality_C();
    allowed = {SpaceKind::cost};
  } else {
    base = modality_B();
    allowed = {SpaceKind::boolean, SpaceKind::unit};
  }
  if (!cfg.truth_space.empty()) {
    const SpaceKind k = detail::space_kind_from_name(cfg.truth_space);
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ConfigError("truth_space '" + cfg.truth_space + "' is inconsistent with signature '" + cfg.signature + "'");
    base.space = TruthSpace(k, base.space.is_stateful() ? cfg.store : StoreConfig{}, cfg.tolerance);
  } else {
    base.space = TruthSpace(base.space.kind(), base.space.store(), cfg.tolerance);
  }

  Instance inst;
  inst.signature = EffectSignature(cfg.signature, std::move(ops));
  inst.space = base.space;
  inst.explore_width = cfg.explore_width;
  if (nondet) {
    auto [o, p] = make_nondet_variants(base);
    inst.modalities = {o, p};
  } else {
    inst.modalities = {base};
  }
  if (error) {
    for (auto& q : inst.modalities) {
      std::map<std::string, TruthValue> f;
      const auto it = cfg.error_valuation.find(q.name);
      for (const auto& e : cfg.errors) {
        if (it != cfg.error_valuation.end() && it->second.count(e)) {
          try {
            f[e] = q.space.parse(it->second.at(e));
          } catch (const ParseError& pe) {
            throw ConfigError("error_valuation." + q.name + "." + e + ": " + pe.what());
          }
        } else {
          f[e] = q.space.bot();
        }
      }
      if (it != cfg.error_valuation.end())
        for (const auto& [e, v] : it->second)
          if (!f.count(e)) throw ConfigError("error_valuation." + q.name + "." + e + " names an unknown error");
      ErrorLift lifted = make_error_lift(q, f, cfg.errors);
      inst.error_lift_boolean[q.name] = lifted.boolean_range;
      q = std::move(lifted.spec);
    }
  }
  for (const auto& [qname, vals] : cfg.error_valuation)
    if (!inst.modality(qname))
      throw ConfigError("error_valuation names modality '" + qname + "', which this instance does not have");
  return inst;
}

}  // namespace cbpvq
