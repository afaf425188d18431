#pragma once

// Truth spaces: complete lattices with involution. Every value is stored as
// one component per state (a single component for the scalar spaces), so the
// state-indexed spaces and their scalar bases share one implementation.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "lexer.hpp"

namespace cbpvq {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct StoreConfig {
  std::vector<std::string> locations;
  std::uint64_t value_bound = 3;

  /// |S| = V^|L|.
  std::size_t num_states() const {
    std::size_t n = 1;
    for (std::size_t i = 0; i < locations.size(); ++i) n *= value_bound;
    return n;
  }
  std::size_t location_index(const std::string& l) const {
    for (std::size_t i = 0; i < locations.size(); ++i)
      if (locations[i] == l) return i;
    throw std::invalid_argument("unknown store location '" + l + "'");
  }
  /// State s is encoded in base V with the first location most significant.
  std::uint64_t get(std::size_t state, std::size_t loc) const {
    std::size_t shift = 1;
    for (std::size_t i = loc + 1; i < locations.size(); ++i) shift *= value_bound;
    return (state / shift) % value_bound;
  }
  std::size_t set(std::size_t state, std::size_t loc, std::uint64_t value) const {
    std::size_t shift = 1;
    for (std::size_t i = loc + 1; i < locations.size(); ++i) shift *= value_bound;
    const std::uint64_t old = (state / shift) % value_bound;
    return state - old * shift + (value % value_bound) * shift;
  }
  std::string state_text(std::size_t state) const {
    std::string s;
    for (std::size_t i = 0; i < locations.size(); ++i) {
      if (i) s += " ";
      s += locations[i] + "=" + std::to_string(get(state, i));
    }
    return s;
  }
};

enum class SpaceKind {
  boolean,      // {ff ⊑ tt}
  unit,         // [0,1]
  state_sets,   // P(S)
  state_probs,  // [0,1]^S
  cost,         // [0,∞] with reversed order
};

struct TruthValue {
  std::vector<double> c;
  friend bool operator==(const TruthValue&, const TruthValue&) = default;
};

class TruthError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double x) {
  if (x == kInf) return "inf";
  if (x == 0) return "0";
  char buf[64];
  for (int p = 1; p <= 17; ++p) {
    std::snprintf(buf, sizeof buf, "%.*g", p, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

class TruthSpace {
 public:
  TruthSpace() = default;
  TruthSpace(SpaceKind kind, StoreConfig store = {}, double tolerance = 1e-9)
      : kind_(kind), store_(std::move(store)), tolerance_(tolerance) {
    if (is_stateful() && store_.value_bound < 1) throw TruthError("value_bound must be at least 1");
    if (is_stateful() && store_.locations.empty()) throw TruthError("state-indexed truth spaces need locations");
  }

  static TruthSpace boolean() { return TruthSpace(SpaceKind::boolean); }
  static TruthSpace unit_interval() { return TruthSpace(SpaceKind::unit); }
  static TruthSpace cost() { return TruthSpace(SpaceKind::cost); }
  static TruthSpace state_sets(StoreConfig s) { return TruthSpace(SpaceKind::state_sets, std::move(s)); }
  static TruthSpace state_probs(StoreConfig s) { return TruthSpace(SpaceKind::state_probs, std::move(s)); }

  SpaceKind kind() const { return kind_; }
  const StoreConfig& store() const { return store_; }
  double tolerance() const { return tolerance_; }
  bool is_stateful() const { return kind_ == SpaceKind::state_sets || kind_ == SpaceKind::state_probs; }
  bool is_boolean_valued() const { return kind_ == SpaceKind::boolean || kind_ == SpaceKind::state_sets; }
  bool reversed() const { return kind_ == SpaceKind::cost; }
  std::size_t width() const { return is_stateful() ? store_.num_states() : 1; }

  std::string name() const {
    switch (kind_) {
      case SpaceKind::boolean: return "bool";
      case SpaceKind::unit: return "[0,1]";
      case SpaceKind::state_sets: return "P(S)";
      case SpaceKind::state_probs: return "[0,1]^S";
      case SpaceKind::cost: return "[0,inf]";
    }
    return "?";
  }

  // ----- per-component lattice -------------------------------------------

  double top_c() const { return reversed() ? 0.0 : 1.0; }
  double bot_c() const { return reversed() ? kInf : 0.0; }
  bool leq_c(double a, double b) const { return reversed() ? a >= b : a <= b; }
  double join_c(double a, double b) const { return leq_c(a, b) ? b : a; }
  double meet_c(double a, double b) const { return leq_c(a, b) ? a : b; }
  double neg_c(double a) const {
    if (!reversed()) return 1.0 - a;
    if (a == 0) return kInf;
    if (a == kInf) return 0.0;
    return 1.0 / a;
  }

  // ----- whole values ------------------------------------------------------

  TruthValue constant(double x) const { return TruthValue{std::vector<double>(width(), x)}; }
  TruthValue top() const { return constant(top_c()); }
  TruthValue bot() const { return constant(bot_c()); }

  bool leq(const TruthValue& a, const TruthValue& b) const {
    check(a);
    check(b);
    for (std::size_t i = 0; i < a.c.size(); ++i)
      if (!leq_c(a.c[i], b.c[i])) return false;
    return true;
  }
  TruthValue join(const TruthValue& a, const TruthValue& b) const { return zip(a, b, [&](double x, double y) { return join_c(x, y); }); }
  TruthValue meet(const TruthValue& a, const TruthValue& b) const { return zip(a, b, [&](double x, double y) { return meet_c(x, y); }); }
  TruthValue join(const std::vector<TruthValue>& xs) const {
    TruthValue r = bot();
    for (const auto& x : xs) r = join(r, x);
    return r;
  }
  TruthValue meet(const std::vector<TruthValue>& xs) const {
    TruthValue r = top();
    for (const auto& x : xs) r = meet(r, x);
    return r;
  }
  TruthValue neg(const TruthValue& a) const {
    check(a);
    TruthValue r = a;
    for (double& x : r.c) x = neg_c(x);
    return r;
  }
  bool approx_eq(const TruthValue& a, const TruthValue& b, double tol = -1) const {
    check(a);
    check(b);
    if (tol < 0) tol = tolerance_;
    for (std::size_t i = 0; i < a.c.size(); ++i) {
      if (a.c[i] == b.c[i]) continue;
      if (std::isinf(a.c[i]) || std::isinf(b.c[i]) || std::fabs(a.c[i] - b.c[i]) > tol) return false;
    }
    return true;
  }

  /// Whether the value is a legal element of this space.
  bool contains(const TruthValue& a) const {
    if (a.c.size() != width()) return false;
    for (double x : a.c) {
      if (std::isnan(x)) return false;
      if (is_boolean_valued() && x != 0 && x != 1) return false;
      if (!reversed() && (x < 0 || x > 1)) return false;
      if (reversed() && x < 0) return false;
    }
    return true;
  }

  void check(const TruthValue& a) const {
    if (a.c.size() != width())
      throw TruthError("truth value has " + std::to_string(a.c.size()) + " components, space " + name() +
                       " expects " + std::to_string(width()));
  }

  // ----- text ----------------------------------------------------------------

  std::string format(const TruthValue& a) const {
    check(a);
    switch (kind_) {
      case SpaceKind::boolean:
        return a.c[0] == 1 ? "tt" : "ff";
      case SpaceKind::unit:
      case SpaceKind::cost:
        return format_number(a.c[0]);
      case SpaceKind::state_sets: {
        std::string s = "{";
        bool first = true;
        for (std::size_t i = 0; i < a.c.size(); ++i) {
          if (a.c[i] != 1) continue;
          if (!first) s += ", ";
          first = false;
          s += store_.state_text(i);
        }
        return s + "}";
      }
      case SpaceKind::state_probs: {
        std::string s = "[";
        for (std::size_t i = 0; i < a.c.size(); ++i) {
          if (i) s += ", ";
          s += format_number(a.c[i]);
        }
        return s + "]";
      }
    }
    return "?";
  }

  /// Reads one value from a token stream. Accepted forms:
  ///   top | bot | tt | ff | <number> | inf
  ///   {l=0 r=1, l=2 r=0}       explicit state set
  ///   states(l=1, r=0)         all states matching every constraint
  ///   [0.5, 1, ...]            state-indexed table in state order
  /// A scalar in a state-indexed space denotes the constant table.
  TruthValue parse(TokenStream& ts) const {
    const Token t = ts.peek();
    if (ts.accept_keyword("top")) return top();
    if (ts.accept_keyword("bot")) return bot();
    if (ts.accept_keyword("tt") || ts.accept_keyword("true")) return checked(constant(1.0), t);
    if (ts.accept_keyword("ff") || ts.accept_keyword("false")) return checked(constant(0.0), t);
    if (ts.accept_keyword("inf")) return checked(constant(kInf), t);
    if (t.kind == Tok::number) {
      ts.next();
      return checked(constant(std::strtod(t.text.c_str(), nullptr)), t);
    }
    if (ts.is_symbol("{") && is_stateful()) {
      ts.next();
      TruthValue v = constant(0.0);
      if (!ts.accept_symbol("}")) {
        do {
          std::vector<std::int64_t> fixed = constraints(ts, /*require_all=*/true);
          std::size_t state = 0;
          for (std::size_t i = 0; i < fixed.size(); ++i) state = store_.set(state, i, static_cast<std::uint64_t>(fixed[i]));
          v.c[state] = 1.0;
        } while (ts.accept_symbol(","));
        ts.expect_symbol("}");
      }
      return checked(v, t);
    }
    if (ts.accept_keyword("states")) {
      if (!is_stateful()) throw ParseError("states(...) needs a state-indexed truth space", t.pos);
      ts.expect_symbol("(");
      std::vector<std::int64_t> fixed(store_.locations.size(), -1);
      if (!ts.is_symbol(")")) {
        do {
          auto one = constraints(ts, false);
          for (std::size_t i = 0; i < one.size(); ++i)
            if (one[i] >= 0) fixed[i] = one[i];
        } while (ts.accept_symbol(","));
      }
      ts.expect_symbol(")");
      TruthValue v = constant(0.0);
      for (std::size_t s = 0; s < width(); ++s) {
        bool ok = true;
        for (std::size_t i = 0; i < fixed.size(); ++i)
          if (fixed[i] >= 0 && store_.get(s, i) != static_cast<std::uint64_t>(fixed[i])) ok = false;
        v.c[s] = ok ? top_c() : bot_c();
      }
      return checked(v, t);
    }
    if (ts.accept_symbol("[")) {
      TruthValue v;
      do {
        const Token n = ts.peek();
        if (ts.accept_keyword("inf")) {
          v.c.push_back(kInf);
        } else if (n.kind == Tok::number) {
          ts.next();
          v.c.push_back(std::strtod(n.text.c_str(), nullptr));
        } else {
          ts.fail("expected a number");
        }
      } while (ts.accept_symbol(","));
      ts.expect_symbol("]");
      if (v.c.size() != width())
        throw ParseError("table has " + std::to_string(v.c.size()) + " entries, expected " + std::to_string(width()),
                         t.pos);
      return checked(v, t);
    }
    ts.fail("expected a truth value in " + name());
  }

  TruthValue parse(const std::string& text) const {
    TokenStream ts(text);
    TruthValue v = parse(ts);
    if (!ts.at_end()) ts.fail("unexpected trailing input");
    return v;
  }

 private:
  template <class F>
  TruthValue zip(const TruthValue& a, const TruthValue& b, F f) const {
    check(a);
    check(b);
    TruthValue r = a;
    for (std::size_t i = 0; i < r.c.size(); ++i) r.c[i] = f(a.c[i], b.c[i]);
    return r;
  }

  TruthValue checked(TruthValue v, const Token& at) const {
    if (!contains(v)) throw ParseError("value is not an element of " + name(), at.pos);
    return v;
  }

  /// `l=0 r=1`: space-separated location assignments. Unassigned entries
  /// are -1; with require_all every location must be given.
  std::vector<std::int64_t> constraints(TokenStream& ts, bool require_all) const {
    std::vector<std::int64_t> fixed(store_.locations.size(), -1);
    while (ts.peek().kind == Tok::ident && ts.is_symbol("=", 1)) {
      const Token loc = ts.next();
      ts.next();
      const Token val = ts.next();
      if (val.kind != Tok::number) throw ParseError("expected a store value", val.pos);
      std::size_t idx;
      try {
        idx = store_.location_index(loc.text);
      } catch (const std::invalid_argument& e) {
        throw ParseError(e.what(), loc.pos);
      }
      const auto v = std::strtoll(val.text.c_str(), nullptr, 10);
      if (v < 0 || static_cast<std::uint64_t>(v) >= store_.value_bound)
        throw ParseError("store value out of range 0.." + std::to_string(store_.value_bound - 1), val.pos);
      fixed[idx] = v;
    }
    if (require_all)
      for (std::size_t i = 0; i < fixed.size(); ++i)
        if (fixed[i] < 0) ts.fail("state is missing location '" + store_.locations[i] + "'");
    return fixed;
  }

  SpaceKind kind_ = SpaceKind::unit;
  StoreConfig store_;
  double tolerance_ = 1e-9;
};

}  // namespace cbpvq
