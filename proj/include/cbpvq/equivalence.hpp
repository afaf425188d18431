#pragma once

// Bounded behavioural-preorder checking: formula suites, compare and
// distinguishing-formula search, right sets, the relator check, and bounded
// applicative simulation.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "config.hpp"
#include "formula.hpp"
#include "machine.hpp"
#include "modality.hpp"
#include "satisfaction.hpp"
#include "typecheck.hpp"

namespace cbpvq {

class EquivalenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ----- pools and suites ------------------------------------------------------------

struct SuitePools {
  std::vector<std::uint64_t> numerals{0, 1, 2};
  std::vector<TruthValue> constants;  // step thresholds
  bool general = false;               // include negation closures
  std::size_t max_arguments = 4;      // per argument type
};

inline std::vector<TruthValue> default_constants(const TruthSpace& sp) {
  switch (sp.kind()) {
    case SpaceKind::unit:
      return {sp.constant(0.25), sp.constant(0.5), sp.constant(0.75), sp.constant(1)};
    case SpaceKind::cost:
      return {sp.constant(0.5), sp.constant(1), sp.constant(2), sp.constant(4)};
    case SpaceKind::state_probs:
      return {sp.constant(0.5)};
    default:
      return {sp.top()};
  }
}

namespace detail {
inline void collect_numerals(const ValTerm& v, std::set<std::uint64_t>& out);
inline void collect_numerals(const ComTerm& m, std::set<std::uint64_t>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, com::CaseNat>) {
          collect_numerals(n.scrutinee, out);
          collect_numerals(n.if_zero, out);
          collect_numerals(n.if_succ, out);
        } else if constexpr (std::is_same_v<T, com::Let>) {
          collect_numerals(n.bound, out);
          collect_numerals(n.body, out);
        } else if constexpr (std::is_same_v<T, com::Return>) {
          collect_numerals(n.value, out);
        } else if constexpr (std::is_same_v<T, com::To>) {
          collect_numerals(n.first, out);
          collect_numerals(n.rest, out);
        } else if constexpr (std::is_same_v<T, com::Force>) {
          collect_numerals(n.thunk, out);
        } else if constexpr (std::is_same_v<T, com::Lambda> || std::is_same_v<T, com::Fix>) {
          collect_numerals(n.body, out);
        } else if constexpr (std::is_same_v<T, com::App>) {
          collect_numerals(n.fn, out);
          collect_numerals(n.arg, out);
        } else if constexpr (std::is_same_v<T, com::CaseSum>) {
          collect_numerals(n.scrutinee, out);
          for (const auto& b : n.branches) collect_numerals(b.body, out);
        } else if constexpr (std::is_same_v<T, com::CasePair>) {
          collect_numerals(n.scrutinee, out);
          collect_numerals(n.body, out);
        } else if constexpr (std::is_same_v<T, com::Tuple>) {
          for (const auto& [l, c] : n.components) collect_numerals(c, out);
        } else if constexpr (std::is_same_v<T, com::Proj>) {
          collect_numerals(n.tuple, out);
        } else {
          if (n.param) collect_numerals(n.param, out);
          for (const auto& c : n.children) collect_numerals(c, out);
        }
      },
      m->v);
}
inline void collect_numerals(const ValTerm& v, std::set<std::uint64_t>& out) {
  if (auto k = numeral_value(v)) {
    out.insert(*k);
    return;
  }
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, val::Succ>) collect_numerals(n.pred, out);
        if constexpr (std::is_same_v<T, val::Thunk>) collect_numerals(n.body, out);
        if constexpr (std::is_same_v<T, val::Inj>) collect_numerals(n.payload, out);
        if constexpr (std::is_same_v<T, val::Pair>) {
          collect_numerals(n.first, out);
          collect_numerals(n.second, out);
        }
      },
      v->v);
}
}  // namespace detail

/// {0,1,2} ∪ numerals occurring in `terms` ∪ `extra`, ascending.
inline SuitePools default_pools(const Instance& inst, const std::vector<Term>& terms,
                                const std::vector<std::uint64_t>& extra = {}) {
  std::set<std::uint64_t> ns{0, 1, 2};
  for (const auto& t : terms) std::visit([&](const auto& x) { detail::collect_numerals(x, ns); }, t);
  ns.insert(extra.begin(), extra.end());
  SuitePools p;
  p.numerals.assign(ns.begin(), ns.end());
  p.constants = default_constants(inst.space);
  return p;
}

namespace detail {
inline std::vector<ComTerm> canonical_computations(const ComType& c, const SuitePools& pools, int depth);

inline std::vector<ValTerm> canonical_values(const ValType& a, const SuitePools& pools, int depth) {
  std::vector<ValTerm> out;
  const std::size_t cap = pools.max_arguments;
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, ty::Unit>) {
          out.push_back(unit_val());
        } else if constexpr (std::is_same_v<T, ty::Nat>) {
          for (auto n : pools.numerals) out.push_back(numeral(n));
        } else if constexpr (std::is_same_v<T, ty::Thunk>) {
          if (depth > 0)
            for (const auto& m : canonical_computations(t.body, pools, depth - 1)) out.push_back(thunk(m));
          out.push_back(thunk(fix(lambda("self", a, force(var("self"))))));
        } else if constexpr (std::is_same_v<T, ty::Sum>) {
          for (const auto& [l, b] : t.cases)
            for (const auto& v : canonical_values(b, pools, depth - 1)) out.push_back(inj(l, v, a));
        } else if constexpr (std::is_same_v<T, ty::Pair>) {
          auto xs = canonical_values(t.first, pools, depth - 1);
          auto ys = canonical_values(t.second, pools, depth - 1);
          for (const auto& x : xs)
            for (const auto& y : ys) out.push_back(pair(x, y));
        }
      },
      a->v);
  if (out.size() > cap) out.resize(cap);
  return out;
}

inline std::vector<ComTerm> canonical_computations(const ComType& c, const SuitePools& pools, int depth) {
  std::vector<ComTerm> out;
  std::visit(
      [&](const auto& t) {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, ty::Producer>) {
          for (const auto& v : canonical_values(t.result, pools, depth)) out.push_back(ret(v));
        } else if constexpr (std::is_same_v<T, ty::Arrow>) {
          for (const auto& m : canonical_computations(t.codomain, pools, depth)) out.push_back(lambda("x", t.domain, m));
        } else {
          std::vector<std::pair<Label, ComTerm>> comps;
          for (const auto& [l, ci] : t.components) {
            auto ms = canonical_computations(ci, pools, depth);
            if (ms.empty()) return;
            comps.emplace_back(l, ms.front());
          }
          out.push_back(tuple(std::move(comps)));
        }
      },
      c->v);
  return out;
}
}  // namespace detail

/// Closed argument values of type `a`, at most `pools.max_arguments`.
inline std::vector<ValTerm> argument_pool(const ValType& a, const SuitePools& pools) {
  auto out = detail::canonical_values(a, pools, 2);
  if (out.empty()) throw EquivalenceError("empty argument pool at type " + to_string(a));
  return out;
}

struct FormulaSuite {
  AnyType type;
  std::vector<Formula> formulas;  // ordered by size, then enumeration order
  std::size_t size_bound = 0;
  SuitePools pools;
};

/// Enumerates formulas by exact size. Basic formulas have no top-level
/// and/or and are not constant; bodies additionally admit `const top` and
/// binary and/or of basic formulas.
class FormulaEnumerator {
 public:
  FormulaEnumerator(const Instance& inst, SuitePools pools) : inst_(inst), pools_(std::move(pools)) {
    if (pools_.constants.empty()) pools_.constants = default_constants(inst.space);
  }

  const SuitePools& pools() const { return pools_; }

  const std::vector<Formula>& basic(const AnyType& ty, std::size_t size) { return get(ty, size, true); }
  const std::vector<Formula>& bodies(const AnyType& ty, std::size_t size) { return get(ty, size, false); }

  /// Basic formulas of this exact size followed by their step and negation
  /// closures (built from basic formulas one size smaller).
  std::vector<Formula> suite_at(const AnyType& ty, std::size_t size) {
    std::vector<Formula> out = basic(ty, size);
    if (size >= 2) {
      for (const auto& phi : basic(ty, size - 1))
        for (const auto& a : pools_.constants) out.push_back(f::step(phi, a));
      if (pools_.general)
        for (const auto& phi : basic(ty, size - 1)) out.push_back(f::neg(phi));
    }
    return out;
  }

  FormulaSuite suite(const AnyType& ty, std::size_t max_size) {
    FormulaSuite s{ty, {}, max_size, pools_};
    for (std::size_t k = 1; k <= max_size; ++k) {
      auto xs = suite_at(ty, k);
      s.formulas.insert(s.formulas.end(), xs.begin(), xs.end());
    }
    return s;
  }

 private:
  static std::string key(const AnyType& ty) {
    return std::visit([](const auto& t) { return to_string(t); }, ty);
  }

  const std::vector<Formula>& get(const AnyType& ty, std::size_t size, bool basic_only) {
    auto k = std::make_tuple(key(ty), size, basic_only);
    if (auto it = memo_.find(k); it != memo_.end()) return it->second;
    std::vector<Formula> out;
    if (size > 0) {
      if (basic_only) {
        if (const auto* v = std::get_if<ValType>(&ty))
          value_basic(*v, size, out);
        else
          comp_basic(std::get<ComType>(ty), size, out);
      } else {
        const auto& b = get(ty, size, true);
        out = b;
        if (size == 1) out.push_back(f::constant(inst_.space.top()));
        add_junctions(ty, size, out);
      }
    }
    return memo_.emplace(std::move(k), std::move(out)).first->second;
  }

  void add_junctions(const AnyType& ty, std::size_t size, std::vector<Formula>& out) {
    if (size < 3) return;
    for (int conj = 1; conj >= 0; --conj) {
      for (std::size_t s1 = 1; s1 + 1 < size; ++s1) {
        const std::size_t s2 = size - 1 - s1;
        if (s1 > s2) break;
        const auto& xs = get(ty, s1, true);
        const auto& ys = get(ty, s2, true);
        for (std::size_t i = 0; i < xs.size(); ++i)
          for (std::size_t j = (s1 == s2 ? i + 1 : 0); j < ys.size(); ++j)
            out.push_back(conj ? f::conj({xs[i], ys[j]}) : f::disj({xs[i], ys[j]}));
      }
    }
  }

  void value_basic(const ValType& a, std::size_t size, std::vector<Formula>& out) {
    std::visit(
        [&](const auto& t) {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, ty::Nat>) {
            if (size == 1)
              for (auto n : pools_.numerals) out.push_back(f::nat_eq(n));
          } else if constexpr (std::is_same_v<T, ty::Thunk>) {
            for (const auto& b : get(AnyType{t.body}, size - 1, true)) out.push_back(f::thunk(b));
          } else if constexpr (std::is_same_v<T, ty::Sum>) {
            for (const auto& [l, b] : t.cases)
              for (const auto& phi : get(AnyType{b}, size - 1, false)) out.push_back(f::inj(l, phi));
          } else if constexpr (std::is_same_v<T, ty::Pair>) {
            for (const auto& phi : get(AnyType{t.first}, size - 1, false)) out.push_back(f::fst(phi));
            for (const auto& phi : get(AnyType{t.second}, size - 1, false)) out.push_back(f::snd(phi));
          }
        },
        a->v);
  }

  void comp_basic(const ComType& c, std::size_t size, std::vector<Formula>& out) {
    std::visit(
        [&](const auto& t) {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, ty::Arrow>) {
            const auto& body = get(AnyType{t.codomain}, size - 1, true);
            if (body.empty()) return;
            for (const auto& v : argument_pool(t.domain, pools_))
              for (const auto& phi : body) out.push_back(f::arg(v, phi));
          } else if constexpr (std::is_same_v<T, ty::Prod>) {
            for (const auto& [l, ci] : t.components)
              for (const auto& phi : get(AnyType{ci}, size - 1, true)) out.push_back(f::proj(l, phi));
          } else {
            for (const auto& q : inst_.modalities)
              for (const auto& phi : get(AnyType{t.result}, size - 1, false)) out.push_back(f::modal(q.name, phi));
          }
        },
        c->v);
  }

  const Instance& inst_;
  SuitePools pools_;
  std::map<std::tuple<std::string, std::size_t, bool>, std::vector<Formula>> memo_;
};

/// All basic formulas of size ≤ `size` at `ty`; with `closures`, also their
/// step and negation closures.
inline FormulaSuite enumerate_basic_formulas(const Instance& inst, const AnyType& ty, std::size_t size,
                                             const SuitePools& pools, bool closures = false) {
  FormulaEnumerator en(inst, pools);
  if (closures) return en.suite(ty, size);
  FormulaSuite s{ty, {}, size, en.pools()};
  for (std::size_t k = 1; k <= size; ++k) {
    const auto& xs = en.basic(ty, k);
    s.formulas.insert(s.formulas.end(), xs.begin(), xs.end());
  }
  return s;
}

// ----- verdicts --------------------------------------------------------------------

enum class Direction { left_not_below_right, right_not_below_left };

inline std::string direction_text(Direction d) {
  return d == Direction::left_not_below_right ? "left not below right" : "right not below left";
}

struct Bounds {
  std::size_t suite_size = 0;
  std::uint64_t fuel = 0;
  std::size_t formulas = 0;
  std::vector<std::uint64_t> numerals;
};

namespace verdict {
struct Distinguished {
  Formula formula;
  Interval left;
  Interval right;
  Direction direction;
  Bounds bounds;
};
struct NoDistinctionFound {
  Bounds bounds;
};
struct RefinesUpTo {
  Bounds bounds;
};
}  // namespace verdict

using Verdict = std::variant<verdict::Distinguished, verdict::NoDistinctionFound, verdict::RefinesUpTo>;

inline bool is_distinguished(const Verdict& v) { return std::holds_alternative<verdict::Distinguished>(v); }

/// Closed-term type; a term without an inferable type must come with `hint`.
inline AnyType term_type(const Instance& inst, const Term& t, const std::optional<AnyType>& hint = std::nullopt) {
  TypeChecker tc(inst.signature);
  if (hint) {
    try {
      std::visit(
          [&](const auto& x, const auto& ty) {
            using X = std::decay_t<decltype(x)>;
            using Y = std::decay_t<decltype(ty)>;
            if constexpr (std::is_same_v<X, ValTerm> && std::is_same_v<Y, ValType>)
              tc.check(Context{}, x, ty);
            else if constexpr (std::is_same_v<X, ComTerm> && std::is_same_v<Y, ComType>)
              tc.check(Context{}, x, ty);
            else
              throw EquivalenceError("term and type belong to different sorts");
          },
          t, *hint);
    } catch (const TypeError& e) {
      throw EquivalenceError(std::string("type mismatch: ") + e.what());
    }
    return *hint;
  }
  return std::visit([&](const auto& x) -> AnyType { return tc.infer(Context{}, x); }, t);
}

inline bool same_any_type(const AnyType& a, const AnyType& b) {
  if (a.index() != b.index()) return false;
  if (const auto* v = std::get_if<ValType>(&a)) return same_type(*v, std::get<ValType>(b));
  return same_type(std::get<ComType>(a), std::get<ComType>(b));
}

namespace detail {
/// First certified violation for φ, checking left ⋢ right and, if `both`,
/// right ⋢ left.
inline std::optional<verdict::Distinguished> violation(Evaluator& ev, const Term& m, const Term& n, const Formula& phi,
                                                       bool both) {
  const TruthSpace& sp = ev.instance().space;
  const Interval l = ev.eval(m, phi);
  const Interval r = ev.eval(n, phi);
  if (!sp.leq(l.lo, r.hi)) return verdict::Distinguished{phi, l, r, Direction::left_not_below_right, {}};
  if (both && !sp.leq(r.lo, l.hi)) return verdict::Distinguished{phi, l, r, Direction::right_not_below_left, {}};
  return std::nullopt;
}
}  // namespace detail

/// M ⊑ N checked on every formula of `suite` (both directions when `both`).
inline Verdict compare(const Instance& inst, const Term& m, const Term& n, const FormulaSuite& suite, std::uint64_t fuel,
                       bool both = false) {
  if (!same_any_type(term_type(inst, m, suite.type), suite.type) || !same_any_type(term_type(inst, n, suite.type), suite.type))
    throw EquivalenceError("compared terms do not have the suite's type");
  Bounds b{suite.size_bound, fuel, suite.formulas.size(), suite.pools.numerals};
  Evaluator ev(inst, fuel);
  for (const auto& phi : suite.formulas) {
    if (auto d = detail::violation(ev, m, n, phi, both)) {
      d->bounds = b;
      return *d;
    }
  }
  if (both) return verdict::NoDistinctionFound{b};
  return verdict::RefinesUpTo{b};
}

/// Builds the suite from the terms' common type and default pools.
inline Verdict compare(const Instance& inst, const Term& m, const Term& n, std::size_t suite_size, std::uint64_t fuel,
                       bool both = false, const std::vector<std::uint64_t>& extra_numerals = {},
                       const std::optional<AnyType>& hint = std::nullopt) {
  const AnyType ty = term_type(inst, m, hint);
  if (!same_any_type(ty, term_type(inst, n, ty))) throw EquivalenceError("compared terms have different types");
  SuitePools pools = default_pools(inst, {m, n}, extra_numerals);
  return compare(inst, m, n, enumerate_basic_formulas(inst, ty, suite_size, pools, true), fuel, both);
}

/// Smallest witness by size, then enumeration order; fuels are tried in
/// schedule order within each size.
inline std::optional<verdict::Distinguished> find_distinguishing_formula(
    const Instance& inst, const Term& m, const Term& n, std::size_t max_size, const std::vector<std::uint64_t>& fuel_schedule,
    const std::vector<std::uint64_t>& extra_numerals = {}, const std::optional<AnyType>& hint = std::nullopt,
    bool general = true) {
  const AnyType ty = term_type(inst, m, hint);
  if (!same_any_type(ty, term_type(inst, n, ty))) throw EquivalenceError("compared terms have different types");
  SuitePools pools = default_pools(inst, {m, n}, extra_numerals);
  pools.general = general;
  FormulaEnumerator en(inst, pools);
  std::vector<Evaluator> evs;
  for (auto f : fuel_schedule) evs.emplace_back(inst, f);
  std::size_t seen = 0;
  for (std::size_t k = 1; k <= max_size; ++k) {
    const auto suite = en.suite_at(ty, k);
    for (std::size_t i = 0; i < evs.size(); ++i) {
      for (const auto& phi : suite) {
        if (auto d = detail::violation(evs[i], m, n, phi, true)) {
          d->bounds = Bounds{k, fuel_schedule[i], seen + suite.size(), pools.numerals};
          return d;
        }
      }
    }
    seen += suite.size();
  }
  return std::nullopt;
}

// ----- relations, valuations, relator ----------------------------------------------

/// Closed relation between terms; pairs of different types are rejected on
/// insertion.
class Relation {
 public:
  explicit Relation(const Instance& inst) : inst_(&inst) {}

  void add(const Term& a, const Term& b, const std::optional<AnyType>& hint = std::nullopt) {
    const AnyType ta = term_type(*inst_, a, hint);
    const AnyType tb = term_type(*inst_, b, ta);
    if (!same_any_type(ta, tb)) throw EquivalenceError("relation pairs must have equal types");
    pairs_.push_back({a, b, ta});
  }

  struct Pair {
    Term left;
    Term right;
    AnyType type;
  };
  const std::vector<Pair>& pairs() const { return pairs_; }

 private:
  const Instance* inst_;
  std::vector<Pair> pairs_;
};

/// Leaf relation by key: (a, b) ∈ R iff a and b are related.
using KeyRelation = std::set<std::pair<std::string, std::string>>;
using Valuation = std::map<std::string, TruthValue>;

/// R[h](b) = join{h(a) | a R b}; bot for b with no predecessor.
inline Valuation right_set(const TruthSpace& sp, const KeyRelation& r, const Valuation& h,
                           const std::vector<std::string>& right_carrier) {
  Valuation out;
  for (const auto& b : right_carrier) out[b] = sp.bot();
  for (const auto& [a, b] : r) {
    auto it = h.find(a);
    if (it == h.end()) throw EquivalenceError("valuation is not total on the relation's left carrier (" + a + ")");
    out[b] = out.count(b) ? sp.join(out[b], it->second) : it->second;
  }
  return out;
}

struct TaggedValuation {
  Valuation h;
  std::string provenance;  // indicator | formula-induced | random-grid
};

struct ValuationFamily {
  std::vector<TaggedValuation> members;
  bool exhaustive = false;  // every indicator valuation of the carrier is present
};

/// Return leaves of a tree, by key, with families explored below `width`.
inline void collect_leaves(const EffectTree& t, std::map<std::string, ValTerm>& out, std::size_t width) {
  if (is_unknown(t)) return;
  if (const ComTerm* x = leaf_value(t)) {
    const auto* r = std::get_if<com::Return>(&(*x)->v);
    if (!r) throw EquivalenceError("relator leaves must be returned values, found " + to_string(*x));
    out.emplace(term_key(r->value), r->value);
    return;
  }
  const auto& n = *as_node(t);
  if (n.family) {
    for (std::uint64_t i = 0; i < width; ++i) collect_leaves(n.family->at(i), out, width);
  } else {
    for (const auto& c : n.children) collect_leaves(c, out, width);
  }
}

namespace detail {
inline std::vector<double> grid_components(const TruthSpace& sp) {
  switch (sp.kind()) {
    case SpaceKind::boolean:
    case SpaceKind::state_sets:
      return {0, 1};
    case SpaceKind::cost:
      return {0, 1, 2, 3, kInf};
    default:
      return {0, 0.25, 0.5, 0.75, 1};
  }
}
}  // namespace detail

/// Indicators of each leaf and leaf pair, formula-induced valuations from a
/// size-2 body suite at `leaf_type`, and `random` grid valuations. In the
/// Boolean space with at most `exhaustive_limit` leaves every subset is used.
inline ValuationFamily make_valuation_family(const Instance& inst, const std::map<std::string, ValTerm>& carrier,
                                             const std::optional<ValType>& leaf_type, std::uint64_t fuel,
                                             std::uint64_t seed, std::size_t random = 32,
                                             std::size_t exhaustive_limit = 10) {
  const TruthSpace& sp = inst.space;
  ValuationFamily fam;
  std::vector<std::string> keys;
  for (const auto& [k, v] : carrier) keys.push_back(k);
  auto indicator = [&](auto in) {
    Valuation h;
    for (const auto& k : keys) h[k] = in(k) ? sp.top() : sp.bot();
    return h;
  };
  if (sp.kind() == SpaceKind::boolean && keys.size() <= exhaustive_limit) {
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << keys.size()); ++mask) {
      Valuation h;
      for (std::size_t i = 0; i < keys.size(); ++i) h[keys[i]] = (mask >> i & 1) ? sp.top() : sp.bot();
      fam.members.push_back({std::move(h), "indicator"});
    }
    fam.exhaustive = true;
    return fam;
  }
  for (std::size_t i = 0; i < keys.size(); ++i) {
    fam.members.push_back({indicator([&](const std::string& k) { return k == keys[i]; }), "indicator"});
    for (std::size_t j = i + 1; j < keys.size(); ++j)
      fam.members.push_back(
          {indicator([&](const std::string& k) { return k == keys[i] || k == keys[j]; }), "indicator"});
  }
  if (leaf_type && !keys.empty()) {
    SuitePools pools;
    std::set<std::uint64_t> ns{0, 1, 2};
    for (const auto& [k, v] : carrier) detail::collect_numerals(v, ns);
    pools.numerals.assign(ns.begin(), ns.end());
    FormulaEnumerator en(inst, pools);
    Evaluator ev(inst, fuel);
    for (std::size_t s = 1; s <= 2; ++s)
      for (const auto& phi : en.bodies(AnyType{*leaf_type}, s)) {
        Valuation h;
        for (const auto& [k, v] : carrier) h[k] = ev.eval(v, phi).lo;
        fam.members.push_back({std::move(h), "formula-induced"});
      }
  }
  std::mt19937_64 rng(seed);
  const auto grid = detail::grid_components(sp);
  std::uniform_int_distribution<std::size_t> pick(0, grid.size() - 1);
  for (std::size_t r = 0; r < random; ++r) {
    Valuation h;
    for (const auto& k : keys) {
      TruthValue v = sp.bot();
      for (auto& c : v.c) c = grid[pick(rng)];
      h[k] = v;
    }
    fam.members.push_back({std::move(h), "random-grid"});
  }
  return fam;
}

enum class RelatorStatus { holds, refuted, inconclusive };

struct RelatorResult {
  RelatorStatus status = RelatorStatus::inconclusive;
  std::string modality;    // refuting q
  std::size_t valuation = 0;  // index into the family
  Interval left, right;
};

/// t O(R) r checked on every modality of the instance and every h in `fam`.
inline RelatorResult relator_check(const Instance& inst, const EffectTree& t, const EffectTree& r, const KeyRelation& rel,
                                   const ValuationFamily& fam) {
  const TruthSpace& sp = inst.space;
  std::map<std::string, ValTerm> lt, rt;
  collect_leaves(t, lt, inst.explore_width);
  collect_leaves(r, rt, inst.explore_width);
  std::vector<std::string> right_keys;
  for (const auto& [k, v] : rt) right_keys.push_back(k);
  auto leaf_key = [](const ComTerm& x) { return term_key(std::get<com::Return>(x->v).value); };
  bool all_exact = true;
  for (const auto& q : inst.modalities) {
    for (std::size_t i = 0; i < fam.members.size(); ++i) {
      const Valuation& h = fam.members[i].h;
      for (const auto& [k, v] : lt)
        if (!h.count(k)) throw EquivalenceError("valuation family does not cover leaf " + to_string(v));
      Valuation hr = right_set(sp, rel, h, right_keys);
      Interval a = lift(q, [&](const ComTerm& x) { return h.at(leaf_key(x)); }, t);
      Interval b = lift(q, [&](const ComTerm& x) { return hr.at(leaf_key(x)); }, r);
      if (!sp.leq(a.lo, b.hi)) return {RelatorStatus::refuted, q.name, i, a, b};
      all_exact = all_exact && a.exact && b.exact;
    }
  }
  const bool exhaustive = sp.kind() == SpaceKind::boolean && fam.exhaustive;
  return {all_exact && exhaustive ? RelatorStatus::holds : RelatorStatus::inconclusive, "", 0, {}, {}};
}

// ----- bounded simulation ------------------------------------------------------------

struct ClauseOutcome {
  int clause = 0;  // 1..7
  bool refuted = false;
  bool exact = true;  // clause 7 only: the relator check held outright
  std::string detail;
};

struct SimulationPairReport {
  std::string left, right, type;
  std::vector<ClauseOutcome> clauses;
  bool refuted = false;
};

struct SimulationReport {
  std::vector<SimulationPairReport> pairs;
  bool refuted = false;
  std::size_t depth = 0;
  std::uint64_t fuel = 0;
  std::string note = "clause 5 quantifies over the argument pool only";
};

/// Checks clauses 1–7 of applicative simulation to `depth` nested clauses.
class SimulationChecker {
 public:
  SimulationChecker(const Instance& inst, SuitePools pools, std::uint64_t fuel, std::uint64_t seed)
      : inst_(inst), pools_(std::move(pools)), fuel_(fuel), seed_(seed) {}

  SimulationReport run(const Relation& r, std::size_t depth) {
    SimulationReport rep;
    rep.depth = depth;
    rep.fuel = fuel_;
    for (const auto& p : r.pairs()) {
      SimulationPairReport pr{to_string(p.left), to_string(p.right),
                              std::visit([](const auto& t) { return to_string(t); }, p.type), {}, false};
      check(p.left, p.right, p.type, depth, pr.clauses);
      pr.refuted = std::any_of(pr.clauses.begin(), pr.clauses.end(), [](const auto& c) { return c.refuted; });
      rep.refuted = rep.refuted || pr.refuted;
      rep.pairs.push_back(std::move(pr));
    }
    return rep;
  }

  /// True when no clause refutes the pair within `depth`.
  bool related(const Term& a, const Term& b, const AnyType& ty, std::size_t depth) {
    std::vector<ClauseOutcome> out;
    check(a, b, ty, depth, out);
    return std::none_of(out.begin(), out.end(), [](const auto& c) { return c.refuted; });
  }

 private:
  void check(const Term& a, const Term& b, const AnyType& ty, std::size_t depth, std::vector<ClauseOutcome>& out) {
    if (depth == 0) return;
    if (const auto* v = std::get_if<ValType>(&ty))
      check_value(std::get<ValTerm>(a), std::get<ValTerm>(b), *v, depth, out);
    else
      check_comp(std::get<ComTerm>(a), std::get<ComTerm>(b), std::get<ComType>(ty), depth, out);
  }

  void check_value(const ValTerm& a, const ValTerm& b, const ValType& ty, std::size_t depth,
                   std::vector<ClauseOutcome>& out) {
    std::visit(
        [&](const auto& t) {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, ty::Nat>) {
            const bool eq = numeral_value(a) == numeral_value(b);
            out.push_back({1, !eq, true, eq ? "" : to_string(a) + " differs from " + to_string(b)});
          } else if constexpr (std::is_same_v<T, ty::Sum>) {
            const auto* x = std::get_if<val::Inj>(&a->v);
            const auto* y = std::get_if<val::Inj>(&b->v);
            if (!x || !y) throw EquivalenceError("simulation needs canonical sum values");
            if (x->label != y->label) {
              out.push_back({2, true, true, "labels " + x->label + " and " + y->label + " differ"});
              return;
            }
            out.push_back({2, false, true, ""});
            for (const auto& [l, p] : t.cases)
              if (l == x->label) check(x->payload, y->payload, AnyType{p}, depth - 1, out);
          } else if constexpr (std::is_same_v<T, ty::Pair>) {
            const auto* x = std::get_if<val::Pair>(&a->v);
            const auto* y = std::get_if<val::Pair>(&b->v);
            if (!x || !y) throw EquivalenceError("simulation needs canonical pair values");
            out.push_back({3, false, true, ""});
            check(x->first, y->first, AnyType{t.first}, depth - 1, out);
            check(x->second, y->second, AnyType{t.second}, depth - 1, out);
          } else if constexpr (std::is_same_v<T, ty::Thunk>) {
            out.push_back({4, false, true, ""});
            check(force(a), force(b), AnyType{t.body}, depth - 1, out);
          }
        },
        ty->v);
  }

  void check_comp(const ComTerm& a, const ComTerm& b, const ComType& ty, std::size_t depth,
                  std::vector<ClauseOutcome>& out) {
    std::visit(
        [&](const auto& t) {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, ty::Arrow>) {
            out.push_back({5, false, true, ""});
            for (const auto& v : argument_pool(t.domain, pools_))
              check(app(a, v), app(b, v), AnyType{t.codomain}, depth - 1, out);
          } else if constexpr (std::is_same_v<T, ty::Prod>) {
            out.push_back({6, false, true, ""});
            for (const auto& [l, c] : t.components) check(proj(a, l), proj(b, l), AnyType{c}, depth - 1, out);
          } else {
            out.push_back(clause7(a, b, t.result, depth));
          }
        },
        ty->v);
  }

  ClauseOutcome clause7(const ComTerm& a, const ComTerm& b, const ValType& leaf_type, std::size_t depth) {
    EffectTree t = eval_tree(a, fuel_);
    EffectTree r = eval_tree(b, fuel_);
    std::map<std::string, ValTerm> lt, rt, all;
    collect_leaves(t, lt, inst_.explore_width);
    collect_leaves(r, rt, inst_.explore_width);
    KeyRelation rel;
    for (const auto& [ka, va] : lt)
      for (const auto& [kb, vb] : rt)
        if (related(va, vb, AnyType{leaf_type}, depth - 1)) rel.insert({ka, kb});
    all = lt;
    all.insert(rt.begin(), rt.end());
    ValuationFamily fam = make_valuation_family(inst_, all, leaf_type, fuel_, seed_);
    RelatorResult res = relator_check(inst_, t, r, rel, fam);
    ClauseOutcome c{7, res.status == RelatorStatus::refuted, res.status == RelatorStatus::holds, ""};
    if (c.refuted)
      c.detail = "refuted by " + res.modality + " with a " + fam.members[res.valuation].provenance + " valuation: " +
                 inst_.space.format(res.left.lo) + " vs " + inst_.space.format(res.right.hi);
    return c;
  }

  const Instance& inst_;
  SuitePools pools_;
  std::uint64_t fuel_;
  std::uint64_t seed_;
};

inline SimulationReport check_simulation_bounded(const Instance& inst, const Relation& r, std::size_t depth,
                                                 const SuitePools& pools, std::uint64_t fuel, std::uint64_t seed = 1) {
  return SimulationChecker(inst, pools, fuel, seed).run(r, depth);
}

}  // namespace cbpvq
