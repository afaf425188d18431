#pragma once

// Typed quantitative formulas.
//
//   phi ::= {n} | [U]phi | inj i phi | fst phi | snd phi | (V . phi) | proj i phi
//         | q<phi> | or{phi, ...} | and{phi, ...} | step(phi, a) | const a | not phi
//         | sigma[w, ...](phi) | mix(phi, phi) | (phi)

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "config.hpp"
#include "lexer.hpp"
#include "parser.hpp"
#include "printer.hpp"
#include "truth.hpp"
#include "typecheck.hpp"

namespace cbpvq {

struct FormulaNode;
using Formula = std::shared_ptr<const FormulaNode>;

/// Countable family for or/and: the explicit members, optionally extended by
/// a generator enumerated up to `bound`. `complete` states that the listed
/// plus generated members exhaust the family.
struct FormulaFamily {
  std::vector<Formula> members;
  std::function<Formula(std::size_t)> generator;
  std::size_t bound = 0;
  bool complete = true;

  std::vector<Formula> enumerate() const {
    std::vector<Formula> out = members;
    if (generator)
      for (std::size_t i = 0; i < bound; ++i) out.push_back(generator(i));
    return out;
  }
};

namespace fm {
struct NatEq {
  std::uint64_t n;
};
struct Thunk {
  Formula body;
};
struct Inj {
  Label label;
  Formula body;
};
struct Fst {
  Formula body;
};
struct Snd {
  Formula body;
};
struct Arg {
  ValTerm value;
  Formula body;
};
struct Proj {
  Label label;
  Formula body;
};
struct Modal {
  std::string modality;
  Formula body;
};
struct Or {
  FormulaFamily family;
};
struct And {
  FormulaFamily family;
};
struct Step {
  Formula body;
  TruthValue threshold;
};
struct Const {
  TruthValue value;
};
struct Neg {
  Formula body;
};
/// Weighted state sum: value min(1, Σ_s μ(s)·(M ⊨ φ)(s)) at every state.
struct Sigma {
  std::vector<double> weights;
  Formula body;
};
/// Average of an optimistic and a pessimistic formula.
struct Mix {
  Formula opt;
  Formula pes;
};
}  // namespace fm

struct FormulaNode {
  std::variant<fm::NatEq, fm::Thunk, fm::Inj, fm::Fst, fm::Snd, fm::Arg, fm::Proj, fm::Modal, fm::Or, fm::And, fm::Step,
               fm::Const, fm::Neg, fm::Sigma, fm::Mix>
      v;
};

template <class T>
Formula make_formula(T node) {
  return std::make_shared<const FormulaNode>(FormulaNode{std::move(node)});
}

namespace f {
inline Formula nat_eq(std::uint64_t n) { return make_formula(fm::NatEq{n}); }
inline Formula thunk(Formula b) { return make_formula(fm::Thunk{std::move(b)}); }
inline Formula inj(Label l, Formula b) { return make_formula(fm::Inj{std::move(l), std::move(b)}); }
inline Formula fst(Formula b) { return make_formula(fm::Fst{std::move(b)}); }
inline Formula snd(Formula b) { return make_formula(fm::Snd{std::move(b)}); }
inline Formula arg(ValTerm v, Formula b) { return make_formula(fm::Arg{std::move(v), std::move(b)}); }
inline Formula proj(Label l, Formula b) { return make_formula(fm::Proj{std::move(l), std::move(b)}); }
inline Formula modal(std::string q, Formula b) { return make_formula(fm::Modal{std::move(q), std::move(b)}); }
inline Formula disj(std::vector<Formula> xs) { return make_formula(fm::Or{{std::move(xs), nullptr, 0, true}}); }
inline Formula conj(std::vector<Formula> xs) { return make_formula(fm::And{{std::move(xs), nullptr, 0, true}}); }
inline Formula step(Formula b, TruthValue a) { return make_formula(fm::Step{std::move(b), std::move(a)}); }
inline Formula constant(TruthValue a) { return make_formula(fm::Const{std::move(a)}); }
inline Formula neg(Formula b) { return make_formula(fm::Neg{std::move(b)}); }
inline Formula sigma(std::vector<double> w, Formula b) { return make_formula(fm::Sigma{std::move(w), std::move(b)}); }
inline Formula mix(Formula a, Formula b) { return make_formula(fm::Mix{std::move(a), std::move(b)}); }
}  // namespace f

class FormulaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ----- metrics ---------------------------------------------------------------------

/// Number of constructors; family members are enumerated.
inline std::size_t formula_size(const Formula& phi) {
  return std::visit(
      [](const auto& n) -> std::size_t {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, fm::NatEq> || std::is_same_v<T, fm::Const>) {
          return 1;
        } else if constexpr (std::is_same_v<T, fm::Or> || std::is_same_v<T, fm::And>) {
          std::size_t s = 1;
          for (const auto& m : n.family.enumerate()) s += formula_size(m);
          return s;
        } else if constexpr (std::is_same_v<T, fm::Mix>) {
          return 1 + formula_size(n.opt) + formula_size(n.pes);
        } else {
          return 1 + formula_size(n.body);
        }
      },
      phi->v);
}

/// Membership in the positive fragment: no negation anywhere.
inline bool is_positive(const Formula& phi) {
  return std::visit(
      [](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, fm::Neg>) {
          return false;
        } else if constexpr (std::is_same_v<T, fm::NatEq> || std::is_same_v<T, fm::Const>) {
          return true;
        } else if constexpr (std::is_same_v<T, fm::Or> || std::is_same_v<T, fm::And>) {
          for (const auto& m : n.family.enumerate())
            if (!is_positive(m)) return false;
          return true;
        } else if constexpr (std::is_same_v<T, fm::Mix>) {
          return is_positive(n.opt) && is_positive(n.pes);
        } else {
          return is_positive(n.body);
        }
      },
      phi->v);
}

// ----- printing ----------------------------------------------------------------------

inline std::string to_string(const Formula& phi, const TruthSpace& space) {
  return std::visit(
      [&](const auto& n) -> std::string {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, fm::NatEq>) {
          return "{" + std::to_string(n.n) + "}";
        } else if constexpr (std::is_same_v<T, fm::Thunk>) {
          return "[U]" + to_string(n.body, space);
        } else if constexpr (std::is_same_v<T, fm::Inj>) {
          return "inj " + n.label + " " + to_string(n.body, space);
        } else if constexpr (std::is_same_v<T, fm::Fst>) {
          return "fst " + to_string(n.body, space);
        } else if constexpr (std::is_same_v<T, fm::Snd>) {
          return "snd " + to_string(n.body, space);
        } else if constexpr (std::is_same_v<T, fm::Arg>) {
          return "(" + cbpvq::to_string(n.value) + " . " + to_string(n.body, space) + ")";
        } else if constexpr (std::is_same_v<T, fm::Proj>) {
          return "proj " + n.label + " " + to_string(n.body, space);
        } else if constexpr (std::is_same_v<T, fm::Modal>) {
          return n.modality + "<" + to_string(n.body, space) + ">";
        } else if constexpr (std::is_same_v<T, fm::Or> || std::is_same_v<T, fm::And>) {
          std::string s = std::is_same_v<T, fm::Or> ? "or{" : "and{";
          bool first = true;
          for (const auto& m : n.family.enumerate()) {
            if (!first) s += ", ";
            first = false;
            s += to_string(m, space);
          }
          if (!n.family.complete) s += first ? "..." : ", ...";
          return s + "}";
        } else if constexpr (std::is_same_v<T, fm::Step>) {
          return "step(" + to_string(n.body, space) + ", " + space.format(n.threshold) + ")";
        } else if constexpr (std::is_same_v<T, fm::Const>) {
          return "const " + space.format(n.value);
        } else if constexpr (std::is_same_v<T, fm::Neg>) {
          return "not " + to_string(n.body, space);
        } else if constexpr (std::is_same_v<T, fm::Sigma>) {
          std::string s = "sigma[";
          for (std::size_t i = 0; i < n.weights.size(); ++i) s += (i ? ", " : "") + format_number(n.weights[i]);
          return s + "](" + to_string(n.body, space) + ")";
        } else {
          return "mix(" + to_string(n.opt, space) + ", " + to_string(n.pes, space) + ")";
        }
      },
      phi->v);
}

// ----- parsing ------------------------------------------------------------------------

class FormulaParser {
 public:
  FormulaParser(std::string_view text, const Instance& inst) : ts_(text), inst_(inst) {}

  Formula whole() {
    Formula phi = formula();
    if (!ts_.at_end()) ts_.fail("unexpected trailing input");
    return phi;
  }

  Formula formula() {
    const Token t = ts_.peek();
    if (ts_.accept_symbol("{")) {
      const Token n = ts_.next();
      std::uint64_t v = 0;
      auto [p, ec] = std::from_chars(n.text.data(), n.text.data() + n.text.size(), v);
      if (n.kind != Tok::number || ec != std::errc{} || p != n.text.data() + n.text.size())
        throw ParseError("expected a numeral inside {...}", n.pos);
      ts_.expect_symbol("}");
      return f::nat_eq(v);
    }
    if (ts_.is_symbol("[") && ts_.is_keyword("U", 1) && ts_.is_symbol("]", 2)) {
      ts_.next();
      ts_.next();
      ts_.next();
      return f::thunk(formula());
    }
    if (ts_.accept_keyword("inj")) {
      Label l = label();
      return f::inj(l, formula());
    }
    if (ts_.accept_keyword("fst")) return f::fst(formula());
    if (ts_.accept_keyword("snd")) return f::snd(formula());
    if (ts_.accept_keyword("proj")) {
      Label l = label();
      return f::proj(l, formula());
    }
    if (ts_.accept_keyword("not")) return f::neg(formula());
    if (ts_.is_keyword("or") && ts_.is_symbol("{", 1)) {
      ts_.next();
      return f::disj(members());
    }
    if (ts_.is_keyword("and") && ts_.is_symbol("{", 1)) {
      ts_.next();
      return f::conj(members());
    }
    if (ts_.is_keyword("step") && ts_.is_symbol("(", 1)) {
      ts_.next();
      ts_.next();
      Formula body = formula();
      ts_.expect_symbol(",");
      TruthValue a = inst_.space.parse(ts_);
      ts_.expect_symbol(")");
      return f::step(body, a);
    }
    if (ts_.accept_keyword("const")) return f::constant(inst_.space.parse(ts_));
    if (ts_.is_keyword("sigma") && ts_.is_symbol("[", 1)) {
      ts_.next();
      ts_.next();
      std::vector<double> w;
      if (!ts_.is_symbol("]")) {
        do {
          const Token n = ts_.next();
          if (n.kind != Tok::number) throw ParseError("expected a weight", n.pos);
          w.push_back(std::strtod(n.text.c_str(), nullptr));
        } while (ts_.accept_symbol(","));
      }
      ts_.expect_symbol("]");
      ts_.expect_symbol("(");
      Formula body = formula();
      ts_.expect_symbol(")");
      return f::sigma(std::move(w), body);
    }
    if (ts_.is_keyword("mix") && ts_.is_symbol("(", 1)) {
      ts_.next();
      ts_.next();
      Formula a = formula();
      ts_.expect_symbol(",");
      Formula b = formula();
      ts_.expect_symbol(")");
      return f::mix(a, b);
    }
    if (t.kind == Tok::ident && ts_.is_symbol("<", 1)) {
      ts_.next();
      ts_.next();
      Formula body = formula();
      ts_.expect_symbol(">");
      if (!inst_.modality(t.text)) {
        std::string known;
        for (const auto& q : inst_.modalities) known += (known.empty() ? "" : ", ") + q.name;
        throw ParseError("unknown modality '" + t.text + "' (this instance has: " + known + ")", t.pos);
      }
      return f::modal(t.text, body);
    }
    if (ts_.accept_symbol("(")) {
      // (V . phi) or a parenthesised formula
      const std::size_t mark = ts_.position();
      try {
        Parser p(ts_, &inst_.signature);
        ValTerm v = p.value();
        if (ts_.accept_symbol(".")) {
          Formula body = formula();
          ts_.expect_symbol(")");
          return f::arg(v, body);
        }
      } catch (const ParseError&) {
      }
      ts_.reset(mark);
      Formula inner = formula();
      ts_.expect_symbol(")");
      return inner;
    }
    ts_.fail("expected a formula");
  }

 private:
  Label label() {
    const Token t = ts_.next();
    if (t.kind != Tok::ident && t.kind != Tok::number) throw ParseError("expected a label", t.pos);
    return t.text;
  }

  std::vector<Formula> members() {
    ts_.expect_symbol("{");
    std::vector<Formula> xs;
    if (ts_.accept_symbol("}")) return xs;
    do xs.push_back(formula());
    while (ts_.accept_symbol(","));
    ts_.expect_symbol("}");
    return xs;
  }

  TokenStream ts_;
  const Instance& inst_;
};

inline Formula parse_formula(std::string_view text, const Instance& inst) { return FormulaParser(text, inst).whole(); }

// ----- typing ----------------------------------------------------------------------------

/// Checks φ against a value or computation type; throws FormulaError.
inline void check_formula(const Formula& phi, const AnyType& ty, const Instance& inst);

namespace detail {
inline std::string type_text(const AnyType& t) {
  return std::visit([](const auto& x) { return to_string(x); }, t);
}
[[noreturn]] inline void formula_mismatch(const std::string& ctor, const AnyType& ty, const std::string& want) {
  throw FormulaError("formula '" + ctor + "' needs " + want + ", but the term type is " + type_text(ty));
}
}  // namespace detail

inline void check_formula(const Formula& phi, const AnyType& ty, const Instance& inst) {
  const ValType* vt = std::get_if<ValType>(&ty);
  const ComType* ct = std::get_if<ComType>(&ty);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, fm::NatEq>) {
          if (!vt || !std::holds_alternative<ty::Nat>((*vt)->v)) detail::formula_mismatch("{n}", ty, "nat");
        } else if constexpr (std::is_same_v<T, fm::Thunk>) {
          const ty::Thunk* u = vt ? std::get_if<ty::Thunk>(&(*vt)->v) : nullptr;
          if (!u) detail::formula_mismatch("[U]", ty, "a thunk type U C");
          check_formula(n.body, u->body, inst);
        } else if constexpr (std::is_same_v<T, fm::Inj>) {
          const ty::Sum* s = vt ? std::get_if<ty::Sum>(&(*vt)->v) : nullptr;
          if (!s) detail::formula_mismatch("inj", ty, "a sum type");
          for (const auto& [l, a] : s->cases)
            if (l == n.label) return check_formula(n.body, a, inst);
          throw FormulaError("formula 'inj " + n.label + "' names a label outside " + detail::type_text(ty));
        } else if constexpr (std::is_same_v<T, fm::Fst> || std::is_same_v<T, fm::Snd>) {
          const ty::Pair* p = vt ? std::get_if<ty::Pair>(&(*vt)->v) : nullptr;
          if (!p) detail::formula_mismatch(std::is_same_v<T, fm::Fst> ? "fst" : "snd", ty, "a pair type");
          check_formula(n.body, std::is_same_v<T, fm::Fst> ? p->first : p->second, inst);
        } else if constexpr (std::is_same_v<T, fm::Arg>) {
          const ty::Arrow* a = ct ? std::get_if<ty::Arrow>(&(*ct)->v) : nullptr;
          if (!a) detail::formula_mismatch("(V . phi)", ty, "a function type");
          if (!free_vars(n.value).empty()) throw FormulaError("argument " + cbpvq::to_string(n.value) + " is not closed");
          try {
            TypeChecker(inst.signature).check(Context{}, n.value, a->domain);
          } catch (const TypeError& e) {
            throw FormulaError("argument " + cbpvq::to_string(n.value) + " does not have type " +
                               to_string(a->domain) + ": " + e.what());
          }
          check_formula(n.body, a->codomain, inst);
        } else if constexpr (std::is_same_v<T, fm::Proj>) {
          const ty::Prod* p = ct ? std::get_if<ty::Prod>(&(*ct)->v) : nullptr;
          if (!p) detail::formula_mismatch("proj", ty, "a product type");
          for (const auto& [l, c] : p->components)
            if (l == n.label) return check_formula(n.body, c, inst);
          throw FormulaError("formula 'proj " + n.label + "' names a label outside " + detail::type_text(ty));
        } else if constexpr (std::is_same_v<T, fm::Modal>) {
          const ty::Producer* p = ct ? std::get_if<ty::Producer>(&(*ct)->v) : nullptr;
          if (!p) detail::formula_mismatch(n.modality + "<...>", ty, "a producer type F A");
          inst.require_modality(n.modality);
          check_formula(n.body, p->result, inst);
        } else if constexpr (std::is_same_v<T, fm::Or> || std::is_same_v<T, fm::And>) {
          for (const auto& m : n.family.enumerate()) check_formula(m, ty, inst);
        } else if constexpr (std::is_same_v<T, fm::Step>) {
          if (!inst.space.contains(n.threshold)) throw FormulaError("step threshold is not in " + inst.space.name());
          check_formula(n.body, ty, inst);
        } else if constexpr (std::is_same_v<T, fm::Const>) {
          if (!inst.space.contains(n.value)) throw FormulaError("constant is not in " + inst.space.name());
        } else if constexpr (std::is_same_v<T, fm::Neg>) {
          check_formula(n.body, ty, inst);
        } else if constexpr (std::is_same_v<T, fm::Sigma>) {
          if (inst.space.kind() != SpaceKind::state_probs) throw FormulaError("sigma needs the truth space [0,1]^S");
          if (n.weights.size() != inst.space.width())
            throw FormulaError("sigma has " + std::to_string(n.weights.size()) + " weights, expected one per state (" +
                               std::to_string(inst.space.width()) + ")");
          for (double w : n.weights)
            if (!(w >= 0)) throw FormulaError("sigma weights must be nonnegative");
          check_formula(n.body, ty, inst);
        } else {
          if (inst.space.kind() != SpaceKind::unit) throw FormulaError("mix needs the truth space [0,1]");
          if (!ct || !std::holds_alternative<ty::Producer>((*ct)->v))
            detail::formula_mismatch("mix", ty, "a producer type F A");
          check_formula(n.opt, ty, inst);
          check_formula(n.pes, ty, inst);
        }
      },
      phi->v);
}

/// A type at which φ is well formed, read off its shape; used to check terms
/// whose type cannot be inferred (e.g. a bare raise). Free choices become unit.
inline std::optional<ValType> value_type_hint(const Formula& phi, const Instance& inst);
inline std::optional<ComType> comp_type_hint(const Formula& phi, const Instance& inst);

namespace detail {
template <class Family, class Hint>
auto first_member_hint(const Family& fam, Hint hint) -> decltype(hint(Formula{})) {
  const auto xs = fam.enumerate();
  if (xs.empty()) return std::nullopt;
  return hint(xs.front());
}
}  // namespace detail

inline std::optional<ValType> value_type_hint(const Formula& phi, const Instance& inst) {
  auto rec = [&](const Formula& x) { return value_type_hint(x, inst); };
  return std::visit(
      [&](const auto& n) -> std::optional<ValType> {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, fm::NatEq>) {
          return nat_type();
        } else if constexpr (std::is_same_v<T, fm::Thunk>) {
          auto c = comp_type_hint(n.body, inst);
          if (!c) return std::nullopt;
          return thunk_type(*c);
        } else if constexpr (std::is_same_v<T, fm::Inj>) {
          auto a = rec(n.body);
          if (!a) return std::nullopt;
          return cbpvq::sum_type({{n.label, *a}});
        } else if constexpr (std::is_same_v<T, fm::Fst> || std::is_same_v<T, fm::Snd>) {
          auto a = rec(n.body);
          if (!a) return std::nullopt;
          return std::is_same_v<T, fm::Fst> ? pair_type(*a, unit_type()) : pair_type(unit_type(), *a);
        } else if constexpr (std::is_same_v<T, fm::Const>) {
          return unit_type();
        } else if constexpr (std::is_same_v<T, fm::Or> || std::is_same_v<T, fm::And>) {
          auto h = detail::first_member_hint(n.family, rec);
          return h ? h : std::optional<ValType>(unit_type());
        } else if constexpr (std::is_same_v<T, fm::Step> || std::is_same_v<T, fm::Neg> || std::is_same_v<T, fm::Sigma>) {
          return rec(n.body);
        } else {
          return std::nullopt;
        }
      },
      phi->v);
}

inline std::optional<ComType> comp_type_hint(const Formula& phi, const Instance& inst) {
  auto rec = [&](const Formula& x) { return comp_type_hint(x, inst); };
  return std::visit(
      [&](const auto& n) -> std::optional<ComType> {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, fm::Arg>) {
          auto c = rec(n.body);
          if (!c) return std::nullopt;
          try {
            return arrow_type(TypeChecker(inst.signature).infer(Context{}, n.value), *c);
          } catch (const TypeError&) {
            return std::nullopt;
          }
        } else if constexpr (std::is_same_v<T, fm::Proj>) {
          auto c = rec(n.body);
          if (!c) return std::nullopt;
          return prod_type({{n.label, *c}});
        } else if constexpr (std::is_same_v<T, fm::Modal>) {
          auto a = value_type_hint(n.body, inst);
          if (!a) return std::nullopt;
          return producer_type(*a);
        } else if constexpr (std::is_same_v<T, fm::Const>) {
          return producer_type(unit_type());
        } else if constexpr (std::is_same_v<T, fm::Or> || std::is_same_v<T, fm::And>) {
          auto h = detail::first_member_hint(n.family, rec);
          return h ? h : std::optional<ComType>(producer_type(unit_type()));
        } else if constexpr (std::is_same_v<T, fm::Step> || std::is_same_v<T, fm::Neg> || std::is_same_v<T, fm::Sigma>) {
          return rec(n.body);
        } else if constexpr (std::is_same_v<T, fm::Mix>) {
          return rec(n.opt);
        } else {
          return std::nullopt;
        }
      },
      phi->v);
}

/// Hoare-style formula (G<const Q> ⊒ P).
inline Formula hoare(const Instance& inst, const TruthValue& pre, const TruthValue& post, const std::string& q = "G") {
  if (inst.space.kind() != SpaceKind::state_sets) throw FormulaError("hoare formulas need the truth space P(S)");
  inst.require_modality(q);
  return f::step(f::modal(q, f::constant(post)), pre);
}

inline Formula sigma_mu(const Instance& inst, std::vector<double> mu, Formula phi) {
  if (inst.space.kind() != SpaceKind::state_probs) throw FormulaError("sigma needs the truth space [0,1]^S");
  for (double w : mu)
    if (!(w >= 0)) throw FormulaError("sigma weights must be nonnegative");
  return f::sigma(std::move(mu), std::move(phi));
}

inline Formula scheduler_mix(const Instance& inst, Formula opt, Formula pes) {
  if (inst.space.kind() != SpaceKind::unit) throw FormulaError("mix needs the truth space [0,1]");
  return f::mix(std::move(opt), std::move(pes));
}

}  // namespace cbpvq
