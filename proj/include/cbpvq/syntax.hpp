#pragma once

// Abstract syntax for call-by-push-value with algebraic effect operators.
//
// Types and terms are immutable trees shared through shared_ptr. Value and
// computation judgements are kept apart at the C++ type level: a ValTerm can
// never appear where a ComTerm is expected.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace cbpvq {

using Label = std::string;
using Name = std::string;

struct SourcePos {
  int line = 0;
  int column = 0;
};

// ---------------------------------------------------------------------------
// Types
// ---------------------------------------------------------------------------

struct ValTypeNode;
struct ComTypeNode;
using ValType = std::shared_ptr<const ValTypeNode>;
using ComType = std::shared_ptr<const ComTypeNode>;

namespace ty {
struct Unit {};
struct Nat {};
struct Thunk {
  ComType body;
};
struct Sum {
  std::vector<std::pair<Label, ValType>> cases;  // sorted by label
};
struct Pair {
  ValType first;
  ValType second;
};
struct Producer {
  ValType result;
};
struct Arrow {
  ValType domain;
  ComType codomain;
};
struct Prod {
  std::vector<std::pair<Label, ComType>> components;  // sorted by label
};
}  // namespace ty

struct ValTypeNode {
  std::variant<ty::Unit, ty::Nat, ty::Thunk, ty::Sum, ty::Pair> v;
};
struct ComTypeNode {
  std::variant<ty::Producer, ty::Arrow, ty::Prod> v;
};

/// Orders labels so that integer labels sort numerically ("2" < "10") and
/// come before identifier labels.
inline bool label_less(const Label& a, const Label& b) {
  auto numeric = [](const Label& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
  };
  const bool na = numeric(a), nb = numeric(b);
  if (na != nb) return na;
  if (na && a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

namespace detail {
template <class T>
std::vector<std::pair<Label, T>> sorted_labelled(std::vector<std::pair<Label, T>> items, const char* what) {
  if (items.empty()) throw std::invalid_argument(std::string(what) + " must have at least one label");
  std::sort(items.begin(), items.end(), [](const auto& x, const auto& y) { return label_less(x.first, y.first); });
  for (std::size_t i = 1; i < items.size(); ++i)
    if (items[i - 1].first == items[i].first)
      throw std::invalid_argument(std::string(what) + " has duplicate label '" + items[i].first + "'");
  return items;
}
}  // namespace detail

inline ValType unit_type() { return std::make_shared<const ValTypeNode>(ValTypeNode{ty::Unit{}}); }
inline ValType nat_type() { return std::make_shared<const ValTypeNode>(ValTypeNode{ty::Nat{}}); }
inline ValType thunk_type(ComType c) {
  return std::make_shared<const ValTypeNode>(ValTypeNode{ty::Thunk{std::move(c)}});
}
inline ValType sum_type(std::vector<std::pair<Label, ValType>> cases) {
  return std::make_shared<const ValTypeNode>(ValTypeNode{ty::Sum{detail::sorted_labelled(std::move(cases), "sum type")}});
}
inline ValType pair_type(ValType a, ValType b) {
  return std::make_shared<const ValTypeNode>(ValTypeNode{ty::Pair{std::move(a), std::move(b)}});
}
inline ComType producer_type(ValType a) {
  return std::make_shared<const ComTypeNode>(ComTypeNode{ty::Producer{std::move(a)}});
}
inline ComType arrow_type(ValType a, ComType c) {
  return std::make_shared<const ComTypeNode>(ComTypeNode{ty::Arrow{std::move(a), std::move(c)}});
}
inline ComType prod_type(std::vector<std::pair<Label, ComType>> comps) {
  return std::make_shared<const ComTypeNode>(
      ComTypeNode{ty::Prod{detail::sorted_labelled(std::move(comps), "product type")}});
}

bool same_type(const ValType& a, const ValType& b);
bool same_type(const ComType& a, const ComType& b);

inline bool same_type(const ValType& a, const ValType& b) {
  if (a == b) return true;
  if (!a || !b || a->v.index() != b->v.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b->v);
        if constexpr (std::is_same_v<T, ty::Unit> || std::is_same_v<T, ty::Nat>) {
          return true;
        } else if constexpr (std::is_same_v<T, ty::Thunk>) {
          return same_type(x.body, y.body);
        } else if constexpr (std::is_same_v<T, ty::Sum>) {
          if (x.cases.size() != y.cases.size()) return false;
          for (std::size_t i = 0; i < x.cases.size(); ++i)
            if (x.cases[i].first != y.cases[i].first || !same_type(x.cases[i].second, y.cases[i].second))
              return false;
          return true;
        } else {
          return same_type(x.first, y.first) && same_type(x.second, y.second);
        }
      },
      a->v);
}

inline bool same_type(const ComType& a, const ComType& b) {
  if (a == b) return true;
  if (!a || !b || a->v.index() != b->v.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b->v);
        if constexpr (std::is_same_v<T, ty::Producer>) {
          return same_type(x.result, y.result);
        } else if constexpr (std::is_same_v<T, ty::Arrow>) {
          return same_type(x.domain, y.domain) && same_type(x.codomain, y.codomain);
        } else {
          if (x.components.size() != y.components.size()) return false;
          for (std::size_t i = 0; i < x.components.size(); ++i)
            if (x.components[i].first != y.components[i].first ||
                !same_type(x.components[i].second, y.components[i].second))
              return false;
          return true;
        }
      },
      a->v);
}

// ---------------------------------------------------------------------------
// Effect operator names
// ---------------------------------------------------------------------------

/// An operator instance such as `por`, `lookup[l]` or `cost[2.5]`: a family
/// name plus an optional bracketed index.
struct OpName {
  std::string family;
  std::string index;

  std::string str() const { return index.empty() ? family : family + "[" + index + "]"; }
  friend bool operator==(const OpName&, const OpName&) = default;
  friend auto operator<=>(const OpName&, const OpName&) = default;
};

// ---------------------------------------------------------------------------
// Terms
// ---------------------------------------------------------------------------

struct ValNode;
struct ComNode;
using ValTerm = std::shared_ptr<const ValNode>;
using ComTerm = std::shared_ptr<const ComNode>;

namespace val {
struct Unit {};
struct Zero {};
struct Succ {
  ValTerm pred;
};
struct Var {
  Name name;
};
struct Thunk {
  ComTerm body;
};
struct Inj {
  Label label;
  ValTerm payload;
  ValType annotation;  // optional sum type, needed where the injection's type cannot be inferred
};
struct Pair {
  ValTerm first;
  ValTerm second;
};
}  // namespace val

namespace com {
struct CaseNat {
  ValTerm scrutinee;
  ComTerm if_zero;
  Name pred;
  ComTerm if_succ;
};
struct Let {
  Name var;
  ValTerm bound;
  ComTerm body;
};
struct Return {
  ValTerm value;
};
struct To {
  ComTerm first;
  Name var;
  ComTerm rest;
};
struct Force {
  ValTerm thunk;
};
struct Lambda {
  Name var;
  ValType domain;
  ComTerm body;
};
struct App {
  ComTerm fn;
  ValTerm arg;
};
struct SumBranch {
  Label label;
  Name var;
  ComTerm body;
};
struct CaseSum {
  ValTerm scrutinee;
  std::vector<SumBranch> branches;  // sorted by label
};
struct CasePair {
  ValTerm scrutinee;
  Name first;
  Name second;
  ComTerm body;
};
struct Tuple {
  std::vector<std::pair<Label, ComTerm>> components;  // sorted by label
};
struct Proj {
  ComTerm tuple;
  Label label;
};
struct Fix {
  ComTerm body;
};
/// Effect operation. For a ℕ-indexed operator `index_var` is set and
/// `children` holds the single body; otherwise `children` are the finite
/// continuations and `param` is set exactly for ℕ-parameterised operators.
struct Op {
  OpName op;
  ValTerm param;
  std::optional<Name> index_var;
  std::vector<ComTerm> children;
  ComType annotation;  // optional, needed for nullary operators in inference position
};
}  // namespace com

struct ValNode {
  std::variant<val::Unit, val::Zero, val::Succ, val::Var, val::Thunk, val::Inj, val::Pair> v;
  SourcePos pos{};
};
struct ComNode {
  std::variant<com::CaseNat, com::Let, com::Return, com::To, com::Force, com::Lambda, com::App, com::CaseSum,
               com::CasePair, com::Tuple, com::Proj, com::Fix, com::Op>
      v;
  SourcePos pos{};
};

/// A closed term of either judgement.
using Term = std::variant<ValTerm, ComTerm>;

template <class T>
ValTerm make_val(T node, SourcePos pos = {}) {
  return std::make_shared<const ValNode>(ValNode{std::move(node), pos});
}
template <class T>
ComTerm make_com(T node, SourcePos pos = {}) {
  return std::make_shared<const ComNode>(ComNode{std::move(node), pos});
}

inline ValTerm unit_val() { return make_val(val::Unit{}); }
inline ValTerm var(Name n) { return make_val(val::Var{std::move(n)}); }
inline ValTerm succ(ValTerm v) { return make_val(val::Succ{std::move(v)}); }
inline ValTerm thunk(ComTerm m) { return make_val(val::Thunk{std::move(m)}); }
inline ValTerm inj(Label l, ValTerm v, ValType annotation = nullptr) {
  return make_val(val::Inj{std::move(l), std::move(v), std::move(annotation)});
}
inline ValTerm pair(ValTerm a, ValTerm b) { return make_val(val::Pair{std::move(a), std::move(b)}); }

inline ComTerm ret(ValTerm v) { return make_com(com::Return{std::move(v)}); }
inline ComTerm force(ValTerm v) { return make_com(com::Force{std::move(v)}); }
inline ComTerm lambda(Name x, ValType a, ComTerm body) {
  return make_com(com::Lambda{std::move(x), std::move(a), std::move(body)});
}
inline ComTerm app(ComTerm m, ValTerm v) { return make_com(com::App{std::move(m), std::move(v)}); }
inline ComTerm seq(ComTerm m, Name x, ComTerm n) { return make_com(com::To{std::move(m), std::move(x), std::move(n)}); }
inline ComTerm let(Name x, ValTerm v, ComTerm body) {
  return make_com(com::Let{std::move(x), std::move(v), std::move(body)});
}
inline ComTerm case_nat(ValTerm v, ComTerm z, Name x, ComTerm s) {
  return make_com(com::CaseNat{std::move(v), std::move(z), std::move(x), std::move(s)});
}
inline ComTerm case_sum(ValTerm v, std::vector<com::SumBranch> branches) {
  std::sort(branches.begin(), branches.end(),
            [](const auto& a, const auto& b) { return label_less(a.label, b.label); });
  return make_com(com::CaseSum{std::move(v), std::move(branches)});
}
inline ComTerm case_pair(ValTerm v, Name x, Name y, ComTerm body) {
  return make_com(com::CasePair{std::move(v), std::move(x), std::move(y), std::move(body)});
}
inline ComTerm tuple(std::vector<std::pair<Label, ComTerm>> comps) {
  std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) { return label_less(a.first, b.first); });
  return make_com(com::Tuple{std::move(comps)});
}
inline ComTerm proj(ComTerm m, Label l) { return make_com(com::Proj{std::move(m), std::move(l)}); }
inline ComTerm fix(ComTerm m) { return make_com(com::Fix{std::move(m)}); }

/// Finite-arity operator node, e.g. op({"por"}, {m, n}).
inline ComTerm op(OpName name, std::vector<ComTerm> children, ComType annotation = nullptr) {
  return make_com(com::Op{std::move(name), nullptr, std::nullopt, std::move(children), std::move(annotation)});
}
/// ℕ-parameterised operator node, e.g. update[l](V, M).
inline ComTerm op_param(OpName name, ValTerm param, std::vector<ComTerm> children, ComType annotation = nullptr) {
  return make_com(com::Op{std::move(name), std::move(param), std::nullopt, std::move(children), std::move(annotation)});
}
/// ℕ-indexed operator node, e.g. lookup[l](x. M).
inline ComTerm op_indexed(OpName name, Name x, ComTerm body) {
  return make_com(com::Op{std::move(name), nullptr, std::move(x), {std::move(body)}, nullptr});
}

// ---------------------------------------------------------------------------
// Numerals
// ---------------------------------------------------------------------------

inline ValTerm numeral(std::uint64_t n) {
  ValTerm v = make_val(val::Zero{});
  for (std::uint64_t i = 0; i < n; ++i) v = succ(std::move(v));
  return v;
}

inline std::optional<std::uint64_t> numeral_value(const ValTerm& v) {
  std::uint64_t n = 0;
  const ValNode* cur = v.get();
  while (cur) {
    if (std::holds_alternative<val::Zero>(cur->v)) return n;
    const auto* s = std::get_if<val::Succ>(&cur->v);
    if (!s) return std::nullopt;
    ++n;
    cur = s->pred.get();
  }
  return std::nullopt;
}

/// Terminal terms: return, lambda and tuples.
inline bool is_terminal(const ComTerm& m) {
  return std::holds_alternative<com::Return>(m->v) || std::holds_alternative<com::Lambda>(m->v) ||
         std::holds_alternative<com::Tuple>(m->v);
}

// ---------------------------------------------------------------------------
// Free variables
// ---------------------------------------------------------------------------

namespace detail {
inline void free_vars(const ValTerm& v, std::set<Name>& bound, std::set<Name>& out);
inline void free_vars(const ComTerm& m, std::set<Name>& bound, std::set<Name>& out);

struct BindGuard {
  std::set<Name>& bound;
  std::vector<Name> added;
  BindGuard(std::set<Name>& b, std::initializer_list<Name> names) : bound(b) {
    for (const auto& n : names)
      if (bound.insert(n).second) added.push_back(n);
  }
  ~BindGuard() {
    for (const auto& n : added) bound.erase(n);
  }
};

inline void free_vars(const ValTerm& v, std::set<Name>& bound, std::set<Name>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, val::Succ>) {
          free_vars(n.pred, bound, out);
        } else if constexpr (std::is_same_v<T, val::Var>) {
          if (!bound.count(n.name)) out.insert(n.name);
        } else if constexpr (std::is_same_v<T, val::Thunk>) {
          free_vars(n.body, bound, out);
        } else if constexpr (std::is_same_v<T, val::Inj>) {
          free_vars(n.payload, bound, out);
        } else if constexpr (std::is_same_v<T, val::Pair>) {
          free_vars(n.first, bound, out);
          free_vars(n.second, bound, out);
        }
      },
      v->v);
}

inline void free_vars(const ComTerm& m, std::set<Name>& bound, std::set<Name>& out) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, com::CaseNat>) {
          free_vars(n.scrutinee, bound, out);
          free_vars(n.if_zero, bound, out);
          BindGuard g(bound, {n.pred});
          free_vars(n.if_succ, bound, out);
        } else if constexpr (std::is_same_v<T, com::Let>) {
          free_vars(n.bound, bound, out);
          BindGuard g(bound, {n.var});
          free_vars(n.body, bound, out);
        } else if constexpr (std::is_same_v<T, com::Return>) {
          free_vars(n.value, bound, out);
        } else if constexpr (std::is_same_v<T, com::To>) {
          free_vars(n.first, bound, out);
          BindGuard g(bound, {n.var});
          free_vars(n.rest, bound, out);
        } else if constexpr (std::is_same_v<T, com::Force>) {
          free_vars(n.thunk, bound, out);
        } else if constexpr (std::is_same_v<T, com::Lambda>) {
          BindGuard g(bound, {n.var});
          free_vars(n.body, bound, out);
        } else if constexpr (std::is_same_v<T, com::App>) {
          free_vars(n.fn, bound, out);
          free_vars(n.arg, bound, out);
        } else if constexpr (std::is_same_v<T, com::CaseSum>) {
          free_vars(n.scrutinee, bound, out);
          for (const auto& b : n.branches) {
            BindGuard g(bound, {b.var});
            free_vars(b.body, bound, out);
          }
        } else if constexpr (std::is_same_v<T, com::CasePair>) {
          free_vars(n.scrutinee, bound, out);
          BindGuard g(bound, {n.first, n.second});
          free_vars(n.body, bound, out);
        } else if constexpr (std::is_same_v<T, com::Tuple>) {
          for (const auto& c : n.components) free_vars(c.second, bound, out);
        } else if constexpr (std::is_same_v<T, com::Proj>) {
          free_vars(n.tuple, bound, out);
        } else if constexpr (std::is_same_v<T, com::Fix>) {
          free_vars(n.body, bound, out);
        } else if constexpr (std::is_same_v<T, com::Op>) {
          if (n.param) free_vars(n.param, bound, out);
          if (n.index_var) {
            BindGuard g(bound, {*n.index_var});
            for (const auto& c : n.children) free_vars(c, bound, out);
          } else {
            for (const auto& c : n.children) free_vars(c, bound, out);
          }
        }
      },
      m->v);
}
}  // namespace detail

inline std::set<Name> free_vars(const ValTerm& v) {
  std::set<Name> bound, out;
  detail::free_vars(v, bound, out);
  return out;
}
inline std::set<Name> free_vars(const ComTerm& m) {
  std::set<Name> bound, out;
  detail::free_vars(m, bound, out);
  return out;
}

}  // namespace cbpvq
