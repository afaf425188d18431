#pragma once

// Bidirectional type checking. Lambda binders carry their domain, so every
// rule is syntax-directed; the only annotation-dependent cases are
// injections and nullary operators in inference position.

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "printer.hpp"
#include "signature.hpp"
#include "syntax.hpp"

namespace cbpvq {

class TypeError : public std::runtime_error {
 public:
  TypeError(std::string rule, std::string detail, std::string expected = {}, std::string found = {},
            SourcePos pos = {})
      : std::runtime_error(render(rule, detail, expected, found, pos)),
        rule_(std::move(rule)),
        expected_(std::move(expected)),
        found_(std::move(found)),
        pos_(pos) {}

  const std::string& rule() const { return rule_; }
  const std::string& expected() const { return expected_; }
  const std::string& found() const { return found_; }
  SourcePos pos() const { return pos_; }

 private:
  static std::string render(const std::string& rule, const std::string& detail, const std::string& expected,
                            const std::string& found, SourcePos pos) {
    std::string s;
    if (pos.line > 0) s += std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": ";
    s += "[" + rule + "] " + detail;
    if (!expected.empty() || !found.empty()) s += " (expected " + expected + ", found " + found + ")";
    return s;
  }

  std::string rule_, expected_, found_;
  SourcePos pos_;
};

class Context {
 public:
  Context() = default;
  Context(std::initializer_list<std::pair<Name, ValType>> entries) {
    for (const auto& [n, t] : entries) *this = extend(n, t);
  }

  /// Adding a name already present shadows it.
  Context extend(const Name& n, ValType t) const {
    Context c = *this;
    for (auto it = c.entries_.begin(); it != c.entries_.end(); ++it)
      if (it->first == n) {
        c.entries_.erase(it);
        break;
      }
    c.entries_.emplace_back(n, std::move(t));
    return c;
  }

  const ValType* find(const Name& n) const {
    for (const auto& [k, t] : entries_)
      if (k == n) return &t;
    return nullptr;
  }

  const std::vector<std::pair<Name, ValType>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<Name, ValType>> entries_;
};

class TypeChecker {
 public:
  explicit TypeChecker(const EffectSignature& sig) : sig_(sig) {}

  ValType infer(const Context& ctx, const ValTerm& v) const {
    return std::visit(
        [&](const auto& n) -> ValType {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, val::Unit>) {
            return unit_type();
          } else if constexpr (std::is_same_v<T, val::Zero>) {
            return nat_type();
          } else if constexpr (std::is_same_v<T, val::Succ>) {
            expect_same("succ", nat_type(), infer(ctx, n.pred), n.pred->pos);
            return nat_type();
          } else if constexpr (std::is_same_v<T, val::Var>) {
            const ValType* t = ctx.find(n.name);
            if (!t) throw TypeError("var", "unbound variable '" + n.name + "'", {}, {}, v->pos);
            return *t;
          } else if constexpr (std::is_same_v<T, val::Thunk>) {
            return thunk_type(infer(ctx, n.body));
          } else if constexpr (std::is_same_v<T, val::Inj>) {
            if (!n.annotation)
              throw TypeError("inj", "cannot infer the sum type of 'inj " + n.label + "'; add an ascription (inj " +
                                         n.label + " V : T)",
                              {}, {}, v->pos);
            check(ctx, v, n.annotation);
            return n.annotation;
          } else {
            return pair_type(infer(ctx, n.first), infer(ctx, n.second));
          }
        },
        v->v);
  }

  void check(const Context& ctx, const ValTerm& v, const ValType& want) const {
    if (const auto* i = std::get_if<val::Inj>(&v->v)) {
      if (i->annotation) expect_same("inj", want, i->annotation, v->pos);
      const auto* s = std::get_if<ty::Sum>(&want->v);
      if (!s) throw TypeError("inj", "injection checked against a non-sum type", "a sum type", to_string(want), v->pos);
      for (const auto& [l, a] : s->cases)
        if (l == i->label) return check(ctx, i->payload, a);
      throw TypeError("inj", "label '" + i->label + "' is not a case of the sum", to_string(want),
                      "inj " + i->label, v->pos);
    }
    if (const auto* p = std::get_if<val::Pair>(&v->v)) {
      const auto* pt = std::get_if<ty::Pair>(&want->v);
      if (!pt) throw TypeError("pair", "pair checked against a non-pair type", "a pair type", to_string(want), v->pos);
      check(ctx, p->first, pt->first);
      check(ctx, p->second, pt->second);
      return;
    }
    if (const auto* t = std::get_if<val::Thunk>(&v->v)) {
      const auto* tt = std::get_if<ty::Thunk>(&want->v);
      if (!tt) throw TypeError("thunk", "thunk checked against a non-U type", "U C", to_string(want), v->pos);
      check(ctx, t->body, tt->body);
      return;
    }
    expect_same("value", want, infer(ctx, v), v->pos);
  }

  ComType infer(const Context& ctx, const ComTerm& m) const {
    return std::visit(
        [&](const auto& n) -> ComType {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, com::CaseNat>) {
            check(ctx, n.scrutinee, nat_type());
            const Context succ_ctx = ctx.extend(n.pred, nat_type());
            return infer_branches({{ctx, n.if_zero}, {succ_ctx, n.if_succ}});
          } else if constexpr (std::is_same_v<T, com::Let>) {
            return infer(ctx.extend(n.var, infer(ctx, n.bound)), n.body);
          } else if constexpr (std::is_same_v<T, com::Return>) {
            return producer_type(infer(ctx, n.value));
          } else if constexpr (std::is_same_v<T, com::To>) {
            const ComType first = infer(ctx, n.first);
            const auto* p = std::get_if<ty::Producer>(&first->v);
            if (!p) throw TypeError("to", "sequenced computation is not a producer", "F A", to_string(first), m->pos);
            return infer(ctx.extend(n.var, p->result), n.rest);
          } else if constexpr (std::is_same_v<T, com::Force>) {
            const ValType t = infer(ctx, n.thunk);
            const auto* u = std::get_if<ty::Thunk>(&t->v);
            if (!u) throw TypeError("force", "forced value is not a thunk", "U C", to_string(t), m->pos);
            return u->body;
          } else if constexpr (std::is_same_v<T, com::Lambda>) {
            return arrow_type(n.domain, infer(ctx.extend(n.var, n.domain), n.body));
          } else if constexpr (std::is_same_v<T, com::App>) {
            const ComType f = infer(ctx, n.fn);
            const auto* a = std::get_if<ty::Arrow>(&f->v);
            if (!a) throw TypeError("app", "applied computation is not a function", "A -> C", to_string(f), m->pos);
            check(ctx, n.arg, a->domain);
            return a->codomain;
          } else if constexpr (std::is_same_v<T, com::CaseSum>) {
            const ValType st = sum_of(ctx, n.scrutinee, m->pos);
            const auto& s = std::get<ty::Sum>(st->v);
            check_branch_labels(s, n, m->pos);
            std::vector<std::pair<Context, ComTerm>> arms;
            for (const auto& b : n.branches) arms.emplace_back(ctx.extend(b.var, case_type(s, b.label, m->pos)), b.body);
            return infer_branches(std::move(arms));
          } else if constexpr (std::is_same_v<T, com::CasePair>) {
            const auto [a, b] = pair_of(ctx, n.scrutinee, m->pos);
            return infer(ctx.extend(n.first, a).extend(n.second, b), n.body);
          } else if constexpr (std::is_same_v<T, com::Tuple>) {
            std::vector<std::pair<Label, ComType>> comps;
            for (const auto& [l, c] : n.components) comps.emplace_back(l, infer(ctx, c));
            return prod_type(std::move(comps));
          } else if constexpr (std::is_same_v<T, com::Proj>) {
            const ComType t = infer(ctx, n.tuple);
            const auto* p = std::get_if<ty::Prod>(&t->v);
            if (!p) throw TypeError("proj", "projection from a non-product", "prod{...}", to_string(t), m->pos);
            for (const auto& [l, c] : p->components)
              if (l == n.label) return c;
            throw TypeError("proj", "label '" + n.label + "' is not a component", to_string(t), "# " + n.label, m->pos);
          } else if constexpr (std::is_same_v<T, com::Fix>) {
            const ComType t = infer(ctx, n.body);
            return fix_result(t, m->pos);
          } else {
            return infer_op(ctx, n, m->pos);
          }
        },
        m->v);
  }

  void check(const Context& ctx, const ComTerm& m, const ComType& want) const {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, com::CaseNat>) {
            check(ctx, n.scrutinee, nat_type());
            check(ctx, n.if_zero, want);
            check(ctx.extend(n.pred, nat_type()), n.if_succ, want);
          } else if constexpr (std::is_same_v<T, com::Let>) {
            check(ctx.extend(n.var, infer(ctx, n.bound)), n.body, want);
          } else if constexpr (std::is_same_v<T, com::Return>) {
            const auto* p = std::get_if<ty::Producer>(&want->v);
            if (!p) throw TypeError("return", "return checked against a non-producer type", to_string(want), "F A", m->pos);
            check(ctx, n.value, p->result);
          } else if constexpr (std::is_same_v<T, com::To>) {
            const ComType first = infer(ctx, n.first);
            const auto* p = std::get_if<ty::Producer>(&first->v);
            if (!p) throw TypeError("to", "sequenced computation is not a producer", "F A", to_string(first), m->pos);
            check(ctx.extend(n.var, p->result), n.rest, want);
          } else if constexpr (std::is_same_v<T, com::Lambda>) {
            const auto* a = std::get_if<ty::Arrow>(&want->v);
            if (!a) throw TypeError("lambda", "function checked against a non-arrow type", to_string(want), "A -> C", m->pos);
            expect_same("lambda", a->domain, n.domain, m->pos);
            check(ctx.extend(n.var, n.domain), n.body, a->codomain);
          } else if constexpr (std::is_same_v<T, com::CaseSum>) {
            const ValType st = sum_of(ctx, n.scrutinee, m->pos);
            const auto& s = std::get<ty::Sum>(st->v);
            check_branch_labels(s, n, m->pos);
            for (const auto& b : n.branches) check(ctx.extend(b.var, case_type(s, b.label, m->pos)), b.body, want);
          } else if constexpr (std::is_same_v<T, com::CasePair>) {
            const auto [a, b] = pair_of(ctx, n.scrutinee, m->pos);
            check(ctx.extend(n.first, a).extend(n.second, b), n.body, want);
          } else if constexpr (std::is_same_v<T, com::Tuple>) {
            const auto* p = std::get_if<ty::Prod>(&want->v);
            if (!p || p->components.size() != n.components.size())
              throw TypeError("tuple", "tuple does not match the expected product", to_string(want),
                              to_string(infer(ctx, m)), m->pos);
            for (std::size_t i = 0; i < n.components.size(); ++i) {
              if (p->components[i].first != n.components[i].first)
                throw TypeError("tuple", "tuple labels differ from the expected product", to_string(want),
                                to_string(infer(ctx, m)), m->pos);
              check(ctx, n.components[i].second, p->components[i].second);
            }
          } else if constexpr (std::is_same_v<T, com::Fix>) {
            check(ctx, n.body, arrow_type(thunk_type(want), want));
          } else if constexpr (std::is_same_v<T, com::Op>) {
            check_op(ctx, n, want, m->pos);
          } else {
            expect_same("computation", want, infer(ctx, m), m->pos);
          }
        },
        m->v);
  }

  /// Type of a closed computation; throws TypeError.
  ComType infer_closed(const ComTerm& m) const { return infer(Context{}, m); }

 private:
  static void expect_same(const char* rule, const ValType& want, const ValType& got, SourcePos pos) {
    if (!same_type(want, got)) throw TypeError(rule, "type mismatch", to_string(want), to_string(got), pos);
  }
  static void expect_same(const char* rule, const ComType& want, const ComType& got, SourcePos pos) {
    if (!same_type(want, got)) throw TypeError(rule, "type mismatch", to_string(want), to_string(got), pos);
  }

  static ComType fix_result(const ComType& t, SourcePos pos) {
    const auto* a = std::get_if<ty::Arrow>(&t->v);
    const ty::Thunk* u = a ? std::get_if<ty::Thunk>(&a->domain->v) : nullptr;
    if (!u || !same_type(u->body, a->codomain))
      throw TypeError("fix", "fix expects a function of type U C -> C", "U C -> C", to_string(t), pos);
    return a->codomain;
  }

  /// Scrutinee type, guaranteed to hold a ty::Sum.
  ValType sum_of(const Context& ctx, const ValTerm& v, SourcePos pos) const {
    ValType t = infer(ctx, v);
    if (!std::holds_alternative<ty::Sum>(t->v))
      throw TypeError("pm-sum", "scrutinee is not a sum", "a sum type", to_string(t), pos);
    return t;
  }

  std::pair<ValType, ValType> pair_of(const Context& ctx, const ValTerm& v, SourcePos pos) const {
    const ValType t = infer(ctx, v);
    const auto* p = std::get_if<ty::Pair>(&t->v);
    if (!p) throw TypeError("pm-pair", "scrutinee is not a pair", "A * B", to_string(t), pos);
    return {p->first, p->second};
  }

  static ValType case_type(const ty::Sum& s, const Label& l, SourcePos pos) {
    for (const auto& [k, a] : s.cases)
      if (k == l) return a;
    throw TypeError("pm-sum", "branch label '" + l + "' is not a case of the scrutinee's sum", {}, {}, pos);
  }

  static void check_branch_labels(const ty::Sum& s, const com::CaseSum& n, SourcePos pos) {
    bool ok = s.cases.size() == n.branches.size();
    for (std::size_t i = 0; ok && i < s.cases.size(); ++i) ok = s.cases[i].first == n.branches[i].label;
    if (!ok) {
      std::string want, got;
      for (const auto& [l, a] : s.cases) want += (want.empty() ? "" : ",") + l;
      for (const auto& b : n.branches) got += (got.empty() ? "" : ",") + b.label;
      throw TypeError("pm-sum", "branches must cover the sum's labels exactly", "{" + want + "}", "{" + got + "}", pos);
    }
  }

  /// Infers the first branch that admits inference, then checks the rest.
  ComType infer_branches(std::vector<std::pair<Context, ComTerm>> arms) const {
    std::optional<ComType> found;
    std::optional<TypeError> first_error;
    for (const auto& [c, b] : arms) {
      try {
        found = infer(c, b);
        break;
      } catch (const TypeError& e) {
        if (!first_error) first_error = e;
      }
    }
    if (!found) throw *first_error;
    for (const auto& [c, b] : arms) check(c, b, *found);
    return *found;
  }

  const OpDescriptor& descriptor(const com::Op& n, SourcePos pos) const {
    const OpDescriptor* d = sig_.find(n.op);
    if (!d)
      throw TypeError("op", "operator '" + n.op.str() + "' is not in the active signature '" + sig_.name() + "'", {},
                      {}, pos);
    bool shape_ok = false;
    switch (d->arity.kind) {
      case ArityKind::finite:
        shape_ok = !n.param && !n.index_var && n.children.size() == d->arity.count;
        break;
      case ArityKind::nat_indexed:
        shape_ok = !n.param && n.index_var && n.children.size() == 1;
        break;
      case ArityKind::nat_param:
        shape_ok = n.param && !n.index_var && n.children.size() == d->arity.count;
        break;
    }
    if (!shape_ok) throw TypeError("op", "operator '" + n.op.str() + "' has the wrong shape for its arity", {}, {}, pos);
    return *d;
  }

  Context child_context(const Context& ctx, const com::Op& n) const {
    if (n.param) check(ctx, n.param, nat_type());
    return n.index_var ? ctx.extend(*n.index_var, nat_type()) : ctx;
  }

  ComType infer_op(const Context& ctx, const com::Op& n, SourcePos pos) const {
    descriptor(n, pos);
    const Context cctx = child_context(ctx, n);
    if (n.annotation) {
      for (const auto& c : n.children) check(cctx, c, n.annotation);
      return n.annotation;
    }
    if (n.children.empty())
      throw TypeError("op", "cannot infer the type of nullary '" + n.op.str() + "()'; add an ascription (" +
                                n.op.str() + "() : C)",
                      {}, {}, pos);
    std::vector<std::pair<Context, ComTerm>> arms;
    for (const auto& c : n.children) arms.emplace_back(cctx, c);
    return infer_branches(std::move(arms));
  }

  void check_op(const Context& ctx, const com::Op& n, const ComType& want, SourcePos pos) const {
    descriptor(n, pos);
    if (n.annotation) expect_same("op", want, n.annotation, pos);
    const Context cctx = child_context(ctx, n);
    for (const auto& c : n.children) check(cctx, c, want);
  }

  const EffectSignature& sig_;
};

inline ComType infer_type(const EffectSignature& sig, const Context& ctx, const ComTerm& m) {
  return TypeChecker(sig).infer(ctx, m);
}
inline ValType infer_type(const EffectSignature& sig, const Context& ctx, const ValTerm& v) {
  return TypeChecker(sig).infer(ctx, v);
}

}  // namespace cbpvq
