#pragma once

// M ⊨ φ as a certified interval [lo, hi] at a given fuel.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>

#include "config.hpp"
#include "formula.hpp"
#include "machine.hpp"
#include "modality.hpp"
#include "typecheck.hpp"

namespace cbpvq {

struct SatResult {
  Interval interval;
  bool positive_fragment = true;
  std::uint64_t fuel_used = 0;
};

class SatisfactionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluates formulas against closed terms at a fixed fuel. Results are
/// memoised per (formula, term) for the lifetime of the evaluator.
class Evaluator {
 public:
  Evaluator(const Instance& inst, std::uint64_t fuel) : inst_(inst), sp_(inst.space), fuel_(fuel) {
    if (fuel == 0) throw SatisfactionError("fuel must be positive");
  }

  const Instance& instance() const { return inst_; }
  std::uint64_t fuel() const { return fuel_; }

  Interval eval(const ValTerm& v, const Formula& phi) { return memo(phi, "v" + term_key(v), [&] { return value_rule(v, phi); }); }
  Interval eval(const ComTerm& m, const Formula& phi) { return memo(phi, "c" + term_key(m), [&] { return comp_rule(m, phi); }); }
  Interval eval(const Term& t, const Formula& phi) {
    return std::visit([&](const auto& x) { return eval(x, phi); }, t);
  }

 private:
  template <class F>
  Interval memo(const Formula& phi, std::string key, F compute) {
    auto k = std::make_pair(phi.get(), std::move(key));
    if (auto it = cache_.find(k); it != cache_.end()) return it->second;
    Interval r = compute();
    retained_.insert(phi);
    cache_.emplace(std::move(k), r);
    return r;
  }

  Interval exact(TruthValue v) const { return exact_interval(std::move(v)); }
  Interval from_bool(bool b) const { return exact(b ? sp_.top() : sp_.bot()); }

  /// Rules shared by both term sorts; nullopt when φ is sort-specific.
  template <class T>
  std::optional<Interval> generic_rule(const T& t, const Formula& phi) {
    if (const auto* o = std::get_if<fm::Or>(&phi->v)) {
      TruthValue lo = sp_.bot(), hi = sp_.bot();
      for (const auto& m : o->family.enumerate()) {
        Interval i = eval(t, m);
        lo = sp_.join(lo, i.lo);
        hi = sp_.join(hi, i.hi);
      }
      if (!o->family.complete) hi = sp_.top();
      return make_interval(lo, hi);
    }
    if (const auto* a = std::get_if<fm::And>(&phi->v)) {
      TruthValue lo = sp_.top(), hi = sp_.top();
      for (const auto& m : a->family.enumerate()) {
        Interval i = eval(t, m);
        lo = sp_.meet(lo, i.lo);
        hi = sp_.meet(hi, i.hi);
      }
      if (!a->family.complete) lo = sp_.bot();
      return make_interval(lo, hi);
    }
    if (const auto* s = std::get_if<fm::Step>(&phi->v)) {
      Interval i = eval(t, s->body);
      if (sp_.leq(s->threshold, i.lo)) return exact(sp_.top());
      if (!sp_.leq(s->threshold, i.hi)) return exact(sp_.bot());
      return make_interval(sp_.bot(), sp_.top());
    }
    if (const auto* c = std::get_if<fm::Const>(&phi->v)) return exact(c->value);
    if (const auto* n = std::get_if<fm::Neg>(&phi->v)) {
      Interval i = eval(t, n->body);
      return make_interval(sp_.neg(i.hi), sp_.neg(i.lo));
    }
    if (const auto* s = std::get_if<fm::Sigma>(&phi->v)) {
      Interval i = eval(t, s->body);
      auto collapse = [&](const TruthValue& v, double toward) {
        double sum = 0;
        for (std::size_t k = 0; k < v.c.size(); ++k) {
          double w = s->weights.at(k) * v.c[k];
          if ((toward - w) * -std::fma(s->weights.at(k), v.c[k], -w) > 0) w = std::nextafter(w, toward);
          sum = detail::add_toward(sum, w, toward);
        }
        return sp_.constant(std::min(1.0, sum));
      };
      return make_interval(collapse(i.lo, 0.0), collapse(i.hi, 1.0));
    }
    if (const auto* x = std::get_if<fm::Mix>(&phi->v)) {
      Interval a = eval(t, x->opt), b = eval(t, x->pes);
      auto mean = [](double x, double y, double toward) {
        return detail::div_toward(detail::add_toward(x, y, toward), 2, toward);
      };
      return make_interval(sp_.constant(mean(a.lo.c[0], b.lo.c[0], 0.0)), sp_.constant(mean(a.hi.c[0], b.hi.c[0], 1.0)));
    }
    return std::nullopt;
  }

  [[noreturn]] void mismatch(const std::string& what, const Formula& phi) const {
    throw SatisfactionError("formula " + to_string(phi, sp_) + " does not apply to " + what);
  }

  Interval value_rule(const ValTerm& v, const Formula& phi) {
    if (auto g = generic_rule(v, phi)) return *g;
    if (const auto* n = std::get_if<fm::NatEq>(&phi->v)) {
      auto k = numeral_value(v);
      if (!k) mismatch("the non-numeral " + to_string(v), phi);
      return from_bool(*k == n->n);
    }
    if (const auto* t = std::get_if<fm::Thunk>(&phi->v)) {
      if (!std::holds_alternative<val::Thunk>(v->v)) mismatch(to_string(v), phi);
      return eval(force(v), t->body);
    }
    if (const auto* i = std::get_if<fm::Inj>(&phi->v)) {
      const auto* w = std::get_if<val::Inj>(&v->v);
      if (!w) mismatch(to_string(v), phi);
      if (w->label != i->label) return exact(sp_.bot());
      return eval(w->payload, i->body);
    }
    if (const auto* f = std::get_if<fm::Fst>(&phi->v)) {
      const auto* p = std::get_if<val::Pair>(&v->v);
      if (!p) mismatch(to_string(v), phi);
      return eval(p->first, f->body);
    }
    if (const auto* s = std::get_if<fm::Snd>(&phi->v)) {
      const auto* p = std::get_if<val::Pair>(&v->v);
      if (!p) mismatch(to_string(v), phi);
      return eval(p->second, s->body);
    }
    mismatch("the value " + to_string(v), phi);
  }

  Interval comp_rule(const ComTerm& m, const Formula& phi) {
    if (auto g = generic_rule(m, phi)) return *g;
    if (const auto* a = std::get_if<fm::Arg>(&phi->v)) return eval(app(m, a->value), a->body);
    if (const auto* p = std::get_if<fm::Proj>(&phi->v)) return eval(proj(m, p->label), p->body);
    if (const auto* q = std::get_if<fm::Modal>(&phi->v)) {
      const ModalitySpec& spec = inst_.require_modality(q->modality);
      EffectTree t = eval_tree(m, fuel_);
      std::map<const void*, Interval> leaves;
      auto leaf_interval = [&](const ComTerm& leaf) -> const Interval& {
        auto it = leaves.find(&leaf);
        if (it == leaves.end()) {
          const auto* r = std::get_if<com::Return>(&leaf->v);
          if (!r) throw SatisfactionError("modal formula at a non-producer leaf " + to_string(leaf));
          it = leaves.emplace(&leaf, eval(r->value, q->body)).first;
        }
        return it->second;
      };
      auto lo = [&](const ComTerm& x, std::size_t s) { return leaf_interval(x).lo.c[s]; };
      auto hi = [&](const ComTerm& x, std::size_t s) { return leaf_interval(x).hi.c[s]; };
      return lift_interval(spec, t, lo, hi);
    }
    mismatch("the computation " + to_string(m), phi);
  }

  const Instance& inst_;
  const TruthSpace& sp_;
  std::uint64_t fuel_;
  std::map<std::pair<const FormulaNode*, std::string>, Interval> cache_;
  std::set<Formula> retained_;
};

/// Type of a closed term. Terms whose type cannot be inferred are checked
/// against `hint` if given, else against the type φ's shape suggests.
inline AnyType closed_type(const Instance& inst, const Term& t, const Formula& phi,
                           const std::optional<AnyType>& hint = std::nullopt) {
  TypeChecker tc(inst.signature);
  auto check_at = [&](const AnyType& want) {
    std::visit(
        [&](const auto& x, const auto& ty) {
          using X = std::decay_t<decltype(x)>;
          using T = std::decay_t<decltype(ty)>;
          if constexpr (std::is_same_v<X, ValTerm> && std::is_same_v<T, ValType>)
            tc.check(Context{}, x, ty);
          else if constexpr (std::is_same_v<X, ComTerm> && std::is_same_v<T, ComType>)
            tc.check(Context{}, x, ty);
          else
            throw SatisfactionError("type and term belong to different sorts");
        },
        t, want);
    return want;
  };
  if (hint) return check_at(*hint);
  try {
    return std::visit([&](const auto& x) -> AnyType { return tc.infer(Context{}, x); }, t);
  } catch (const TypeError&) {
    std::optional<AnyType> guess;
    if (std::holds_alternative<ComTerm>(t)) {
      if (auto c = comp_type_hint(phi, inst)) guess = *c;
    } else if (auto a = value_type_hint(phi, inst)) {
      guess = *a;
    }
    if (!guess) throw;
    return check_at(*guess);
  }
}

/// M ⊨ φ at the given fuel, after checking φ against the type of M.
inline SatResult satisfies(const Instance& inst, const Term& t, const Formula& phi, std::uint64_t fuel,
                           const std::optional<AnyType>& hint = std::nullopt) {
  if (fuel == 0) throw SatisfactionError("fuel must be positive");
  check_formula(phi, closed_type(inst, t, phi, hint), inst);
  Evaluator ev(inst, fuel);
  return SatResult{ev.eval(t, phi), is_positive(phi), fuel};
}

/// Retries with doubled fuel until the result is exact or `cap` is passed;
/// the last attempt is returned either way.
inline SatResult satisfies_exact(const Instance& inst, const Term& t, const Formula& phi, std::uint64_t fuel,
                                 std::uint64_t cap, const std::optional<AnyType>& hint = std::nullopt) {
  if (fuel == 0) throw SatisfactionError("fuel must be positive");
  check_formula(phi, closed_type(inst, t, phi, hint), inst);
  SatResult r;
  for (std::uint64_t f = fuel;; f *= 2) {
    Evaluator ev(inst, f);
    r = SatResult{ev.eval(t, phi), is_positive(phi), f};
    if (r.interval.exact || f >= cap || f > cap / 2) break;
  }
  return r;
}

}  // namespace cbpvq
