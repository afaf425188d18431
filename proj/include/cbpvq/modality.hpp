#pragma once

// Quantitative modalities as per-operator rule tables. Every shipped modality
// is state-pointwise: ⟦q⟧(t)(s) is computed by a recursion that threads the
// current state through lookup/update nodes, so scalar spaces are the
// single-state case.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "signature.hpp"
#include "tree.hpp"
#include "truth.hpp"

namespace cbpvq {

enum class RuleKind {
  average,   // mean of the children
  join,      // lattice join of the children
  meet,      // lattice meet of the children
  add_cost,  // c + child, c read from the operator index
  lookup,    // child s(l), at index max(0, n - s(l))
  update,    // child at state s[l := m mod V]
  constant,  // fixed value per operator index, no children consulted
};

struct OpRule {
  RuleKind kind = RuleKind::average;
  std::map<std::string, TruthValue> constants;  // for RuleKind::constant, keyed by operator index
};

struct ModalitySpec {
  std::string name;
  TruthSpace space;
  std::map<std::string, OpRule> rules;  // keyed by operator family
  bool leaf_monotone = true;
};

struct Interval {
  TruthValue lo;
  TruthValue hi;
  bool exact = false;
};

inline Interval exact_interval(TruthValue v) { return Interval{v, v, true}; }
inline Interval make_interval(TruthValue lo, TruthValue hi) {
  const bool exact = lo == hi;
  return Interval{std::move(lo), std::move(hi), exact};
}

class ModalityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ----- shipped modalities ----------------------------------------------------

inline ModalitySpec modality_E() { return {"E", TruthSpace::unit_interval(), {{"por", {RuleKind::average, {}}}}, true}; }

inline ModalitySpec modality_C() { return {"C", TruthSpace::cost(), {{"cost", {RuleKind::add_cost, {}}}}, true}; }

inline ModalitySpec modality_G(const StoreConfig& store) {
  return {"G",
          TruthSpace::state_sets(store),
          {{"lookup", {RuleKind::lookup, {}}}, {"update", {RuleKind::update, {}}}},
          true};
}

inline ModalitySpec modality_EG(const StoreConfig& store) {
  return {"EG",
          TruthSpace::state_probs(store),
          {{"por", {RuleKind::average, {}}}, {"lookup", {RuleKind::lookup, {}}}, {"update", {RuleKind::update, {}}}},
          true};
}

/// The Boolean base used when nondeterminism is the only effect.
inline ModalitySpec modality_B() { return {"B", TruthSpace::boolean(), {}, true}; }

/// q_opt adds nor ↦ join, q_pes adds nor ↦ meet.
inline std::pair<ModalitySpec, ModalitySpec> make_nondet_variants(const ModalitySpec& q) {
  if (q.rules.count("nor")) throw ModalityError("modality '" + q.name + "' already defines nor");
  ModalitySpec opt = q, pes = q;
  opt.name += "opt";
  pes.name += "pes";
  opt.rules["nor"] = {RuleKind::join, {}};
  pes.rules["nor"] = {RuleKind::meet, {}};
  return {opt, pes};
}

struct ErrorLift {
  ModalitySpec spec;
  bool boolean_range = false;  // every f(e) is bot or top
};

/// q_f: raise[e] ↦ f(e). The lifted modality keeps q's name.
inline ErrorLift make_error_lift(const ModalitySpec& q, const std::map<std::string, TruthValue>& f,
                                 const std::vector<std::string>& errors) {
  OpRule rule{RuleKind::constant, {}};
  bool boolean_range = true;
  for (const auto& e : errors) {
    auto it = f.find(e);
    if (it == f.end()) throw ModalityError("error valuation for '" + q.name + "' is missing error '" + e + "'");
    q.space.check(it->second);
    if (!q.space.contains(it->second))
      throw ModalityError("error valuation for '" + q.name + "." + e + "' is not in " + q.space.name());
    if (it->second != q.space.top() && it->second != q.space.bot()) boolean_range = false;
    rule.constants[e] = it->second;
  }
  for (const auto& [e, v] : f)
    if (std::find(errors.begin(), errors.end(), e) == errors.end())
      throw ModalityError("error valuation names unknown error '" + e + "'");
  ModalitySpec out = q;
  out.rules["raise"] = std::move(rule);
  return {std::move(out), boolean_range};
}

// ----- evaluation --------------------------------------------------------------

namespace detail {

/// a + b rounded toward `toward` rather than to nearest, so lower-bound
/// passes never round up onto an upper bound.
inline double add_toward(double a, double b, double toward) {
  const double s = a + b;
  if (!std::isfinite(s)) return s;
  const double bb = s - a;
  const double err = (a - (s - bb)) + (b - bb);
  return (toward - s) * err > 0 ? std::nextafter(s, toward) : s;
}

inline double div_toward(double a, double k, double toward) {
  const double q = a / k;
  if (!std::isfinite(q)) return q;
  const double err = -std::fma(q, k, -a) / k;
  return (toward - q) * err > 0 ? std::nextafter(q, toward) : q;
}

/// One pass of ⟦q⟧ at a single start state. `index` is the approximation
/// index n, or nullopt for the limit. Unknown leaves evaluate to `unknown`.
template <class X, class LeafFn>
class PointEval {
 public:
  PointEval(const ModalitySpec& q, LeafFn& leaf, double unknown) : q_(q), sp_(q.space), leaf_(leaf), unknown_(unknown) {}

  double run(const Tree<X>& t, std::size_t state, std::optional<std::uint64_t> index) const {
    if (index && *index == 0) return sp_.bot_c();
    if (is_unknown(t)) return unknown_;
    if (const X* x = leaf_value(t)) return leaf_(*x, state);
    const auto& n = *as_node(t);
    auto it = q_.rules.find(n.op.family);
    if (it == q_.rules.end())
      throw ModalityError("modality '" + q_.name + "' has no rule for operator '" + n.op.str() + "'");
    const OpRule& rule = it->second;
    std::optional<std::uint64_t> next;
    if (index) next = *index - 1;
    switch (rule.kind) {
      case RuleKind::average: {
        if (n.children.empty()) return sp_.bot_c();
        double sum = 0;
        for (const auto& c : n.children) sum = add_toward(sum, run(c, state, next), unknown_);
        return div_toward(sum, static_cast<double>(n.children.size()), unknown_);
      }
      case RuleKind::join: {
        double r = sp_.bot_c();
        for (const auto& c : n.children) r = sp_.join_c(r, run(c, state, next));
        return r;
      }
      case RuleKind::meet: {
        double r = sp_.top_c();
        for (const auto& c : n.children) r = sp_.meet_c(r, run(c, state, next));
        return r;
      }
      case RuleKind::add_cost: {
        const auto c = parse_cost_index(n.op.index);
        if (!c) throw ModalityError("operator '" + n.op.str() + "' has no numeric cost index");
        return add_toward(*c, run(n.children.at(0), state, next), unknown_);
      }
      case RuleKind::lookup: {
        require_store(n.op);
        const std::uint64_t v = sp_.store().get(state, sp_.store().location_index(n.op.index));
        if (!n.family) throw ModalityError("lookup node without a child family");
        std::optional<std::uint64_t> idx;
        if (index) idx = *next > v ? *next - v : 0;
        return run(n.family->at(v), state, idx);
      }
      case RuleKind::update: {
        require_store(n.op);
        if (!n.param) throw ModalityError("update node without a parameter");
        const std::size_t s2 = sp_.store().set(state, sp_.store().location_index(n.op.index), *n.param);
        return run(n.children.at(0), s2, next);
      }
      case RuleKind::constant: {
        auto c = rule.constants.find(n.op.index);
        if (c == rule.constants.end())
          throw ModalityError("modality '" + q_.name + "' has no value for '" + n.op.str() + "'");
        return c->second.c[state];
      }
    }
    return sp_.bot_c();
  }

 private:
  void require_store(const OpName& op) const {
    if (!sp_.is_stateful())
      throw ModalityError("operator '" + op.str() + "' needs a state-indexed truth space, modality '" + q_.name +
                          "' targets " + sp_.name());
  }

  const ModalitySpec& q_;
  const TruthSpace& sp_;
  LeafFn& leaf_;
  double unknown_;
};

template <class X, class LeafFn>
TruthValue run_all_states(const ModalitySpec& q, const Tree<X>& t, LeafFn& leaf, double unknown,
                          std::optional<std::uint64_t> index) {
  PointEval<X, LeafFn> ev(q, leaf, unknown);
  TruthValue out = q.space.bot();
  for (std::size_t s = 0; s < out.c.size(); ++s) out.c[s] = ev.run(t, s, index);
  return out;
}

inline void require_leaf_monotone(const ModalitySpec& q) {
  if (!q.leaf_monotone)
    throw ModalityError("modality '" + q.name + "' is not declared leaf-monotone; interval bounds would be unsound");
}

}  // namespace detail

/// ⟦q⟧_n(t).
inline TruthValue denote_at_depth(const ModalitySpec& q, const Tree<TruthValue>& t, std::uint64_t n) {
  auto leaf = [&](const TruthValue& a, std::size_t s) {
    q.space.check(a);
    return a.c[s];
  };
  return detail::run_all_states(q, t, leaf, q.space.bot_c(), n);
}

/// Two-pass limit evaluation: Unknown ↦ bot gives lo, Unknown ↦ top gives hi.
inline Interval denote_interval(const ModalitySpec& q, const Tree<TruthValue>& t) {
  detail::require_leaf_monotone(q);
  auto leaf = [&](const TruthValue& a, std::size_t s) {
    q.space.check(a);
    return a.c[s];
  };
  TruthValue lo = detail::run_all_states(q, t, leaf, q.space.bot_c(), std::nullopt);
  TruthValue hi = detail::run_all_states(q, t, leaf, q.space.top_c(), std::nullopt);
  return make_interval(std::move(lo), std::move(hi));
}

/// Interval lift with interval-valued leaves: `lo_leaf`/`hi_leaf` give the
/// bounds of h at a leaf, evaluated at one state.
template <class X, class LoFn, class HiFn>
Interval lift_interval(const ModalitySpec& q, const Tree<X>& t, LoFn lo_leaf, HiFn hi_leaf) {
  detail::require_leaf_monotone(q);
  TruthValue lo = detail::run_all_states(q, t, lo_leaf, q.space.bot_c(), std::nullopt);
  TruthValue hi = detail::run_all_states(q, t, hi_leaf, q.space.top_c(), std::nullopt);
  return make_interval(std::move(lo), std::move(hi));
}

/// t ∈ q(h) = ⟦q⟧(t[h]) for a point valuation h.
template <class X, class H>
Interval lift(const ModalitySpec& q, H h, const Tree<X>& t) {
  std::map<const void*, TruthValue> cache;
  auto leaf = [&](const X& x, std::size_t s) -> double {
    auto it = cache.find(&x);
    if (it == cache.end()) {
      TruthValue v = h(x);
      if (!q.space.contains(v)) throw ModalityError("valuation returned a value outside " + q.space.name());
      it = cache.emplace(&x, std::move(v)).first;
    }
    return it->second.c[s];
  };
  return lift_interval(q, t, leaf, leaf);
}

}  // namespace cbpvq
