#pragma once

// Randomized and exhaustive law suites for quantitative modalities:
//   (a) leaf-monotonicity   (b) Scott chains       (c) sequentiality
//   (d) unit law            (e) relator laws       (f) decomposability
//   (g) congruence spot-checks on program pairs.

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "config.hpp"
#include "equivalence.hpp"
#include "generate.hpp"
#include "modality.hpp"
#include "tree.hpp"

namespace cbpvq {

struct LawOptions {
  std::size_t samples = 1000;
  std::uint64_t seed = 1;
  std::size_t depth = 4;
  double tolerance = 1e-9;
  StoreConfig store{{"l", "r"}, 3};
};

struct LawReport {
  std::string law;
  std::string modality;
  std::size_t samples = 0;
  std::size_t failures = 0;
  std::size_t skipped = 0;  // samples discarded before the check (e.g. uncertified pairs)
  std::string counterexample;
  double seconds = 0;
};

/// E, E◇, E□, C, C◇, C□, G, G◇, G□, EG and the Boolean pair.
inline std::vector<ModalitySpec> shipped_modalities(const StoreConfig& store) {
  std::vector<ModalitySpec> out;
  for (const ModalitySpec& base : {modality_E(), modality_C(), modality_G(store)}) {
    out.push_back(base);
    auto [o, p] = make_nondet_variants(base);
    out.push_back(o);
    out.push_back(p);
  }
  out.push_back(modality_EG(store));
  auto [bo, bp] = make_nondet_variants(modality_B());
  out.push_back(bo);
  out.push_back(bp);
  return out;
}

inline ModalitySpec shipped_modality(const std::string& name, const StoreConfig& store) {
  std::string known;
  for (auto& q : shipped_modalities(store)) {
    if (q.name == name) return q;
    known += (known.empty() ? "" : ", ") + q.name;
  }
  throw ModalityError("unknown modality '" + name + "' (shipped: " + known + ")");
}

using ValueTree = Tree<TruthValue>;
using DoubleTree = Tree<ValueTree>;

// ----- sampling ----------------------------------------------------------------------

class TreeSampler {
 public:
  TreeSampler(const ModalitySpec& q, std::uint64_t seed) : q_(q), sp_(q.space), rng_(seed) {}

  std::mt19937_64& rng() { return rng_; }
  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  TruthValue value() {
    TruthValue v = sp_.bot();
    const auto grid = detail::grid_components(sp_);
    for (auto& c : v.c) c = grid[pick(grid.size())];
    return v;
  }

  ValueTree tree(std::size_t depth) {
    return shape<TruthValue>(depth, [&] { return chance(0.15) ? unknown<TruthValue>() : eta(value()); });
  }

  /// Outer depth d1 ≤ depth, inner trees of depth ≤ depth − d1.
  DoubleTree double_tree(std::size_t depth) {
    const std::size_t d1 = pick(depth + 1);
    return shape<ValueTree>(d1, [&] { return chance(0.1) ? unknown<ValueTree>() : eta(tree(depth - d1)); });
  }

  /// A random tree shape over the operators q has rules for.
  template <class X, class Leaf>
  Tree<X> shape(std::size_t depth, Leaf leaf) {
    std::vector<std::string> ops;
    for (const auto& [op, r] : q_.rules)
      if (op != "raise") ops.push_back(op);
    if (depth == 0 || ops.empty() || chance(0.25)) return leaf();
    const std::string op = ops[pick(ops.size())];
    const RuleKind k = q_.rules.at(op).kind;
    if (k == RuleKind::add_cost) {
      static const char* costs[] = {"0.5", "1", "2", "3"};
      return op_node<X>(OpName{op, costs[pick(4)]}, {shape<X>(depth - 1, leaf)});
    }
    if (k == RuleKind::lookup) {
      const auto& st = sp_.store();
      std::vector<Tree<X>> kids;
      for (std::uint64_t i = 0; i < st.value_bound; ++i) kids.push_back(shape<X>(depth - 1, leaf));
      return family_node<X>(OpName{op, st.locations[pick(st.locations.size())]},
                            [kids](std::uint64_t m) { return m < kids.size() ? kids[m] : unknown<X>(); });
    }
    if (k == RuleKind::update) {
      const auto& st = sp_.store();
      return op_node<X>(OpName{op, st.locations[pick(st.locations.size())]}, {shape<X>(depth - 1, leaf)},
                        pick(st.value_bound));
    }
    return op_node<X>(OpName{op, ""}, {shape<X>(depth - 1, leaf), shape<X>(depth - 1, leaf)});
  }

  /// Monotone maps Q → Q: identity, constants, join/meet with a constant,
  /// and threshold indicators.
  std::function<TruthValue(const TruthValue&)> monotone_map() {
    const TruthValue c = value();
    const TruthSpace sp = sp_;
    switch (pick(5)) {
      case 0:
        return [](const TruthValue& x) { return x; };
      case 1:
        return [c](const TruthValue&) { return c; };
      case 2:
        return [sp, c](const TruthValue& x) { return sp.join(x, c); };
      case 3:
        return [sp, c](const TruthValue& x) { return sp.meet(x, c); };
      default:
        return [sp, c](const TruthValue& x) { return sp.leq(c, x) ? sp.top() : sp.bot(); };
    }
  }

 private:
  const ModalitySpec& q_;
  const TruthSpace& sp_;
  std::mt19937_64 rng_;
};

// ----- rendering and shrinking ----------------------------------------------------------

template <class X, class LeafText>
std::string tree_text(const Tree<X>& t, LeafText leaf, std::size_t width) {
  if (is_unknown(t)) return "?";
  if (const X* x = leaf_value(t)) return leaf(*x);
  const auto& n = *as_node(t);
  std::string s = node_label(n.op, n.param) + "(";
  if (n.family) {
    for (std::uint64_t i = 0; i < width; ++i) s += (i ? ", " : "") + std::to_string(i) + ": " + tree_text(n.family->at(i), leaf, width);
  } else {
    for (std::size_t i = 0; i < n.children.size(); ++i) s += (i ? ", " : "") + tree_text(n.children[i], leaf, width);
  }
  return s + ")";
}

namespace detail {
/// Candidate one-step reductions of t: each subtree replaced by ⊥ or by one
/// of its own children.
template <class X>
std::vector<Tree<X>> shrink_candidates(const Tree<X>& t, std::size_t width) {
  std::vector<Tree<X>> out;
  const auto* n = as_node(t);
  if (!n) {
    if (!is_unknown(t)) out.push_back(unknown<X>());
    return out;
  }
  out.push_back(unknown<X>());
  std::vector<Tree<X>> kids;
  if (n->family)
    for (std::uint64_t i = 0; i < width; ++i) kids.push_back(n->family->at(i));
  else
    kids = n->children;
  for (const auto& k : kids) out.push_back(k);
  for (std::size_t i = 0; i < kids.size(); ++i) {
    for (const auto& smaller : shrink_candidates(kids[i], width)) {
      std::vector<Tree<X>> ks = kids;
      ks[i] = smaller;
      if (n->family) {
        out.push_back(family_node<X>(n->op, [ks](std::uint64_t m) { return m < ks.size() ? ks[m] : unknown<X>(); }));
      } else {
        out.push_back(op_node<X>(n->op, ks, n->param));
      }
    }
  }
  return out;
}
}  // namespace detail

/// Greedy shrinking: keeps the first smaller candidate that still fails.
template <class X, class Fails>
Tree<X> shrink(Tree<X> t, Fails fails, std::size_t width, std::size_t rounds = 64) {
  for (std::size_t r = 0; r < rounds; ++r) {
    bool improved = false;
    for (const auto& c : detail::shrink_candidates(t, width)) {
      if (fails(c)) {
        t = c;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return t;
}

// ----- per-modality laws -------------------------------------------------------------------

namespace detail {
inline bool law_equal(const TruthSpace& sp, const TruthValue& a, const TruthValue& b, double tol) {
  if (sp.is_boolean_valued()) return a == b;
  return sp.approx_eq(a, b, tol);
}

inline TruthValue denote(const ModalitySpec& q, const ValueTree& t) { return denote_interval(q, t).lo; }

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline std::uint64_t mix_seed(std::uint64_t seed, const std::string& tag) {
  return seed * 0x9E3779B97F4A7C15ull ^ std::hash<std::string>{}(tag);
}
}  // namespace detail

/// (a) Raising leaves (and replacing ⊥ by values) never lowers ⟦q⟧.
inline LawReport law_leaf_monotone(const ModalitySpec& q, const LawOptions& o) {
  detail::Timer timer;
  LawReport rep{"leaf-monotone", q.name, 0, 0, 0, "", 0};
  TreeSampler s(q, detail::mix_seed(o.seed, "a" + q.name));
  const TruthSpace& sp = q.space;
  for (std::size_t i = 0; i < o.samples; ++i) {
    ValueTree t = s.tree(o.depth);
    // Raise each leaf by a join with a value fixed per leaf position.
    std::vector<TruthValue> bumps;
    for (int k = 0; k < 64; ++k) bumps.push_back(s.value());
    const TruthValue fill = s.value();
    auto raise = [&](const ValueTree& x) {
      std::size_t pos = 0;
      std::function<ValueTree(const ValueTree&)> go = [&](const ValueTree& u) -> ValueTree {
        if (is_unknown(u)) return eta(fill);
        if (const TruthValue* a = leaf_value(u)) return eta(sp.join(*a, bumps[pos++ % bumps.size()]));
        const auto& n = *as_node(u);
        if (n.family) {
          std::vector<ValueTree> ks;
          for (std::uint64_t m = 0; m < sp.store().value_bound; ++m) ks.push_back(go(n.family->at(m)));
          return family_node<TruthValue>(n.op, [ks](std::uint64_t m) { return m < ks.size() ? ks[m] : unknown<TruthValue>(); });
        }
        std::vector<ValueTree> ks;
        for (const auto& c : n.children) ks.push_back(go(c));
        return op_node<TruthValue>(n.op, std::move(ks), n.param);
      };
      return go(x);
    };
    auto fails = [&](const ValueTree& x) {
      return !sp.leq(detail::denote(q, x), detail::denote(q, raise(x))) &&
             !detail::law_equal(sp, detail::denote(q, x), detail::denote(q, raise(x)), o.tolerance);
    };
    ++rep.samples;
    if (fails(t)) {
      if (rep.failures++ == 0)
        rep.counterexample = tree_text(shrink(t, fails, sp.store().value_bound ? sp.store().value_bound : 1),
                                       [&](const TruthValue& v) { return sp.format(v); }, sp.store().value_bound);
    }
  }
  rep.seconds = timer.seconds();
  return rep;
}

/// (b) The truncation chain and the depth-indexed approximants are monotone
/// and reach ⟦q⟧(t).
inline LawReport law_scott_chain(const ModalitySpec& q, const LawOptions& o) {
  detail::Timer timer;
  LawReport rep{"scott-chain", q.name, 0, 0, 0, "", 0};
  TreeSampler s(q, detail::mix_seed(o.seed, "b" + q.name));
  const TruthSpace& sp = q.space;
  const std::size_t width = std::max<std::size_t>(1, sp.store().value_bound);
  auto fails = [&](const ValueTree& t) {
    const TruthValue limit = detail::denote(q, t);
    const std::size_t d = depth(t, width);
    TruthValue prev = sp.bot();
    for (std::size_t k = 0; k <= d + 1; ++k) {
      TruthValue v = detail::denote(q, truncate(t, k));
      if (!sp.leq(prev, v) && !detail::law_equal(sp, prev, v, o.tolerance)) return true;
      prev = v;
    }
    if (!detail::law_equal(sp, prev, limit, o.tolerance)) return true;
    prev = sp.bot();
    const std::uint64_t n_max = (d + 1) * (width + 1);
    for (std::uint64_t n = 0; n <= n_max; ++n) {
      TruthValue v = denote_at_depth(q, t, n);
      if (!sp.leq(prev, v) && !detail::law_equal(sp, prev, v, o.tolerance)) return true;
      prev = v;
    }
    return !detail::law_equal(sp, prev, limit, o.tolerance);
  };
  for (std::size_t i = 0; i < o.samples; ++i) {
    ValueTree t = s.tree(o.depth);
    ++rep.samples;
    if (fails(t) && rep.failures++ == 0)
      rep.counterexample = tree_text(shrink(t, fails, width), [&](const TruthValue& v) { return sp.format(v); }, width);
  }
  rep.seconds = timer.seconds();
  return rep;
}

/// ⟦q⟧(μ tt) against ⟦q⟧ of tt with leaves replaced by their denotations, as
/// intervals (⊥ ↦ bot for lo, ⊥ ↦ top for hi).
inline bool sequential_holds(const ModalitySpec& q, const DoubleTree& tt, double tol) {
  const TruthSpace& sp = q.space;
  const Interval whole = denote_interval(q, mu(tt));
  std::map<const void*, Interval> inner;
  auto at = [&](const ValueTree& x) -> const Interval& {
    auto it = inner.find(x.get());
    if (it == inner.end()) it = inner.emplace(x.get(), denote_interval(q, x)).first;
    return it->second;
  };
  const Interval split = lift_interval(
      q, tt, [&](const ValueTree& x, std::size_t st) { return at(x).lo.c[st]; },
      [&](const ValueTree& x, std::size_t st) { return at(x).hi.c[st]; });
  return detail::law_equal(sp, whole.lo, split.lo, tol) && detail::law_equal(sp, whole.hi, split.hi, tol);
}

/// (c) ⟦q⟧(μ tt) = ⟦q⟧(⟦q⟧* tt).
inline LawReport law_sequential(const ModalitySpec& q, const LawOptions& o) {
  detail::Timer timer;
  LawReport rep{"sequential", q.name, 0, 0, 0, "", 0};
  TreeSampler s(q, detail::mix_seed(o.seed, "c" + q.name));
  const TruthSpace& sp = q.space;
  const std::size_t width = std::max<std::size_t>(1, sp.store().value_bound);
  auto fails = [&](const DoubleTree& tt) { return !sequential_holds(q, tt, o.tolerance); };
  for (std::size_t i = 0; i < o.samples; ++i) {
    DoubleTree tt = s.double_tree(o.depth);
    ++rep.samples;
    if (fails(tt) && rep.failures++ == 0) {
      auto inner = [&](const ValueTree& x) {
        return "{" + tree_text(x, [&](const TruthValue& v) { return sp.format(v); }, width) + "}";
      };
      rep.counterexample = tree_text(shrink(tt, fails, width), inner, width);
    }
  }
  rep.seconds = timer.seconds();
  return rep;
}

/// (d) ⟦q⟧(η a) = a.
inline LawReport law_unit(const ModalitySpec& q, const LawOptions& o) {
  detail::Timer timer;
  LawReport rep{"unit", q.name, 0, 0, 0, "", 0};
  TreeSampler s(q, detail::mix_seed(o.seed, "d" + q.name));
  const TruthSpace& sp = q.space;
  for (std::size_t i = 0; i < o.samples; ++i) {
    const TruthValue a = s.value();
    ++rep.samples;
    const TruthValue v = detail::denote(q, eta(a));
    if (!detail::law_equal(sp, v, a, o.tolerance) && rep.failures++ == 0)
      rep.counterexample = "eta(" + sp.format(a) + ") denotes " + sp.format(v);
  }
  rep.seconds = timer.seconds();
  return rep;
}

/// (f) If tt ⊑̈ rr on a sampled family {⟦q⟧ ∘ h*}, then μ tt ⊑̇ μ rr on the
/// same h. Pairs not certified are counted as skipped.
inline LawReport law_decomposable(const ModalitySpec& q, const LawOptions& o) {
  detail::Timer timer;
  LawReport rep{"decomposable", q.name, 0, 0, 0, "", 0};
  TreeSampler s(q, detail::mix_seed(o.seed, "f" + q.name));
  const TruthSpace& sp = q.space;
  const std::size_t width = std::max<std::size_t>(1, sp.store().value_bound);
  for (std::size_t i = 0; i < o.samples; ++i) {
    DoubleTree tt = s.double_tree(o.depth);
    // rr: tt with inner leaves raised, or an unrelated sample.
    DoubleTree rr;
    if (s.chance(0.75)) {
      const TruthValue c = s.value();
      rr = map_leaves(tt, [sp, c](const ValueTree& x) {
        return map_leaves(x, [sp, c](const TruthValue& a) { return sp.join(a, c); });
      });
    } else {
      rr = s.double_tree(o.depth);
    }
    std::vector<std::function<TruthValue(const TruthValue&)>> hs;
    for (int k = 0; k < 8; ++k) hs.push_back(s.monotone_map());
    auto apply = [](const ValueTree& x, std::function<TruthValue(const TruthValue&)> h) {
      return map_leaves(x, [h](const TruthValue& a) { return h(a); });
    };
    bool certified = true;
    for (const auto& h : hs) {
      auto big_h = [&](const ValueTree& x) { return detail::denote(q, apply(x, h)); };
      if (!sp.leq(lift(q, big_h, tt).lo, lift(q, big_h, rr).lo)) {
        certified = false;
        break;
      }
    }
    if (!certified) {
      ++rep.skipped;
      continue;
    }
    ++rep.samples;
    const ValueTree mt = mu(tt), mr = mu(rr);
    for (const auto& h : hs) {
      if (!sp.leq(detail::denote(q, apply(mt, h)), detail::denote(q, apply(mr, h)))) {
        if (rep.failures++ == 0)
          rep.counterexample = tree_text(mt, [&](const TruthValue& v) { return sp.format(v); }, width) + " vs " +
                               tree_text(mr, [&](const TruthValue& v) { return sp.format(v); }, width);
        break;
      }
    }
  }
  rep.seconds = timer.seconds();
  return rep;
}

/// (a)–(d) and (f) for one modality.
inline std::vector<LawReport> law_suite(const ModalitySpec& q, const LawOptions& o) {
  return {law_leaf_monotone(q, o), law_scott_chain(q, o), law_sequential(q, o), law_unit(q, o),
          law_decomposable(q, o)};
}

// ----- (e) relator laws, exhaustive over Boolean carriers ------------------------------------

namespace detail {

/// Trees of depth ≤ 2 over {0..n-1} ∪ {⊥} with binary nor nodes, reduced to
/// one representative per behaviour (the vector of values t ∈ q(h) over both
/// Boolean modalities and every h). O(R) depends only on that behaviour.
class BooleanTrees {
 public:
  BooleanTrees(std::size_t n, const std::vector<ModalitySpec>& qs) : n_(n), qs_(qs) {
    std::vector<Tree<int>> base{unknown<int>()};
    for (std::size_t x = 0; x < n; ++x) base.push_back(eta(static_cast<int>(x)));
    std::vector<Tree<int>> one = base;
    for (const auto& a : base)
      for (const auto& b : base) one.push_back(op_node<int>(OpName{"nor", ""}, {a, b}));
    std::vector<Tree<int>> all = one;
    for (const auto& a : one)
      for (const auto& b : one) all.push_back(op_node<int>(OpName{"nor", ""}, {a, b}));
    for (const auto& t : all) {
      auto b = behaviour(t);
      if (index_.emplace(b, reps_.size()).second) {
        reps_.push_back(t);
        behaviours_.push_back(b);
      }
    }
  }

  std::size_t size() const { return reps_.size(); }
  std::size_t carrier() const { return n_; }
  const Tree<int>& rep(std::size_t i) const { return reps_[i]; }

  /// t ∈ q(h) for h given as a subset mask of the carrier.
  bool value(std::size_t tree, std::size_t q, std::uint32_t h) const { return behaviours_[tree][q * (1u << n_) + h]; }

  std::size_t class_of(const Tree<int>& t) const { return index_.at(behaviour(t)); }

 private:
  std::vector<bool> behaviour(const Tree<int>& t) const {
    std::vector<bool> out;
    for (const auto& q : qs_)
      for (std::uint32_t h = 0; h < (1u << n_); ++h) {
        Interval v = lift(q, [&](int x) { return q.space.constant((h >> x) & 1u); }, t);
        out.push_back(v.lo.c[0] == 1);
      }
    return out;
  }

  std::size_t n_;
  std::vector<ModalitySpec> qs_;
  std::vector<Tree<int>> reps_;
  std::vector<std::vector<bool>> behaviours_;
  std::map<std::vector<bool>, std::size_t> index_;
};

/// Relation R ⊆ X × Y as a bit mask: bit x*|Y| + y.
inline bool rel_has(std::uint32_t r, std::size_t ny, std::size_t x, std::size_t y) { return (r >> (x * ny + y)) & 1u; }

/// R[h] as a subset mask of Y.
inline std::uint32_t right_mask(std::uint32_t r, std::size_t nx, std::size_t ny, std::uint32_t h) {
  std::uint32_t out = 0;
  for (std::size_t x = 0; x < nx; ++x)
    if ((h >> x) & 1u)
      for (std::size_t y = 0; y < ny; ++y)
        if (rel_has(r, ny, x, y)) out |= 1u << y;
  return out;
}

/// O(R) as rows of bit masks over the Y-tree classes.
inline std::vector<std::uint64_t> relator(const BooleanTrees& tx, const BooleanTrees& ty, std::uint32_t r, std::size_t nq) {
  std::vector<std::uint64_t> rows(tx.size(), 0);
  const std::size_t nx = tx.carrier(), ny = ty.carrier();
  for (std::size_t t = 0; t < tx.size(); ++t)
    for (std::size_t u = 0; u < ty.size(); ++u) {
      bool ok = true;
      for (std::size_t q = 0; q < nq && ok; ++q)
        for (std::uint32_t h = 0; h < (1u << nx) && ok; ++h)
          if (tx.value(t, q, h) && !ty.value(u, q, right_mask(r, nx, ny, h))) ok = false;
      if (ok) rows[t] |= std::uint64_t{1} << u;
    }
  return rows;
}

inline std::uint32_t compose(std::uint32_t r, std::uint32_t s, std::size_t nx, std::size_t ny, std::size_t nz) {
  std::uint32_t out = 0;
  for (std::size_t x = 0; x < nx; ++x)
    for (std::size_t y = 0; y < ny; ++y)
      if (rel_has(r, ny, x, y))
        for (std::size_t z = 0; z < nz; ++z)
          if (rel_has(s, nz, y, z)) out |= 1u << (x * nz + z);
  return out;
}

}  // namespace detail

/// (e) Relator laws 1–4 and the unit law x R y ⇒ η x O(R) η y, checked over
/// every relation between carriers of size ≤ `max_carrier` for the Boolean
/// may and must modalities.
inline std::vector<LawReport> law_relator(std::size_t max_carrier = 3) {
  auto [bo, bp] = make_nondet_variants(modality_B());
  const std::vector<ModalitySpec> qs{bo, bp};
  const std::size_t nq = qs.size();
  std::vector<detail::BooleanTrees> trees;
  for (std::size_t n = 0; n <= max_carrier; ++n) trees.emplace_back(n, qs);
  std::map<std::pair<std::size_t, std::size_t>, std::vector<std::vector<std::uint64_t>>> o_cache;
  auto o_of = [&](std::size_t nx, std::size_t ny) -> const std::vector<std::vector<std::uint64_t>>& {
    auto key = std::make_pair(nx, ny);
    auto it = o_cache.find(key);
    if (it != o_cache.end()) return it->second;
    std::vector<std::vector<std::uint64_t>> all;
    for (std::uint32_t r = 0; r < (1u << (nx * ny)); ++r) all.push_back(detail::relator(trees[nx], trees[ny], r, nq));
    return o_cache.emplace(key, std::move(all)).first->second;
  };
  const std::string name = "Bopt+Bpes";
  std::vector<LawReport> out;
  auto note = [](LawReport& rep, const std::string& what) {
    if (rep.failures++ == 0) rep.counterexample = what;
  };

  {  // 1: R reflexive ⇒ O(R) reflexive
    detail::Timer timer;
    LawReport rep{"relator-1-reflexive", name, 0, 0, 0, "", 0};
    for (std::size_t n = 1; n <= max_carrier; ++n) {
      const auto& os = o_of(n, n);
      for (std::uint32_t r = 0; r < (1u << (n * n)); ++r) {
        bool refl = true;
        for (std::size_t x = 0; x < n; ++x) refl = refl && detail::rel_has(r, n, x, x);
        if (!refl) continue;
        ++rep.samples;
        for (std::size_t t = 0; t < trees[n].size(); ++t)
          if (!((os[r][t] >> t) & 1u)) note(rep, "|X|=" + std::to_string(n) + " R=" + std::to_string(r));
      }
    }
    rep.seconds = timer.seconds();
    out.push_back(rep);
  }
  {  // 2: R ⊆ S ⇒ O(R) ⊆ O(S)
    detail::Timer timer;
    LawReport rep{"relator-2-monotone", name, 0, 0, 0, "", 0};
    for (std::size_t nx = 1; nx <= max_carrier; ++nx)
      for (std::size_t ny = 1; ny <= max_carrier; ++ny) {
        const auto& os = o_of(nx, ny);
        const std::uint32_t full = (1u << (nx * ny)) - 1;
        for (std::uint32_t s = 0; s <= full; ++s)
          for (std::uint32_t r = s;; r = (r - 1) & s) {
            ++rep.samples;
            for (std::size_t t = 0; t < trees[nx].size(); ++t)
              if (os[r][t] & ~os[s][t]) note(rep, "R=" + std::to_string(r) + " S=" + std::to_string(s));
            if (r == 0) break;
          }
      }
    rep.seconds = timer.seconds();
    out.push_back(rep);
  }
  {  // 3: O(R)O(S) ⊆ O(RS)
    detail::Timer timer;
    LawReport rep{"relator-3-composition", name, 0, 0, 0, "", 0};
    for (std::size_t nx = 1; nx <= max_carrier; ++nx)
      for (std::size_t ny = 1; ny <= max_carrier; ++ny)
        for (std::size_t nz = 1; nz <= max_carrier; ++nz) {
          const auto& orr = o_of(nx, ny);
          const auto& oss = o_of(ny, nz);
          const auto& orz = o_of(nx, nz);
          for (std::uint32_t r = 0; r < (1u << (nx * ny)); ++r)
            for (std::uint32_t s = 0; s < (1u << (ny * nz)); ++s) {
              ++rep.samples;
              const std::uint32_t rs = detail::compose(r, s, nx, ny, nz);
              for (std::size_t t = 0; t < trees[nx].size(); ++t) {
                std::uint64_t reach = 0;
                for (std::size_t u = 0; u < trees[ny].size(); ++u)
                  if ((orr[r][t] >> u) & 1u) reach |= oss[s][u];
                if (reach & ~orz[rs][t])
                  note(rep, "|X|,|Y|,|Z|=" + std::to_string(nx) + "," + std::to_string(ny) + "," + std::to_string(nz) +
                                " R=" + std::to_string(r) + " S=" + std::to_string(s));
              }
            }
        }
    rep.seconds = timer.seconds();
    out.push_back(rep);
  }
  {  // 4: O((f×g)⁻¹R) = (f*×g*)⁻¹O(R)
    detail::Timer timer;
    LawReport rep{"relator-4-inverse-image", name, 0, 0, 0, "", 0};
    auto maps = [](std::size_t from, std::size_t to) {
      std::vector<std::vector<std::size_t>> fs{{}};
      for (std::size_t i = 0; i < from; ++i) {
        std::vector<std::vector<std::size_t>> next;
        for (const auto& f : fs)
          for (std::size_t v = 0; v < to; ++v) {
            auto g = f;
            g.push_back(v);
            next.push_back(g);
          }
        fs = next;
      }
      return fs;
    };
    for (std::size_t nx = 1; nx <= max_carrier; ++nx)
      for (std::size_t ny = 1; ny <= max_carrier; ++ny)
        for (std::size_t nx2 = 1; nx2 <= max_carrier; ++nx2)
          for (std::size_t ny2 = 1; ny2 <= max_carrier; ++ny2) {
            const auto& o_small = o_of(nx, ny);
            const auto& o_big = o_of(nx2, ny2);
            for (const auto& f : maps(nx, nx2)) {
              std::vector<std::size_t> ft(trees[nx].size());
              for (std::size_t t = 0; t < ft.size(); ++t)
                ft[t] = trees[nx2].class_of(map_leaves(trees[nx].rep(t), [&](int x) { return static_cast<int>(f[x]); }));
              for (const auto& g : maps(ny, ny2)) {
                std::vector<std::size_t> gt(trees[ny].size());
                for (std::size_t u = 0; u < gt.size(); ++u)
                  gt[u] = trees[ny2].class_of(map_leaves(trees[ny].rep(u), [&](int y) { return static_cast<int>(g[y]); }));
                for (std::uint32_t r = 0; r < (1u << (nx2 * ny2)); ++r) {
                  std::uint32_t pre = 0;
                  for (std::size_t x = 0; x < nx; ++x)
                    for (std::size_t y = 0; y < ny; ++y)
                      if (detail::rel_has(r, ny2, f[x], g[y])) pre |= 1u << (x * ny + y);
                  ++rep.samples;
                  for (std::size_t t = 0; t < trees[nx].size(); ++t)
                    for (std::size_t u = 0; u < trees[ny].size(); ++u) {
                      const bool lhs = (o_small[pre][t] >> u) & 1u;
                      const bool rhs = (o_big[r][ft[t]] >> gt[u]) & 1u;
                      if (lhs != rhs) note(rep, "R=" + std::to_string(r) + " t=" + std::to_string(t) + " u=" + std::to_string(u));
                    }
                }
              }
            }
          }
    rep.seconds = timer.seconds();
    out.push_back(rep);
  }
  {  // x R y ⇒ η x O(R) η y
    detail::Timer timer;
    LawReport rep{"relator-unit", name, 0, 0, 0, "", 0};
    for (std::size_t nx = 1; nx <= max_carrier; ++nx)
      for (std::size_t ny = 1; ny <= max_carrier; ++ny) {
        const auto& os = o_of(nx, ny);
        for (std::uint32_t r = 0; r < (1u << (nx * ny)); ++r)
          for (std::size_t x = 0; x < nx; ++x)
            for (std::size_t y = 0; y < ny; ++y) {
              if (!detail::rel_has(r, ny, x, y)) continue;
              ++rep.samples;
              const std::size_t t = trees[nx].class_of(eta(static_cast<int>(x)));
              const std::size_t u = trees[ny].class_of(eta(static_cast<int>(y)));
              if (!((os[r][t] >> u) & 1u)) note(rep, "R=" + std::to_string(r));
            }
      }
    rep.seconds = timer.seconds();
    out.push_back(rep);
  }
  return out;
}

// ----- (g) congruence spot-checks ---------------------------------------------------------

struct CongruenceOptions {
  std::size_t trials = 200;
  std::uint64_t seed = 1;
  std::size_t suite_size = 4;
  std::uint64_t fuel = 32;
  std::size_t context_depth = 3;
  std::vector<std::string> signatures{"prob+nondet", "cost+nondet", "nondet", "store"};
};

/// Pairs equivalent at bounds, wrapped in random contexts, must stay
/// undistinguished. Candidate pairs come from sound rewrites and are kept
/// only when compare finds no distinction.
inline LawReport law_congruence(const CongruenceOptions& o) {
  detail::Timer timer;
  LawReport rep{"congruence", "per-signature", 0, 0, 0, "", 0};
  std::mt19937_64 rng(o.seed);
  std::vector<Instance> insts;
  for (const auto& s : o.signatures) {
    RunConfig cfg;
    cfg.signature = s;
    cfg.fuel = o.fuel;
    insts.push_back(make_instance(cfg));
  }
  GenOptions gopts;
  gopts.depth = 3;
  std::size_t attempts = 0;
  while (rep.samples < o.trials && attempts < o.trials * 50) {
    ++attempts;
    const Instance& inst = insts[attempts % insts.size()];
    ProgramGenerator gen(inst.signature, rng(), gopts);
    auto [m, c] = gen.program();
    ComTerm n;
    switch (gen.pick(5)) {
      case 0:
        n = force(thunk(m));
        break;
      case 1:
        n = seq(ret(numeral(gen.pick(3))), "fresh_x", m);
        break;
      case 2:
        n = app(lambda("fresh_y", nat_type(), m), numeral(gen.pick(3)));
        break;
      case 3:
        if (inst.signature.has_family("nor")) {
          n = op(OpName{"nor", ""}, {m, m});
          break;
        }
        [[fallthrough]];
      default:
        if (inst.signature.has_family("por")) {
          n = op(OpName{"por", ""}, {m, m});
        } else {
          n = let("fresh_z", unit_val(), m);
        }
    }
    const AnyType ty{c};
    Verdict base;
    try {
      base = compare(inst, m, n, o.suite_size, o.fuel, true, {}, ty);
    } catch (const EquivalenceError&) {
      ++rep.skipped;
      continue;
    }
    if (is_distinguished(base)) {
      ++rep.skipped;
      continue;
    }
    auto ctx = gen.context(c, o.context_depth);
    const ComTerm cm = ctx.plug(m), cn = ctx.plug(n);
    ++rep.samples;
    Verdict v = compare(inst, cm, cn, o.suite_size, o.fuel, true, {}, AnyType{ctx.result});
    if (is_distinguished(v) && rep.failures++ == 0) {
      const auto& d = std::get<verdict::Distinguished>(v);
      rep.counterexample = "context " + ctx.shape + " on " + to_string(m) + " vs " + to_string(n) + ": " +
                           to_string(d.formula, inst.space);
    }
  }
  rep.seconds = timer.seconds();
  return rep;
}

}  // namespace cbpvq
