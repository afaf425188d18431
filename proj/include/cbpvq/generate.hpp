#pragma once

// Seeded, type-directed generation of closed well-typed programs and of
// small evaluation contexts.

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "machine.hpp"
#include "printer.hpp"
#include "signature.hpp"
#include "syntax.hpp"
#include "typecheck.hpp"

namespace cbpvq {

struct GenOptions {
  int depth = 4;
  std::uint64_t max_numeral = 3;
  bool allow_fix = true;
};

class ProgramGenerator {
 public:
  ProgramGenerator(const EffectSignature& sig, std::uint64_t seed, GenOptions opts = {})
      : sig_(sig), rng_(seed), opts_(opts) {}

  std::mt19937_64& rng() { return rng_; }

  std::size_t pick(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }

  ValType small_value_type() {
    switch (pick(6)) {
      case 0: return unit_type();
      case 1: return thunk_type(producer_type(nat_type()));
      case 2: return pair_type(nat_type(), nat_type());
      case 3: return cbpvq::sum_type({{"a", nat_type()}, {"b", unit_type()}});
      default: return nat_type();
    }
  }

  ComType small_comp_type() {
    switch (pick(7)) {
      case 0: return producer_type(unit_type());
      case 1: return arrow_type(nat_type(), producer_type(nat_type()));
      case 2: return prod_type({{"a", producer_type(nat_type())}, {"b", producer_type(unit_type())}});
      case 3: return producer_type(thunk_type(arrow_type(nat_type(), producer_type(nat_type()))));
      case 4: return producer_type(small_value_type());
      default: return producer_type(nat_type());
    }
  }

  /// A closed program at a random small computation type.
  std::pair<ComTerm, ComType> program() {
    ComType c = small_comp_type();
    return {computation(Context{}, c, opts_.depth), c};
  }

  ValTerm value(const Context& ctx, const ValType& a, int depth) {
    if (auto v = variable_of(ctx, a); v && chance(0.4)) return *v;
    return std::visit(
        [&](const auto& t) -> ValTerm {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, ty::Unit>) {
            return unit_val();
          } else if constexpr (std::is_same_v<T, ty::Nat>) {
            if (depth > 0 && chance(0.2)) return succ(value(ctx, a, depth - 1));
            return numeral(pick(opts_.max_numeral + 1));
          } else if constexpr (std::is_same_v<T, ty::Thunk>) {
            return thunk(computation(ctx, t.body, depth - 1));
          } else if constexpr (std::is_same_v<T, ty::Sum>) {
            const auto& [l, b] = t.cases[pick(t.cases.size())];
            return inj(l, value(ctx, b, depth - 1), a);
          } else if constexpr (std::is_same_v<T, ty::Pair>) {
            return pair(value(ctx, t.first, depth - 1), value(ctx, t.second, depth - 1));
          }
        },
        a->v);
  }

  ComTerm computation(const Context& ctx, const ComType& c, int depth) {
    if (depth <= 0) return intro(ctx, c, 0);
    for (;;) {
      switch (pick(14)) {
        case 0:
        case 1:
          return intro(ctx, c, depth);
        case 2: {
          const ValType a = small_value_type();
          const Name x = fresh();
          return seq(computation(ctx, producer_type(a), depth - 1), x, computation(ctx.extend(x, a), c, depth - 1));
        }
        case 3: {
          const ValType a = small_value_type();
          const Name x = fresh();
          return let(x, value(ctx, a, depth - 1), computation(ctx.extend(x, a), c, depth - 1));
        }
        case 4: {
          const Name x = fresh();
          return case_nat(value(ctx, nat_type(), 1), computation(ctx, c, depth - 1), x,
                          computation(ctx.extend(x, nat_type()), c, depth - 1));
        }
        case 5:
          return force(value(ctx, thunk_type(c), depth));
        case 6: {
          const ValType a = small_value_type();
          return app(computation(ctx, arrow_type(a, c), depth - 1), value(ctx, a, depth - 1));
        }
        case 7: {
          const ComType other = producer_type(nat_type());
          const bool left = chance(0.5);
          ComType p = left ? prod_type({{"a", c}, {"b", other}}) : prod_type({{"a", other}, {"b", c}});
          return proj(computation(ctx, p, depth - 1), left ? "a" : "b");
        }
        case 8: {
          const ValType s = cbpvq::sum_type({{"a", nat_type()}, {"b", unit_type()}});
          const Name x = fresh(), y = fresh();
          return case_sum(value(ctx, s, depth - 1), {{"a", x, computation(ctx.extend(x, nat_type()), c, depth - 1)},
                                                      {"b", y, computation(ctx.extend(y, unit_type()), c, depth - 1)}});
        }
        case 9: {
          const Name x = fresh(), y = fresh();
          return case_pair(value(ctx, pair_type(nat_type(), nat_type()), depth - 1), x, y,
                           computation(ctx.extend(x, nat_type()).extend(y, nat_type()), c, depth - 1));
        }
        case 10:
        case 11:
        case 12:
          if (auto m = effect(ctx, c, depth)) return *m;
          break;
        default:
          if (opts_.allow_fix) {
            const Name f = fresh();
            return fix(lambda(f, thunk_type(c), computation(ctx.extend(f, thunk_type(c)), c, depth - 1)));
          }
          break;
      }
    }
  }

  /// A context C[-] with a hole of type `hole` and its result type, built
  /// from sequencing, application, thunk/force wrapping and one effect node.
  struct GenContext {
    std::function<ComTerm(const ComTerm&)> plug;
    ComType result;
    std::string shape;
  };

  GenContext context(const ComType& hole, int depth) {
    GenContext g{[](const ComTerm& m) { return m; }, hole, "[-]"};
    bool effect_used = false;
    for (int i = 0; i < depth; ++i) {
      const ComType cur = g.result;
      auto inner = g.plug;
      const std::size_t choice = pick(4);
      if (choice == 0 && std::holds_alternative<ty::Producer>(cur->v)) {
        const ValType a = std::get<ty::Producer>(cur->v).result;
        const Name x = fresh();
        const ComType out = producer_type(small_value_type());
        ComTerm rest = computation(Context{}.extend(x, a), out, 2);
        g = {[inner, x, rest](const ComTerm& m) { return seq(inner(m), x, rest); }, out, g.shape + " to " + x};
      } else if (choice == 1 && std::holds_alternative<ty::Arrow>(cur->v)) {
        const auto& ar = std::get<ty::Arrow>(cur->v);
        ValTerm v = value(Context{}, ar.domain, 1);
        g = {[inner, v](const ComTerm& m) { return app(inner(m), v); }, ar.codomain, g.shape + " V"};
      } else if (choice == 2 || effect_used) {
        g = {[inner](const ComTerm& m) { return force(thunk(inner(m))); }, cur, "force thunk " + g.shape};
      } else if (auto wrap = effect_wrapper(cur)) {
        effect_used = true;
        g = {[inner, wrap](const ComTerm& m) { return wrap(inner(m)); }, cur, "op(" + g.shape + ")"};
      } else {
        g = {[inner](const ComTerm& m) { return force(thunk(inner(m))); }, cur, "force thunk " + g.shape};
      }
    }
    return g;
  }

 private:
  std::optional<ValTerm> variable_of(const Context& ctx, const ValType& a) {
    std::vector<Name> hits;
    for (const auto& [n, t] : ctx.entries())
      if (same_type(t, a) && ctx.find(n) == &t) hits.push_back(n);
    if (hits.empty()) return std::nullopt;
    return var(hits[pick(hits.size())]);
  }

  ComTerm intro(const Context& ctx, const ComType& c, int depth) {
    if (depth == 0) {
      // Prefer closing the term off: a variable thunk can be forced directly.
      if (auto v = variable_of(ctx, thunk_type(c)); v && chance(0.3)) return force(*v);
    }
    return std::visit(
        [&](const auto& t) -> ComTerm {
          using T = std::decay_t<decltype(t)>;
          if constexpr (std::is_same_v<T, ty::Producer>) {
            return ret(value(ctx, t.result, depth));
          } else if constexpr (std::is_same_v<T, ty::Arrow>) {
            const Name x = fresh();
            return lambda(x, t.domain, computation(ctx.extend(x, t.domain), t.codomain, depth - 1));
          } else {
            std::vector<std::pair<Label, ComTerm>> comps;
            for (const auto& [l, ci] : t.components) comps.emplace_back(l, computation(ctx, ci, depth - 1));
            return tuple(std::move(comps));
          }
        },
        c->v);
  }

  std::optional<ComTerm> effect(const Context& ctx, const ComType& c, int depth) {
    const auto& ops = sig_.ops();
    if (ops.empty()) return std::nullopt;
    const OpDescriptor& d = ops[pick(ops.size())];
    auto index = [&]() -> std::string {
      if (d.index_kind == IndexKind::label) return d.labels[pick(d.labels.size())];
      if (d.index_kind == IndexKind::number) return std::to_string(1 + pick(3));
      return "";
    };
    const OpName name{d.family, index()};
    switch (d.arity.kind) {
      case ArityKind::finite: {
        if (d.arity.count == 0) return op(name, {}, c);
        std::vector<ComTerm> kids;
        for (std::size_t i = 0; i < d.arity.count; ++i) kids.push_back(computation(ctx, c, depth - 1));
        return op(name, std::move(kids));
      }
      case ArityKind::nat_indexed: {
        const Name x = fresh();
        return op_indexed(name, x, computation(ctx.extend(x, nat_type()), c, depth - 1));
      }
      case ArityKind::nat_param: {
        std::vector<ComTerm> kids;
        for (std::size_t i = 0; i < d.arity.count; ++i) kids.push_back(computation(ctx, c, depth - 1));
        return op_param(name, value(ctx, nat_type(), 1), std::move(kids));
      }
    }
    return std::nullopt;
  }

  std::function<ComTerm(const ComTerm&)> effect_wrapper(const ComType& c) {
    const auto& ops = sig_.ops();
    std::vector<const OpDescriptor*> usable;
    for (const auto& d : ops)
      if (!(d.arity.kind == ArityKind::finite && d.arity.count == 0) && d.arity.kind != ArityKind::nat_indexed)
        usable.push_back(&d);
    if (usable.empty()) return nullptr;
    const OpDescriptor& d = *usable[pick(usable.size())];
    std::string idx;
    if (d.index_kind == IndexKind::label) idx = d.labels[pick(d.labels.size())];
    if (d.index_kind == IndexKind::number) idx = std::to_string(1 + pick(3));
    const OpName name{d.family, idx};
    std::vector<ComTerm> others;
    for (std::size_t i = 1; i < d.arity.count; ++i) others.push_back(computation(Context{}, c, 2));
    const bool left = chance(0.5);
    if (d.arity.kind == ArityKind::nat_param) {
      ValTerm p = numeral(pick(opts_.max_numeral + 1));
      return [name, p, others, left](const ComTerm& m) {
        std::vector<ComTerm> kids = others;
        kids.insert(left ? kids.begin() : kids.end(), m);
        return op_param(name, p, std::move(kids));
      };
    }
    return [name, others, left](const ComTerm& m) {
      std::vector<ComTerm> kids = others;
      kids.insert(left ? kids.begin() : kids.end(), m);
      return op(name, std::move(kids));
    };
  }

  Name fresh() { return "v" + std::to_string(counter_++); }

  const EffectSignature& sig_;
  std::mt19937_64 rng_;
  GenOptions opts_;
  std::uint64_t counter_ = 0;
};

struct InvariantReport {
  std::size_t programs = 0;
  std::size_t steps = 0;               // machine steps observed for subject reduction
  std::size_t sound_checked = 0;       // approximants with no Unknown
  std::size_t monotone_failures = 0;
  std::size_t soundness_failures = 0;
  std::size_t reduction_failures = 0;
  std::string first_failure;

  bool clean() const { return monotone_failures == 0 && soundness_failures == 0 && reduction_failures == 0; }
};

/// Runs each generated program at every fuel in `fuels` (ascending) and
/// checks: |M|_m below |M|_n for m <= n; an Unknown-free approximant equals
/// every later one; each machine step preserves the type of the plugged
/// configuration.
inline InvariantReport check_machine_invariants(const EffectSignature& sig, std::uint64_t seed, std::size_t programs,
                                                const std::vector<std::uint64_t>& fuels, std::size_t width) {
  ProgramGenerator gen(sig, seed);
  InvariantReport rep;
  auto fail = [&](std::size_t& counter, const std::string& what) {
    ++counter;
    if (rep.first_failure.empty()) rep.first_failure = what;
  };
  for (std::size_t i = 0; i < programs; ++i) {
    auto [m, c] = gen.program();
    auto observe = [&](const Config& from, const Config& to) {
      ++rep.steps;
      if (!same_type(infer_type(sig, Context{}, plug(from)), infer_type(sig, Context{}, plug(to))))
        fail(rep.reduction_failures, "subject reduction: " + to_string(plug(from)));
    };
    std::vector<EffectTree> trees;
    for (std::uint64_t n : fuels) trees.push_back(eval_tree(m, n, observe));
    for (std::size_t x = 0; x < trees.size(); ++x) {
      for (std::size_t y = x; y < trees.size(); ++y)
        if (!tree_leq(trees[x], trees[y], width)) fail(rep.monotone_failures, "monotone: " + to_string(m));
      if (!has_unknown(trees[x], width)) {
        ++rep.sound_checked;
        for (std::size_t y = x + 1; y < trees.size(); ++y)
          if (!tree_equal(trees[x], trees[y], width)) fail(rep.soundness_failures, "fuel soundness: " + to_string(m));
      }
    }
    ++rep.programs;
  }
  return rep;
}

}  // namespace cbpvq
