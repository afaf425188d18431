#pragma once

// CK machine: direct reductions, stack reductions, and the fuel-indexed
// effect-tree construction |S, M|_n.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <variant>
#include <vector>

#include "substitute.hpp"
#include "syntax.hpp"
#include "tree.hpp"

namespace cbpvq {

namespace frame {
struct To {
  Name var;
  ComTerm rest;
};
struct Arg {
  ValTerm value;
};
struct Proj {
  Label label;
};
}  // namespace frame

using Frame = std::variant<frame::To, frame::Arg, frame::Proj>;

/// Persistent stack; pushing shares the tail.
class Stack {
 public:
  Stack() = default;

  bool empty() const { return !top_; }
  const Frame& top() const { return top_->frame; }
  Stack pop() const { return Stack(top_->below); }
  Stack push(Frame f) const { return Stack(std::make_shared<const Cell>(Cell{std::move(f), top_})); }

  std::size_t size() const {
    std::size_t n = 0;
    for (auto c = top_; c; c = c->below) ++n;
    return n;
  }

  /// Frames from the top (innermost) down.
  std::vector<Frame> frames() const {
    std::vector<Frame> out;
    for (auto c = top_; c; c = c->below) out.push_back(c->frame);
    return out;
  }

 private:
  struct Cell {
    Frame frame;
    std::shared_ptr<const Cell> below;
  };
  explicit Stack(std::shared_ptr<const Cell> c) : top_(std::move(c)) {}
  std::shared_ptr<const Cell> top_;
};

struct Config {
  Stack stack;
  ComTerm focus;
};

/// S{M}: the computation obtained by applying the stack to M.
inline ComTerm plug(const Stack& s, ComTerm m) {
  for (const Frame& f : s.frames()) {
    if (const auto* t = std::get_if<frame::To>(&f)) {
      m = seq(std::move(m), t->var, t->rest);
    } else if (const auto* a = std::get_if<frame::Arg>(&f)) {
      m = app(std::move(m), a->value);
    } else {
      m = proj(std::move(m), std::get<frame::Proj>(f).label);
    }
  }
  return m;
}
inline ComTerm plug(const Config& c) { return plug(c.stack, c.focus); }

class StuckError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The seven direct reductions; nullopt when none applies.
inline std::optional<ComTerm> reduce(const ComTerm& m) {
  return std::visit(
      [&](const auto& n) -> std::optional<ComTerm> {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, com::CaseNat>) {
          if (std::holds_alternative<val::Zero>(n.scrutinee->v)) return n.if_zero;
          if (const auto* s = std::get_if<val::Succ>(&n.scrutinee->v)) return substitute(n.if_succ, n.pred, s->pred);
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, com::Let>) {
          return substitute(n.body, n.var, n.bound);
        } else if constexpr (std::is_same_v<T, com::Force>) {
          if (const auto* t = std::get_if<val::Thunk>(&n.thunk->v)) return t->body;
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, com::CaseSum>) {
          const auto* i = std::get_if<val::Inj>(&n.scrutinee->v);
          if (!i) return std::nullopt;
          for (const auto& b : n.branches)
            if (b.label == i->label) return substitute(b.body, b.var, i->payload);
          return std::nullopt;
        } else if constexpr (std::is_same_v<T, com::CasePair>) {
          const auto* p = std::get_if<val::Pair>(&n.scrutinee->v);
          if (!p) return std::nullopt;
          if (n.first == n.second) return substitute(n.body, n.second, p->second);
          return substitute(n.body, Bindings{{n.first, p->first}, {n.second, p->second}});
        } else if constexpr (std::is_same_v<T, com::Fix>) {
          return app(n.body, thunk(m));
        } else {
          return std::nullopt;
        }
      },
      m->v);
}

namespace outcome {
struct Stepped {
  Config next;
};
struct Done {
  ComTerm terminal;
};
/// Effect at the focus. Finite children go to `children`; a ℕ-indexed
/// operator supplies `family`, m ↦ (S, M[m̄/x]).
struct Effect {
  OpName op;
  std::optional<std::uint64_t> param;
  std::vector<Config> children;
  std::function<Config(std::uint64_t)> family;
};
}  // namespace outcome

using StepOutcome = std::variant<outcome::Stepped, outcome::Done, outcome::Effect>;

inline StepOutcome machine_step(const Config& c) {
  const ComTerm& m = c.focus;
  const Stack& s = c.stack;
  if (auto r = reduce(m)) return outcome::Stepped{{s, *r}};
  if (const auto* t = std::get_if<com::To>(&m->v)) return outcome::Stepped{{s.push(frame::To{t->var, t->rest}), t->first}};
  if (const auto* a = std::get_if<com::App>(&m->v)) return outcome::Stepped{{s.push(frame::Arg{a->arg}), a->fn}};
  if (const auto* p = std::get_if<com::Proj>(&m->v)) return outcome::Stepped{{s.push(frame::Proj{p->label}), p->tuple}};
  if (const auto* o = std::get_if<com::Op>(&m->v)) {
    outcome::Effect e{o->op, std::nullopt, {}, nullptr};
    if (o->param) {
      auto k = numeral_value(o->param);
      if (!k) throw StuckError("parameter of '" + o->op.str() + "' is not a numeral");
      e.param = *k;
    }
    if (o->index_var) {
      e.family = [s, x = *o->index_var, body = o->children.front()](std::uint64_t k) {
        return Config{s, substitute(body, x, numeral(k))};
      };
    } else {
      for (const auto& child : o->children) e.children.push_back({s, child});
    }
    return e;
  }
  if (is_terminal(m)) {
    if (s.empty()) return outcome::Done{m};
    const Frame& f = s.top();
    if (const auto* r = std::get_if<com::Return>(&m->v)) {
      if (const auto* t = std::get_if<frame::To>(&f)) return outcome::Stepped{{s.pop(), substitute(t->rest, t->var, r->value)}};
    } else if (const auto* l = std::get_if<com::Lambda>(&m->v)) {
      if (const auto* a = std::get_if<frame::Arg>(&f)) return outcome::Stepped{{s.pop(), substitute(l->body, l->var, a->value)}};
    } else if (const auto* tu = std::get_if<com::Tuple>(&m->v)) {
      if (const auto* p = std::get_if<frame::Proj>(&f))
        for (const auto& [lab, comp] : tu->components)
          if (lab == p->label) return outcome::Stepped{{s.pop(), comp}};
    }
  }
  throw StuckError("stuck configuration: " + to_string(plug(c)));
}

using EffectTree = Tree<ComTerm>;

/// Called for every machine transition taken while building a tree: plain
/// steps, and effect steps once per materialised child.
using StepObserver = std::function<void(const Config& from, const Config& to)>;

namespace detail {
inline EffectTree build_tree(Config c, std::uint64_t n, const StepObserver& observe) {
  while (true) {
    if (n == 0) return unknown<ComTerm>();
    StepOutcome o = machine_step(c);
    if (auto* st = std::get_if<outcome::Stepped>(&o)) {
      if (observe) observe(c, st->next);
      c = std::move(st->next);
      --n;
      continue;
    }
    if (auto* d = std::get_if<outcome::Done>(&o)) return eta<ComTerm>(d->terminal);
    auto& e = std::get<outcome::Effect>(o);
    if (e.family) {
      return family_node<ComTerm>(e.op, [gen = e.family, from = c, n, observe](std::uint64_t m) {
        Config child = gen(m);
        if (observe) observe(from, child);
        return build_tree(std::move(child), n - 1, observe);
      });
    }
    std::vector<EffectTree> kids;
    for (auto& child : e.children) {
      if (observe) observe(c, child);
      kids.push_back(build_tree(std::move(child), n - 1, observe));
    }
    return op_node<ComTerm>(e.op, std::move(kids), e.param);
  }
}
}  // namespace detail

/// |ε, M|_fuel.
inline EffectTree eval_tree(const ComTerm& m, std::uint64_t fuel, const StepObserver& observe = nullptr) {
  return detail::build_tree(Config{Stack{}, m}, fuel, observe);
}

}  // namespace cbpvq
