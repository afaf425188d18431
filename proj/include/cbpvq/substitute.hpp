#pragma once

#include <map>
#include <set>
#include <string>

#include "syntax.hpp"

namespace cbpvq {

using Bindings = std::map<Name, ValTerm>;

namespace detail {

class Substituter {
 public:
  explicit Substituter(const Bindings& b) : map_(b) {
    for (const auto& [k, v] : map_) {
      const auto fv = free_vars(v);
      avoid_.insert(fv.begin(), fv.end());
    }
  }

  ValTerm value(const ValTerm& v) {
    return std::visit(
        [&](const auto& n) -> ValTerm {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, val::Unit> || std::is_same_v<T, val::Zero>) {
            return v;
          } else if constexpr (std::is_same_v<T, val::Var>) {
            auto it = map_.find(n.name);
            return it == map_.end() ? v : it->second;
          } else if constexpr (std::is_same_v<T, val::Succ>) {
            return make_val(val::Succ{value(n.pred)}, v->pos);
          } else if constexpr (std::is_same_v<T, val::Thunk>) {
            return make_val(val::Thunk{com(n.body)}, v->pos);
          } else if constexpr (std::is_same_v<T, val::Inj>) {
            return make_val(val::Inj{n.label, value(n.payload), n.annotation}, v->pos);
          } else {
            return make_val(val::Pair{value(n.first), value(n.second)}, v->pos);
          }
        },
        v->v);
  }

  ComTerm com(const ComTerm& m) {
    if (map_.empty()) return m;
    return std::visit(
        [&](const auto& n) -> ComTerm {
          using T = std::decay_t<decltype(n)>;
          const SourcePos pos = m->pos;
          if constexpr (std::is_same_v<T, com::CaseNat>) {
            ValTerm s = value(n.scrutinee);
            ComTerm z = com(n.if_zero);
            auto [x, body] = under(n.pred, n.if_succ);
            return make_com(com::CaseNat{s, z, x, body}, pos);
          } else if constexpr (std::is_same_v<T, com::Let>) {
            ValTerm b = value(n.bound);
            auto [x, body] = under(n.var, n.body);
            return make_com(com::Let{x, b, body}, pos);
          } else if constexpr (std::is_same_v<T, com::Return>) {
            return make_com(com::Return{value(n.value)}, pos);
          } else if constexpr (std::is_same_v<T, com::To>) {
            ComTerm first = com(n.first);
            auto [x, rest] = under(n.var, n.rest);
            return make_com(com::To{first, x, rest}, pos);
          } else if constexpr (std::is_same_v<T, com::Force>) {
            return make_com(com::Force{value(n.thunk)}, pos);
          } else if constexpr (std::is_same_v<T, com::Lambda>) {
            auto [x, body] = under(n.var, n.body);
            return make_com(com::Lambda{x, n.domain, body}, pos);
          } else if constexpr (std::is_same_v<T, com::App>) {
            return make_com(com::App{com(n.fn), value(n.arg)}, pos);
          } else if constexpr (std::is_same_v<T, com::CaseSum>) {
            ValTerm s = value(n.scrutinee);
            std::vector<com::SumBranch> bs;
            for (const auto& b : n.branches) {
              auto [x, body] = under(b.var, b.body);
              bs.push_back({b.label, x, body});
            }
            return make_com(com::CaseSum{s, std::move(bs)}, pos);
          } else if constexpr (std::is_same_v<T, com::CasePair>) {
            ValTerm s = value(n.scrutinee);
            auto [x, y, body] = under2(n.first, n.second, n.body);
            return make_com(com::CasePair{s, x, y, body}, pos);
          } else if constexpr (std::is_same_v<T, com::Tuple>) {
            std::vector<std::pair<Label, ComTerm>> cs;
            for (const auto& [l, c] : n.components) cs.emplace_back(l, com(c));
            return make_com(com::Tuple{std::move(cs)}, pos);
          } else if constexpr (std::is_same_v<T, com::Proj>) {
            return make_com(com::Proj{com(n.tuple), n.label}, pos);
          } else if constexpr (std::is_same_v<T, com::Fix>) {
            return make_com(com::Fix{com(n.body)}, pos);
          } else {
            com::Op out = n;
            if (n.param) out.param = value(n.param);
            if (n.index_var) {
              auto [x, body] = under(*n.index_var, n.children.front());
              out.index_var = x;
              out.children = {body};
            } else {
              for (auto& c : out.children) c = com(c);
            }
            return make_com(std::move(out), pos);
          }
        },
        m->v);
  }

 private:
  /// Substitutes under one binder: drops a shadowed mapping and renames the
  /// binder if it would capture a free variable of a substituted value.
  std::pair<Name, ComTerm> under(const Name& x, const ComTerm& body) {
    Saved saved(*this);
    map_.erase(x);
    Name bound = x;
    if (avoid_.count(x)) {
      bound = fresh(x, body);
      map_[x] = make_val(val::Var{bound});
    }
    return {bound, com(body)};
  }

  std::tuple<Name, Name, ComTerm> under2(const Name& x, const Name& y, const ComTerm& body) {
    Saved saved(*this);
    map_.erase(x);
    map_.erase(y);
    Name bx = x, by = y;
    if (avoid_.count(x)) {
      bx = fresh(x, body);
      map_[x] = make_val(val::Var{bx});
      avoid_.insert(bx);
    }
    if (avoid_.count(y) && x != y) {
      by = fresh(y, body);
      map_[y] = make_val(val::Var{by});
    }
    return {bx, by, com(body)};
  }

  Name fresh(const Name& base, const ComTerm& body) const {
    const auto fv = free_vars(body);
    for (unsigned i = 1;; ++i) {
      Name c = base + "_" + std::to_string(i);
      if (!avoid_.count(c) && !fv.count(c) && !map_.count(c)) return c;
    }
  }

  struct Saved {
    Substituter& s;
    Bindings map;
    std::set<Name> avoid;
    explicit Saved(Substituter& sub) : s(sub), map(sub.map_), avoid(sub.avoid_) {}
    ~Saved() {
      s.map_ = std::move(map);
      s.avoid_ = std::move(avoid);
    }
  };

  Bindings map_;
  std::set<Name> avoid_;
};

}  // namespace detail

/// Simultaneous capture-avoiding substitution.
inline ComTerm substitute(const ComTerm& m, const Bindings& b) {
  if (b.empty()) return m;
  return detail::Substituter(b).com(m);
}
inline ValTerm substitute(const ValTerm& v, const Bindings& b) {
  if (b.empty()) return v;
  return detail::Substituter(b).value(v);
}
inline ComTerm substitute(const ComTerm& m, const Name& x, const ValTerm& v) { return substitute(m, Bindings{{x, v}}); }

}  // namespace cbpvq
