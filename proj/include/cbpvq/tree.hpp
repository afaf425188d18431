#pragma once

// Effect trees over an arbitrary leaf set X. Unknown is the bottom leaf of a
// finite approximant. Children of a ℕ-indexed node form a lazily computed
// family whose explored prefix is memoised.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "printer.hpp"
#include "syntax.hpp"

namespace cbpvq {

template <class X>
struct TreeNode;
template <class X>
using Tree = std::shared_ptr<const TreeNode<X>>;

/// Total ℕ-indexed family of subtrees. Write-once memo: concurrent callers of
/// at(m) may both run the generator, but all observe the first stored result.
template <class X>
class Family {
 public:
  using Generator = std::function<Tree<X>(std::uint64_t)>;

  explicit Family(Generator gen) : gen_(std::move(gen)) {}

  Tree<X> at(std::uint64_t m) const {
    {
      std::lock_guard<std::mutex> lock(mu_);
      if (auto it = memo_.find(m); it != memo_.end()) return it->second;
    }
    Tree<X> t = gen_(m);
    std::lock_guard<std::mutex> lock(mu_);
    return memo_.try_emplace(m, std::move(t)).first->second;
  }

  std::vector<std::uint64_t> explored() const {
    std::lock_guard<std::mutex> lock(mu_);
    std::vector<std::uint64_t> out;
    for (const auto& [k, v] : memo_) out.push_back(k);
    return out;
  }

 private:
  Generator gen_;
  mutable std::mutex mu_;
  mutable std::map<std::uint64_t, Tree<X>> memo_;
};

template <class X>
using FamilyPtr = std::shared_ptr<const Family<X>>;

template <class X>
struct TreeNode {
  struct Unknown {};
  struct Leaf {
    X value;
  };
  struct Node {
    OpName op;
    std::optional<std::uint64_t> param;  // set for ℕ-parameterised operators
    std::vector<Tree<X>> children;       // finite arity
    FamilyPtr<X> family;                 // ℕ-indexed arity
  };
  std::variant<Unknown, Leaf, Node> v;
};

class UnexploredFamilyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class X>
Tree<X> unknown() {
  static const Tree<X> u = std::make_shared<const TreeNode<X>>(TreeNode<X>{typename TreeNode<X>::Unknown{}});
  return u;
}
template <class X>
Tree<X> eta(X x) {
  return std::make_shared<const TreeNode<X>>(TreeNode<X>{typename TreeNode<X>::Leaf{std::move(x)}});
}
template <class X>
Tree<X> op_node(OpName op, std::vector<Tree<X>> children, std::optional<std::uint64_t> param = std::nullopt) {
  return std::make_shared<const TreeNode<X>>(
      TreeNode<X>{typename TreeNode<X>::Node{std::move(op), param, std::move(children), nullptr}});
}
template <class X>
Tree<X> family_node(OpName op, typename Family<X>::Generator gen) {
  return std::make_shared<const TreeNode<X>>(TreeNode<X>{
      typename TreeNode<X>::Node{std::move(op), std::nullopt, {}, std::make_shared<const Family<X>>(std::move(gen))}});
}

template <class X>
bool is_unknown(const Tree<X>& t) {
  return std::holds_alternative<typename TreeNode<X>::Unknown>(t->v);
}
template <class X>
const X* leaf_value(const Tree<X>& t) {
  const auto* l = std::get_if<typename TreeNode<X>::Leaf>(&t->v);
  return l ? &l->value : nullptr;
}
template <class X>
const typename TreeNode<X>::Node* as_node(const Tree<X>& t) {
  return std::get_if<typename TreeNode<X>::Node>(&t->v);
}

/// Rewrites every non-Unknown leaf; family children are rewritten lazily.
template <class X, class F>
auto map_leaves(const Tree<X>& t, F f) -> Tree<std::decay_t<std::invoke_result_t<F&, const X&>>> {
  using Y = std::decay_t<std::invoke_result_t<F&, const X&>>;
  if (is_unknown(t)) return unknown<Y>();
  if (const X* x = leaf_value(t)) return eta<Y>(f(*x));
  const auto& n = *as_node(t);
  if (n.family) {
    FamilyPtr<X> fam = n.family;
    return family_node<Y>(n.op, [fam, f](std::uint64_t m) { return map_leaves(fam->at(m), f); });
  }
  std::vector<Tree<Y>> kids;
  kids.reserve(n.children.size());
  for (const auto& c : n.children) kids.push_back(map_leaves(c, f));
  return op_node<Y>(n.op, std::move(kids), n.param);
}

/// t[P]: each non-⊥ leaf x replaced by the value P(x).
template <class X, class P>
auto leaf_substitute(const Tree<X>& t, P p) {
  return map_leaves(t, std::move(p));
}

/// Flattens a tree of trees by grafting leaf trees in place.
template <class X>
Tree<X> mu(const Tree<Tree<X>>& tt) {
  if (is_unknown(tt)) return unknown<X>();
  if (const Tree<X>* inner = leaf_value(tt)) return *inner;
  const auto& n = *as_node(tt);
  if (n.family) {
    FamilyPtr<Tree<X>> fam = n.family;
    return family_node<X>(n.op, [fam](std::uint64_t m) { return mu(fam->at(m)); });
  }
  std::vector<Tree<X>> kids;
  kids.reserve(n.children.size());
  for (const auto& c : n.children) kids.push_back(mu(c));
  return op_node<X>(n.op, std::move(kids), n.param);
}

/// Replaces every subtree at depth ≥ k with Unknown (so truncate(t, 0) = ⊥).
template <class X>
Tree<X> truncate(const Tree<X>& t, std::size_t k) {
  if (k == 0) return unknown<X>();
  const auto* n = as_node(t);
  if (!n) return t;
  if (n->family) {
    FamilyPtr<X> fam = n->family;
    return family_node<X>(n->op, [fam, k](std::uint64_t m) { return truncate(fam->at(m), k - 1); });
  }
  std::vector<Tree<X>> kids;
  for (const auto& c : n->children) kids.push_back(truncate(c, k - 1));
  return op_node<X>(n->op, std::move(kids), n->param);
}

template <class X>
bool leaf_equal(const X& a, const X& b) {
  return a == b;
}
inline bool leaf_equal(const ComTerm& a, const ComTerm& b) { return alpha_equal(a, b); }

namespace detail {
template <class X>
void check_width(const typename TreeNode<X>::Node& n, std::size_t width) {
  for (std::uint64_t m : n.family->explored())
    if (m >= width)
      throw UnexploredFamilyError("family of '" + n.op.str() + "' was explored at index " + std::to_string(m) +
                                  ", beyond the comparison width " + std::to_string(width));
}
}  // namespace detail

/// t ⊑ r: t is obtained from r by pruning subtrees to ⊥. Families are
/// compared on indices below `width`.
template <class X>
bool tree_leq(const Tree<X>& t, const Tree<X>& r, std::size_t width = 16) {
  if (is_unknown(t)) return true;
  if (is_unknown(r)) return false;
  const X* a = leaf_value(t);
  const X* b = leaf_value(r);
  if (a || b) return a && b && leaf_equal(*a, *b);
  const auto& n = *as_node(t);
  const auto& m = *as_node(r);
  if (n.op != m.op || n.param != m.param || bool(n.family) != bool(m.family)) return false;
  if (n.family) {
    detail::check_width<X>(n, width);
    detail::check_width<X>(m, width);
    for (std::uint64_t i = 0; i < width; ++i)
      if (!tree_leq(n.family->at(i), m.family->at(i), width)) return false;
    return true;
  }
  if (n.children.size() != m.children.size()) return false;
  for (std::size_t i = 0; i < n.children.size(); ++i)
    if (!tree_leq(n.children[i], m.children[i], width)) return false;
  return true;
}

template <class X>
bool tree_equal(const Tree<X>& t, const Tree<X>& r, std::size_t width = 16) {
  return tree_leq(t, r, width) && tree_leq(r, t, width);
}

/// True when an Unknown leaf occurs within the first `width` family indices.
template <class X>
bool has_unknown(const Tree<X>& t, std::size_t width = 16) {
  if (is_unknown(t)) return true;
  const auto* n = as_node(t);
  if (!n) return false;
  if (n->family) {
    for (std::uint64_t i = 0; i < width; ++i)
      if (has_unknown(n->family->at(i), width)) return true;
    return false;
  }
  for (const auto& c : n->children)
    if (has_unknown(c, width)) return true;
  return false;
}

/// Height of the tree, with families inspected below `width`.
template <class X>
std::size_t depth(const Tree<X>& t, std::size_t width = 16) {
  const auto* n = as_node(t);
  if (!n) return 0;
  std::size_t d = 0;
  if (n->family) {
    for (std::uint64_t i = 0; i < width; ++i) d = std::max(d, depth(n->family->at(i), width));
  } else {
    for (const auto& c : n->children) d = std::max(d, depth(c, width));
  }
  return d + 1;
}

/// Operator label as printed in tree renderings: `update[l:=3]` for
/// parameterised nodes, the operator name otherwise.
inline std::string node_label(const OpName& op, const std::optional<std::uint64_t>& param) {
  if (!param) return op.str();
  return op.family + "[" + op.index + ":=" + std::to_string(*param) + "]";
}

/// Indented text rendering: `por:` with two-space-indented children, `?` for
/// Unknown, family children prefixed with their index.
template <class X, class LeafPrinter>
void render_tree(std::string& out, const Tree<X>& t, LeafPrinter&& leaf, std::size_t width, int indent = 0,
                 const std::string& prefix = "") {
  out.append(indent * 2, ' ');
  out += prefix;
  if (is_unknown(t)) {
    out += "?\n";
    return;
  }
  if (const X* x = leaf_value(t)) {
    out += leaf(*x) + "\n";
    return;
  }
  const auto& n = *as_node(t);
  out += node_label(n.op, n.param) + ":\n";
  if (n.family) {
    for (std::uint64_t i = 0; i < width; ++i)
      render_tree(out, n.family->at(i), leaf, width, indent + 1, "[" + std::to_string(i) + "] ");
    out.append((indent + 1) * 2, ' ');
    out += "...\n";
  } else {
    for (const auto& c : n.children) render_tree(out, c, leaf, width, indent + 1);
  }
}

/// Leaf text for effect trees: `ret V` for return leaves, the term otherwise.
inline std::string terminal_text(const ComTerm& m) {
  if (const auto* r = std::get_if<com::Return>(&m->v)) return "ret " + to_string(r->value);
  return to_string(m);
}

}  // namespace cbpvq
