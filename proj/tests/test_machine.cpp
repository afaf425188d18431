#include <gtest/gtest.h>

#include <cbpvq/machine.hpp>
#include <cbpvq/parser.hpp>
#include <cbpvq/printer.hpp>
#include <cbpvq/typecheck.hpp>

using namespace cbpvq;

namespace {

EffectSignature prob_nondet() { return EffectSignature("prob+nondet", {ops::por(), ops::nor()}); }
EffectSignature store_sig() {
  return EffectSignature("store", {ops::lookup({"l", "r"}), ops::update({"l", "r"})});
}

ComTerm P(const std::string& s, const EffectSignature& sig = prob_nondet()) { return parse_program(s, sig); }

std::string render(const EffectTree& t, std::size_t width = 3) {
  std::string out;
  render_tree(out, t, terminal_text, width);
  return out;
}

Tree<int> leaf(int x) { return eta(x); }
Tree<int> node(std::vector<Tree<int>> kids) { return op_node<int>(OpName{"por", ""}, std::move(kids)); }

}  // namespace

TEST(Reduce, ForceThunk) {
  auto r = reduce(P("force thunk (return 3)"));
  ASSERT_TRUE(r);
  EXPECT_TRUE(alpha_equal(*r, P("return 3")));
}

TEST(Reduce, FixUnfolds) {
  ComTerm m = P("fix (\\x:U F nat. force x)");
  auto r = reduce(m);
  ASSERT_TRUE(r);
  EXPECT_TRUE(alpha_equal(*r, app(std::get<com::Fix>(m->v).body, thunk(m))));
}

TEST(Reduce, TerminalAndCases) {
  EXPECT_FALSE(reduce(P("return 0")));
  EXPECT_TRUE(alpha_equal(*reduce(P("case 0 of {zero -> return 1 | succ x -> return x}")), P("return 1")));
  EXPECT_TRUE(alpha_equal(*reduce(P("case 3 of {zero -> return 1 | succ x -> return x}")), P("return 2")));
  EXPECT_TRUE(alpha_equal(*reduce(P("let x = 4 in return x")), P("return 4")));
  EXPECT_TRUE(alpha_equal(*reduce(P("pm (1, 2) as (x, y) -> return y")), P("return 2")));
  EXPECT_TRUE(alpha_equal(*reduce(P("pm (inj b 5 : sum{a: unit, b: nat}) as {inj a u -> return 0 | inj b n -> return n}")),
                          P("return 5")));
}

TEST(MachineStep, ApplicationPushesAndPops) {
  Config c{Stack{}, P("(\\x:nat. return x) 3")};
  auto o1 = machine_step(c);
  auto* s1 = std::get_if<outcome::Stepped>(&o1);
  ASSERT_TRUE(s1);
  EXPECT_EQ(s1->next.stack.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<frame::Arg>(s1->next.stack.top()));
  EXPECT_TRUE(std::holds_alternative<com::Lambda>(s1->next.focus->v));
  auto o2 = machine_step(s1->next);
  auto* s2 = std::get_if<outcome::Stepped>(&o2);
  ASSERT_TRUE(s2);
  EXPECT_TRUE(s2->next.stack.empty());
  EXPECT_TRUE(alpha_equal(s2->next.focus, P("return 3")));
  auto o3 = machine_step(s2->next);
  ASSERT_TRUE(std::holds_alternative<outcome::Done>(o3));
}

TEST(MachineStep, ToFramePopsWithSubstitution) {
  Stack s = Stack{}.push(frame::To{"y", P("return (y, y)")});
  auto o = machine_step(Config{s, P("return 4")});
  auto* st = std::get_if<outcome::Stepped>(&o);
  ASSERT_TRUE(st);
  EXPECT_TRUE(st->next.stack.empty());
  EXPECT_TRUE(alpha_equal(st->next.focus, P("return (4, 4)")));
}

TEST(MachineStep, LookupGivesFamily) {
  Stack s = Stack{}.push(frame::To{"y", P("return y", store_sig())});
  auto o = machine_step(Config{s, P("lookup[l](x. return succ x)", store_sig())});
  auto* e = std::get_if<outcome::Effect>(&o);
  ASSERT_TRUE(e);
  EXPECT_EQ(e->op.str(), "lookup[l]");
  ASSERT_TRUE(e->family);
  Config c2 = e->family(2);
  EXPECT_EQ(c2.stack.size(), 1u);
  EXPECT_TRUE(alpha_equal(c2.focus, P("return 3", store_sig())));
}

TEST(MachineStep, PlugRebuildsTerm) {
  Stack s = Stack{}.push(frame::Arg{numeral(1)}).push(frame::To{"y", P("\\z:nat. return y")});
  EXPECT_TRUE(alpha_equal(plug(s, P("return 2")), P("(return 2 to y. \\z:nat. return y) 1")));
}

TEST(MachineStep, Deterministic) {
  Config c{Stack{}, P("por(return 0, return 1) to x. return (x, x)")};
  auto a = machine_step(c), b = machine_step(c);
  ASSERT_EQ(a.index(), b.index());
  EXPECT_TRUE(alpha_equal(plug(std::get<outcome::Stepped>(a).next), plug(std::get<outcome::Stepped>(b).next)));
}

TEST(EvalTree, PorGivesTwoLeaves) {
  EffectTree t = eval_tree(P("por(return 0, return 1)"), 2);
  EXPECT_EQ(render(t), "por:\n  ret 0\n  ret 1\n");
  EXPECT_EQ(render(eval_tree(P("por(return 0, return 1)"), 1)), "por:\n  ?\n  ?\n");
  EXPECT_TRUE(is_unknown(eval_tree(P("por(return 0, return 1)"), 0)));
}

TEST(EvalTree, OmegaIsUnknownAtEveryFuel) {
  ComTerm omega = P("fix (\\x:U F nat. force x)");
  for (std::uint64_t n : {0, 1, 2, 5, 50, 500}) EXPECT_TRUE(is_unknown(eval_tree(omega, n))) << n;
}

TEST(EvalTree, SequencingNeedsThreeSteps) {
  ComTerm m = P("return 5 to y. return y");
  EXPECT_EQ(render(eval_tree(m, 3)), "ret 5\n");
  EXPECT_TRUE(is_unknown(eval_tree(m, 2)));
}

TEST(EvalTree, UpdateCarriesParameter) {
  EffectTree t = eval_tree(P("update[l](1, return ())", store_sig()), 4);
  EXPECT_EQ(render(t), "update[l:=1]:\n  ret ()\n");
}

TEST(EvalTree, LookupFamilyIsLazyAndMemoised) {
  int calls = 0;
  EffectTree t = eval_tree(P("lookup[l](x. return x)", store_sig()), 4,
                           [&](const Config&, const Config&) { ++calls; });
  const auto* n = as_node(t);
  ASSERT_TRUE(n && n->family);
  EXPECT_TRUE(n->family->explored().empty());
  EXPECT_TRUE(alpha_equal(*leaf_value(n->family->at(7)), P("return 7", store_sig())));
  const int after_first = calls;
  n->family->at(7);
  EXPECT_EQ(calls, after_first);
  EXPECT_EQ(n->family->explored(), std::vector<std::uint64_t>{7});
}

TEST(EvalTree, CopierShape) {
  ComTerm copier = P("nor(lookup[l](x. update[r](x, return x)), lookup[r](x. update[l](x, return x)))",
                     EffectSignature("store+nondet", {ops::nor(), ops::lookup({"l", "r"}), ops::update({"l", "r"})}));
  EffectTree t = eval_tree(copier, 8);
  EXPECT_EQ(render(t, 2),
            "nor:\n"
            "  lookup[l]:\n"
            "    [0] update[r:=0]:\n"
            "      ret 0\n"
            "    [1] update[r:=1]:\n"
            "      ret 1\n"
            "    ...\n"
            "  lookup[r]:\n"
            "    [0] update[l:=0]:\n"
            "      ret 0\n"
            "    [1] update[l:=1]:\n"
            "      ret 1\n"
            "    ...\n");
}

TEST(Tree, OrderExamples) {
  Tree<int> t = node({leaf(1), leaf(2)});
  EXPECT_TRUE(tree_leq(unknown<int>(), t));
  EXPECT_TRUE(tree_leq(node({unknown<int>(), leaf(2)}), t));
  EXPECT_FALSE(tree_leq(t, node({unknown<int>(), leaf(2)})));
  EXPECT_FALSE(tree_leq(leaf(1), leaf(2)));
  EXPECT_TRUE(tree_equal(t, node({leaf(1), leaf(2)})));
}

TEST(Tree, UnexploredFamilyBeyondWidth) {
  Tree<int> f = family_node<int>(OpName{"lookup", "l"}, [](std::uint64_t m) { return eta(static_cast<int>(m)); });
  as_node(f)->family->at(20);
  EXPECT_THROW(tree_leq(f, f, 16), UnexploredFamilyError);
  EXPECT_TRUE(tree_leq(f, f, 32));
}

TEST(Tree, MonadLaws) {
  Tree<int> t = node({leaf(1), node({unknown<int>(), leaf(3)})});
  auto eta_int = [](int x) { return eta(x); };
  EXPECT_TRUE(tree_equal(mu(eta(t)), t));
  EXPECT_TRUE(tree_equal(mu(map_leaves(t, eta_int)), t));
  using TT = Tree<Tree<int>>;
  TT tt = op_node<Tree<int>>(OpName{"por", ""}, {eta(t), unknown<Tree<int>>(), eta(leaf(4))});
  Tree<TT> ttt = op_node<TT>(OpName{"por", ""}, {eta(tt), eta(eta(leaf(5)))});
  auto mu_int = [](const TT& x) { return mu(x); };
  EXPECT_TRUE(tree_equal(mu(mu(ttt)), mu(map_leaves(ttt, mu_int))));
  EXPECT_TRUE(is_unknown(map_leaves(unknown<int>(), eta_int)));
}

TEST(Tree, TruncateChain) {
  Tree<int> t = node({leaf(1), node({leaf(2), leaf(3)})});
  EXPECT_TRUE(is_unknown(truncate(t, 0)));
  for (std::size_t k = 0; k < 4; ++k) EXPECT_TRUE(tree_leq(truncate(t, k), truncate(t, k + 1)));
  EXPECT_TRUE(tree_equal(truncate(t, depth(t) + 1), t));
  EXPECT_FALSE(has_unknown(t));
  EXPECT_TRUE(has_unknown(truncate(t, 2)));
}
