#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include <cbpvq/config.hpp>
#include <cbpvq/machine.hpp>
#include <cbpvq/modality.hpp>
#include <cbpvq/parser.hpp>

using namespace cbpvq;

namespace {

const OpName kPor{"por", ""};
const OpName kNor{"nor", ""};

Tree<TruthValue> num(double x) { return eta(TruthValue{{x}}); }
Tree<TruthValue> por(Tree<TruthValue> a, Tree<TruthValue> b) { return op_node<TruthValue>(kPor, {a, b}); }
Tree<TruthValue> nor(Tree<TruthValue> a, Tree<TruthValue> b) { return op_node<TruthValue>(kNor, {a, b}); }
Tree<TruthValue> cost(double c, Tree<TruthValue> a) {
  return op_node<TruthValue>(OpName{"cost", format_number(c)}, {a});
}

RunConfig config(const std::string& signature) {
  RunConfig cfg;
  cfg.signature = signature;
  return cfg;
}

// Indicator valuation of the numeral n on return leaves.
auto indicator(const TruthSpace& sp, std::uint64_t n) {
  return [sp, n](const ComTerm& leaf) {
    const auto& r = std::get<com::Return>(leaf->v);
    return numeral_value(r.value) == n ? sp.top() : sp.bot();
  };
}

// Path-sum oracle for finite por-trees: Σ 2^{-depth} · leaf.
double path_sum(const Tree<TruthValue>& t, double weight) {
  if (const auto* x = leaf_value(t)) return weight * x->c[0];
  if (is_unknown(t)) return 0;
  double s = 0;
  for (const auto& c : as_node(t)->children) s += path_sum(c, weight / 2);
  return s;
}

Tree<TruthValue> random_por_tree(std::mt19937& rng, int depth) {
  std::uniform_int_distribution<int> coin(0, 2);
  if (depth == 0 || coin(rng) == 0) return num(std::uniform_int_distribution<int>(0, 64)(rng) / 64.0);
  return por(random_por_tree(rng, depth - 1), random_por_tree(rng, depth - 1));
}

}  // namespace

TEST(TruthSpace, Extremes) {
  EXPECT_EQ(TruthSpace::cost().top().c[0], 0.0);
  EXPECT_EQ(TruthSpace::cost().bot().c[0], kInf);
  EXPECT_TRUE(TruthSpace::cost().leq(TruthValue{{5}}, TruthValue{{2}}));
  EXPECT_EQ(TruthSpace::cost().neg(TruthValue{{0}}).c[0], kInf);
  EXPECT_EQ(TruthSpace::cost().neg(TruthValue{{4}}).c[0], 0.25);
  EXPECT_EQ(TruthSpace::unit_interval().neg(TruthValue{{0.25}}).c[0], 0.75);
  StoreConfig st{{"l", "r"}, 3};
  EXPECT_EQ(TruthSpace::state_sets(st).width(), 9u);
}

TEST(TruthSpace, LatticeLawsOnSamples) {
  StoreConfig st{{"l", "r"}, 2};
  std::mt19937 rng(7);
  for (const TruthSpace& sp : {TruthSpace::boolean(), TruthSpace::unit_interval(), TruthSpace::cost(),
                               TruthSpace::state_sets(st), TruthSpace::state_probs(st)}) {
    auto sample = [&] {
      TruthValue v = sp.bot();
      for (double& x : v.c) {
        const int k = std::uniform_int_distribution<int>(0, 8)(rng);
        if (sp.is_boolean_valued()) x = k % 2;
        else if (sp.reversed()) x = k == 8 ? kInf : k * 0.5;
        else x = k / 8.0;
      }
      return v;
    };
    for (int i = 0; i < 200; ++i) {
      TruthValue a = sample(), b = sample(), c = sample();
      EXPECT_EQ(sp.neg(sp.neg(a)), a) << sp.name();
      EXPECT_EQ(sp.leq(a, b), sp.leq(sp.neg(b), sp.neg(a))) << sp.name();
      EXPECT_EQ(sp.neg(sp.join(a, b)), sp.meet(sp.neg(a), sp.neg(b))) << sp.name();
      EXPECT_TRUE(sp.leq(a, sp.join(a, b)));
      EXPECT_TRUE(sp.leq(sp.meet(a, b), b));
      if (sp.leq(a, c) && sp.leq(b, c)) {
        EXPECT_TRUE(sp.leq(sp.join(a, b), c));
      }
      EXPECT_TRUE(sp.leq(sp.bot(), a));
      EXPECT_TRUE(sp.leq(a, sp.top()));
    }
    EXPECT_EQ(sp.neg(sp.top()), sp.bot());
  }
}

TEST(TruthSpace, TextRoundTrip) {
  StoreConfig st{{"l", "r"}, 3};
  TruthSpace sets = TruthSpace::state_sets(st);
  TruthValue v = sets.parse("{l=0 r=0, l=1 r=2}");
  EXPECT_EQ(std::count(v.c.begin(), v.c.end(), 1.0), 2);
  EXPECT_EQ(sets.parse(sets.format(v)), v);
  const TruthValue l1 = sets.parse("states(l=1)");
  EXPECT_EQ(std::count(l1.c.begin(), l1.c.end(), 1.0), 3);
  EXPECT_EQ(sets.parse("top"), sets.top());
  EXPECT_EQ(TruthSpace::cost().parse("inf"), TruthSpace::cost().bot());
  EXPECT_EQ(TruthSpace::unit_interval().format(TruthValue{{0.5}}), "0.5");
  EXPECT_THROW(TruthSpace::unit_interval().parse("1.5"), ParseError);
}

TEST(Denote, ExpectationOfPor) {
  EXPECT_EQ(denote_at_depth(modality_E(), por(num(1), num(0)), 2).c[0], 0.5);
  EXPECT_EQ(denote_at_depth(modality_E(), por(num(1), num(0)), 1).c[0], 0.0);
  EXPECT_EQ(denote_at_depth(modality_E(), por(num(1), num(0)), 0).c[0], 0.0);
}

TEST(Denote, CostOfUnknownIsInfinite) {
  for (std::uint64_t n : {0, 1, 5, 100}) EXPECT_EQ(denote_at_depth(modality_C(), unknown<TruthValue>(), n).c[0], kInf);
  Interval i = denote_interval(modality_C(), unknown<TruthValue>());
  EXPECT_EQ(i.lo.c[0], kInf);
  EXPECT_EQ(i.hi.c[0], 0.0);
  EXPECT_FALSE(i.exact);
}

TEST(Denote, StateSetLeaf) {
  StoreConfig st{{"l", "r"}, 3};
  ModalitySpec g = modality_G(st);
  for (std::uint64_t n = 1; n < 4; ++n) EXPECT_EQ(denote_at_depth(g, eta(g.space.top()), n), g.space.top());
}

TEST(Denote, IntervalWithUnknown) {
  Interval i = denote_interval(modality_E(), por(num(1), unknown<TruthValue>()));
  EXPECT_EQ(i.lo.c[0], 0.5);
  EXPECT_EQ(i.hi.c[0], 1.0);
  EXPECT_FALSE(i.exact);
  Interval j = denote_interval(modality_E(), por(num(1), num(0.25)));
  EXPECT_TRUE(j.exact);
  EXPECT_EQ(j.lo.c[0], 0.625);
}

TEST(Denote, ExpectationMatchesPathSum) {
  std::mt19937 rng(11);
  for (int i = 0; i < 500; ++i) {
    Tree<TruthValue> t = random_por_tree(rng, 6);
    EXPECT_NEAR(denote_interval(modality_E(), t).lo.c[0], path_sum(t, 1.0), 1e-12);
  }
}

TEST(Denote, DepthMonotone) {
  std::mt19937 rng(3);
  for (int i = 0; i < 100; ++i) {
    Tree<TruthValue> t = random_por_tree(rng, 5);
    for (std::uint64_t n = 0; n < 7; ++n)
      EXPECT_LE(denote_at_depth(modality_E(), t, n).c[0], denote_at_depth(modality_E(), t, n + 1).c[0]);
  }
}

TEST(Nondet, Variants) {
  auto [eo, ep] = make_nondet_variants(modality_E());
  EXPECT_EQ(eo.name, "Eopt");
  EXPECT_EQ(ep.name, "Epes");
  EXPECT_EQ(denote_interval(eo, nor(num(1), num(0))).lo.c[0], 1.0);
  EXPECT_EQ(denote_interval(ep, nor(num(1), num(0))).lo.c[0], 0.0);
  auto [co, cp] = make_nondet_variants(modality_C());
  EXPECT_EQ(denote_interval(co, nor(num(0), cost(3, num(0)))).lo.c[0], 0.0);
  EXPECT_EQ(denote_interval(cp, nor(num(0), cost(3, num(0)))).lo.c[0], 3.0);
  Tree<TruthValue> plain = por(num(0.5), por(num(1), num(0)));
  EXPECT_EQ(denote_interval(eo, plain).lo, denote_interval(modality_E(), plain).lo);
  EXPECT_EQ(denote_interval(ep, plain).lo, denote_interval(modality_E(), plain).lo);
  EXPECT_THROW(make_nondet_variants(eo), ModalityError);
}

TEST(Lift, ConstantAndCostSum) {
  ComTerm m = parse_program("por(return 0, por(return 1, return 2))", EffectSignature("prob", {ops::por()}));
  Interval i = lift(modality_E(), [](const ComTerm&) { return TruthValue{{1}}; }, eval_tree(m, 8));
  EXPECT_TRUE(i.exact);
  EXPECT_EQ(i.lo.c[0], 1.0);
  Interval c = lift(modality_C(), [](const TruthValue&) { return TruthValue{{0}}; }, cost(2, cost(3, num(9))));
  EXPECT_TRUE(c.exact);
  EXPECT_EQ(c.lo.c[0], 5.0);
}

TEST(Lift, UpdateOnFullSet) {
  Instance inst = make_instance(config("store"));
  ComTerm m = parse_program("update[l](1, return ())", inst.signature);
  Interval i = lift(inst.modalities[0], [&](const ComTerm&) { return inst.space.top(); }, eval_tree(m, 4));
  EXPECT_TRUE(i.exact);
  EXPECT_EQ(i.lo, inst.space.top());
}

// The unpredictable coin: ⊨ Eopt<{1}> = 1/2, ⊨ Epes<{1}> = 1/4.
TEST(Lift, CoinTree) {
  Instance inst = make_instance(config("prob+nondet"));
  ComTerm coin = parse_program("por(return 0, por(nor(return 0, return 1), return 1))", inst.signature);
  EffectTree t = eval_tree(coin, 8);
  Interval o = lift(inst.require_modality("Eopt"), indicator(inst.space, 1), t);
  Interval p = lift(inst.require_modality("Epes"), indicator(inst.space, 1), t);
  EXPECT_TRUE(o.exact);
  EXPECT_TRUE(p.exact);
  EXPECT_NEAR(o.lo.c[0], 0.5, 1e-12);
  EXPECT_NEAR(p.lo.c[0], 0.25, 1e-12);
}

// The nondeterministic copier: Gopt<{0}> = {s(l)=0 ∨ s(r)=0}, Gpes<{0}> = {s(l)=0=s(r)}.
TEST(Lift, CopierTree) {
  Instance inst = make_instance(config("store+nondet"));
  ComTerm copier =
      parse_program("nor(lookup[l](x. update[r](x, return x)), lookup[r](x. update[l](x, return x)))", inst.signature);
  EffectTree t = eval_tree(copier, 16);
  const StoreConfig& st = inst.space.store();
  TruthValue either = inst.space.bot(), both = inst.space.bot();
  for (std::size_t s = 0; s < st.num_states(); ++s) {
    const bool l0 = st.get(s, 0) == 0, r0 = st.get(s, 1) == 0;
    either.c[s] = (l0 || r0) ? 1 : 0;
    both.c[s] = (l0 && r0) ? 1 : 0;
  }
  Interval o = lift(inst.require_modality("Gopt"), indicator(inst.space, 0), t);
  Interval p = lift(inst.require_modality("Gpes"), indicator(inst.space, 0), t);
  EXPECT_TRUE(o.exact);
  EXPECT_TRUE(p.exact);
  EXPECT_EQ(o.lo, either);
  EXPECT_EQ(p.lo, both);
  EXPECT_EQ(std::count(o.lo.c.begin(), o.lo.c.end(), 1.0), 5);
  EXPECT_EQ(std::count(p.lo.c.begin(), p.lo.c.end(), 1.0), 1);
}

// G_f with f(e) = {s[l:=1] | s ∈ S}.
TEST(ErrorLift, StoreObservation) {
  RunConfig cfg = config("store+error");
  cfg.error_valuation["G"]["e"] = "states(l=1)";
  Instance inst = make_instance(cfg);
  EXPECT_FALSE(inst.error_lift_boolean.at("G"));
  const ModalitySpec& g = inst.require_modality("G");
  auto top = [&](const ComTerm&) { return inst.space.top(); };
  Interval one = lift(g, top, eval_tree(parse_program("update[l](1, raise[e]())", inst.signature), 4));
  Interval zero = lift(g, top, eval_tree(parse_program("update[l](0, raise[e]())", inst.signature), 4));
  EXPECT_TRUE(one.exact);
  EXPECT_TRUE(zero.exact);
  EXPECT_EQ(one.lo, inst.space.top());
  EXPECT_EQ(zero.lo, inst.space.bot());
}

TEST(ErrorLift, DirectRuleAndDefaults) {
  ErrorLift ef = make_error_lift(modality_E(), {{"e", TruthValue{{0}}}}, {"e"});
  EXPECT_TRUE(ef.boolean_range);
  EXPECT_EQ(ef.spec.name, "E");
  Tree<TruthValue> raise = op_node<TruthValue>(OpName{"raise", "e"}, {});
  EXPECT_EQ(denote_interval(ef.spec, raise).lo.c[0], 0.0);
  Tree<TruthValue> plain = por(num(1), num(0.5));
  EXPECT_EQ(denote_interval(ef.spec, plain).lo, denote_interval(modality_E(), plain).lo);
  EXPECT_FALSE(make_error_lift(modality_E(), {{"e", TruthValue{{0.5}}}}, {"e"}).boolean_range);
  EXPECT_THROW(make_error_lift(modality_E(), {}, {"e"}), ModalityError);
}

TEST(Instance, Derivation) {
  EXPECT_EQ(make_instance(config("prob")).modalities[0].name, "E");
  EXPECT_EQ(make_instance(config("cost+nondet")).modalities[1].name, "Cpes");
  EXPECT_EQ(make_instance(config("prob+store")).space.kind(), SpaceKind::state_probs);
  EXPECT_EQ(make_instance(config("nondet")).space.kind(), SpaceKind::boolean);
  RunConfig bad = config("prob");
  bad.truth_space = "sets";
  EXPECT_THROW(make_instance(bad), ConfigError);
  RunConfig ok = config("store");
  ok.truth_space = "probs";
  EXPECT_EQ(make_instance(ok).space.kind(), SpaceKind::state_probs);
  EXPECT_THROW(make_instance(config("prob+cost")), ConfigError);
  EXPECT_THROW(make_instance(config("quantum")), ConfigError);
}

TEST(Config, ParsesKeyValueText) {
  RunConfig cfg = parse_config(
      "signature = store+nondet  # comment\n"
      "locations = [a, b, c]\n"
      "value_bound = 2\n"
      "error_valuation.G.e = top\n"
      "explore_width = 8\n");
  EXPECT_EQ(cfg.signature, "store+nondet");
  EXPECT_EQ(cfg.store.locations.size(), 3u);
  EXPECT_EQ(cfg.store.value_bound, 2u);
  EXPECT_EQ(cfg.explore_width, 8u);
  EXPECT_EQ(cfg.error_valuation["G"]["e"], "top");
  EXPECT_THROW(parse_config("nonsense = 1\n"), ConfigError);
  EXPECT_THROW(parse_config("no equals sign\n"), ConfigError);
}
