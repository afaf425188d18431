#include <gtest/gtest.h>

#include <cmath>

#include <cbpvq/config.hpp>
#include <cbpvq/formula.hpp>
#include <cbpvq/parser.hpp>
#include <cbpvq/satisfaction.hpp>

using namespace cbpvq;

namespace {

Instance instance(const std::string& signature, std::map<std::string, std::map<std::string, std::string>> ev = {}) {
  RunConfig cfg;
  cfg.signature = signature;
  cfg.error_valuation = std::move(ev);
  return make_instance(cfg);
}

SatResult sat(const Instance& inst, const std::string& program, const std::string& formula, std::uint64_t fuel = 16) {
  return satisfies(inst, parse_program(program, inst.signature), parse_formula(formula, inst), fuel);
}

double value(const SatResult& r) {
  EXPECT_TRUE(r.interval.exact);
  return r.interval.lo.c[0];
}

}  // namespace

TEST(FormulaSyntax, RoundTrip) {
  Instance inst = instance("prob+nondet");
  for (const char* text : {"{7}", "[U]Eopt<{1}>", "inj a {0}", "fst snd {2}", "(3 . Epes<{0}>)", "proj hd Eopt<{0}>",
                           "or{{0}, {1}}", "and{Eopt<const 1>, not Epes<{0}>}", "step(Eopt<{1}>, 0.5)", "const 0.25",
                           "mix(Eopt<{1}>, Epes<{1}>)", "and{}"}) {
    Formula phi = parse_formula(text, inst);
    EXPECT_EQ(to_string(phi, inst.space), text);
    EXPECT_EQ(to_string(parse_formula(to_string(phi, inst.space), inst), inst.space), text);
  }
  EXPECT_EQ(to_string(parse_formula("((7 . (Eopt<{1}>)))", inst), inst.space), "(7 . Eopt<{1}>)");
}

TEST(FormulaSyntax, Errors) {
  Instance inst = instance("prob");
  EXPECT_THROW(parse_formula("Q<{1}>", inst), ParseError);
  EXPECT_THROW(parse_formula("{x}", inst), ParseError);
  EXPECT_THROW(parse_formula("E<{1}", inst), ParseError);
  EXPECT_THROW(parse_formula("const 2", inst), ParseError);
}

TEST(FormulaMetrics, SizeAndFragment) {
  Instance inst = instance("prob");
  EXPECT_EQ(formula_size(parse_formula("E<{7}>", inst)), 2u);
  EXPECT_EQ(formula_size(parse_formula("[U](0 . E<and{{0}, {1}}>)", inst)), 6u);
  EXPECT_TRUE(is_positive(parse_formula("E<or{{0}, step({1}, 0.5)}>", inst)));
  EXPECT_FALSE(is_positive(parse_formula("E<or{{0}, not {1}}>", inst)));
}

TEST(FormulaTyping, ChecksAgainstTermType) {
  Instance inst = instance("prob");
  auto ty = [](const char* s) { return parse_type(s); };
  EXPECT_NO_THROW(check_formula(parse_formula("E<{1}>", inst), ty("F nat"), inst));
  EXPECT_THROW(check_formula(parse_formula("E<{1}>", inst), ty("nat"), inst), FormulaError);
  EXPECT_THROW(check_formula(parse_formula("{1}", inst), ty("F nat"), inst), FormulaError);
  EXPECT_THROW(check_formula(parse_formula("(() . E<{1}>)", inst), ty("nat -> F nat"), inst), FormulaError);
  EXPECT_THROW(check_formula(parse_formula("inj c {1}", inst), ty("sum{a: nat, b: unit}"), inst), FormulaError);
  EXPECT_NO_THROW(check_formula(parse_formula("proj b E<const 1>", inst), ty("prod{a: F nat, b: F unit}"), inst));
  EXPECT_THROW(check_formula(parse_formula("sigma[1](E<{1}>)", inst), ty("F nat"), inst), FormulaError);
  EXPECT_THROW(satisfies(inst, parse_program("return 1", inst.signature), parse_formula("[U]E<{1}>", inst), 4),
               FormulaError);
  EXPECT_THROW(satisfies(inst, parse_program("return 1", inst.signature), parse_formula("E<{1}>", inst), 0),
               SatisfactionError);
}

TEST(Satisfaction, NatEq) {
  Instance inst = instance("prob");
  Evaluator ev(inst, 4);
  EXPECT_EQ(ev.eval(numeral(7), f::nat_eq(7)).lo, inst.space.top());
  EXPECT_EQ(ev.eval(numeral(7), f::nat_eq(8)).lo, inst.space.bot());
  EXPECT_TRUE(ev.eval(numeral(7), f::nat_eq(8)).exact);
}

TEST(Satisfaction, StructuralRules) {
  Instance inst = instance("prob");
  Evaluator ev(inst, 16);
  ValTerm v = parse_value("((inj a 3 : sum{a: nat, b: unit}), thunk (\\x:nat. <p = return x, q = return 0>))",
                          inst.signature);
  EXPECT_EQ(value(SatResult{ev.eval(v, parse_formula("fst inj a {3}", inst))}), 1.0);
  EXPECT_EQ(value(SatResult{ev.eval(v, parse_formula("fst inj b const 1", inst))}), 0.0);
  EXPECT_EQ(value(SatResult{ev.eval(v, parse_formula("snd [U](5 . proj p E<{5}>)", inst))}), 1.0);
  EXPECT_EQ(value(SatResult{ev.eval(v, parse_formula("snd [U](5 . proj q E<{5}>)", inst))}), 0.0);
}

// Coin tree: the por-child nor(0,1) resolves to 1 (opt) or 0 (pes), giving
// 1/2·0 + 1/2·(1/2·1 + 1/2·1) = 1/2 and 1/2·0 + 1/2·(1/2·0 + 1/2·1) = 1/4.
TEST(Satisfaction, CoinTree) {
  Instance inst = instance("prob+nondet");
  const char* coin = "por(return 0, por(nor(return 0, return 1), return 1))";
  EXPECT_NEAR(value(sat(inst, coin, "Eopt<{1}>", 8)), 0.5, 1e-12);
  EXPECT_NEAR(value(sat(inst, coin, "Epes<{1}>", 8)), 0.25, 1e-12);
}

// M1 has leaves thunk(λ.return 0) and thunk(λ.return 1); each leaf meets
// one conjunct at 1 and the other at 0, so the min is 0 and E gives 0.
// M2 has one leaf whose body is por(0,1); both conjuncts are 1/2, so E gives 1/2.
TEST(Satisfaction, CallByNameVersusCallByValue) {
  Instance inst = instance("prob");
  const char* m1 = "por(return thunk (\\x:nat. return 0), return thunk (\\x:nat. return 1))";
  const char* m2 = "return thunk (\\x:nat. por(return 0, return 1))";
  const char* phi = "E<and{[U](0 . E<{0}>), [U](0 . E<{1}>)}>";
  EXPECT_EQ(value(sat(inst, m1, phi)), 0.0);
  EXPECT_EQ(value(sat(inst, m2, phi)), 0.5);
}

TEST(Satisfaction, DivergenceIsUnknown) {
  Instance inst = instance("prob");
  for (std::uint64_t fuel : {1, 4, 64}) {
    SatResult r = sat(inst, "fix x:U F nat. force x", "E<const 1>", fuel);
    EXPECT_FALSE(r.interval.exact);
    EXPECT_EQ(r.interval.lo.c[0], 0.0);
    EXPECT_EQ(r.interval.hi.c[0], 1.0);
  }
}

// One unfolding of fix f. por(return 0, force f) takes five fuel units: fix
// unfold, push argument, pop into the body, the por node, and the leaf (on
// the left) or force (on the right). So fuel n reaches floor(n/5) leaves, at
// depths 1..k, and lo = 1 − 2^{−floor(n/5)}.
TEST(Satisfaction, GeometricTermination) {
  Instance inst = instance("prob");
  const char* prog = "fix f:U F nat. por(return 0, force f)";
  for (std::uint64_t fuel = 1; fuel <= 60; ++fuel) {
    SatResult r = sat(inst, prog, "E<const 1>", fuel);
    EXPECT_FALSE(r.interval.exact);
    EXPECT_EQ(r.interval.lo.c[0], 1.0 - std::ldexp(1.0, -static_cast<int>(fuel / 5))) << fuel;
    EXPECT_EQ(r.interval.hi.c[0], 1.0);
  }
  SatResult r = satisfies_exact(inst, parse_program(prog, inst.signature), parse_formula("E<const 1>", inst), 8, 256);
  EXPECT_FALSE(r.interval.exact);
  EXPECT_EQ(r.fuel_used, 256u);
}

// Beyond 53 flips 1 - 2^-k is not representable; the lower bound must round
// down, not onto the upper bound.
TEST(Satisfaction, LowerBoundNeverRoundsUpToExact) {
  Instance inst = instance("prob");
  SatResult r = sat(inst, "fix f:U F nat. por(return 0, force f)", "E<const 1>", 400);
  EXPECT_FALSE(r.interval.exact);
  EXPECT_LT(r.interval.lo.c[0], 1.0);
  EXPECT_EQ(r.interval.hi.c[0], 1.0);
}

TEST(Satisfaction, IntervalsNarrowWithFuel) {
  Instance inst = instance("prob+nondet");
  const char* prog = "fix f:U F nat. nor(por(return 1, force f), return 0)";
  for (const char* phi : {"Eopt<{1}>", "Epes<{1}>", "not Eopt<{0}>", "step(Eopt<{1}>, 0.5)"}) {
    for (std::uint64_t n = 1; n < 30; ++n) {
      Interval a = sat(inst, prog, phi, n).interval, b = sat(inst, prog, phi, n + 1).interval;
      EXPECT_TRUE(inst.space.leq(a.lo, b.lo)) << phi << " " << n;
      EXPECT_TRUE(inst.space.leq(b.hi, a.hi)) << phi << " " << n;
    }
  }
}

TEST(Satisfaction, NegationAndDeMorgan) {
  Instance inst = instance("prob+nondet");
  const char* prog = "por(return 0, nor(return 1, por(return 2, return 0)))";
  for (const char* phi : {"Eopt<{0}>", "Epes<or{{1}, {2}}>", "step(Eopt<{2}>, 0.2)"}) {
    Interval a = sat(inst, prog, phi).interval;
    Interval b = sat(inst, prog, std::string("not not ") + phi).interval;
    EXPECT_EQ(a.lo, b.lo);
    EXPECT_EQ(a.hi, b.hi);
  }
  Interval l = sat(inst, prog, "not or{Eopt<{0}>, Epes<{1}>, const 0.3}").interval;
  Interval r = sat(inst, prog, "and{not Eopt<{0}>, not Epes<{1}>, not const 0.3}").interval;
  EXPECT_TRUE(l.exact && r.exact);
  EXPECT_TRUE(inst.space.approx_eq(l.lo, r.lo));
}

TEST(Satisfaction, StepIsThreeValued) {
  Instance inst = instance("prob");
  EXPECT_EQ(value(sat(inst, "por(return 1, return 0)", "step(E<{1}>, 0.5)")), 1.0);
  EXPECT_EQ(value(sat(inst, "por(return 1, return 0)", "step(E<{1}>, 0.75)")), 0.0);
  // lo = 1/2, hi = 1 at any fuel: 0.75 is undecided, 0.5 is certain.
  const char* half = "por(return 1, fix x:U F nat. force x)";
  Interval u = sat(inst, half, "step(E<{1}>, 0.75)").interval;
  EXPECT_FALSE(u.exact);
  EXPECT_EQ(u.lo.c[0], 0.0);
  EXPECT_EQ(u.hi.c[0], 1.0);
  EXPECT_EQ(value(sat(inst, half, "step(E<{1}>, 0.5)")), 1.0);
}

TEST(Satisfaction, IncompleteFamiliesWiden) {
  Instance inst = instance("prob");
  Formula gen_or = make_formula(fm::Or{{{}, [](std::size_t i) { return f::nat_eq(i); }, 3, false}});
  Formula gen_and = make_formula(fm::And{{{}, [](std::size_t i) { return f::neg(f::nat_eq(i + 10)); }, 3, false}});
  Evaluator ev(inst, 4);
  Interval a = ev.eval(numeral(1), gen_or);
  EXPECT_EQ(a.lo.c[0], 1.0);
  Interval b = ev.eval(numeral(5), gen_or);
  EXPECT_EQ(b.lo.c[0], 0.0);
  EXPECT_EQ(b.hi.c[0], 1.0);
  Interval c = ev.eval(numeral(5), gen_and);
  EXPECT_EQ(c.lo.c[0], 0.0);
  EXPECT_EQ(c.hi.c[0], 1.0);
}

// A single update node: ⟦G⟧ = {s | s[l:=1] ∈ Q}.
TEST(Hoare, UpdateTriples) {
  Instance inst = instance("store");
  const TruthSpace& sp = inst.space;
  ComTerm m = parse_program("update[l](1, return ())", inst.signature);
  auto run = [&](const TruthValue& p, const TruthValue& q) {
    SatResult r = satisfies(inst, m, hoare(inst, p, q), 8);
    EXPECT_TRUE(r.interval.exact);
    return r.interval.lo;
  };
  EXPECT_EQ(run(sp.top(), sp.parse("states(l=1)")), sp.top());
  EXPECT_EQ(run(sp.top(), sp.parse("states(l=0)")), sp.bot());
  EXPECT_EQ(run(sp.bot(), sp.parse("states(l=0)")), sp.top());
  EXPECT_EQ(run(sp.parse("states(r=2)"), sp.parse("states(l=1, r=2)")), sp.top());
  EXPECT_THROW(hoare(instance("prob"), TruthValue{{1}}, TruthValue{{1}}), FormulaError);
}

TEST(Sigma, WeightedSums) {
  Instance inst = instance("prob+store");
  const TruthSpace& sp = inst.space;
  const std::size_t w = sp.width();
  ComTerm m = parse_program("return 0", inst.signature);
  auto run = [&](std::vector<double> mu, TruthValue c) {
    SatResult r = satisfies(inst, m, sigma_mu(inst, std::move(mu), f::constant(std::move(c))), 4);
    EXPECT_TRUE(r.interval.exact);
    return r.interval.lo;
  };
  std::vector<double> point(w, 0.0);
  point[4] = 1;
  TruthValue ind4 = sp.bot();
  ind4.c[4] = 1;
  EXPECT_EQ(run(point, ind4), sp.top());
  std::vector<double> two(w, 0.0);
  two[0] = two[1] = 0.5;
  TruthValue one_zero = sp.bot();
  one_zero.c[0] = 1;
  EXPECT_EQ(run(two, one_zero), sp.constant(0.5));
  std::vector<double> heavy(w, 2.0 / static_cast<double>(w));
  EXPECT_EQ(run(heavy, sp.top()), sp.top());
  EXPECT_THROW(sigma_mu(inst, std::vector<double>(w, -1.0), f::constant(sp.top())), FormulaError);
  EXPECT_THROW(sigma_mu(instance("prob"), {1.0}, f::constant(TruthValue{{1}})), FormulaError);
}

TEST(Mix, NativeValues) {
  Instance inst = instance("prob+nondet");
  EXPECT_EQ(value(sat(inst, "return 0", "mix(const 1, const 1)")), 1.0);
  EXPECT_EQ(value(sat(inst, "return 0", "mix(Eopt<const 1>, Epes<const 0>)")), 0.5);
  EXPECT_THROW(scheduler_mix(instance("store"), f::constant(TruthValue{}), f::constant(TruthValue{})), FormulaError);
}

// Oracle: ⋁_{a,b on the 1/64 grid} (step(Eopt<⊤>, a) ∧ step(Epes<⊤>, b) ∧ const (a+b)/2)
// picks the largest grid a ≤ opt and b ≤ pes, so it is within 1/64 of the native mix.
TEST(Mix, GridDisjunctionOracle) {
  Instance inst = instance("prob+nondet+error");
  std::string tail = "raise[e]()";
  for (int i = 0; i < 7; ++i) tail = "por(return 0, " + tail + ")";
  const std::string prog = "nor(return 0, " + tail + ")";
  Formula opt = parse_formula("Eopt<const 1>", inst);
  Formula pes = parse_formula("Epes<const 1>", inst);
  auto grid = [&](std::size_t k) {
    const double a = static_cast<double>(k / 65) / 64, b = static_cast<double>(k % 65) / 64;
    return f::conj({f::step(opt, TruthValue{{a}}), f::step(pes, TruthValue{{b}}), f::constant(TruthValue{{(a + b) / 2}})});
  };
  Formula encoded = make_formula(fm::Or{{{}, grid, 65 * 65, true}});
  ComTerm m = parse_program(prog, inst.signature);
  const double native = value(satisfies(inst, m, f::mix(opt, pes), 64));
  const double oracle = value(satisfies(inst, m, encoded, 64));
  EXPECT_EQ(native, (1.0 + 127.0 / 128.0) / 2);
  EXPECT_LE(std::fabs(native - oracle), 1.0 / 64);
  EXPECT_LE(oracle, native);
}

TEST(Satisfaction, ErrorLiftInCostSpace) {
  Instance inst = instance("cost+error", {{"C", {{"e", "4"}}}});
  EXPECT_EQ(value(sat(inst, "cost[1](raise[e]())", "C<{0}>")), 5.0);
  EXPECT_EQ(value(sat(inst, "cost[1](return 0)", "C<{0}>")), 1.0);
  EXPECT_EQ(value(sat(inst, "cost[1](return 2)", "C<{0}>")), kInf);
}
