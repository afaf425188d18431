#include <gtest/gtest.h>

#include <random>

#include "cbpvq/parser.hpp"
#include "cbpvq/printer.hpp"
#include "cbpvq/substitute.hpp"
#include "cbpvq/typecheck.hpp"

using namespace cbpvq;

namespace {

const EffectSignature& prob() {
  static const EffectSignature s("prob", {ops::por()});
  return s;
}
const EffectSignature& everything() {
  static const EffectSignature s("all", {ops::por(), ops::nor(), ops::lookup({"l", "k"}), ops::update({"l", "k"}),
                                         ops::cost(), ops::raise({"e"})});
  return s;
}

ComType infer_closed(const std::string& src, const EffectSignature& sig = everything()) {
  return TypeChecker(sig).infer_closed(parse_program(src, sig));
}

std::string type_str(const std::string& src, const EffectSignature& sig = everything()) {
  return to_string(infer_closed(src, sig));
}

}  // namespace

TEST(Parse, ReturnZero) {
  const ComTerm m = parse_program("return zero", prob());
  const auto* r = std::get_if<com::Return>(&m->v);
  ASSERT_NE(r, nullptr);
  EXPECT_TRUE(std::holds_alternative<val::Zero>(r->value->v));
}

TEST(Parse, ProbabilisticChoice) {
  const ComTerm m = parse_program("por(return 0, return 1)", prob());
  const auto* o = std::get_if<com::Op>(&m->v);
  ASSERT_NE(o, nullptr);
  EXPECT_EQ(o->op.str(), "por");
  EXPECT_EQ(o->param, nullptr);
  ASSERT_EQ(o->children.size(), 2u);
  EXPECT_EQ(numeral_value(std::get<com::Return>(o->children[0]->v).value), 0u);
  EXPECT_EQ(numeral_value(std::get<com::Return>(o->children[1]->v).value), 1u);
}

TEST(Parse, UnclosedParenReportsPosition) {
  try {
    parse_program("por(x", prob());
    FAIL() << "expected a syntax error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.pos().line, 1);
    EXPECT_EQ(e.pos().column, 5);
  }
  try {
    parse_program("por(return 0,\n    return 1", prob());
    FAIL() << "expected a syntax error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.pos().line, 2);
    EXPECT_EQ(e.pos().column, 13);
    EXPECT_NE(std::string(e.what()).find("end of input"), std::string::npos);
  }
}

TEST(Parse, UnknownOperatorForSignature) {
  EXPECT_THROW(parse_program("nor(return 0, return 1)", prob()), ParseError);
  EXPECT_THROW(parse_program("lookup[q](x. return x)", everything()), ParseError);
}

TEST(Parse, AllOperatorShapes) {
  const std::string src =
      "update[l](3, lookup[k](x. cost[2.5](nor(return x, (raise[e]() : F nat)))))";
  const ComTerm m = parse_program(src, everything());
  EXPECT_EQ(to_string(m), src);
  EXPECT_EQ(to_string(TypeChecker(everything()).infer_closed(m)), "F nat");
}

TEST(Parse, Types) {
  EXPECT_EQ(to_string(std::get<ComType>(parse_type("nat -> U F nat -> F (nat * unit)"))),
            "nat -> U F nat -> F (nat * unit)");
  EXPECT_EQ(to_string(std::get<ValType>(parse_type("unit + nat + unit"))), "unit + nat + unit");
  EXPECT_EQ(to_string(std::get<ValType>(parse_type("sum{b: nat, a: unit}"))), "sum{a: unit, b: nat}");
  EXPECT_EQ(to_string(std::get<ComType>(parse_type("prod{1: F nat, 0: F unit}"))), "prod{0: F unit, 1: F nat}");
  EXPECT_THROW(parse_type("sum{a: nat, a: unit}"), ParseError);
  EXPECT_THROW(parse_type("F F nat"), ParseError);
}

TEST(Infer, ReturnNumeral) { EXPECT_EQ(type_str("return 0"), "F nat"); }

TEST(Infer, FixOfForce) { EXPECT_EQ(type_str("fix (\\x:U F nat. force x)"), "F nat"); }

TEST(Infer, FixSugar) { EXPECT_EQ(type_str("fix x:U F nat. force x"), "F nat"); }

TEST(Infer, ApplyProducerIsError) {
  try {
    infer_closed("(return 0) 0");
    FAIL() << "expected a type error";
  } catch (const TypeError& e) {
    EXPECT_EQ(e.rule(), "app");
    EXPECT_EQ(e.expected(), "A -> C");
    EXPECT_EQ(e.found(), "F nat");
  }
}

TEST(Infer, UnboundVariable) { EXPECT_THROW(infer_closed("return x"), TypeError); }

TEST(Infer, FixRequiresThunkArrow) {
  EXPECT_THROW(infer_closed("fix (\\x:nat. return x)"), TypeError);
  EXPECT_THROW(infer_closed("fix (return 0)"), TypeError);
}

TEST(Infer, OperatorsOutsideSignatureAreRejected) {
  const ComTerm m = parse_program("nor(return 0, return 1)", everything());
  EXPECT_THROW(TypeChecker(prob()).infer_closed(m), TypeError);
}

TEST(Infer, ChildrenShareType) {
  EXPECT_THROW(infer_closed("por(return 0, return ())"), TypeError);
  EXPECT_EQ(type_str("por(\\x:nat. return x, \\y:nat. return 0)"), "nat -> F nat");
}

TEST(Infer, SumsAndPairs) {
  EXPECT_EQ(type_str("pm (inj 1 3 : unit + nat) as {inj 0 u -> return 0 | inj 1 n -> return n}"), "F nat");
  EXPECT_EQ(type_str("\\s:sum{a: unit, b: nat}. pm s as {inj a u -> return 0 | inj b n -> return succ n}"),
            "sum{a: unit, b: nat} -> F nat");
  EXPECT_THROW(infer_closed("pm (inj 1 3 : unit + nat) as {inj 1 n -> return n}"), TypeError);
  EXPECT_THROW(infer_closed("return inj 0 ()"), TypeError);
  EXPECT_EQ(type_str("pm (1, ()) as (a, b) -> return (b, a)"), "F (unit * nat)");
  EXPECT_EQ(type_str("<a = return 0, b = \\x:nat. return x> # b"), "nat -> F nat");
}

TEST(Infer, CheckingModeSuppliesInjectionType) {
  EXPECT_EQ(type_str("(\\s:unit + nat. return s) (inj 0 ())"), "F (unit + nat)");
  EXPECT_EQ(type_str("case 0 of {zero -> (raise[e]() : F nat) | succ p -> return p}"), "F nat");
}

TEST(Infer, Deterministic) {
  const std::string src = "let f = thunk (\\x:nat. return succ x) in force f 3 to y. return (y, y)";
  EXPECT_EQ(type_str(src), type_str(src));
  EXPECT_EQ(type_str(src), "F (nat * nat)");
}

TEST(Substitute, Basic) {
  const ComTerm m = parse_program("return x", prob());
  EXPECT_EQ(to_string(substitute(m, "x", numeral(3))), "return 3");
}

TEST(Substitute, Shadowing) {
  const ComTerm m = parse_program("\\x:nat. return x", prob());
  EXPECT_EQ(to_string(substitute(m, "x", numeral(3))), "\\x:nat. return x");
}

TEST(Substitute, UnderSequencing) {
  const ComTerm m = parse_program("force f to y. return y", prob());
  const ValTerm t = thunk(ret(numeral(5)));
  EXPECT_EQ(to_string(substitute(m, "f", t)), "force thunk (return 5) to y. return y");
}

TEST(Substitute, Simultaneous) {
  const ComTerm m = parse_program("return (x, y)", prob());
  EXPECT_EQ(to_string(substitute(m, Bindings{{"x", var("y")}, {"y", var("x")}})), "return (y, x)");
}

TEST(Substitute, AvoidsCaptureOfOpenValues) {
  const ComTerm m = parse_program("\\y:nat. return (x, y)", prob());
  const ComTerm r = substitute(m, "x", var("y"));
  EXPECT_EQ(to_string(r), "\\y_1:nat. return (y, y_1)");
}

TEST(Numerals, RoundTrip) {
  EXPECT_TRUE(std::holds_alternative<val::Zero>(numeral(0)->v));
  const ValTerm two = numeral(2);
  ASSERT_TRUE(std::holds_alternative<val::Succ>(two->v));
  const ValTerm one = std::get<val::Succ>(two->v).pred;
  ASSERT_TRUE(std::holds_alternative<val::Succ>(one->v));
  EXPECT_TRUE(std::holds_alternative<val::Zero>(std::get<val::Succ>(one->v).pred->v));
  for (std::uint64_t n : {0u, 1u, 7u, 40u}) EXPECT_EQ(numeral_value(numeral(n)), n);
  EXPECT_FALSE(numeral_value(thunk(ret(numeral(0)))).has_value());
}

TEST(Printer, AlphaEquivalence) {
  const ComTerm a = parse_program("\\x:nat. return x", prob());
  const ComTerm b = parse_program("\\y:nat. return y", prob());
  const ComTerm c = parse_program("\\y:nat. return 0", prob());
  EXPECT_TRUE(alpha_equal(a, b));
  EXPECT_FALSE(alpha_equal(a, c));
}

// ----- round trip over generated terms ---------------------------------------

namespace {

class Gen {
 public:
  explicit Gen(unsigned seed) : rng_(seed) {}

  ValType vtype(int depth) {
    switch (pick(depth > 0 ? 5 : 2)) {
      case 0: return unit_type();
      case 1: return nat_type();
      case 2: return thunk_type(ctype(depth - 1));
      case 3: return sum_type({{"0", vtype(depth - 1)}, {"1", vtype(depth - 1)}});
      default: return pair_type(vtype(depth - 1), vtype(depth - 1));
    }
  }
  ComType ctype(int depth) {
    switch (pick(depth > 0 ? 3 : 1)) {
      case 0: return producer_type(vtype(depth - 1 < 0 ? 0 : depth - 1));
      case 1: return arrow_type(vtype(depth - 1), ctype(depth - 1));
      default: return prod_type({{"a", ctype(depth - 1)}, {"b", ctype(depth - 1)}});
    }
  }

  ValTerm value(int depth) {
    switch (pick(depth > 0 ? 7 : 3)) {
      case 0: return unit_val();
      case 1: return numeral(pick(4));
      case 2: return var(name());
      case 3: return succ(value(depth - 1));
      case 4: return thunk(com(depth - 1));
      case 5: return pick(2) ? inj(std::to_string(pick(2)), value(depth - 1))
                             : inj("1", value(depth - 1), sum_type({{"0", unit_type()}, {"1", nat_type()}}));
      default: return pair(value(depth - 1), value(depth - 1));
    }
  }

  ComTerm com(int depth) {
    if (depth <= 0) return pick(2) ? ret(value(0)) : force(value(0));
    switch (pick(16)) {
      case 0: return case_nat(value(depth - 1), com(depth - 1), name(), com(depth - 1));
      case 1: return let(name(), value(depth - 1), com(depth - 1));
      case 2: return ret(value(depth - 1));
      case 3: return seq(com(depth - 1), name(), com(depth - 1));
      case 4: return force(value(depth - 1));
      case 5: return lambda(name(), vtype(2), com(depth - 1));
      case 6: return app(com(depth - 1), value(depth - 1));
      case 7: return case_sum(value(depth - 1), {{"0", name(), com(depth - 1)}, {"1", name(), com(depth - 1)}});
      case 8: return case_pair(value(depth - 1), name(), name(), com(depth - 1));
      case 9: return tuple({{"a", com(depth - 1)}, {"b", com(depth - 1)}});
      case 10: return proj(com(depth - 1), pick(2) ? "a" : "b");
      case 11: return fix(com(depth - 1));
      case 12: return op({"por", ""}, {com(depth - 1), com(depth - 1)});
      case 13: return op_indexed({"lookup", "l"}, name(), com(depth - 1));
      case 14: return op_param({"update", "k"}, value(depth - 1), {com(depth - 1)});
      default: return pick(2) ? op({"cost", "1.5"}, {com(depth - 1)}) : op({"raise", "e"}, {}, ctype(1));
    }
  }

 private:
  unsigned pick(unsigned n) { return std::uniform_int_distribution<unsigned>(0, n - 1)(rng_); }
  std::string name() {
    static const char* names[] = {"x", "y", "z", "f", "n'"};
    return names[pick(5)];
  }
  std::mt19937 rng_;
};

bool same(const ComTerm& a, const ComTerm& b);

bool same_val(const ValTerm& a, const ValTerm& b) {
  if (a->v.index() != b->v.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b->v);
        if constexpr (std::is_same_v<T, val::Succ>) return same_val(x.pred, y.pred);
        else if constexpr (std::is_same_v<T, val::Var>) return x.name == y.name;
        else if constexpr (std::is_same_v<T, val::Thunk>) return same(x.body, y.body);
        else if constexpr (std::is_same_v<T, val::Inj>)
          return x.label == y.label && same_val(x.payload, y.payload) &&
                 (x.annotation ? y.annotation && same_type(x.annotation, y.annotation) : !y.annotation);
        else if constexpr (std::is_same_v<T, val::Pair>) return same_val(x.first, y.first) && same_val(x.second, y.second);
        else return true;
      },
      a->v);
}

bool same(const ComTerm& a, const ComTerm& b) {
  // Structural equality up to nothing: binder names must match too.
  if (a->v.index() != b->v.index()) return false;
  return to_string(a) == to_string(b) && term_key(a) == term_key(b);
}

}  // namespace

TEST(Printer, RoundTripGeneratedTerms) {
  Gen g(20261017);
  for (int i = 0; i < 3000; ++i) {
    const ComTerm m = g.com(1 + i % 5);
    const std::string text = to_string(m);
    ComTerm back;
    try {
      back = parse_program(text, everything());
    } catch (const ParseError& e) {
      FAIL() << "reparse failed for: " << text << "\n" << e.what();
    }
    ASSERT_EQ(to_string(back), text);
    ASSERT_TRUE(same(m, back)) << text;
    const ValTerm v = g.value(1 + i % 4);
    const ValTerm vback = parse_value(to_string(v), everything());
    ASSERT_TRUE(same_val(v, vback)) << to_string(v);
  }
}

TEST(Printer, RoundTripGeneratedTypes) {
  Gen g(7);
  for (int i = 0; i < 500; ++i) {
    const ValType a = g.vtype(1 + i % 4);
    ASSERT_TRUE(same_type(a, std::get<ValType>(parse_type(to_string(a))))) << to_string(a);
    const ComType c = g.ctype(1 + i % 4);
    ASSERT_TRUE(same_type(c, std::get<ComType>(parse_type(to_string(c))))) << to_string(c);
  }
}
