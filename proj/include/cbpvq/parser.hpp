#pragma once

// Recursive-descent parser for the concrete syntax of types and terms.
//
//   comp   ::= '\' x ':' type '.' comp | 'let' x '=' value 'in' comp
//            | 'fix' x ':' type '.' comp | 'pm' value 'as' '(' x ',' y ')' '->' comp
//            | app ('to' x '.' comp)?
//   app    ::= catom (vatom | '#' label)*
//   catom  ::= 'return' value | 'force' value | 'fix' catom | op '(' ... ')'
//            | 'case' value 'of' '{' 'zero' '->' comp '|' 'succ' x '->' comp '}'
//            | 'pm' value 'as' '{' ('inj' label x '->' comp) ('|' ...)* '}'
//            | '<' label '=' comp (',' ...)* '>' | '(' comp (':' type)? ')'
//   value  ::= 'succ' value | 'thunk' (prefix-comp | app) | 'inj' label value | vatom
//   vatom  ::= numeral | x | 'zero' | '(' ')' | '(' value ',' value ')' | '(' value (':' type)? ')'

#include <algorithm>
#include <charconv>
#include <string>
#include <string_view>
#include <variant>

#include "lexer.hpp"
#include "signature.hpp"
#include "syntax.hpp"

namespace cbpvq {

using AnyType = std::variant<ValType, ComType>;

class Parser {
 public:
  Parser(std::string_view src, const EffectSignature* sig) : ts_(src), sig_(sig) {}
  Parser(TokenStream& shared, const EffectSignature* sig) : external_(&shared), sig_(sig) {}

  TokenStream& tokens() { return external_ ? *external_ : ts_; }

  // ----- types -----------------------------------------------------------

  AnyType any_type() {
    const SourcePos pos = tokens().peek().pos;
    AnyType lhs = sum_type();
    if (tokens().accept_symbol("->")) {
      const ValType* dom = std::get_if<ValType>(&lhs);
      if (!dom) throw ParseError("the domain of '->' must be a value type", pos);
      const ComType cod = com_type();
      return arrow_type(*dom, cod);
    }
    return lhs;
  }

  ValType val_type() {
    const SourcePos pos = tokens().peek().pos;
    AnyType t = any_type();
    if (auto* a = std::get_if<ValType>(&t)) return *a;
    throw ParseError("expected a value type, found a computation type", pos);
  }

  ComType com_type() {
    const SourcePos pos = tokens().peek().pos;
    AnyType t = any_type();
    if (auto* c = std::get_if<ComType>(&t)) return *c;
    throw ParseError("expected a computation type, found a value type", pos);
  }

  // ----- terms -----------------------------------------------------------

  ComTerm computation() {
    auto& ts = tokens();
    const SourcePos pos = ts.peek().pos;
    if (auto prefix = prefix_form()) return prefix;
    ComTerm m = application();
    if (ts.accept_keyword("to")) {
      const Name x = binder();
      ts.expect_symbol(".");
      ComTerm rest = computation();
      return make_com(com::To{m, x, rest}, pos);
    }
    return m;
  }

  ValTerm value() {
    auto& ts = tokens();
    const SourcePos pos = ts.peek().pos;
    if (ts.accept_keyword("succ")) return make_val(val::Succ{value()}, pos);
    if (ts.accept_keyword("thunk")) {
      ComTerm body = prefix_form();
      if (!body) body = application();
      return make_val(val::Thunk{body}, pos);
    }
    if (ts.accept_keyword("inj")) {
      const Label l = label();
      return make_val(val::Inj{l, value(), nullptr}, pos);
    }
    return value_atom();
  }

  ComTerm whole_program() {
    ComTerm m = computation();
    if (!tokens().at_end()) tokens().fail("unexpected trailing input");
    return m;
  }

  ValTerm whole_value() {
    ValTerm v = value();
    if (!tokens().at_end()) tokens().fail("unexpected trailing input");
    return v;
  }

  bool starts_value_atom() const {
    auto& ts = const_cast<Parser*>(this)->tokens();
    const Token& t = ts.peek();
    if (t.kind == Tok::number) return true;
    if (t.kind == Tok::ident) return !is_reserved(t.text) || t.text == "zero";
    return t.kind == Tok::symbol && t.text == "(" && looks_like_value_paren();
  }

  Label label() {
    auto& ts = tokens();
    const Token& t = ts.peek();
    if (t.kind == Tok::ident || t.kind == Tok::number) return ts.next().text;
    ts.fail("expected a label");
  }

  static bool is_reserved(std::string_view s) {
    static constexpr std::string_view words[] = {"return", "thunk", "force", "to",  "let", "in",   "case",
                                                 "of",     "zero",  "succ",  "inj", "pm",  "as",   "fix",
                                                 "unit",   "nat",   "sum",   "prod"};
    return std::find(std::begin(words), std::end(words), s) != std::end(words);
  }

 private:
  // Types: sum ('+'), pair ('*'), prefix ('U'/'F'), atoms.
  AnyType sum_type() {
    const SourcePos pos = tokens().peek().pos;
    AnyType first = pair_type_level();
    if (!tokens().is_symbol("+")) return first;
    std::vector<std::pair<Label, ValType>> cases;
    auto push = [&](AnyType t) {
      auto* a = std::get_if<ValType>(&t);
      if (!a) throw ParseError("sum components must be value types", pos);
      cases.emplace_back(std::to_string(cases.size()), *a);
    };
    push(first);
    while (tokens().accept_symbol("+")) push(pair_type_level());
    return sum_type_checked(std::move(cases), pos);
  }

  AnyType pair_type_level() {
    const SourcePos pos = tokens().peek().pos;
    AnyType first = prefix_type();
    if (!tokens().accept_symbol("*")) return first;
    AnyType second = pair_type_level();
    auto* a = std::get_if<ValType>(&first);
    auto* b = std::get_if<ValType>(&second);
    if (!a || !b) throw ParseError("pair components must be value types", pos);
    return pair_type(*a, *b);
  }

  AnyType prefix_type() {
    auto& ts = tokens();
    const SourcePos pos = ts.peek().pos;
    if (ts.accept_keyword("U")) {
      AnyType inner = prefix_type();
      auto* c = std::get_if<ComType>(&inner);
      if (!c) throw ParseError("'U' expects a computation type", pos);
      return thunk_type(*c);
    }
    if (ts.accept_keyword("F")) {
      AnyType inner = prefix_type();
      auto* a = std::get_if<ValType>(&inner);
      if (!a) throw ParseError("'F' expects a value type", pos);
      return producer_type(*a);
    }
    return atom_type();
  }

  AnyType atom_type() {
    auto& ts = tokens();
    const SourcePos pos = ts.peek().pos;
    if (ts.accept_keyword("unit")) return unit_type();
    if (ts.accept_keyword("nat")) return nat_type();
    if (ts.accept_symbol("(")) {
      AnyType t = any_type();
      ts.expect_symbol(")");
      return t;
    }
    if (ts.accept_keyword("sum")) {
      ts.expect_symbol("{");
      std::vector<std::pair<Label, ValType>> cases;
      do {
        const Label l = label();
        ts.expect_symbol(":");
        cases.emplace_back(l, val_type());
      } while (ts.accept_symbol(","));
      ts.expect_symbol("}");
      return sum_type_checked(std::move(cases), pos);
    }
    if (ts.accept_keyword("prod")) {
      ts.expect_symbol("{");
      std::vector<std::pair<Label, ComType>> comps;
      do {
        const Label l = label();
        ts.expect_symbol(":");
        comps.emplace_back(l, com_type());
      } while (ts.accept_symbol(","));
      ts.expect_symbol("}");
      try {
        return prod_type(std::move(comps));
      } catch (const std::invalid_argument& e) {
        throw ParseError(e.what(), pos);
      }
    }
    ts.fail("expected a type");
  }

  static ValType sum_type_checked(std::vector<std::pair<Label, ValType>> cases, SourcePos pos) {
    try {
      return cbpvq::sum_type(std::move(cases));
    } catch (const std::invalid_argument& e) {
      throw ParseError(e.what(), pos);
    }
  }

  // ----- computations ------------------------------------------------------

  Name binder() {
    const Token t = tokens().expect_ident("variable name");
    if (is_reserved(t.text)) throw ParseError("'" + t.text + "' is a keyword, not a variable", t.pos);
    return t.text;
  }

  /// Forms that extend as far right as possible. Returns nullptr when the
  /// next token does not start one.
  ComTerm prefix_form() {
    auto& ts = tokens();
    const SourcePos pos = ts.peek().pos;
    if (ts.accept_symbol("\\")) {
      const Name x = binder();
      ts.expect_symbol(":");
      const ValType a = val_type();
      ts.expect_symbol(".");
      return make_com(com::Lambda{x, a, computation()}, pos);
    }
    if (ts.accept_keyword("let")) {
      const Name x = binder();
      ts.expect_symbol("=");
      ValTerm v = value();
      ts.expect_keyword("in");
      return make_com(com::Let{x, v, computation()}, pos);
    }
    // `fix x:T. M` abbreviates `fix (\x:T. M)`.
    if (ts.is_keyword("fix") && ts.peek(1).kind == Tok::ident && ts.is_symbol(":", 2)) {
      ts.next();
      const SourcePos lam_pos = ts.peek().pos;
      const Name x = binder();
      ts.expect_symbol(":");
      const ValType a = val_type();
      ts.expect_symbol(".");
      ComTerm body = computation();
      return make_com(com::Fix{make_com(com::Lambda{x, a, body}, lam_pos)}, pos);
    }
    // `pm V as (x, y) -> M`
    if (ts.is_keyword("pm")) {
      const std::size_t mark = ts.position();
      ts.next();
      ValTerm v = value();
      ts.expect_keyword("as");
      if (ts.accept_symbol("(")) {
        const Name x = binder();
        ts.expect_symbol(",");
        const Name y = binder();
        ts.expect_symbol(")");
        ts.expect_symbol("->");
        return make_com(com::CasePair{v, x, y, computation()}, pos);
      }
      ts.reset(mark);
    }
    return nullptr;
  }

  ComTerm application() {
    auto& ts = tokens();
    const SourcePos pos = ts.peek().pos;
    ComTerm head = comp_atom();
    while (true) {
      if (ts.accept_symbol("#")) {
        head = make_com(com::Proj{head, label()}, pos);
      } else if (starts_value_atom()) {
        head = make_com(com::App{head, value_atom()}, pos);
      } else {
        return head;
      }
    }
  }

  ComTerm comp_atom() {
    auto& ts = tokens();
    const Token t = ts.peek();
    const SourcePos pos = t.pos;
    if (ts.accept_keyword("return")) return make_com(com::Return{value()}, pos);
    if (ts.accept_keyword("force")) return make_com(com::Force{value()}, pos);
    if (ts.accept_keyword("fix")) return make_com(com::Fix{comp_atom()}, pos);
    if (ts.accept_keyword("case")) {
      ValTerm v = value();
      ts.expect_keyword("of");
      ts.expect_symbol("{");
      ts.expect_keyword("zero");
      ts.expect_symbol("->");
      ComTerm z = computation();
      ts.expect_symbol("|");
      ts.expect_keyword("succ");
      const Name x = binder();
      ts.expect_symbol("->");
      ComTerm s = computation();
      ts.expect_symbol("}");
      return make_com(com::CaseNat{v, z, x, s}, pos);
    }
    if (ts.accept_keyword("pm")) {
      ValTerm v = value();
      ts.expect_keyword("as");
      ts.expect_symbol("{");
      std::vector<com::SumBranch> branches;
      do {
        ts.expect_keyword("inj");
        const Label l = label();
        const Name x = binder();
        ts.expect_symbol("->");
        branches.push_back({l, x, computation()});
      } while (ts.accept_symbol("|"));
      ts.expect_symbol("}");
      std::sort(branches.begin(), branches.end(),
                [](const auto& a, const auto& b) { return label_less(a.label, b.label); });
      for (std::size_t i = 1; i < branches.size(); ++i)
        if (branches[i].label == branches[i - 1].label)
          throw ParseError("duplicate branch label '" + branches[i].label + "'", pos);
      return make_com(com::CaseSum{v, std::move(branches)}, pos);
    }
    if (ts.accept_symbol("<")) {
      std::vector<std::pair<Label, ComTerm>> comps;
      do {
        const Label l = label();
        ts.expect_symbol("=");
        comps.emplace_back(l, computation());
      } while (ts.accept_symbol(","));
      ts.expect_symbol(">");
      std::sort(comps.begin(), comps.end(), [](const auto& a, const auto& b) { return label_less(a.first, b.first); });
      for (std::size_t i = 1; i < comps.size(); ++i)
        if (comps[i].first == comps[i - 1].first)
          throw ParseError("duplicate tuple label '" + comps[i].first + "'", pos);
      return make_com(com::Tuple{std::move(comps)}, pos);
    }
    if (ts.accept_symbol("(")) {
      ComTerm m = computation();
      if (ts.accept_symbol(":")) {
        const ComType c = com_type();
        const auto* o = std::get_if<com::Op>(&m->v);
        if (!o) throw ParseError("type ascription on computations is only supported on effect operations", pos);
        com::Op annotated = *o;
        annotated.annotation = c;
        m = make_com(std::move(annotated), m->pos);
      }
      ts.expect_symbol(")");
      return m;
    }
    if (t.kind == Tok::ident && !is_reserved(t.text) && (ts.is_symbol("(", 1) || ts.is_symbol("[", 1)))
      return effect_op();
    ts.fail("expected a computation");
  }

  ComTerm effect_op() {
    auto& ts = tokens();
    const Token name_tok = ts.next();
    OpName name{name_tok.text, ""};
    if (ts.accept_symbol("[")) {
      const Token idx = ts.next();
      if (idx.kind != Tok::ident && idx.kind != Tok::number)
        throw ParseError("expected an operator index", idx.pos);
      name.index = idx.text;
      ts.expect_symbol("]");
    }
    if (!sig_) throw ParseError("no effect signature is active; unknown operator '" + name.str() + "'", name_tok.pos);
    const OpDescriptor* d = sig_->find(name);
    if (!d)
      throw ParseError("unknown effect operator '" + name.str() + "' for signature '" + sig_->name() + "'",
                       name_tok.pos);
    ts.expect_symbol("(");
    com::Op node{name, nullptr, std::nullopt, {}, nullptr};
    switch (d->arity.kind) {
      case ArityKind::nat_indexed: {
        node.index_var = binder();
        ts.expect_symbol(".");
        node.children.push_back(computation());
        break;
      }
      case ArityKind::nat_param: {
        node.param = value();
        for (std::size_t i = 0; i < d->arity.count; ++i) {
          ts.expect_symbol(",");
          node.children.push_back(computation());
        }
        break;
      }
      case ArityKind::finite: {
        for (std::size_t i = 0; i < d->arity.count; ++i) {
          if (i) ts.expect_symbol(",");
          node.children.push_back(computation());
        }
        break;
      }
    }
    if (!ts.is_symbol(")"))
      ts.fail("operator '" + name.str() + "' takes " + std::to_string(d->arity.count) + " continuation(s)");
    ts.next();
    return make_com(std::move(node), name_tok.pos);
  }

  // ----- values ------------------------------------------------------------

  /// Distinguishes a parenthesised value from a parenthesised computation
  /// by looking at the tokens after the open paren at offset `at`.
  bool looks_like_value_paren(std::size_t at = 0) const {
    auto& ts = const_cast<Parser*>(this)->tokens();
    const Token& first = ts.peek(at + 1);
    if (first.kind == Tok::symbol && first.text == ")") return true;  // ()
    if (first.kind == Tok::number) return true;
    if (first.kind == Tok::ident) {
      static constexpr std::string_view value_words[] = {"succ", "thunk", "inj", "zero"};
      if (std::find(std::begin(value_words), std::end(value_words), first.text) != std::end(value_words))
        return true;
      if (is_reserved(first.text)) return false;
      // an identifier followed by '[' or '(' is an operator call
      const Token& second = ts.peek(at + 2);
      return !(second.kind == Tok::symbol && (second.text == "(" || second.text == "["));
    }
    if (first.kind == Tok::symbol && first.text == "(") return looks_like_value_paren(at + 1);
    return false;
  }

  ValTerm value_atom() {
    auto& ts = tokens();
    const Token t = ts.peek();
    if (t.kind == Tok::number) {
      ts.next();
      std::uint64_t n = 0;
      auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), n);
      if (ec != std::errc{} || p != t.text.data() + t.text.size())
        throw ParseError("'" + t.text + "' is not a numeral", t.pos);
      ValTerm v = numeral(n);
      return v;
    }
    if (ts.accept_keyword("zero")) return make_val(val::Zero{}, t.pos);
    if (t.kind == Tok::ident) {
      if (is_reserved(t.text)) ts.fail("expected a value");
      ts.next();
      return make_val(val::Var{t.text}, t.pos);
    }
    if (ts.accept_symbol("(")) {
      if (ts.accept_symbol(")")) return make_val(val::Unit{}, t.pos);
      ValTerm a = value();
      if (ts.accept_symbol(",")) {
        ValTerm b = value();
        ts.expect_symbol(")");
        return make_val(val::Pair{a, b}, t.pos);
      }
      if (ts.accept_symbol(":")) {
        const ValType ann = val_type();
        const auto* i = std::get_if<val::Inj>(&a->v);
        if (!i) throw ParseError("type ascription on values is only supported on injections", t.pos);
        a = make_val(val::Inj{i->label, i->payload, ann}, a->pos);
      }
      ts.expect_symbol(")");
      return a;
    }
    ts.fail("expected a value");
  }

  TokenStream ts_{std::vector<Token>{Token{}}};
  TokenStream* external_ = nullptr;
  const EffectSignature* sig_ = nullptr;
};

inline ComTerm parse_program(std::string_view text, const EffectSignature& sig) {
  return Parser(text, &sig).whole_program();
}
inline ValTerm parse_value(std::string_view text, const EffectSignature& sig) {
  return Parser(text, &sig).whole_value();
}
inline AnyType parse_type(std::string_view text) {
  Parser p(text, nullptr);
  AnyType t = p.any_type();
  if (!p.tokens().at_end()) p.tokens().fail("unexpected trailing input");
  return t;
}

}  // namespace cbpvq
