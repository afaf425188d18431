#pragma once

// Concrete-syntax printing of types and terms. The output of to_string is
// accepted by the parser and parses back to a structurally equal tree.

#include <string>
#include <vector>

#include "syntax.hpp"

namespace cbpvq {

namespace detail {

inline bool is_sum_sugar(const ty::Sum& s) {
  if (s.cases.size() < 2) return false;
  for (std::size_t i = 0; i < s.cases.size(); ++i)
    if (s.cases[i].first != std::to_string(i)) return false;
  return true;
}

// Type precedence: 0 arrow, 1 sum, 2 pair, 3 prefix (U/F), 4 atom.
inline void print_type(std::string& out, const ComType& c, int level);

inline void print_type(std::string& out, const ValType& a, int level) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ty::Unit>) {
          out += "unit";
        } else if constexpr (std::is_same_v<T, ty::Nat>) {
          out += "nat";
        } else if constexpr (std::is_same_v<T, ty::Thunk>) {
          if (level > 3) out += "(";
          out += "U ";
          print_type(out, n.body, 3);
          if (level > 3) out += ")";
        } else if constexpr (std::is_same_v<T, ty::Sum>) {
          if (is_sum_sugar(n)) {
            if (level > 1) out += "(";
            for (std::size_t i = 0; i < n.cases.size(); ++i) {
              if (i) out += " + ";
              print_type(out, n.cases[i].second, 2);
            }
            if (level > 1) out += ")";
          } else {
            out += "sum{";
            for (std::size_t i = 0; i < n.cases.size(); ++i) {
              if (i) out += ", ";
              out += n.cases[i].first + ": ";
              print_type(out, n.cases[i].second, 0);
            }
            out += "}";
          }
        } else if constexpr (std::is_same_v<T, ty::Pair>) {
          if (level > 2) out += "(";
          print_type(out, n.first, 3);
          out += " * ";
          print_type(out, n.second, 2);
          if (level > 2) out += ")";
        }
      },
      a->v);
}

inline void print_type(std::string& out, const ComType& c, int level) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, ty::Producer>) {
          if (level > 3) out += "(";
          out += "F ";
          print_type(out, n.result, 3);
          if (level > 3) out += ")";
        } else if constexpr (std::is_same_v<T, ty::Arrow>) {
          if (level > 0) out += "(";
          print_type(out, n.domain, 1);
          out += " -> ";
          print_type(out, n.codomain, 0);
          if (level > 0) out += ")";
        } else {
          out += "prod{";
          for (std::size_t i = 0; i < n.components.size(); ++i) {
            if (i) out += ", ";
            out += n.components[i].first + ": ";
            print_type(out, n.components[i].second, 0);
          }
          out += "}";
        }
      },
      c->v);
}

/// Term printer. In canonical mode bound variables are renamed by binding
/// depth and type annotations on injections/operators are dropped, so two
/// alpha-equivalent terms print identically.
class TermPrinter {
 public:
  explicit TermPrinter(bool canonical) : canonical_(canonical) {}

  // Value levels: 0 full (prefix forms allowed), 1 atom.
  void value(const ValTerm& v, int level) {
    if (auto n = numeral_value(v)) {
      out += std::to_string(*n);
      return;
    }
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, val::Unit>) {
            out += "()";
          } else if constexpr (std::is_same_v<T, val::Zero>) {
            out += "0";
          } else if constexpr (std::is_same_v<T, val::Succ>) {
            open(level > 0);
            out += "succ ";
            value(n.pred, 0);
            close(level > 0);
          } else if constexpr (std::is_same_v<T, val::Var>) {
            out += lookup(n.name);
          } else if constexpr (std::is_same_v<T, val::Thunk>) {
            open(level > 0);
            out += "thunk ";
            com(n.body, 3);
            close(level > 0);
          } else if constexpr (std::is_same_v<T, val::Inj>) {
            const bool annotated = n.annotation && !canonical_;
            open(annotated || level > 0);
            out += "inj " + n.label + " ";
            value(n.payload, 0);
            if (annotated) {
              out += " : ";
              print_type(out, n.annotation, 0);
            }
            close(annotated || level > 0);
          } else if constexpr (std::is_same_v<T, val::Pair>) {
            out += "(";
            value(n.first, 0);
            out += ", ";
            value(n.second, 0);
            out += ")";
          }
        },
        v->v);
  }

  // Computation levels: 0 full, 1 application chain, 2 application head, 3 atom.
  void com(const ComTerm& m, int level) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, com::CaseNat>) {
            out += "case ";
            value(n.scrutinee, 0);
            out += " of {zero -> ";
            com(n.if_zero, 0);
            out += " | succ ";
            Scope s(*this, {n.pred});
            out += lookup(n.pred) + " -> ";
            com(n.if_succ, 0);
            out += "}";
          } else if constexpr (std::is_same_v<T, com::Let>) {
            open(level > 0);
            out += "let ";
            std::string bound_text;
            {
              TermPrinter sub(*this);
              sub.out.clear();
              sub.value(n.bound, 0);
              bound_text = sub.out;
            }
            Scope s(*this, {n.var});
            out += lookup(n.var) + " = " + bound_text + " in ";
            com(n.body, 0);
            close(level > 0);
          } else if constexpr (std::is_same_v<T, com::Return>) {
            open(level > 1);
            out += "return ";
            value(n.value, 0);
            close(level > 1);
          } else if constexpr (std::is_same_v<T, com::To>) {
            open(level > 0);
            com(n.first, 1);
            Scope s(*this, {n.var});
            out += " to " + lookup(n.var) + ". ";
            com(n.rest, 0);
            close(level > 0);
          } else if constexpr (std::is_same_v<T, com::Force>) {
            open(level > 1);
            out += "force ";
            value(n.thunk, 0);
            close(level > 1);
          } else if constexpr (std::is_same_v<T, com::Lambda>) {
            open(level > 0);
            Scope s(*this, {n.var});
            out += "\\" + lookup(n.var) + ":";
            print_type(out, n.domain, 1);
            out += ". ";
            com(n.body, 0);
            close(level > 0);
          } else if constexpr (std::is_same_v<T, com::App>) {
            open(level > 2);
            com(n.fn, 2);
            out += " ";
            value(n.arg, 1);
            close(level > 2);
          } else if constexpr (std::is_same_v<T, com::CaseSum>) {
            out += "pm ";
            value(n.scrutinee, 0);
            out += " as {";
            for (std::size_t i = 0; i < n.branches.size(); ++i) {
              if (i) out += " | ";
              const auto& b = n.branches[i];
              Scope s(*this, {b.var});
              out += "inj " + b.label + " " + lookup(b.var) + " -> ";
              com(b.body, 0);
            }
            out += "}";
          } else if constexpr (std::is_same_v<T, com::CasePair>) {
            open(level > 0);
            out += "pm ";
            value(n.scrutinee, 0);
            Scope s(*this, {n.first, n.second});
            out += " as (" + lookup(n.first) + ", " + lookup(n.second) + ") -> ";
            com(n.body, 0);
            close(level > 0);
          } else if constexpr (std::is_same_v<T, com::Tuple>) {
            out += "<";
            for (std::size_t i = 0; i < n.components.size(); ++i) {
              if (i) out += ", ";
              out += n.components[i].first + " = ";
              com(n.components[i].second, 0);
            }
            out += ">";
          } else if constexpr (std::is_same_v<T, com::Proj>) {
            open(level > 2);
            com(n.tuple, 2);
            out += " # " + n.label;
            close(level > 2);
          } else if constexpr (std::is_same_v<T, com::Fix>) {
            open(level > 1);
            out += "fix ";
            com(n.body, 3);
            close(level > 1);
          } else if constexpr (std::is_same_v<T, com::Op>) {
            const bool annotated = n.annotation && !canonical_;
            if (annotated) out += "(";
            out += n.op.str() + "(";
            if (n.index_var) {
              Scope s(*this, {*n.index_var});
              out += lookup(*n.index_var) + ". ";
              com(n.children.front(), 0);
            } else {
              bool first = true;
              if (n.param) {
                value(n.param, 0);
                first = false;
              }
              for (const auto& c : n.children) {
                if (!first) out += ", ";
                first = false;
                com(c, 0);
              }
            }
            out += ")";
            if (annotated) {
              out += " : ";
              print_type(out, n.annotation, 0);
              out += ")";
            }
          }
        },
        m->v);
  }

  std::string out;

 private:
  struct Scope {
    TermPrinter& p;
    std::size_t mark;
    Scope(TermPrinter& printer, std::initializer_list<Name> names) : p(printer), mark(printer.env_.size()) {
      for (const auto& n : names) {
        std::string shown = p.canonical_ ? "v" + std::to_string(p.env_.size()) : n;
        p.env_.emplace_back(n, std::move(shown));
      }
    }
    ~Scope() { p.env_.resize(mark); }
  };

  std::string lookup(const Name& n) const {
    for (auto it = env_.rbegin(); it != env_.rend(); ++it)
      if (it->first == n) return it->second;
    return n;
  }
  void open(bool b) {
    if (b) out += "(";
  }
  void close(bool b) {
    if (b) out += ")";
  }

  bool canonical_;
  std::vector<std::pair<Name, std::string>> env_;
};

}  // namespace detail

inline std::string to_string(const ValType& a) {
  std::string s;
  detail::print_type(s, a, 0);
  return s;
}
inline std::string to_string(const ComType& c) {
  std::string s;
  detail::print_type(s, c, 0);
  return s;
}
inline std::string to_string(const ValTerm& v) {
  detail::TermPrinter p(false);
  p.value(v, 0);
  return p.out;
}
inline std::string to_string(const ComTerm& m) {
  detail::TermPrinter p(false);
  p.com(m, 0);
  return p.out;
}
inline std::string to_string(const Term& t) {
  return std::visit([](const auto& x) { return to_string(x); }, t);
}

/// Alpha-invariant key: equal keys iff the terms are alpha-equivalent
/// (ignoring type annotations on injections and operators).
inline std::string term_key(const ValTerm& v) {
  detail::TermPrinter p(true);
  p.value(v, 0);
  return p.out;
}
inline std::string term_key(const ComTerm& m) {
  detail::TermPrinter p(true);
  p.com(m, 0);
  return p.out;
}

inline bool alpha_equal(const ValTerm& a, const ValTerm& b) { return a == b || term_key(a) == term_key(b); }
inline bool alpha_equal(const ComTerm& a, const ComTerm& b) { return a == b || term_key(a) == term_key(b); }

}  // namespace cbpvq
