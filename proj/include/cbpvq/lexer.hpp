#pragma once

#include <cctype>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "syntax.hpp"

namespace cbpvq {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& msg, SourcePos pos)
      : std::runtime_error(std::to_string(pos.line) + ":" + std::to_string(pos.column) + ": " + msg), pos_(pos) {}
  SourcePos pos() const { return pos_; }

 private:
  SourcePos pos_;
};

enum class Tok { ident, number, symbol, end };

struct Token {
  Tok kind = Tok::end;
  std::string text;
  SourcePos pos;
};

/// Splits program, type, formula and value text into tokens. `--` starts a
/// line comment (`#` is taken by projection).
inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };
  auto ident_char = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\''; };
  while (i < src.size()) {
    const char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    if (c == '-' && i + 1 < src.size() && src[i + 1] == '-') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    const SourcePos pos{line, col};
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j + 1 < src.size() && src[j] == '.' && std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j + 1 < src.size() && (src[j] == 'e' || src[j] == 'E') &&
          (std::isdigit(static_cast<unsigned char>(src[j + 1])) || src[j + 1] == '-')) {
        ++j;
        if (src[j] == '-') ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      out.push_back({Tok::number, std::string(src.substr(i, j - i)), pos});
      advance(j - i);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      out.push_back({Tok::ident, std::string(src.substr(i, j - i)), pos});
      advance(j - i);
      continue;
    }
    static constexpr std::string_view two_char[] = {"->", ":="};
    bool matched = false;
    for (auto sym : two_char) {
      if (src.substr(i, 2) == sym) {
        out.push_back({Tok::symbol, std::string(sym), pos});
        advance(2);
        matched = true;
        break;
      }
    }
    if (matched) continue;
    static constexpr std::string_view singles = "(){}[]<>,.:=|#\\+*/!&-";
    if (singles.find(c) != std::string_view::npos) {
      out.push_back({Tok::symbol, std::string(1, c), pos});
      advance(1);
      continue;
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos);
  }
  out.push_back({Tok::end, "", {line, col}});
  return out;
}

/// Cursor over a token vector with the usual peek/expect helpers.
class TokenStream {
 public:
  explicit TokenStream(std::vector<Token> toks) : toks_(std::move(toks)) {}
  explicit TokenStream(std::string_view src) : toks_(tokenize(src)) {}

  const Token& peek(std::size_t ahead = 0) const {
    const std::size_t k = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[k];
  }
  Token next() {
    Token t = peek();
    if (pos_ < toks_.size() - 1) ++pos_;
    return t;
  }
  bool at_end() const { return peek().kind == Tok::end; }
  bool is_symbol(std::string_view s, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::symbol && peek(ahead).text == s;
  }
  bool is_keyword(std::string_view s, std::size_t ahead = 0) const {
    return peek(ahead).kind == Tok::ident && peek(ahead).text == s;
  }
  bool accept_symbol(std::string_view s) {
    if (!is_symbol(s)) return false;
    next();
    return true;
  }
  bool accept_keyword(std::string_view s) {
    if (!is_keyword(s)) return false;
    next();
    return true;
  }
  Token expect_symbol(std::string_view s) {
    if (!is_symbol(s)) fail("expected '" + std::string(s) + "'");
    return next();
  }
  Token expect_keyword(std::string_view s) {
    if (!is_keyword(s)) fail("expected '" + std::string(s) + "'");
    return next();
  }
  Token expect_ident(std::string_view what = "identifier") {
    if (peek().kind != Tok::ident) fail("expected " + std::string(what));
    return next();
  }
  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = peek();
    const std::string found = t.kind == Tok::end ? "end of input" : "'" + t.text + "'";
    throw ParseError(msg + ", found " + found, t.pos);
  }
  std::size_t position() const { return pos_; }
  void reset(std::size_t p) { pos_ = p; }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace cbpvq
