#pragma once

// Infix parser.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' ['-'] integer | '^' '(' ['-'] integer ')')?
//   primary := number | name | name '(' args ')' | '(' expr ')'
//
// Names: x1..x{n-1}, xn (also x{n}), k1..k{n-1}, kn (also k{n}), t, tau, lam,
// pi, and the map-input aliases y*/eta* for x*/k*.
// Functions: exp log sin cos sqrt bracket norm bump tanh cutoff inv.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <string>
#include <string_view>
#include <numbers>
#include <tuple>

#include "collar/cutoff.hpp"
#include "collar/expr.hpp"

namespace collar {

class Parser {
 public:
  Parser(std::string_view src, const VarLayout& lay) : s_(src), lay_(lay) {}

  Expr parse() {
    Expr e = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::ParseError, msg + " at offset " + std::to_string(pos_) + " in '" + std::string(s_) + "'");
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  Expr expr() {
    Expr e = term();
    for (;;) {
      if (accept('+')) e = e + term();
      else if (accept('-')) e = e - term();
      else return e;
    }
  }

  Expr term() {
    Expr e = unary();
    for (;;) {
      if (accept('*')) e = e * unary();
      else if (accept('/')) e = e / unary();
      else return e;
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  int integer_exponent() {
    bool paren = accept('(');
    bool neg = accept('-');
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("exponent must be an integer literal");
    if (pos_ < s_.size() && (s_[pos_] == '.' || s_[pos_] == 'e' || s_[pos_] == 'E')) fail("exponent must be an integer literal");
    int k = std::stoi(std::string(s_.substr(start, pos_ - start)));
    if (paren) expect(')');
    return neg ? -k : k;
  }

  Expr power() {
    Expr base = primary();
    if (accept('^')) return pow(base, integer_exponent());
    return base;
  }

  std::vector<Expr> args() {
    std::vector<Expr> out;
    expect('(');
    if (accept(')')) return out;
    do out.push_back(expr());
    while (accept(','));
    expect(')');
    return out;
  }

  int var_index(std::string_view name) const {
    const int n = lay_.dim();
    auto indexed = [&](std::string_view prefix, int base, int normal) -> int {
      if (name.substr(0, prefix.size()) != prefix) return -1;
      std::string_view rest = name.substr(prefix.size());
      if (rest == "n") return normal;
      if (rest.empty() || !std::all_of(rest.begin(), rest.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
        return -1;
      int i = std::stoi(std::string(rest));
      if (i < 1 || i > n) return -1;
      return i == n ? normal : base + i - 1;
    };
    if (name == "t") return lay_.t();
    if (name == "tau") return lay_.tau();
    if (name == "lam") return lay_.lam();
    for (auto [prefix, base, normal] : {std::tuple{"x", lay_.x(0), lay_.xn()}, std::tuple{"y", lay_.x(0), lay_.xn()},
                                        std::tuple{"k", lay_.k(0), lay_.kn()}, std::tuple{"eta", lay_.k(0), lay_.kn()}}) {
      int v = indexed(prefix, base, normal);
      if (v >= 0) return v;
    }
    return -1;
  }

  Expr call(const std::string& name) {
    auto a = args();
    auto arity = [&](std::size_t lo, std::size_t hi) {
      if (a.size() < lo || a.size() > hi) fail("wrong number of arguments to " + name);
    };
    if (name == "exp") return arity(1, 1), exp(a[0]);
    if (name == "log") return arity(1, 1), log(a[0]);
    if (name == "sin") return arity(1, 1), sin(a[0]);
    if (name == "cos") return arity(1, 1), cos(a[0]);
    if (name == "sqrt") return arity(1, 1), sqrt(a[0]);
    if (name == "bracket") return arity(1, 1), bracket(a[0]);
    if (name == "tanh") return arity(1, 1), 1.0 - 2.0 / (exp(2.0 * a[0]) + 1.0);
    if (name == "cutoff") return arity(1, 1), omega(a[0]);
    if (name == "bump") {
      arity(1, 2);
      int order = 0;
      if (a.size() == 2) {
        if (!a[1].is_const() || a[1].const_value() < 0 || a[1].const_value() != std::floor(a[1].const_value()))
          fail("bump order must be a non-negative integer");
        order = static_cast<int>(a[1].const_value());
      }
      return bump(a[0], order);
    }
    if (name == "inv") {
      arity(2, 2);
      return inverse(a[0], lay_.lam(), a[1]);
    }
    if (name == "norm") {
      std::vector<int> vars;
      for (const auto& e : a) {
        if (e.node().op != Op::Var) fail("norm takes variables only");
        vars.push_back(e.node().param);
      }
      return norm(vars);
    }
    fail("unknown function '" + name + "'");
  }

  Expr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      char* end = nullptr;
      std::string tmp(s_.substr(pos_));
      double v = std::strtod(tmp.c_str(), &end);
      std::size_t used = static_cast<std::size_t>(end - tmp.c_str());
      if (used == 0) fail("bad number");
      pos_ += used;
      return constant(v);
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
      std::string name(s_.substr(start, pos_ - start));
      skip();
      if (pos_ < s_.size() && s_[pos_] == '(') return call(name);
      if (name == "pi") return constant(std::numbers::pi);
      int v = var_index(name);
      if (v < 0) fail("unknown name '" + name + "'");
      return var(v);
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  std::string_view s_;
  VarLayout lay_;
  std::size_t pos_ = 0;
};

inline Expr parse(std::string_view src, const VarLayout& lay) { return Parser(src, lay).parse(); }

// Test functions live in a one-variable space: t -> slot 0.
inline Expr parse_test_function(std::string_view src) {
  VarLayout lay(1);
  Expr e = parse(src, lay);
  if (e.deps() & ~(std::uint64_t{1} << lay.t()))
    throw Error(ErrorKind::ParseError, "test function may only depend on t");
  return substitute(e, {{lay.t(), var(0)}});
}

}  // namespace collar
