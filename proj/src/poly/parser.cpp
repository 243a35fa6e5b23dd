#include "zenosos/poly/parser.hpp"

#include <cctype>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <limits>

namespace zenosos::poly {

ParseError::ParseError(const std::string& what, std::size_t position)
    : std::runtime_error(what + " at position " + std::to_string(position)),
      position_(position) {}

namespace {

class Parser {
 public:
  Parser(std::string_view text, const VariableList& vars) : text_(text), vars_(vars) {}

  Polynomial run() {
    skip_ws();
    if (pos_ == text_.size()) throw ParseError("empty expression", pos_);
    Polynomial p = expr();
    skip_ws();
    if (pos_ != text_.size()) {
      throw ParseError(std::string("unexpected character '") + text_[pos_] + "'", pos_);
    }
    return p;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  Polynomial expr() {
    Polynomial acc = term();
    for (;;) {
      if (accept('+')) {
        acc = acc + term();
      } else if (accept('-')) {
        acc = acc - term();
      } else {
        return acc;
      }
    }
  }

  Polynomial term() {
    Polynomial acc = unary();
    while (accept('*')) acc = acc * unary();
    return acc;
  }

  Polynomial unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return factor();
  }

  Polynomial factor() {
    Polynomial b = base();
    if (accept('^')) {
      skip_ws();
      std::size_t start = pos_;
      if (pos_ < text_.size() && text_[pos_] == '-') {
        throw ParseError("negative exponent", pos_);
      }
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      if (start == pos_) throw ParseError("expected integer exponent", pos_);
      if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E')) {
        throw ParseError("non-integer exponent", pos_);
      }
      unsigned k = 0;
      auto res = std::from_chars(text_.data() + start, text_.data() + pos_, k);
      if (res.ec != std::errc() || k > 1000) throw ParseError("exponent out of range", start);
      return b.pow(k);
    }
    return b;
  }

  Polynomial base() {
    skip_ws();
    if (pos_ >= text_.size()) throw ParseError("unexpected end of expression", pos_);
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      Polynomial inner = expr();
      if (!accept(')')) throw ParseError("expected ')'", pos_);
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        ++pos_;
      }
      std::string name(text_.substr(start, pos_ - start));
      for (std::size_t i = 0; i < vars_.size(); ++i) {
        if (vars_[i] == name) {
          Polynomial::TermMap t;
          t.emplace(Monomial::variable(static_cast<std::uint32_t>(i)), 1.0);
          return Polynomial(vars_, std::move(t));
        }
      }
      throw ParseError("undeclared variable '" + name + "'", start);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t start = pos_;
      while (pos_ < text_.size() &&
             (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
        ++pos_;
      }
      if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
        std::size_t save = pos_;
        ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
        std::size_t digits = pos_;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        if (digits == pos_) pos_ = save;
      }
      double v = 0.0;
      auto res = std::from_chars(text_.data() + start, text_.data() + pos_, v);
      if (res.ec != std::errc() || res.ptr != text_.data() + pos_) {
        throw ParseError("malformed number", start);
      }
      return Polynomial::constant(v, vars_);
    }
    throw ParseError(std::string("unexpected character '") + c + "'", pos_);
  }

  std::string_view text_;
  const VariableList& vars_;
  std::size_t pos_ = 0;
};

}  // namespace

Polynomial parse(std::string_view text, const VariableList& variables) {
  return Parser(text, variables).run();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string to_string(const Polynomial& p) {
  if (p.is_zero()) return "0";
  std::string out;
  bool first = true;
  for (const auto& [m, c] : p.terms()) {
    double mag = c;
    if (!first) {
      out += c < 0 ? " - " : " + ";
      mag = std::abs(c);
    }
    first = false;
    // Negative leading values print as "-v" which unary minus reads back.
    std::string factors;
    for (const auto& f : m.factors()) {
      if (!factors.empty()) factors += "*";
      factors += p.variables()[f.var];
      if (f.exp > 1) factors += "^" + std::to_string(f.exp);
    }
    if (factors.empty()) {
      out += format_double(mag);
    } else if (mag == 1.0) {
      out += factors;
    } else if (mag == -1.0) {
      out += "-" + factors;
    } else {
      out += format_double(mag) + "*" + factors;
    }
  }
  return out;
}

}  // namespace zenosos::poly
