#pragma once

#include <cctype>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hahn/rootfind.hpp"

namespace hahn::format {

// Grammar shared by every text input:
//
//   expr   := ['+'|'-'] term (('+'|'-') term)*
//   term   := atom ('*' atom)*
//   atom   := integer | 'g' ['^' integer] | 't' ['^' ratexp]
//           | 'x' ['^' integer] | '(' expr ')'
//   ratexp := ['-'] integer | '(' ['-'] integer ['/' integer] ')'
//
// Whitespace is insignificant. Division exists only inside a parenthesized
// exponent; anywhere else '/' is a syntax error. The printers below emit a
// canonical form of this grammar, so parse . print is the identity.

inline void syntax_fail(size_t pos, const std::string& msg) {
  fail(Errc::SyntaxError, msg + " (at offset " + std::to_string(pos) + ")");
}

namespace detail {

struct Token {
  enum Kind { Integer, Ident, Symbol, End } kind = End;
  std::string text;
  size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string src) : src_(std::move(src)) { advance(); }

  const Token& peek() const { return tok_; }

  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

  bool accept_symbol(char c) {
    if (tok_.kind == Token::Symbol && tok_.text[0] == c) {
      advance();
      return true;
    }
    return false;
  }

  void expect_symbol(char c) {
    if (!accept_symbol(c)) syntax_fail(tok_.pos, std::string("expected '") + c + "'");
  }

  void expect_end() const {
    if (tok_.kind != Token::End) syntax_fail(tok_.pos, "unexpected trailing input");
  }

 private:
  void advance() {
    while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) ++i_;
    tok_.pos = i_;
    if (i_ >= src_.size()) {
      tok_ = {Token::End, "", i_};
      return;
    }
    char c = src_[i_];
    if (std::isdigit(static_cast<unsigned char>(c))) {
      size_t j = i_;
      while (j < src_.size() && std::isdigit(static_cast<unsigned char>(src_[j]))) ++j;
      tok_ = {Token::Integer, src_.substr(i_, j - i_), i_};
      i_ = j;
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      size_t j = i_;
      while (j < src_.size() && std::isalpha(static_cast<unsigned char>(src_[j]))) ++j;
      tok_ = {Token::Ident, src_.substr(i_, j - i_), i_};
      i_ = j;
      return;
    }
    tok_ = {Token::Symbol, std::string(1, c), i_};
    ++i_;
  }

  std::string src_;
  size_t i_ = 0;
  Token tok_;
};

// Dense polynomial in x with literal series coefficients, lowest degree first.
using PolyVec = std::vector<Series>;

inline Series pv_zero_series(const Field& f) { return Series::from_terms(f, {}); }

inline void pv_trim(PolyVec& v) {
  while (v.size() > 1 && hahn::detail::exact_zero(v.back())) v.pop_back();
}

inline PolyVec pv_add(const PolyVec& a, const PolyVec& b) {
  const Field& f = a[0].field();
  PolyVec out(std::max(a.size(), b.size()), pv_zero_series(f));
  for (size_t i = 0; i < out.size(); ++i) {
    if (i < a.size() && i < b.size())
      out[i] = add(a[i], b[i]);
    else
      out[i] = i < a.size() ? a[i] : b[i];
  }
  pv_trim(out);
  return out;
}

inline PolyVec pv_neg(const PolyVec& a) {
  PolyVec out;
  out.reserve(a.size());
  for (const Series& s : a) out.push_back(negate(s));
  return out;
}

inline PolyVec pv_mul(const PolyVec& a, const PolyVec& b) {
  const Field& f = a[0].field();
  PolyVec out(a.size() + b.size() - 1, pv_zero_series(f));
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) out[i + j] = add(out[i + j], mul(a[i], b[j]));
  pv_trim(out);
  return out;
}

inline int64_t parse_plain_int(Lexer& lex, const char* what) {
  const Token& t = lex.peek();
  if (t.kind != Token::Integer) syntax_fail(t.pos, std::string("expected ") + what);
  int64_t v = 0;
  try {
    v = std::stoll(lex.next().text);
  } catch (const std::exception&) {
    syntax_fail(t.pos, std::string(what) + " out of range");
  }
  return v;
}

inline ExpQ parse_ratexp(int64_t p, Lexer& lex) {
  // Bare form: an optionally negated integer.
  if (!lex.peek().text.empty() && lex.peek().text[0] != '(') {
    bool neg = lex.accept_symbol('-');
    int64_t n = parse_plain_int(lex, "exponent");
    return ExpQ(p, neg ? -n : n);
  }
  lex.expect_symbol('(');
  bool neg = lex.accept_symbol('-');
  int64_t num = parse_plain_int(lex, "exponent numerator");
  int64_t den = 1;
  if (lex.accept_symbol('/')) den = parse_plain_int(lex, "exponent denominator");
  lex.expect_symbol(')');
  return ExpQ(p, BigInt(neg ? -num : num), BigInt(den));
}

class ExprParser {
 public:
  ExprParser(const Field& field, Lexer& lex) : f_(field), lex_(lex) {}

  PolyVec expr() {
    bool neg = false;
    if (lex_.accept_symbol('-'))
      neg = true;
    else
      lex_.accept_symbol('+');
    PolyVec acc = term();
    if (neg) acc = pv_neg(acc);
    for (;;) {
      if (lex_.accept_symbol('+'))
        acc = pv_add(acc, term());
      else if (lex_.accept_symbol('-'))
        acc = pv_add(acc, pv_neg(term()));
      else
        return acc;
    }
  }

 private:
  PolyVec term() {
    PolyVec acc = atom();
    while (lex_.accept_symbol('*')) acc = pv_mul(acc, atom());
    return acc;
  }

  PolyVec atom() {
    const Token& t = lex_.peek();
    if (t.kind == Token::Integer) {
      int64_t v = parse_plain_int(lex_, "coefficient");
      return scalar(f_.from_int(v));
    }
    if (t.kind == Token::Ident && t.text == "g") {
      lex_.next();
      Fq v = f_.gen();
      if (lex_.accept_symbol('^')) {
        int64_t k = parse_plain_int(lex_, "generator power");
        Fq acc = f_.one();
        for (int64_t i = 0; i < k; ++i) acc = acc * v;
        v = acc;
      }
      return scalar(v);
    }
    if (t.kind == Token::Ident && t.text == "t") {
      lex_.next();
      ExpQ e(f_.p(), 1);
      if (lex_.accept_symbol('^')) e = parse_ratexp(f_.p(), lex_);
      if (e.is_zero()) return scalar(f_.one());
      return {Series::from_terms(f_, {{e, f_.one()}})};
    }
    if (t.kind == Token::Ident && t.text == "x") {
      lex_.next();
      int64_t k = 1;
      if (lex_.accept_symbol('^')) k = parse_plain_int(lex_, "variable power");
      if (k < 0 || k > 64) syntax_fail(t.pos, "variable power outside [0, 64]");
      PolyVec out(size_t(k) + 1, pv_zero_series(f_));
      out.back() = Series::from_terms(f_, {{ExpQ(f_.p(), 0), f_.one()}});
      return out;
    }
    if (t.kind == Token::Symbol && t.text[0] == '(') {
      lex_.next();
      PolyVec inner = expr();
      lex_.expect_symbol(')');
      return inner;
    }
    syntax_fail(t.pos, "expected a coefficient, 'g', 't', 'x', or '('");
    return {};
  }

  PolyVec scalar(const Fq& v) {
    if (v.is_zero()) return {pv_zero_series(f_)};
    return {Series::from_terms(f_, {{ExpQ(f_.p(), 0), v}})};
  }

  const Field& f_;
  Lexer& lex_;
};

}  // namespace detail

// Polynomial in x over literal series coefficients, constant term first.
inline std::vector<Series> parse_poly_expr(const Field& field, const std::string& text) {
  detail::Lexer lex(text);
  detail::ExprParser parser(field, lex);
  detail::PolyVec v = parser.expr();
  lex.expect_end();
  return v;
}

// Expression that must not mention x: a plain series over the field.
inline Series parse_series_expr(const Field& field, const std::string& text) {
  detail::Lexer lex(text);
  detail::ExprParser parser(field, lex);
  detail::PolyVec v = parser.expr();
  lex.expect_end();
  if (v.size() > 1) syntax_fail(0, "series input may not mention x");
  return v[0];
}

// t-exponent in the shape the expression grammar reads back: bare integers,
// parenthesized rationals.
inline std::string print_exp(const ExpQ& e) {
  if (e.is_integer()) return e.to_string();
  return "(" + e.to_string() + ")";
}

namespace detail {

inline std::string print_coeff(const Fq& c) {
  std::string s = c.to_string();
  if (s.find('+') != std::string::npos) return "(" + s + ")";
  return s;
}

// One product `c*t^e`, with unit coefficients and t^0 elided.
inline std::string print_term(const ExpQ& e, const Fq& c) {
  std::string cs = print_coeff(c);
  if (e.is_zero()) return cs;
  std::string ts = e == ExpQ(e.p(), 1) ? "t" : "t^" + print_exp(e);
  if (c == c.field().one()) return ts;
  return cs + "*" + ts;
}

}  // namespace detail

inline std::string print_series_expr(const Series& s) {
  const auto* lit = s.literal();
  if (!lit) fail(Errc::InvalidArgument, "only literal series serialize to expressions");
  if (lit->empty()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [e, c] : *lit) {
    if (!first) os << " + ";
    first = false;
    os << detail::print_term(e, c);
  }
  return os.str();
}

inline std::string print_poly_expr(const std::vector<Series>& coeffs) {
  std::ostringstream os;
  bool first = true;
  for (size_t i = coeffs.size(); i-- > 0;) {
    const Series& c = coeffs[i];
    const auto* lit = c.literal();
    if (!lit) fail(Errc::InvalidArgument, "only literal coefficients serialize to expressions");
    if (lit->empty()) continue;
    if (!first) os << " + ";
    first = false;
    std::string xs = i == 0 ? "" : (i == 1 ? "x" : "x^" + std::to_string(i));
    bool unit = lit->size() == 1 && lit->begin()->first.is_zero() &&
                lit->begin()->second == c.field().one();
    if (unit) {
      os << (xs.empty() ? "1" : xs);
      continue;
    }
    std::string cs = lit->size() == 1
                         ? detail::print_term(lit->begin()->first, lit->begin()->second)
                         : "(" + print_series_expr(c) + ")";
    os << cs << (xs.empty() ? "" : "*" + xs);
  }
  if (first) os << "0";
  return os.str();
}

// Series-with-certificate form used by certification jobs:
//   series a=1 b=0 c=1 table{-1/2:1,-1/4:1}
// Exponents must lie inside the declared certificate.
inline Series parse_certify_spec(const Field& field, const std::string& text) {
  detail::Lexer lex(text);
  detail::Token head = lex.next();
  if (head.kind != detail::Token::Ident || head.text != "series")
    syntax_fail(head.pos, "expected 'series'");
  int64_t vals[3] = {0, 0, 0};
  const char* names[3] = {"a", "b", "c"};
  for (int i = 0; i < 3; ++i) {
    detail::Token k = lex.next();
    if (k.kind != detail::Token::Ident || k.text != names[i])
      syntax_fail(k.pos, std::string("expected '") + names[i] + "='");
    lex.expect_symbol('=');
    vals[i] = detail::parse_plain_int(lex, "certificate entry");
  }
  SupportCert cert{vals[0], vals[1], vals[2]};
  if (cert.a < 1 || cert.b < 0 || cert.c < 0)
    fail(Errc::InvalidArgument, "certificate needs a >= 1, b >= 0, c >= 0");
  detail::Token tab = lex.next();
  if (tab.kind != detail::Token::Ident || tab.text != "table")
    syntax_fail(tab.pos, "expected 'table'");
  lex.expect_symbol('{');
  std::vector<std::pair<ExpQ, Fq>> terms;
  if (!lex.accept_symbol('}')) {
    for (;;) {
      bool neg = lex.accept_symbol('-');
      size_t at = lex.peek().pos;
      int64_t num = detail::parse_plain_int(lex, "table exponent");
      int64_t den = 1;
      if (lex.accept_symbol('/')) den = detail::parse_plain_int(lex, "table exponent denominator");
      ExpQ e(field.p(), BigInt(neg ? -num : num), BigInt(den));
      if (!cert_contains(cert, e))
        fail(Errc::NotInDomain, "table exponent " + e.to_string() +
                                    " lies outside the declared certificate " + cert.to_string());
      lex.expect_symbol(':');
      detail::ExprParser scalar_parser(field, lex);
      detail::PolyVec v = scalar_parser.expr();
      if (v.size() > 1 || !v[0].literal() ||
          (!v[0].literal()->empty() &&
           (v[0].literal()->size() > 1 || !v[0].literal()->begin()->first.is_zero())))
        syntax_fail(at, "table value must be a field element");
      Fq c = v[0].literal()->empty() ? field.zero() : v[0].literal()->begin()->second;
      terms.emplace_back(e, c);
      if (lex.accept_symbol('}')) break;
      lex.expect_symbol(',');
    }
  }
  lex.expect_end();
  return Series::from_terms(field, std::move(terms)).with_cert(cert);
}

inline std::string print_certify_spec(const Series& s) {
  const auto* lit = s.literal();
  if (!lit) fail(Errc::InvalidArgument, "only literal series serialize to certification specs");
  SupportCert cert = s.cert();
  std::ostringstream os;
  os << "series a=" << cert.a << " b=" << cert.b << " c=" << cert.c << " table{";
  bool first = true;
  for (const auto& [e, c] : *lit) {
    if (!first) os << ",";
    first = false;
    os << e.to_string() << ":" << c.to_string();
  }
  os << "}";
  return os.str();
}

// Minimal JSON emitter. Keys keep insertion order, so reports are stable for
// golden-file comparison.
class JsonWriter {
 public:
  JsonWriter& begin_object() { return open('{'); }
  JsonWriter& end_object() { return close('}'); }
  JsonWriter& begin_array() { return open('['); }
  JsonWriter& end_array() { return close(']'); }

  JsonWriter& key(const std::string& k) {
    separate();
    emit_string(k);
    os_ << ':';
    after_key_ = true;
    return *this;
  }

  JsonWriter& value(const std::string& s) {
    separate();
    emit_string(s);
    return *this;
  }

  JsonWriter& value(const char* s) { return value(std::string(s)); }

  JsonWriter& value(int64_t n) {
    separate();
    os_ << n;
    return *this;
  }

  JsonWriter& value(int n) { return value(int64_t(n)); }

  JsonWriter& value(bool b) {
    separate();
    os_ << (b ? "true" : "false");
    return *this;
  }

  std::string str() const { return os_.str(); }

 private:
  JsonWriter& open(char c) {
    separate();
    os_ << c;
    first_.push_back(true);
    return *this;
  }

  JsonWriter& close(char c) {
    os_ << c;
    first_.pop_back();
    return *this;
  }

  void separate() {
    if (after_key_) {
      after_key_ = false;
      return;
    }
    if (!first_.empty()) {
      if (!first_.back()) os_ << ',';
      first_.back() = false;
    }
  }

  void emit_string(const std::string& s) {
    os_ << '"';
    for (char c : s) {
      switch (c) {
        case '"': os_ << "\\\""; break;
        case '\\': os_ << "\\\\"; break;
        case '\n': os_ << "\\n"; break;
        case '\t': os_ << "\\t"; break;
        default: os_ << c;
      }
    }
    os_ << '"';
  }

  std::ostringstream os_;
  std::vector<bool> first_;
  bool after_key_ = false;
};

}  // namespace hahn::format
