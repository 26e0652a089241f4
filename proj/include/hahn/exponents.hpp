#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hahn/common.hpp"

namespace hahn {

// Exact rational with the denominator kept split as den_a * p^den_e, den_a
// prime to p. Exponents of all series live here; no floating point anywhere.
class ExpQ {
 public:
  ExpQ() = default;

  ExpQ(int64_t p, int64_t num) : ExpQ(p, BigInt(num), BigInt(1)) {}
  ExpQ(int64_t p, BigInt num) : ExpQ(p, std::move(num), BigInt(1)) {}

  ExpQ(int64_t p, BigInt num, BigInt den) : p_(p) {
    if (p < 2) fail(Errc::InvalidArgument, "exponent needs the ambient characteristic");
    if (den == 0) fail(Errc::DivisionByZero, "zero denominator");
    if (den < 0) {
      den = -den;
      num = -num;
    }
    BigInt g = boost::multiprecision::gcd(num < 0 ? BigInt(-num) : num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
    num_ = std::move(num);
    den_ = std::move(den);
    BigInt d = den_;
    while (d % p_ == 0) {
      d /= p_;
      ++den_e_;
    }
    den_a_ = d;
  }

  bool null() const { return p_ == 0; }
  int64_t p() const { return p_; }
  const BigInt& num() const { return num_; }
  const BigInt& den() const { return den_; }
  const BigInt& den_a() const { return den_a_; }
  int den_e() const { return den_e_; }

  bool is_integer() const { return den_ == 1; }
  bool is_zero() const { return num_ == 0; }
  int sign() const { return num_ == 0 ? 0 : (num_ < 0 ? -1 : 1); }

  ExpQ operator+(const ExpQ& o) const {
    require_same(o);
    return ExpQ(p_, num_ * o.den_ + o.num_ * den_, den_ * o.den_);
  }
  ExpQ operator-(const ExpQ& o) const {
    require_same(o);
    return ExpQ(p_, num_ * o.den_ - o.num_ * den_, den_ * o.den_);
  }
  ExpQ operator-() const {
    require_valid();
    return ExpQ(p_, -num_, den_);
  }
  ExpQ operator*(const ExpQ& o) const {
    require_same(o);
    return ExpQ(p_, num_ * o.num_, den_ * o.den_);
  }
  ExpQ operator/(const ExpQ& o) const {
    require_same(o);
    if (o.num_ == 0) fail(Errc::DivisionByZero, "division by zero exponent");
    return ExpQ(p_, num_ * o.den_, den_ * o.num_);
  }

  ExpQ scaled(const BigInt& m) const {
    require_valid();
    return ExpQ(p_, num_ * m, den_);
  }
  ExpQ div_int(const BigInt& m) const {
    require_valid();
    if (m == 0) fail(Errc::DivisionByZero, "division by zero");
    return ExpQ(p_, num_, den_ * m);
  }

  // Multiplies by p^e; e may be negative.
  ExpQ times_ppow(int64_t e) const {
    require_valid();
    if (e >= 0) return ExpQ(p_, num_ * pow_big(p_, e), den_);
    return ExpQ(p_, num_, den_ * pow_big(p_, -e));
  }

  BigInt floor() const {
    require_valid();
    return floor_div(num_, den_);
  }
  BigInt ceil() const {
    require_valid();
    return ceil_div(num_, den_);
  }

  bool operator==(const ExpQ& o) const {
    if (null() || o.null()) return null() && o.null();
    return p_ == o.p_ && num_ == o.num_ && den_ == o.den_;
  }
  bool operator!=(const ExpQ& o) const { return !(*this == o); }
  bool operator<(const ExpQ& o) const {
    require_same(o);
    return num_ * o.den_ < o.num_ * den_;
  }
  bool operator<=(const ExpQ& o) const { return !(o < *this); }
  bool operator>(const ExpQ& o) const { return o < *this; }
  bool operator>=(const ExpQ& o) const { return !(*this < o); }

  std::string to_string() const {
    if (null()) return "<null>";
    std::ostringstream os;
    os << num_;
    if (den_ != 1) os << '/' << den_;
    return os.str();
  }

  // Accepts "num" or "num/den", optionally signed.
  static ExpQ parse(int64_t p, const std::string& text) {
    std::string s;
    for (char ch : text)
      if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
    auto is_int = [](const std::string& t) {
      size_t i = (!t.empty() && (t[0] == '+' || t[0] == '-')) ? 1 : 0;
      if (i >= t.size()) return false;
      for (; i < t.size(); ++i)
        if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
      return true;
    };
    auto slash = s.find('/');
    std::string ns = slash == std::string::npos ? s : s.substr(0, slash);
    std::string ds = slash == std::string::npos ? std::string("1") : s.substr(slash + 1);
    if (!is_int(ns) || !is_int(ds)) fail(Errc::SyntaxError, "malformed exponent: " + text);
    return ExpQ(p, BigInt(ns), BigInt(ds));
  }

 private:
  void require_valid() const {
    if (null()) fail(Errc::InvalidArgument, "operation on null exponent");
  }
  void require_same(const ExpQ& o) const {
    require_valid();
    o.require_valid();
    if (p_ != o.p_) fail(Errc::InvalidArgument, "exponents with different characteristics");
  }

  int64_t p_ = 0;
  BigInt num_ = 0;
  BigInt den_ = 1;
  BigInt den_a_ = 1;
  int den_e_ = 0;
};

// Base-p digit sum of |u|.
inline int64_t digit_sum_p(BigInt u, int64_t p) {
  if (u < 0) u = -u;
  int64_t s = 0;
  while (u > 0) {
    s += int64_t(u % p);
    u /= p;
  }
  return s;
}

// A value (1/a)(n - sum b_i p^{-i}) with nonzero digits b_i at positions i >= 1.
// This is the unique such form with the digit part in [0, 1).
struct DigitWord {
  int64_t a = 1;
  BigInt n = 0;
  std::vector<std::pair<int64_t, int64_t>> digits;  // (position, digit), ascending

  int64_t digit_sum() const {
    int64_t s = 0;
    for (auto& [pos, b] : digits) s += b;
    return s;
  }

  int64_t max_position() const { return digits.empty() ? 0 : digits.back().first; }

  ExpQ value(int64_t p) const {
    ExpQ acc(p, n);
    for (auto& [pos, b] : digits) acc = acc - ExpQ(p, b).times_ppow(-pos);
    return acc.div_int(a);
  }

  std::string to_string(int64_t p) const {
    std::ostringstream os;
    os << "(1/" << a << ")(" << n;
    for (auto& [pos, b] : digits) os << " - " << b << '*' << p << "^-" << pos;
    os << ')';
    return os.str();
  }
};

// Decomposition of x as (1/a)(n - sum b_i p^{-i}); requires a*x to have a
// p-power denominator.
inline DigitWord to_digits(const ExpQ& x, int64_t a) {
  if (x.null()) fail(Errc::InvalidArgument, "to_digits of null exponent");
  if (a < 1) fail(Errc::InvalidArgument, "digit scale must be positive");
  ExpQ y = x.scaled(a);
  if (y.den_a() != 1)
    fail(Errc::IncompatibleDenominator,
         "exponent " + x.to_string() + " is not on scale " + std::to_string(a));
  DigitWord w;
  w.a = a;
  w.n = y.ceil();
  ExpQ frac = ExpQ(x.p(), w.n) - y;  // in [0, 1)
  int e = frac.den_e();
  BigInt m = frac.num() * pow_big(x.p(), e) / frac.den();  // frac = m / p^e
  for (int64_t i = e; i >= 1 && m > 0; --i) {
    int64_t b = int64_t(m % x.p());
    if (b) w.digits.emplace_back(i, b);
    m /= x.p();
  }
  std::reverse(w.digits.begin(), w.digits.end());
  return w;
}

// Certificate that a support lies in S_{a,b,c}: all values (1/a)(n - f) with
// n >= -b and f a digit part of sum at most c.
struct SupportCert {
  int64_t a = 1;
  int64_t b = 0;
  int64_t c = 0;

  std::string to_string() const {
    std::ostringstream os;
    os << '(' << a << ',' << b << ',' << c << ')';
    return os.str();
  }

  bool operator==(const SupportCert& o) const { return a == o.a && b == o.b && c == o.c; }
};

inline bool cert_contains(const SupportCert& cert, const ExpQ& x) {
  ExpQ y = x.scaled(cert.a);
  if (y.den_a() != 1) return false;
  DigitWord w = to_digits(x, cert.a);
  return w.n >= -cert.b && w.digit_sum() <= cert.c;
}

namespace detail {

// All digit words over positions 1..max_pos with digit sum <= c, visited in
// no particular order; f carries the accumulated fractional value.
inline void walk_digit_words(int64_t p, int64_t max_pos, int64_t c, int64_t from_pos,
                             std::vector<std::pair<int64_t, int64_t>>& digits, const ExpQ& f,
                             const std::function<void(const std::vector<std::pair<int64_t, int64_t>>&,
                                                      const ExpQ&)>& visit) {
  visit(digits, f);
  if (c <= 0) return;
  for (int64_t pos = from_pos; pos <= max_pos; ++pos) {
    for (int64_t b = 1; b <= std::min<int64_t>(p - 1, c); ++b) {
      digits.emplace_back(pos, b);
      walk_digit_words(p, max_pos, c - b, pos + 1, digits, f + ExpQ(p, b).times_ppow(-pos), visit);
      digits.pop_back();
    }
  }
}

inline int64_t vp_int(int64_t a, int64_t p) {
  int64_t v = 0;
  while (a % p == 0) {
    a /= p;
    ++v;
  }
  return v;
}

}  // namespace detail

// Exactly the elements of S_{a,b,c} below r whose reduced denominator has
// p-exponent at most E, in ascending order. Finite by construction: digit
// positions beyond E - v_p(a) would push the denominator past the bound.
inline std::vector<ExpQ> cert_window(const SupportCert& cert, const ExpQ& r, int64_t E) {
  if (E < 0) fail(Errc::InvalidArgument, "depth bound must be nonnegative");
  int64_t p = r.p();
  int64_t alpha = detail::vp_int(cert.a, p);
  int64_t max_pos = std::max<int64_t>(0, E - alpha);
  std::vector<ExpQ> out;
  // Values with integer part n lie in ((n-1)/a, n/a]; past a*r there is nothing below r.
  for (BigInt n = -cert.b; ExpQ(p, n - 1).div_int(cert.a) < r; ++n) {
    std::vector<std::pair<int64_t, int64_t>> digits;
    detail::walk_digit_words(
        p, max_pos, cert.c, 1, digits, ExpQ(p, 0),
        [&](const std::vector<std::pair<int64_t, int64_t>>&, const ExpQ& f) {
          ExpQ x = (ExpQ(p, n) - f).div_int(cert.a);
          if (x < r && x.den_e() <= E) out.push_back(x);
        });
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Certificate transforms. Each returns a certificate sound for the image of
// the corresponding series operation; bounds are conservative, not tight.

// Same value set viewed on the coarser scale L. (1/a)(n - f) = (1/L)(un - uf);
// uf < u spills at most u-1 into the integer part, and multiplying f by u
// multiplies the digit sum by at most S_p(u), carries only lowering it.
inline SupportCert cert_rescale(const SupportCert& cert, int64_t L, int64_t p) {
  if (L < 1 || L % cert.a != 0) fail(Errc::InvalidArgument, "rescale target must be a multiple");
  int64_t u = L / cert.a;
  if (u == 1) return {L, cert.b, cert.c};
  return {L, u * cert.b + u - 1, cert.c * digit_sum_p(u, p)};
}

inline SupportCert cert_add(const SupportCert& x, const SupportCert& y, int64_t p) {
  int64_t L = std::lcm(x.a, y.a);
  SupportCert cx = cert_rescale(x, L, p);
  SupportCert cy = cert_rescale(y, L, p);
  return {L, std::max(cx.b, cy.b), std::max(cx.c, cy.c)};
}

inline SupportCert cert_mul(const SupportCert& x, const SupportCert& y, int64_t p) {
  int64_t L = std::lcm(x.a, y.a);
  SupportCert cx = cert_rescale(x, L, p);
  SupportCert cy = cert_rescale(y, L, p);
  // Two fractional parts can sum past 1 and borrow one more from the integer
  // part; carries only lower the digit sum.
  int64_t borrow = (cx.c > 0 && cy.c > 0) ? 1 : 0;
  return {L, cx.b + cy.b + borrow, cx.c + cy.c};
}

// Exponents divided by p^n (the x -> x^{1/p^n} direction).
inline SupportCert cert_twist_down(const SupportCert& cert, int64_t n, int64_t p) {
  if (n < 0) fail(Errc::InvalidArgument, "twist exponent must be nonnegative");
  BigInt a = cert.a;
  a *= pow_big(p, n);
  return {to_i64(a, "support scale"), cert.b, cert.c};
}

// Exponents multiplied by p^n: digits at positions <= n spill into the
// integer part, costing at most p^n - 1 extra below -b.
inline SupportCert cert_twist_up(const SupportCert& cert, int64_t n, int64_t p) {
  if (n < 0) fail(Errc::InvalidArgument, "twist exponent must be nonnegative");
  BigInt pn = pow_big(p, n);
  BigInt b = pn * cert.b + pn - 1;
  return {cert.a, to_i64(b, "support bound"), cert.c};
}

// The complete list of (i, j) with i in S_x, j in S_y, i + j = k, ascending in
// i. Finite: a carry chain in f_i + f_j consumes at least one unit of digit
// sum per position, so digits live at depth <= den_e(L*k) + c_x + c_y.
inline std::vector<std::pair<ExpQ, ExpQ>> split_representations(const SupportCert& x,
                                                                const SupportCert& y,
                                                                const ExpQ& k) {
  int64_t p = k.p();
  int64_t L = std::lcm(x.a, y.a);
  SupportCert cx = cert_rescale(x, L, p);
  SupportCert cy = cert_rescale(y, L, p);
  std::vector<std::pair<ExpQ, ExpQ>> out;
  ExpQ kL = k.scaled(L);
  if (kL.den_a() != 1) return out;
  int64_t max_pos = kL.den_e() + cx.c + cy.c;
  BigInt n_hi = kL.ceil() + cy.b + 1;
  for (BigInt n = -cx.b; n <= n_hi; ++n) {
    std::vector<std::pair<int64_t, int64_t>> digits;
    detail::walk_digit_words(
        p, max_pos, cx.c, 1, digits, ExpQ(p, 0),
        [&](const std::vector<std::pair<int64_t, int64_t>>&, const ExpQ& f) {
          ExpQ i = (ExpQ(p, n) - f).div_int(L);
          ExpQ j = k - i;
          if (cert_contains(cy, j)) out.emplace_back(i, j);
        });
  }
  std::sort(out.begin(), out.end(),
            [](const auto& u, const auto& v) { return u.first < v.first; });
  return out;
}

// The exponent stream (1/a)(m - prefix - p^{-n} * tail) for n = 0, 1, 2, ...
struct TailStream {
  ExpQ head;
  ExpQ tail;

  ExpQ at(int64_t n) const {
    if (n < 0) fail(Errc::InvalidArgument, "tail stream index must be nonnegative");
    return head - tail.times_ppow(-n);
  }
};

inline TailStream tail_exponents(int64_t p, const BigInt& m,
                                 const std::vector<std::pair<int64_t, int64_t>>& prefix,
                                 const std::vector<std::pair<int64_t, int64_t>>& tail,
                                 int64_t a) {
  ExpQ head(p, m);
  for (auto& [pos, b] : prefix) head = head - ExpQ(p, b).times_ppow(-pos);
  ExpQ tv(p, 0);
  for (auto& [pos, b] : tail) tv = tv + ExpQ(p, b).times_ppow(-pos);
  return {head.div_int(a), tv.div_int(a)};
}

}  // namespace hahn
