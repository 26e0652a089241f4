#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hahn/exponents.hpp"
#include "hahn/ffield.hpp"

namespace hahn {

enum class Provenance { Literal, Sum, Product, Twist, AsSolution, RootExpansion };

// Finite view of a series: every nonzero coefficient with exponent < r and
// denominator p-depth <= E, in ascending exponent order.
struct Window {
  ExpQ r;
  int64_t E = 0;
  std::vector<std::pair<ExpQ, Fq>> terms;

  std::string to_string() const {
    if (terms.empty()) return "0";
    std::ostringstream os;
    for (size_t i = 0; i < terms.size(); ++i) {
      if (i) os << " + ";
      std::string c = terms[i].second.to_string();
      if (c.find('+') != std::string::npos || c.find('-') != std::string::npos) c = "(" + c + ")";
      os << c << "*t^(" << terms[i].first.to_string() << ")";
    }
    return os.str();
  }
};

// Least nonzero exponent found in a finite search window. An empty value
// means the window was exhausted; it never asserts the series is zero.
struct ValuationResult {
  std::optional<ExpQ> value;
  ExpQ search_r;
  int64_t search_E = 0;

  bool resolved() const { return value.has_value(); }

  std::string to_string() const {
    if (value) return value->to_string();
    return "at_least(r=" + search_r.to_string() + ",E=" + std::to_string(search_E) + ")";
  }
};

// Generalized power series sum x_e t^e presented as a coefficient oracle plus
// a support certificate: coefficients vanish off S_{a,b,c}, and every query
// inside the certificate is answered exactly. Handles are immutable and cheap
// to copy; memoization is internal and thread-safe.
class Series {
 public:
  Series() = default;

  static Series from_terms(const Field& field, std::vector<std::pair<ExpQ, Fq>> terms) {
    auto lit = std::make_shared<std::map<ExpQ, Fq>>();
    for (auto& [e, c] : terms) {
      if (!field.same(c.field())) fail(Errc::MixedFields, "series coefficients in one field");
      if (e.p() != field.p()) fail(Errc::InvalidArgument, "exponent p does not match the field");
      if (c.is_zero()) continue;
      if (!lit->emplace(e, c).second)
        fail(Errc::DuplicateExponent, "duplicate exponent " + e.to_string());
    }
    // Minimal certificate: fold full denominators into the scale so every
    // exponent sits at an integer grid point, making b the only free bound.
    BigInt a = 1;
    for (const auto& [e, c] : *lit)
      a = boost::multiprecision::lcm(a, e.den_a() * pow_big(field.p(), e.den_e()));
    BigInt b = 0;
    for (const auto& [e, c] : *lit) {
      BigInt n = -e.scaled(a).num();
      if (n > b) b = n;
    }
    Series s;
    s.field_ = field;
    s.cert_ = SupportCert{to_i64(a, "certificate scale"), to_i64(b, "certificate bound"), 0};
    s.literal_ = std::move(lit);
    s.prov_ = Provenance::Literal;
    return s;
  }

  static Series from_oracle(const Field& field, SupportCert cert,
                            std::function<Fq(const ExpQ&)> fn,
                            Provenance prov = Provenance::Literal) {
    if (field.null()) fail(Errc::InvalidArgument, "series needs a field");
    Series s;
    s.field_ = field;
    s.cert_ = cert;
    s.oracle_ = std::make_shared<Oracle>();
    s.oracle_->fn = std::move(fn);
    s.prov_ = prov;
    return s;
  }

  bool null() const { return field_.null(); }
  const Field& field() const { return field_; }
  int64_t p() const { return field_.p(); }
  const SupportCert& cert() const { return cert_; }
  Provenance provenance() const { return prov_; }

  // Literal series expose their finite term map for exact fast paths.
  const std::map<ExpQ, Fq>* literal() const { return literal_ ? literal_.get() : nullptr; }

  Fq coeff(const ExpQ& e) const {
    if (null()) fail(Errc::InvalidArgument, "coefficient of a null series");
    if (e.p() != field_.p()) fail(Errc::InvalidArgument, "exponent p does not match the field");
    if (literal_) {
      if (!cert_contains(cert_, e)) return field_.zero();
      auto it = literal_->find(e);
      return it == literal_->end() ? field_.zero() : it->second;
    }
    {
      // Memo first: a hit skips the digit-arithmetic certificate test.
      std::lock_guard<std::mutex> lock(oracle_->mu);
      auto it = oracle_->memo.find(e);
      if (it != oracle_->memo.end()) return it->second;
    }
    if (!cert_contains(cert_, e)) return field_.zero();
    Fq v = oracle_->fn(e);  // deterministic, so duplicate computes agree
    if (!field_.same(v.field())) fail(Errc::MixedFields, "oracle left the coefficient field");
    std::lock_guard<std::mutex> lock(oracle_->mu);
    return oracle_->memo.emplace(e, v).first->second;
  }

  // Same coefficients with a (typically tighter) certificate the caller has
  // proved sound; coefficients outside it are clamped to zero.
  Series with_cert(SupportCert cert) const {
    Series s = *this;
    s.cert_ = cert;
    if (literal_) {
      auto lit = std::make_shared<std::map<ExpQ, Fq>>();
      for (const auto& [e, c] : *literal_)
        if (cert_contains(cert, e)) lit->emplace(e, c);
      s.literal_ = std::move(lit);
    }
    return s;
  }

  Series with_provenance(Provenance prov) const {
    Series s = *this;
    s.prov_ = prov;
    return s;
  }

 private:
  struct Oracle {
    std::function<Fq(const ExpQ&)> fn;
    std::map<ExpQ, Fq> memo;
    std::mutex mu;
  };

  Field field_;
  SupportCert cert_{1, 0, 0};
  std::shared_ptr<Oracle> oracle_;
  std::shared_ptr<const std::map<ExpQ, Fq>> literal_;
  Provenance prov_ = Provenance::Literal;
};

inline Series monomial(const Field& field, const ExpQ& e, const Fq& c) {
  return Series::from_terms(field, {{e, c}});
}

namespace detail {

inline void require_pair(const Series& x, const Series& y) {
  if (x.null() || y.null()) fail(Errc::InvalidArgument, "operation on a null series");
  if (!x.field().same(y.field())) fail(Errc::MixedFields, "series over different fields");
}

}  // namespace detail

inline Series add(const Series& x, const Series& y) {
  detail::require_pair(x, y);
  SupportCert cert = cert_add(x.cert(), y.cert(), x.p());
  if (x.literal() && y.literal()) {
    std::map<ExpQ, Fq> sum = *x.literal();
    for (const auto& [e, c] : *y.literal()) {
      auto [it, fresh] = sum.emplace(e, c);
      if (!fresh) {
        it->second = it->second + c;
        if (it->second.is_zero()) sum.erase(it);
      }
    }
    std::vector<std::pair<ExpQ, Fq>> terms(sum.begin(), sum.end());
    return Series::from_terms(x.field(), std::move(terms))
        .with_cert(cert)
        .with_provenance(Provenance::Sum);
  }
  return Series::from_oracle(
      x.field(), cert, [x, y](const ExpQ& e) { return x.coeff(e) + y.coeff(e); },
      Provenance::Sum);
}

inline Series negate(const Series& x) {
  if (x.null()) fail(Errc::InvalidArgument, "negation of a null series");
  if (const auto* lit = x.literal()) {
    std::vector<std::pair<ExpQ, Fq>> terms;
    for (const auto& [e, c] : *lit) terms.emplace_back(e, -c);
    return Series::from_terms(x.field(), std::move(terms)).with_cert(x.cert());
  }
  return Series::from_oracle(
      x.field(), x.cert(), [x](const ExpQ& e) { return -x.coeff(e); }, x.provenance());
}

inline Series sub(const Series& x, const Series& y) { return add(x, negate(y)); }

inline Series scale(const Series& x, const Fq& c) {
  if (x.null()) fail(Errc::InvalidArgument, "scaling a null series");
  if (!x.field().same(c.field())) fail(Errc::MixedFields, "scalar outside the series field");
  if (c.is_zero()) return Series::from_terms(x.field(), {});
  if (const auto* lit = x.literal()) {
    std::vector<std::pair<ExpQ, Fq>> terms;
    for (const auto& [e, v] : *lit) terms.emplace_back(e, c * v);
    return Series::from_terms(x.field(), std::move(terms)).with_cert(x.cert());
  }
  return Series::from_oracle(
      x.field(), x.cert(), [x, c](const ExpQ& e) { return c * x.coeff(e); }, x.provenance());
}

// Exact product. Against a literal factor the convolution runs over its
// finitely many terms; otherwise each coefficient sums over the finite set of
// certificate-compatible exponent splittings.
inline Series mul(const Series& x, const Series& y) {
  detail::require_pair(x, y);
  SupportCert cert = cert_mul(x.cert(), y.cert(), x.p());
  if (x.literal() && y.literal()) {
    std::map<ExpQ, Fq> prod;
    for (const auto& [ex, cx] : *x.literal())
      for (const auto& [ey, cy] : *y.literal()) {
        ExpQ e = ex + ey;
        Fq term = cx * cy;
        auto [it, fresh] = prod.emplace(e, term);
        if (!fresh) {
          it->second = it->second + term;
          if (it->second.is_zero()) prod.erase(it);
        }
      }
    std::vector<std::pair<ExpQ, Fq>> terms(prod.begin(), prod.end());
    return Series::from_terms(x.field(), std::move(terms))
        .with_cert(cert)
        .with_provenance(Provenance::Product);
  }
  if (x.literal() || y.literal()) {
    const Series& lit = x.literal() ? x : y;
    const Series& gen = x.literal() ? y : x;
    return Series::from_oracle(
        x.field(), cert,
        [lit, gen](const ExpQ& k) {
          Fq acc = gen.field().zero();
          for (const auto& [e, c] : *lit.literal()) acc = acc + c * gen.coeff(k - e);
          return acc;
        },
        Provenance::Product);
  }
  return Series::from_oracle(
      x.field(), cert,
      [x, y](const ExpQ& k) {
        Fq acc = x.field().zero();
        for (const auto& [i, j] : split_representations(x.cert(), y.cert(), k))
          acc = acc + x.coeff(i) * y.coeff(j);
        return acc;
      },
      Provenance::Product);
}

enum class TwistDir { Up, Down };

// down: x^{1/p^n}, exponents divided by p^n and coefficients p^n-th rooted.
// up: x^{p^n}, the inverse Frobenius power.
inline Series twist(const Series& x, TwistDir dir, int64_t n) {
  if (x.null()) fail(Errc::InvalidArgument, "twisting a null series");
  if (n < 0) fail(Errc::InvalidArgument, "twist depth must be nonnegative");
  if (n == 0) return x;
  int64_t p = x.p();
  if (const auto* lit = x.literal()) {
    std::vector<std::pair<ExpQ, Fq>> terms;
    for (const auto& [e, c] : *lit)
      terms.emplace_back(dir == TwistDir::Down ? e.times_ppow(-n) : e.times_ppow(n),
                         dir == TwistDir::Down ? pth_root(c, n) : frobenius(c, n));
    SupportCert cert =
        dir == TwistDir::Down ? cert_twist_down(x.cert(), n, p) : cert_twist_up(x.cert(), n, p);
    return Series::from_terms(x.field(), std::move(terms))
        .with_cert(cert)
        .with_provenance(Provenance::Twist);
  }
  if (dir == TwistDir::Down)
    return Series::from_oracle(
        x.field(), cert_twist_down(x.cert(), n, p),
        [x, n](const ExpQ& e) { return pth_root(x.coeff(e.times_ppow(n)), n); },
        Provenance::Twist);
  return Series::from_oracle(
      x.field(), cert_twist_up(x.cert(), n, p),
      [x, n](const ExpQ& e) { return frobenius(x.coeff(e.times_ppow(-n)), n); },
      Provenance::Twist);
}

// Least nonzero exponent within the finite (r, E) window; unresolved when the
// whole window vanishes. Never decides that the series is zero.
inline ValuationResult valuation(const Series& x, const ExpQ& search_r, int64_t search_E) {
  if (x.null()) fail(Errc::InvalidArgument, "valuation of a null series");
  // Literal supports are finite and exact: answer beyond the window too.
  if (const auto* lit = x.literal()) {
    if (lit->empty()) return {std::nullopt, search_r, search_E};
    return {lit->begin()->first, search_r, search_E};
  }
  for (const ExpQ& e : cert_window(x.cert(), search_r, search_E))
    if (!x.coeff(e).is_zero()) return {e, search_r, search_E};
  return {std::nullopt, search_r, search_E};
}

// Keeps coefficients with exponent strictly below j; no bound means identity.
inline Series truncate_below(const Series& x, const std::optional<ExpQ>& j) {
  if (x.null()) fail(Errc::InvalidArgument, "truncating a null series");
  if (!j) return x;
  if (const auto* lit = x.literal()) {
    std::vector<std::pair<ExpQ, Fq>> terms;
    for (const auto& [e, c] : *lit)
      if (e < *j) terms.emplace_back(e, c);
    return Series::from_terms(x.field(), std::move(terms)).with_cert(x.cert());
  }
  ExpQ bound = *j;
  return Series::from_oracle(
      x.field(), x.cert(),
      [x, bound](const ExpQ& e) { return e < bound ? x.coeff(e) : x.field().zero(); },
      x.provenance());
}

inline Window materialize(const Series& x, const ExpQ& r, int64_t E) {
  if (x.null()) fail(Errc::InvalidArgument, "materializing a null series");
  Window w{r, E, {}};
  for (const ExpQ& e : cert_window(x.cert(), r, E)) {
    Fq c = x.coeff(e);
    if (!c.is_zero()) w.terms.emplace_back(e, c);
  }
  return w;
}

// Equality of every coefficient on the joined certificate window.
inline bool window_equal(const Series& x, const Series& y, const ExpQ& r, int64_t E) {
  detail::require_pair(x, y);
  SupportCert join = cert_add(x.cert(), y.cert(), x.p());
  for (const ExpQ& e : cert_window(join, r, E))
    if (x.coeff(e) != y.coeff(e)) return false;
  return true;
}

// The root of x^p - x = t^{-1} with zero constant term: sum of t^{-1/p^n}
// over n >= 1. Its support lies in T_1, the digit-sum-one part of (-1, 0).
inline Series chevalley_root(const Field& field) {
  return Series::from_oracle(
      field, SupportCert{1, 0, 1},
      [field](const ExpQ& e) {
        if (e.sign() < 0 && e.num() == -1 && e.den_a() == 1 && e.den_e() >= 1)
          return field.one();
        return field.zero();
      },
      Provenance::AsSolution);
}

}  // namespace hahn
