#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hahn/common.hpp"

namespace hahn {

// Fields are kept small enough for exhaustive element scans.
inline constexpr int64_t kMaxFieldSize = int64_t(1) << 20;
inline constexpr int64_t kMaxScanFieldSize = int64_t(1) << 16;

namespace detail {

inline int64_t mod_pos(int64_t a, int64_t p) {
  int64_t r = a % p;
  return r < 0 ? r + p : r;
}

inline int64_t powmod_i(int64_t b, int64_t e, int64_t p) {
  int64_t r = 1;
  b = mod_pos(b, p);
  while (e > 0) {
    if (e & 1) r = r * b % p;
    b = b * b % p;
    e >>= 1;
  }
  return r;
}

inline int64_t inv_mod(int64_t a, int64_t p) { return powmod_i(a, p - 2, p); }

inline bool is_prime_i(int64_t n) {
  if (n < 2) return false;
  for (int64_t f = 2; f * f <= n; ++f)
    if (n % f == 0) return false;
  return true;
}

// Dense polynomials over F_p, coefficients low degree first.
using FpPoly = std::vector<int64_t>;

inline void fp_trim(FpPoly& v) {
  while (!v.empty() && v.back() == 0) v.pop_back();
}

// Remainder modulo a monic divisor.
inline FpPoly fp_rem(FpPoly a, const FpPoly& f, int64_t p) {
  int df = int(f.size()) - 1;
  while (int(a.size()) - 1 >= df) {
    int64_t lead = a.back();
    int shift = int(a.size()) - 1 - df;
    if (lead != 0)
      for (int i = 0; i < df; ++i) a[shift + i] = mod_pos(a[shift + i] - lead * f[i] % p, p);
    a.pop_back();
  }
  fp_trim(a);
  return a;
}

inline FpPoly fp_mulmod(const FpPoly& a, const FpPoly& b, const FpPoly& f, int64_t p) {
  if (a.empty() || b.empty()) return {};
  FpPoly c(a.size() + b.size() - 1, 0);
  for (size_t i = 0; i < a.size(); ++i) {
    if (!a[i]) continue;
    for (size_t j = 0; j < b.size(); ++j) c[i + j] = (c[i + j] + a[i] * b[j]) % p;
  }
  return fp_rem(std::move(c), f, p);
}

inline FpPoly fp_powmod(FpPoly base, BigInt e, const FpPoly& f, int64_t p) {
  FpPoly r{1};
  base = fp_rem(std::move(base), f, p);
  while (e > 0) {
    if ((e & 1) != 0) r = fp_mulmod(r, base, f, p);
    base = fp_mulmod(base, base, f, p);
    e >>= 1;
  }
  return r;
}

inline FpPoly fp_sub(FpPoly a, const FpPoly& b, int64_t p) {
  if (b.size() > a.size()) a.resize(b.size(), 0);
  for (size_t i = 0; i < b.size(); ++i) a[i] = mod_pos(a[i] - b[i], p);
  fp_trim(a);
  return a;
}

inline FpPoly fp_gcd(FpPoly a, FpPoly b, int64_t p) {
  fp_trim(a);
  fp_trim(b);
  while (!b.empty()) {
    FpPoly bm = b;
    int64_t inv = inv_mod(bm.back(), p);
    for (auto& c : bm) c = c * inv % p;
    FpPoly r = fp_rem(std::move(a), bm, p);
    a = std::move(b);
    b = std::move(r);
  }
  if (!a.empty()) {
    int64_t inv = inv_mod(a.back(), p);
    for (auto& c : a) c = c * inv % p;
  }
  return a;
}

// Rabin's test: f (monic, degree d) is irreducible iff x^{p^d} = x mod f and
// gcd(x^{p^{d/l}} - x, f) = 1 for every prime l dividing d.
inline bool fp_is_irreducible(const FpPoly& f, int64_t p) {
  int d = int(f.size()) - 1;
  if (d <= 0) return false;
  if (d == 1) return true;
  FpPoly x{0, 1};
  FpPoly h = fp_powmod(x, pow_big(p, d), f, p);
  if (!fp_sub(std::move(h), x, p).empty()) return false;
  int rem = d;
  for (int l = 2; l <= rem; ++l) {
    if (rem % l != 0) continue;
    while (rem % l == 0) rem /= l;
    FpPoly g = fp_sub(fp_powmod(x, pow_big(p, d / l), f, p), x, p);
    if (int(fp_gcd(std::move(g), f, p).size()) - 1 >= 1) return false;
  }
  return true;
}

// Least monic irreducible of degree d, coefficient vectors compared
// lexicographically from the constant term up.
inline FpPoly fp_canonical_modulus(int64_t p, int d) {
  if (d == 1) return {0, 1};
  std::vector<int64_t> pw(d);
  pw[d - 1] = 1;
  for (int j = d - 2; j >= 0; --j) pw[j] = pw[j + 1] * p;
  int64_t count = pw[0] * p;
  for (int64_t v = pw[0]; v < count; ++v) {
    FpPoly f(d + 1, 0);
    f[d] = 1;
    for (int j = 0; j < d; ++j) f[j] = (v / pw[j]) % p;
    if (fp_is_irreducible(f, p)) return f;
  }
  fail(Errc::UnsupportedField, "no irreducible modulus found");
}

struct FieldData {
  int64_t p = 0;
  int d = 0;
  int64_t q = 0;
  FpPoly modulus;  // size d+1, monic
};

}  // namespace detail

class Fq;

// Immutable handle to a finite field F_{p^d} = F_p[g]/(modulus).
class Field {
 public:
  Field() = default;

  // Canonical field for (p, d); modulus is the deterministic least choice.
  static Field gf(int64_t p, int d) {
    static std::map<std::pair<int64_t, int>, Field> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(p, d);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    validate_pd(p, d);
    Field f = make(p, d, detail::fp_canonical_modulus(p, d));
    cache.emplace(key, f);
    return f;
  }

  static Field with_modulus(int64_t p, const std::vector<int64_t>& modulus) {
    int d = int(modulus.size()) - 1;
    validate_pd(p, d);
    std::vector<int64_t> m(modulus);
    for (auto& c : m) c = detail::mod_pos(c, p);
    if (m.back() != 1) fail(Errc::InvalidArgument, "modulus must be monic");
    if (!detail::fp_is_irreducible(m, p)) fail(Errc::InvalidArgument, "modulus is reducible");
    return make(p, d, std::move(m));
  }

  bool null() const { return !data_; }
  int64_t p() const { return data_->p; }
  int d() const { return data_->d; }
  int64_t q() const { return data_->q; }
  const std::vector<int64_t>& modulus() const { return data_->modulus; }

  bool same(const Field& o) const {
    if (data_ == o.data_) return true;
    if (!data_ || !o.data_) return false;
    return data_->p == o.data_->p && data_->d == o.data_->d && data_->modulus == o.data_->modulus;
  }

  Fq zero() const;
  Fq one() const;
  Fq gen() const;
  Fq from_int(int64_t v) const;       // scalar injection of v mod p
  Fq element_at(int64_t idx) const;   // enumeration by base-p digits, idx in [0, q)
  int64_t index_of(const Fq& x) const;

  std::string to_string() const {
    std::ostringstream os;
    os << data_->p << '^' << data_->d << ':';
    for (int i = 0; i <= data_->d; ++i) {
      if (i) os << ',';
      os << data_->modulus[i];
    }
    return os.str();
  }

  // Accepts "p^d" (canonical modulus) or "p^d:c0,c1,...,cd" (explicit).
  static Field parse(const std::string& text);

 private:
  static void validate_pd(int64_t p, int d) {
    if (!detail::is_prime_i(p)) fail(Errc::UnsupportedField, "characteristic must be prime");
    if (d < 1) fail(Errc::InvalidArgument, "field degree must be positive");
    int64_t q = 1;
    for (int i = 0; i < d; ++i) {
      q *= p;
      if (q > kMaxFieldSize) fail(Errc::UnsupportedField, "field order exceeds supported size");
    }
  }

  static Field make(int64_t p, int d, detail::FpPoly modulus) {
    auto data = std::make_shared<detail::FieldData>();
    data->p = p;
    data->d = d;
    data->q = 1;
    for (int i = 0; i < d; ++i) data->q *= p;
    data->modulus = std::move(modulus);
    Field f;
    f.data_ = std::move(data);
    return f;
  }

  std::shared_ptr<const detail::FieldData> data_;
};

// Element of a finite field; coefficient vector in the power basis of g.
class Fq {
 public:
  Fq() = default;

  Fq(Field field, std::vector<int64_t> coeffs) : field_(std::move(field)) {
    if (field_.null()) fail(Errc::InvalidArgument, "element requires a field");
    coeffs.resize(size_t(field_.d()), 0);
    for (auto& c : coeffs) c = detail::mod_pos(c, field_.p());
    c_ = std::move(coeffs);
  }

  bool null() const { return field_.null(); }
  const Field& field() const { return field_; }
  const std::vector<int64_t>& coeffs() const { return c_; }
  int64_t coeff(int i) const { return i >= 0 && i < int(c_.size()) ? c_[i] : 0; }

  bool is_zero() const {
    for (int64_t c : c_)
      if (c) return false;
    return true;
  }

  Fq operator+(const Fq& o) const {
    require_same(o);
    std::vector<int64_t> r(c_);
    for (size_t i = 0; i < r.size(); ++i) r[i] = detail::mod_pos(r[i] + o.c_[i], field_.p());
    return Fq(field_, std::move(r));
  }

  Fq operator-(const Fq& o) const {
    require_same(o);
    std::vector<int64_t> r(c_);
    for (size_t i = 0; i < r.size(); ++i) r[i] = detail::mod_pos(r[i] - o.c_[i], field_.p());
    return Fq(field_, std::move(r));
  }

  Fq operator-() const {
    require_valid();
    std::vector<int64_t> r(c_);
    for (auto& c : r) c = detail::mod_pos(-c, field_.p());
    return Fq(field_, std::move(r));
  }

  Fq operator*(const Fq& o) const {
    require_same(o);
    int64_t p = field_.p();
    std::vector<int64_t> prod(2 * c_.size(), 0);
    for (size_t i = 0; i < c_.size(); ++i) {
      if (!c_[i]) continue;
      for (size_t j = 0; j < o.c_.size(); ++j) prod[i + j] = (prod[i + j] + c_[i] * o.c_[j]) % p;
    }
    return Fq(field_, detail::fp_rem(std::move(prod), field_.modulus(), p));
  }

  Fq inverse() const {
    require_valid();
    if (is_zero()) fail(Errc::DivisionByZero, "inverse of zero");
    return pow(field_.q() - 2);
  }

  Fq operator/(const Fq& o) const {
    require_same(o);
    if (o.is_zero()) fail(Errc::DivisionByZero, "division by zero");
    return *this * o.pow(field_.q() - 2);
  }

  Fq pow(BigInt e) const {
    require_valid();
    if (e < 0) return inverse().pow(-e);
    Fq r = field_.one();
    Fq b = *this;
    while (e > 0) {
      if ((e & 1) != 0) r = r * b;
      b = b * b;
      e >>= 1;
    }
    return r;
  }

  bool operator==(const Fq& o) const {
    if (field_.null() || o.field_.null()) return field_.null() && o.field_.null();
    return field_.same(o.field_) && c_ == o.c_;
  }
  bool operator!=(const Fq& o) const { return !(*this == o); }

  // Canonical order: coefficient vectors compared from the constant term up.
  bool operator<(const Fq& o) const {
    if (!field_.same(o.field_)) {
      auto a = field_.null() ? std::string() : field_.to_string();
      auto b = o.field_.null() ? std::string() : o.field_.to_string();
      return a < b;
    }
    return std::lexicographical_compare(c_.begin(), c_.end(), o.c_.begin(), o.c_.end());
  }

  std::string to_string() const {
    if (field_.null()) return "<null>";
    if (field_.d() == 1) return std::to_string(c_[0]);
    std::ostringstream os;
    bool first = true;
    for (size_t i = 0; i < c_.size(); ++i) {
      if (!c_[i]) continue;
      if (!first) os << '+';
      first = false;
      if (i == 0) {
        os << c_[0];
        continue;
      }
      if (c_[i] != 1) os << c_[i] << '*';
      os << 'g';
      if (i >= 2) os << '^' << i;
    }
    if (first) os << '0';
    return os.str();
  }

 private:
  void require_valid() const {
    if (field_.null()) fail(Errc::InvalidArgument, "operation on null field element");
  }
  void require_same(const Fq& o) const {
    require_valid();
    o.require_valid();
    if (!field_.same(o.field_)) fail(Errc::MixedFields, "elements from different fields");
  }

  Field field_;
  std::vector<int64_t> c_;
};

inline Fq Field::zero() const { return Fq(*this, {}); }
inline Fq Field::one() const { return Fq(*this, {1}); }

inline Fq Field::gen() const {
  if (data_->d < 2) return zero();  // g is the class of x, which is 0 mod x
  return Fq(*this, {0, 1});
}

inline Fq Field::from_int(int64_t v) const { return Fq(*this, {detail::mod_pos(v, data_->p)}); }

inline Fq Field::element_at(int64_t idx) const {
  if (idx < 0 || idx >= data_->q) fail(Errc::InvalidArgument, "element index out of range");
  std::vector<int64_t> c(size_t(data_->d), 0);
  for (int i = 0; i < data_->d && idx; ++i) {
    c[size_t(i)] = idx % data_->p;
    idx /= data_->p;
  }
  return Fq(*this, std::move(c));
}

inline int64_t Field::index_of(const Fq& x) const {
  if (!same(x.field())) fail(Errc::MixedFields, "index_of on foreign element");
  int64_t idx = 0;
  for (int i = data_->d - 1; i >= 0; --i) idx = idx * data_->p + x.coeff(i);
  return idx;
}

// x^(p^n).
inline Fq frobenius(const Fq& x, int64_t n) {
  if (n < 0) fail(Errc::InvalidArgument, "frobenius exponent must be nonnegative");
  if (x.null()) fail(Errc::InvalidArgument, "frobenius of null element");
  int64_t steps = n % x.field().d();
  Fq r = x;
  for (int64_t i = 0; i < steps; ++i) r = r.pow(x.field().p());
  return r;
}

// Unique y with frobenius(y, n) = x; finite fields are perfect.
inline Fq pth_root(const Fq& x, int64_t n) {
  if (n < 0) fail(Errc::InvalidArgument, "pth_root exponent must be nonnegative");
  if (x.null()) fail(Errc::InvalidArgument, "pth_root of null element");
  int64_t d = x.field().d();
  return frobenius(x, (d - (n % d)) % d);
}

namespace fqpoly {

// Dense univariate polynomials over one field, coefficients low degree first.
using Poly = std::vector<Fq>;

inline Poly trim(Poly f) {
  while (!f.empty() && f.back().is_zero()) f.pop_back();
  return f;
}

inline int deg(const Poly& f) {
  for (int i = int(f.size()) - 1; i >= 0; --i)
    if (!f[size_t(i)].is_zero()) return i;
  return -1;
}

inline Poly add(const Poly& a, const Poly& b) {
  Poly r = a.size() >= b.size() ? a : b;
  const Poly& s = a.size() >= b.size() ? b : a;
  for (size_t i = 0; i < s.size(); ++i) r[i] = r[i] + s[i];
  return trim(std::move(r));
}

inline Poly sub(const Poly& a, const Poly& b) {
  Poly r = a;
  if (b.size() > r.size()) {
    if (b.empty()) return trim(std::move(r));
    r.resize(b.size(), b[0].field().zero());
  }
  for (size_t i = 0; i < b.size(); ++i) r[i] = r[i] - b[i];
  return trim(std::move(r));
}

inline Poly mul(const Poly& a, const Poly& b) {
  if (a.empty() || b.empty()) return {};
  Poly r(a.size() + b.size() - 1, a[0].field().zero());
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].is_zero()) continue;
    for (size_t j = 0; j < b.size(); ++j) r[i + j] = r[i + j] + a[i] * b[j];
  }
  return trim(std::move(r));
}

inline Poly scale(const Poly& a, const Fq& s) {
  Poly r = a;
  for (auto& c : r) c = c * s;
  return trim(std::move(r));
}

inline std::pair<Poly, Poly> divmod(Poly a, const Poly& b_in) {
  Poly b = trim(b_in);
  if (b.empty()) fail(Errc::DivisionByZero, "polynomial division by zero");
  a = trim(std::move(a));
  if (a.empty()) return {{}, {}};
  Fq lead_inv = b.back().inverse();
  int db = int(b.size()) - 1;
  if (int(a.size()) - 1 < db) return {{}, std::move(a)};
  Poly q(a.size() - b.size() + 1, a[0].field().zero());
  while (int(a.size()) - 1 >= db && !a.empty()) {
    Fq factor = a.back() * lead_inv;
    int shift = int(a.size()) - 1 - db;
    if (!factor.is_zero()) {
      q[size_t(shift)] = factor;
      for (int i = 0; i <= db; ++i) a[size_t(shift + i)] = a[size_t(shift + i)] - factor * b[size_t(i)];
    }
    a.pop_back();
    a = trim(std::move(a));
    if (a.empty()) break;
  }
  return {trim(std::move(q)), std::move(a)};
}

inline Poly rem(Poly a, const Poly& b) { return divmod(std::move(a), b).second; }

inline Poly monic(Poly f) {
  f = trim(std::move(f));
  if (f.empty()) return f;
  return scale(f, f.back().inverse());
}

inline Poly gcd(Poly a, Poly b) {
  a = trim(std::move(a));
  b = trim(std::move(b));
  while (!b.empty()) {
    Poly r = rem(std::move(a), b);
    a = std::move(b);
    b = std::move(r);
  }
  return monic(std::move(a));
}

inline Poly derivative(const Poly& f) {
  if (f.size() <= 1) return {};
  Poly r(f.size() - 1, f[0].field().zero());
  for (size_t i = 1; i < f.size(); ++i) r[i - 1] = f[i] * f[i].field().from_int(int64_t(i));
  return trim(std::move(r));
}

inline Fq eval(const Poly& f, const Fq& x) {
  Fq acc = x.field().zero();
  for (int i = int(f.size()) - 1; i >= 0; --i) acc = acc * x + f[size_t(i)];
  return acc;
}

inline Poly powmod(Poly base, BigInt e, const Poly& mod) {
  if (deg(mod) < 1) fail(Errc::InvalidArgument, "powmod modulus must have positive degree");
  Poly r{mod[0].field().one()};
  base = rem(std::move(base), mod);
  while (e > 0) {
    if ((e & 1) != 0) r = rem(mul(r, base), mod);
    base = rem(mul(base, base), mod);
    e >>= 1;
  }
  return r;
}

// Product of the distinct irreducible factors. Needs care in characteristic p:
// the derivative can vanish (f = u(x^p)) and f/gcd(f,f') drops factors whose
// multiplicity is divisible by p, so those are recovered recursively.
inline Poly radical(Poly f) {
  f = monic(trim(std::move(f)));
  if (deg(f) <= 0) return f;
  Field field = f.back().field();
  Poly d = trim(derivative(f));
  if (d.empty()) {
    int64_t p = field.p();
    Poly u;
    for (size_t i = 0; i < f.size(); i += size_t(p)) u.push_back(pth_root(f[i], 1));
    return radical(std::move(u));
  }
  Poly g = gcd(f, d);
  Poly w = divmod(std::move(f), g).first;  // squarefree part from mult-not-div-p factors
  if (deg(g) <= 0) return monic(std::move(w));
  Poly rg = radical(std::move(g));
  Poly overlap = gcd(w, rg);
  return monic(divmod(mul(w, rg), overlap).first);
}

}  // namespace fqpoly

// All roots in the coefficient field, with multiplicities, in canonical order.
inline std::vector<std::pair<Fq, int>> poly_roots(const std::vector<Fq>& f_in) {
  fqpoly::Poly f = fqpoly::trim(f_in);
  if (f.empty()) fail(Errc::InvalidArgument, "poly_roots of the zero polynomial");
  Field field = f.back().field();
  if (field.q() > kMaxScanFieldSize)
    fail(Errc::UnsupportedField, "field too large for exhaustive root scan");
  std::vector<std::pair<Fq, int>> roots;
  fqpoly::Poly work = f;
  for (int64_t idx = 0; idx < field.q() && fqpoly::deg(work) >= 1; ++idx) {
    Fq r = field.element_at(idx);
    int mult = 0;
    while (fqpoly::deg(work) >= 1) {
      // One synthetic-division pass yields both the quotient and f(r).
      size_t m = work.size() - 1;
      fqpoly::Poly q(m, field.zero());
      Fq carry = work[m];
      for (size_t i = m; i >= 1; --i) {
        q[i - 1] = carry;
        carry = work[i - 1] + r * carry;
      }
      if (!carry.is_zero()) break;
      work = std::move(q);
      ++mult;
    }
    if (mult) roots.emplace_back(std::move(r), mult);
  }
  std::sort(roots.begin(), roots.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return roots;
}

// Ring homomorphism into an extension; the generator maps to the canonical
// (least) root of the source modulus in the target field, fixed per pair.
inline Fq embed(const Fq& x, const Field& target) {
  if (x.null() || target.null()) fail(Errc::InvalidArgument, "embed on null field/element");
  const Field& src = x.field();
  if (src.same(target)) return x;
  if (src.p() != target.p() || target.d() % src.d() != 0)
    fail(Errc::NotASubfield, "no embedding of " + src.to_string() + " into " + target.to_string());
  if (src.d() == 1) return target.from_int(x.coeff(0));

  static std::map<std::pair<std::string, std::string>, std::vector<int64_t>> cache;
  static std::mutex mu;
  Fq gen_image = target.zero();
  {
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(src.to_string(), target.to_string());
    auto it = cache.find(key);
    if (it == cache.end()) {
      fqpoly::Poly lifted;
      for (int64_t c : src.modulus()) lifted.push_back(target.from_int(c));
      auto roots = poly_roots(lifted);
      if (roots.empty()) fail(Errc::NotASubfield, "source modulus has no root in target");
      it = cache.emplace(key, roots.front().first.coeffs()).first;
    }
    gen_image = Fq(target, it->second);
  }
  Fq acc = target.zero();
  for (int i = src.d() - 1; i >= 0; --i) acc = acc * gen_image + target.from_int(x.coeff(i));
  return acc;
}

// Least e >= 1 such that every root of f lies in F_{q^e}: the lcm of the
// degrees of f's irreducible factors, found by distinct-degree splitting.
inline int splitting_extension(const std::vector<Fq>& f_in) {
  fqpoly::Poly f = fqpoly::trim(f_in);
  if (fqpoly::deg(f) < 1) return 1;
  Field field = f.back().field();
  BigInt q = field.q();
  fqpoly::Poly g = fqpoly::radical(f);
  int64_t e = 1;
  fqpoly::Poly x{field.zero(), field.one()};
  for (int k = 1; fqpoly::deg(g) > 0; ++k) {
    if (2 * k > fqpoly::deg(g)) {
      e = std::lcm(e, int64_t(fqpoly::deg(g)));
      break;
    }
    fqpoly::Poly w = fqpoly::powmod(x, pow_big(q, k), g);
    fqpoly::Poly gk = fqpoly::gcd(fqpoly::sub(w, x), g);
    if (fqpoly::deg(gk) > 0) {
      e = std::lcm(e, int64_t(k));
      g = fqpoly::monic(fqpoly::divmod(std::move(g), gk).first);
    }
  }
  if (e > (int64_t(1) << 20)) fail(Errc::BudgetExceeded, "splitting degree out of range");
  return int(e);
}

inline Field Field::parse(const std::string& text) {
  auto caret = text.find('^');
  if (caret == std::string::npos) fail(Errc::SyntaxError, "field must be written p^d: " + text);
  auto colon = text.find(':', caret);
  int64_t p = 0;
  int d = 0;
  try {
    p = std::stoll(text.substr(0, caret));
    d = std::stoi(text.substr(caret + 1, colon == std::string::npos ? std::string::npos
                                                                    : colon - caret - 1));
  } catch (const std::exception&) {
    fail(Errc::SyntaxError, "malformed field descriptor: " + text);
  }
  if (colon == std::string::npos) return gf(p, d);
  std::vector<int64_t> coeffs;
  std::string rest = text.substr(colon + 1);
  std::istringstream is(rest);
  std::string item;
  while (std::getline(is, item, ',')) {
    try {
      coeffs.push_back(std::stoll(item));
    } catch (const std::exception&) {
      fail(Errc::SyntaxError, "malformed modulus coefficient: " + item);
    }
  }
  if (int(coeffs.size()) != d + 1)
    fail(Errc::SyntaxError, "modulus must list exactly d+1 coefficients");
  return with_modulus(p, coeffs);
}

// Parses "0", "3", "1+g", "2*g^2+1", "-1"; whitespace tolerated.
inline Fq parse_element(const Field& field, const std::string& text) {
  std::string s;
  for (char ch : text)
    if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
  if (s.empty()) fail(Errc::SyntaxError, "empty field element");
  Fq acc = field.zero();
  size_t i = 0;
  while (i < s.size()) {
    int64_t sign = 1;
    if (s[i] == '+' || s[i] == '-') {
      sign = s[i] == '-' ? -1 : 1;
      ++i;
    }
    if (i >= s.size()) fail(Errc::SyntaxError, "dangling sign in element: " + text);
    int64_t coeff = 1;
    bool saw_coeff = false;
    if (std::isdigit(static_cast<unsigned char>(s[i]))) {
      size_t j = i;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      coeff = std::stoll(s.substr(i, j - i));
      saw_coeff = true;
      i = j;
      if (i < s.size() && s[i] == '*') ++i;
    }
    int64_t power = 0;
    if (i < s.size() && s[i] == 'g') {
      if (field.d() < 2) fail(Errc::SyntaxError, "generator g undefined in a prime field");
      power = 1;
      ++i;
      if (i < s.size() && s[i] == '^') {
        ++i;
        size_t j = i;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
        if (j == i) fail(Errc::SyntaxError, "missing exponent after g^");
        power = std::stoll(s.substr(i, j - i));
        i = j;
      }
    } else if (!saw_coeff) {
      fail(Errc::SyntaxError, "unexpected character in element: " + text);
    }
    Fq term = field.from_int(sign * coeff);
    if (power > 0) term = term * field.gen().pow(power);
    acc = acc + term;
    if (i < s.size() && s[i] != '+' && s[i] != '-')
      fail(Errc::SyntaxError, "unexpected character in element: " + text);
  }
  return acc;
}

}  // namespace hahn
