#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hahn/ffield.hpp"

namespace hahn {

// Linearized recurrence d_0 c_n + d_1 c_{n+1}^p + ... + d_k c_{n+k}^{p^k} = 0,
// asserted for all n >= start_offset. The same coefficients read as the
// additive polynomial P(x) = d_0 x + d_1 x^p + ... + d_k x^{p^k}.
struct LRRSpec {
  std::vector<Fq> d;
  int64_t start_offset = 0;

  int order() const { return int(d.size()) - 1; }
  const Field& field() const { return d.front().field(); }

  std::string to_string() const {
    std::ostringstream os;
    os << '[';
    for (size_t i = 0; i < d.size(); ++i) {
      if (i) os << ',';
      os << d[i].to_string();
    }
    os << "]@" << start_offset;
    return os.str();
  }
};

inline LRRSpec make_lrr(std::vector<Fq> d, int64_t start_offset = 0) {
  if (d.empty()) fail(Errc::InvalidArgument, "recurrence needs at least one coefficient");
  if (start_offset < 0) fail(Errc::InvalidArgument, "start offset must be nonnegative");
  const Field& f = d.front().field();
  if (f.null()) fail(Errc::InvalidArgument, "recurrence coefficients need a field");
  for (const Fq& c : d)
    if (!f.same(c.field())) fail(Errc::MixedFields, "recurrence coefficients in one field");
  if (d.back().is_zero()) fail(Errc::InvalidArgument, "leading recurrence coefficient is zero");
  return {std::move(d), start_offset};
}

inline LRRSpec parse_lrr(const Field& field, const std::string& text) {
  auto open = text.find('[');
  auto close = text.find(']');
  if (open == std::string::npos || close == std::string::npos || close < open)
    fail(Errc::SyntaxError, "recurrence must look like [d0,...,dk]@N0: " + text);
  std::vector<Fq> d;
  std::string body = text.substr(open + 1, close - open - 1);
  std::istringstream is(body);
  std::string item;
  while (std::getline(is, item, ',')) d.push_back(parse_element(field, item));
  int64_t offset = 0;
  auto at = text.find('@', close);
  if (at != std::string::npos) {
    try {
      offset = std::stoll(text.substr(at + 1));
    } catch (const std::exception&) {
      fail(Errc::SyntaxError, "malformed start offset: " + text);
    }
  }
  return make_lrr(std::move(d), offset);
}

// Eventual periodicity: c_{n+M} = c_n for all n >= N.
struct PeriodCert {
  int64_t M = 1;
  int64_t N = 0;

  bool operator==(const PeriodCert& o) const { return M == o.M && N == o.N; }

  std::string to_string() const { return std::to_string(M) + "," + std::to_string(N); }

  static PeriodCert parse(const std::string& text) {
    auto comma = text.find(',');
    if (comma == std::string::npos) fail(Errc::SyntaxError, "period must be M,N: " + text);
    try {
      PeriodCert c{std::stoll(text.substr(0, comma)), std::stoll(text.substr(comma + 1))};
      if (c.M < 1 || c.N < 0) fail(Errc::InvalidArgument, "period needs M >= 1, N >= 0");
      return c;
    } catch (const Error&) {
      throw;
    } catch (const std::exception&) {
      fail(Errc::SyntaxError, "malformed period: " + text);
    }
  }
};

inline Fq additive_eval(const LRRSpec& spec, const Fq& x) {
  Fq acc = x.field().zero();
  Fq power = x;  // x^{p^i}
  for (size_t i = 0; i < spec.d.size(); ++i) {
    acc = acc + spec.d[i] * power;
    power = frobenius(power, 1);
  }
  return acc;
}

// Strips leading zero coefficients: d_0 = 0 means the relation is a p-th
// power of a shorter one starting one step later.
inline LRRSpec lrr_reduce(LRRSpec spec) {
  while (spec.d.size() > 1 && spec.d.front().is_zero()) {
    std::vector<Fq> nd;
    for (size_t i = 1; i < spec.d.size(); ++i) nd.push_back(pth_root(spec.d[i], 1));
    spec.d = std::move(nd);
    spec.start_offset += 1;
  }
  return spec;
}

namespace detail {

// P as a dense polynomial of degree p^k; used for splitting-degree probes.
inline std::optional<fqpoly::Poly> additive_poly(const LRRSpec& spec) {
  const Field& f = spec.field();
  BigInt degree = pow_big(f.p(), spec.order());
  if (degree > 4096) return std::nullopt;
  fqpoly::Poly P(size_t(to_i64(degree, "degree")) + 1, f.zero());
  int64_t pos = 1;
  for (size_t i = 0; i < spec.d.size(); ++i) {
    P[size_t(pos)] = spec.d[i];
    pos *= f.p();
  }
  return fqpoly::trim(std::move(P));
}

// Greedy F_p-linear basis extraction with Gaussian pivoting on coefficients.
struct FpSpan {
  int64_t p;
  std::vector<std::pair<size_t, std::vector<int64_t>>> pivots;

  // Returns true (and absorbs v) when v is independent of the span so far.
  bool absorb(std::vector<int64_t> v) {
    for (auto& [pos, row] : pivots) {
      int64_t coef = v[pos];
      if (!coef) continue;
      for (size_t i = 0; i < v.size(); ++i) v[i] = mod_pos(v[i] - coef * row[i] % p, p);
    }
    size_t lead = v.size();
    for (size_t i = 0; i < v.size(); ++i)
      if (v[i]) {
        lead = i;
        break;
      }
    if (lead == v.size()) return false;
    int64_t inv = inv_mod(v[lead], p);
    for (auto& c : v) c = c * inv % p;
    pivots.emplace_back(lead, std::move(v));
    return true;
  }
};

}  // namespace detail

// A basis of the kernel of P in the ambient field. The kernel of an order-k
// additive polynomial with d_0 != 0 is k-dimensional over F_p once the field
// is large enough; otherwise FieldTooSmall reports a sufficient total degree.
inline std::vector<Fq> kernel_basis(const LRRSpec& spec_in, const Field& ambient) {
  LRRSpec spec = lrr_reduce(spec_in);
  if (spec.d.front().is_zero())
    fail(Errc::InvalidArgument, "kernel operations need d_0 != 0");
  if (ambient.q() > kMaxScanFieldSize)
    fail(Errc::UnsupportedField, "ambient field too large for kernel scan");
  std::vector<Fq> d;
  for (const Fq& c : spec.d) d.push_back(embed(c, ambient));
  LRRSpec local{std::move(d), spec.start_offset};

  int k = local.order();
  std::vector<Fq> basis;
  detail::FpSpan span{ambient.p(), {}};
  for (int64_t idx = 0; idx < ambient.q() && int(basis.size()) < k; ++idx) {
    Fq x = ambient.element_at(idx);
    if (!additive_eval(local, x).is_zero()) continue;
    if (span.absorb(x.coeffs())) basis.push_back(x);
  }
  if (int(basis.size()) == k) return basis;

  int required = 0;
  if (auto P = detail::additive_poly(local)) required = ambient.d() * splitting_extension(*P);
  Error e(Errc::FieldTooSmall, "kernel of " + spec_in.to_string() + " does not split in " +
                                   ambient.to_string());
  e.required_degree = required;
  throw e;
}

// Determinant of the Moore matrix with rows (z_1^{p^i}, ..., z_k^{p^i}).
inline Fq moore_det(const std::vector<Fq>& z) {
  if (z.empty()) fail(Errc::InvalidArgument, "moore_det of empty list");
  const Field& f = z.front().field();
  size_t k = z.size();
  std::vector<std::vector<Fq>> m(k, std::vector<Fq>(k, f.zero()));
  for (size_t j = 0; j < k; ++j) {
    Fq v = z[j];
    for (size_t i = 0; i < k; ++i) {
      m[i][j] = v;
      v = frobenius(v, 1);
    }
  }
  Fq det = f.one();
  for (size_t col = 0; col < k; ++col) {
    size_t pivot = col;
    while (pivot < k && m[pivot][col].is_zero()) ++pivot;
    if (pivot == k) return f.zero();
    if (pivot != col) {
      std::swap(m[pivot], m[col]);
      det = -det;
    }
    det = det * m[col][col];
    Fq inv = m[col][col].inverse();
    for (size_t r = col + 1; r < k; ++r) {
      if (m[r][col].is_zero()) continue;
      Fq factor = m[r][col] * inv;
      for (size_t c = col; c < k; ++c) m[r][c] = m[r][c] - factor * m[col][c];
    }
  }
  return det;
}

// Scalars lambda with c_n = sum_j z_j lambda_j^{1/p^n} for n = 0..k-1, via the
// p^n-th power of each equation: c_n^{p^n} = sum_j z_j^{p^n} lambda_j.
inline std::vector<Fq> solve_scalars(const std::vector<Fq>& z, const std::vector<Fq>& c) {
  if (z.size() != c.size()) fail(Errc::InvalidArgument, "need one initial term per basis root");
  if (z.empty()) return {};
  const Field& f = z.front().field();
  size_t k = z.size();
  std::vector<std::vector<Fq>> aug(k, std::vector<Fq>(k + 1, f.zero()));
  for (size_t n = 0; n < k; ++n) {
    for (size_t j = 0; j < k; ++j) aug[n][j] = frobenius(z[j], int64_t(n));
    aug[n][k] = frobenius(c[n], int64_t(n));
  }
  for (size_t col = 0; col < k; ++col) {
    size_t pivot = col;
    while (pivot < k && aug[pivot][col].is_zero()) ++pivot;
    if (pivot == k) fail(Errc::SingularSystem, "basis roots are F_p-dependent");
    std::swap(aug[pivot], aug[col]);
    Fq inv = aug[col][col].inverse();
    for (size_t c2 = col; c2 <= k; ++c2) aug[col][c2] = aug[col][c2] * inv;
    for (size_t r = 0; r < k; ++r) {
      if (r == col || aug[r][col].is_zero()) continue;
      Fq factor = aug[r][col];
      for (size_t c2 = col; c2 <= k; ++c2) aug[r][c2] = aug[r][c2] - factor * aug[col][c2];
    }
  }
  std::vector<Fq> lambda;
  for (size_t j = 0; j < k; ++j) lambda.push_back(aug[j][k]);
  return lambda;
}

// Closed form sum_j z_j lambda_j^{1/p^n}.
inline Fq twist_eval(const std::vector<Fq>& z, const std::vector<Fq>& lambda, int64_t n) {
  if (z.size() != lambda.size()) fail(Errc::InvalidArgument, "mismatched basis and scalars");
  if (z.empty()) fail(Errc::InvalidArgument, "twist_eval of empty basis");
  Fq acc = z.front().field().zero();
  for (size_t j = 0; j < z.size(); ++j) acc = acc + z[j] * pth_root(lambda[j], n);
  return acc;
}

// First `count` terms of the sequence determined by the initial terms and the
// recurrence applied from start_offset on.
inline std::vector<Fq> extend_prefix(const LRRSpec& spec, std::vector<Fq> terms, size_t count) {
  int k = spec.order();
  if (int64_t(terms.size()) < spec.start_offset + k)
    fail(Errc::InvalidArgument, "need initial terms through start_offset + order");
  const Field& f = spec.field();
  for (const Fq& t : terms)
    if (!f.same(t.field())) fail(Errc::MixedFields, "initial terms in the recurrence field");
  Fq lead_inv = spec.d.back().inverse();
  while (terms.size() < count) {
    if (k == 0) {
      terms.push_back(f.zero());  // d_0 c_n = 0 forces zero past the offset
      continue;
    }
    size_t n = terms.size() - size_t(k);
    Fq s = f.zero();
    for (int i = 0; i < k; ++i) s = s + spec.d[size_t(i)] * frobenius(terms[n + size_t(i)], i);
    terms.push_back(pth_root(-(lead_inv * s), k));
  }
  terms.resize(count);
  return terms;
}

inline Fq extend_sequence(const LRRSpec& spec, const std::vector<Fq>& initial, int64_t n) {
  if (n < 0) fail(Errc::InvalidArgument, "sequence index must be nonnegative");
  if (n < int64_t(initial.size())) return initial[size_t(n)];
  return extend_prefix(spec, initial, size_t(n) + 1).back();
}

// Monic additive polynomial whose kernel is exactly the F_p-span of the given
// vectors, built by L_{V+<v>}(x) = L_V(x)^p - L_V(v)^{p-1} L_V(x).
inline LRRSpec subspace_poly(const std::vector<Fq>& vectors, const Field& ambient) {
  std::vector<Fq> d{ambient.one()};  // L(x) = x
  for (const Fq& v_in : vectors) {
    Fq v = embed(v_in, ambient);
    // Evaluate current L at v.
    Fq lv = ambient.zero();
    {
      Fq power = v;
      for (size_t i = 0; i < d.size(); ++i) {
        lv = lv + d[i] * power;
        power = frobenius(power, 1);
      }
    }
    if (lv.is_zero()) continue;  // already in the span
    Fq w = lv.pow(ambient.p() - 1);
    std::vector<Fq> nd(d.size() + 1, ambient.zero());
    for (size_t i = 0; i < d.size(); ++i) {
      nd[i] = nd[i] - w * d[i];
      nd[i + 1] = nd[i + 1] + frobenius(d[i], 1);
    }
    d = std::move(nd);
  }
  return make_lrr(std::move(d), 0);
}

enum class CombineMode { Sum, Product };

// A recurrence annihilating termwise sums (resp. products) of any solutions
// of the two inputs; the kernel is the span sum (resp. product span).
inline LRRSpec combine(const LRRSpec& s1, const LRRSpec& s2, CombineMode mode,
                       const Field& ambient) {
  LRRSpec r1 = lrr_reduce(s1), r2 = lrr_reduce(s2);
  // Probe splitting degrees first so one error reports a field that fits both.
  {
    int64_t e = 1;
    for (const LRRSpec* s : {&r1, &r2}) {
      std::vector<Fq> d;
      for (const Fq& c : s->d) d.push_back(embed(c, ambient));
      if (auto P = detail::additive_poly(LRRSpec{std::move(d), 0}))
        e = std::lcm(e, int64_t(splitting_extension(*P)));
    }
    if (e > 1)
      fail_field_too_small("recurrence kernels do not split in " + ambient.to_string(),
                           int(e * ambient.d()));
  }
  std::vector<Fq> z1 = kernel_basis(r1, ambient);
  std::vector<Fq> z2 = kernel_basis(r2, ambient);
  std::vector<Fq> span;
  if (mode == CombineMode::Sum) {
    span = z1;
    span.insert(span.end(), z2.begin(), z2.end());
  } else {
    for (const Fq& a : z1)
      for (const Fq& b : z2) span.push_back(a * b);
  }
  LRRSpec out = subspace_poly(span, ambient);
  out.start_offset = std::max(r1.start_offset, r2.start_offset);
  return out;
}

// If the differenced sequence b_n = c_{n+1}^p - c_n satisfies spec, then c_n
// satisfies this order-(k+1) recurrence; telescoping the substitution gives
// coefficients (-d_0, d_0 - d_1, ..., d_{k-1} - d_k, d_k).
inline LRRSpec as_shift(const LRRSpec& spec) {
  const Field& f = spec.field();
  std::vector<Fq> e(spec.d.size() + 1, f.zero());
  e[0] = -spec.d[0];
  for (size_t j = 1; j < spec.d.size(); ++j) e[j] = spec.d[j - 1] - spec.d[j];
  e[spec.d.size()] = spec.d.back();
  return make_lrr(std::move(e), spec.start_offset);
}

// Any F_q-sequence with period M after N terms satisfies
// c_{n+N} = c_{n+N+Md}^{p^{Md}} for all n >= 0, i.e. d_N = -1, d_{N+Md} = 1.
inline LRRSpec period_to_lrr(const PeriodCert& cert, const Field& field) {
  if (cert.M < 1 || cert.N < 0) fail(Errc::InvalidArgument, "period needs M >= 1, N >= 0");
  int64_t k = cert.N + cert.M * field.d();
  std::vector<Fq> d(size_t(k) + 1, field.zero());
  d[size_t(cert.N)] = -field.one();
  d[size_t(k)] = field.one();
  return make_lrr(std::move(d), 0);
}

// Least (N, M) lexicographic with c_{n+M} = c_n on all sampled n >= N; a
// semi-decision sound only over the sampled window.
inline std::optional<PeriodCert> detect_period(const std::function<Fq(int64_t)>& stream,
                                               int64_t M_max, int64_t N_max, int64_t samples) {
  if (M_max < 1 || N_max < 0) fail(Errc::InvalidArgument, "period bounds out of range");
  if (samples < N_max + 2 * M_max)
    fail(Errc::InvalidArgument, "need at least N_max + 2*M_max samples");
  std::vector<Fq> c;
  c.reserve(size_t(samples));
  for (int64_t n = 0; n < samples; ++n) c.push_back(stream(n));
  for (int64_t N = 0; N <= N_max; ++N) {
    for (int64_t M = 1; M <= M_max; ++M) {
      bool ok = true;
      for (int64_t n = N; n + M < samples && ok; ++n) ok = c[size_t(n + M)] == c[size_t(n)];
      if (ok) return PeriodCert{M, N};
    }
  }
  return std::nullopt;
}

// Exact minimal (M, N) for the sequence a recurrence generates: simulate until
// a k-tuple state repeats, then shrink the period to the least divisor and
// walk the preperiod back. Termination within q^k + offset steps.
inline PeriodCert lrr_to_period(const LRRSpec& spec, const std::vector<Fq>& initial) {
  int k = spec.order();
  const Field& f = spec.field();
  if (int64_t(initial.size()) < spec.start_offset + k)
    fail(Errc::InvalidArgument, "need initial terms through start_offset + order");

  std::vector<Fq> terms = initial;
  auto term_at = [&](int64_t n) {
    if (n >= int64_t(terms.size())) {
      size_t want = std::max(size_t(n) + 1, 2 * terms.size());
      terms = extend_prefix(spec, std::move(terms), want);
    }
    return terms[size_t(n)];
  };
  std::map<std::vector<int64_t>, int64_t> seen;
  int64_t cycle_start = -1, cycle_len = -1;
  for (int64_t n = spec.start_offset;; ++n) {
    if (n > spec.start_offset + (int64_t(1) << 22))
      fail(Errc::BudgetExceeded, "period search exceeded state budget");
    std::vector<int64_t> state;
    for (int i = 0; i < std::max(k, 1); ++i) state.push_back(f.index_of(term_at(n + i)));
    auto [it, fresh] = seen.emplace(std::move(state), n);
    if (!fresh) {
      cycle_start = it->second;
      cycle_len = n - it->second;
      break;
    }
  }
  term_at(cycle_start + 2 * cycle_len);  // materialize everything the scans touch

  int64_t M = cycle_len;
  for (int64_t div = 1; div <= cycle_len; ++div) {
    if (cycle_len % div) continue;
    bool ok = true;
    for (int64_t n = cycle_start; n < cycle_start + cycle_len && ok; ++n)
      ok = terms[size_t(n + div)] == terms[size_t(n)];
    if (ok) {
      M = div;
      break;
    }
  }
  int64_t N = cycle_start;
  while (N > 0 && terms[size_t(N - 1 + M)] == terms[size_t(N - 1)]) --N;
  return PeriodCert{M, N};
}

}  // namespace hahn
