#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "hahn/common.hpp"
#include "hahn/exponents.hpp"
#include "hahn/ffield.hpp"
#include "hahn/lrr.hpp"
#include "hahn/series.hpp"
#include "hahn/twistrec.hpp"

namespace hahn {

// Dense polynomial sum a_i x^i with series coefficients, low degree first.
// The caller vouches that the leading coefficient is a nonzero series; for a
// literal leading coefficient that is checked outright.
struct SeriesPoly {
  Field field;
  std::vector<Series> coeffs;

  int64_t degree() const { return int64_t(coeffs.size()) - 1; }
};

namespace detail {

// Only literal series can be recognized as exactly zero; an oracle that
// happens to vanish everywhere stays indistinguishable from a deep series.
inline bool exact_zero(const Series& s) { return s.literal() && s.literal()->empty(); }

// Same values re-certified with only the prime-to-p denominator content in
// the scale, so period detection sees denominator p-powers as digit
// positions instead of a huge integer grid. Identity on oracle series.
inline Series digit_view(const Series& x) {
  const auto* lit = x.literal();
  if (!lit || lit->empty()) return x;
  BigInt a = 1;
  for (const auto& [e, c] : *lit) a = boost::multiprecision::lcm(a, e.den_a());
  int64_t a64 = to_i64(a, "certificate scale");
  int64_t b = 0, cmax = 0;
  for (const auto& [e, c] : *lit) {
    DigitWord w = to_digits(e, a64);
    if (w.n < 0) b = std::max(b, to_i64(BigInt(-w.n), "certificate bound"));
    cmax = std::max(cmax, w.digit_sum());
  }
  return x.with_cert(SupportCert{a64, b, cmax});
}

}  // namespace detail

inline SeriesPoly make_poly(const Field& field, std::vector<Series> coeffs) {
  if (field.null()) fail(Errc::InvalidArgument, "polynomial needs a coefficient field");
  if (coeffs.size() < 2) fail(Errc::InvalidArgument, "polynomial degree must be at least 1");
  for (const Series& a : coeffs) {
    if (a.null()) fail(Errc::InvalidArgument, "polynomial coefficients must be series");
    if (!field.same(a.field())) fail(Errc::MixedFields, "polynomial coefficients in one field");
  }
  if (detail::exact_zero(coeffs.back()))
    fail(Errc::InvalidArgument, "leading coefficient is the zero series");
  return SeriesPoly{field, std::move(coeffs)};
}

namespace detail {

// x^0, ..., x^D. Cross terms of p-th powers vanish in characteristic p, so
// x^{pi} is a twist of x^i: one coefficient query instead of a convolution.
// That keeps evaluation of x^p - x - a linear in the window size.
inline std::vector<Series> powers_of(const Series& x, int64_t D) {
  int64_t p = x.p();
  std::vector<Series> pow{Series::from_terms(x.field(), {{ExpQ(p, 0), x.field().one()}})};
  for (int64_t i = 1; i <= D; ++i)
    pow.push_back(i % p == 0 ? twist(pow[size_t(i / p)], TwistDir::Up, 1) : mul(pow.back(), x));
  return pow;
}

}  // namespace detail

// P(x); exact under the series arithmetic.
inline Series eval_poly(const SeriesPoly& P, const Series& x) {
  if (!P.field.same(x.field())) fail(Errc::MixedFields, "evaluation point outside the field");
  std::vector<Series> pow = detail::powers_of(x, P.degree());
  Series acc = Series::from_terms(P.field, {});
  for (size_t i = 0; i < P.coeffs.size(); ++i) {
    if (detail::exact_zero(P.coeffs[i])) continue;
    acc = add(acc, mul(P.coeffs[i], pow[i]));
  }
  return acc;
}

// One lower-hull edge between vertices (i_lo, v_lo) and (i_hi, v_hi). The
// edge accounts for `length` = i_hi - i_lo roots of valuation -slope.
struct PolygonSlope {
  ExpQ slope;
  int64_t length = 0;
  int64_t i_lo = 0;
  int64_t i_hi = 0;
  ExpQ v_lo;

  ExpQ root_valuation() const { return -slope; }
};

struct NewtonPolygon {
  std::vector<std::pair<int64_t, ExpQ>> points;  // resolved (i, val a_i); zero coefficients omitted
  std::vector<std::pair<int64_t, ExpQ>> hull;    // lower hull vertices, i ascending
  std::vector<PolygonSlope> slopes;              // slopes strictly ascending
};

// Lower convex hull of (i, val a_i). Exactly-zero coefficients contribute no
// point; any other coefficient whose valuation escapes the search window is
// unusable, because a term hiding beyond it could still cut below the hull.
inline NewtonPolygon newton_polygon(const SeriesPoly& P, const ExpQ& search_r, int64_t search_E) {
  NewtonPolygon out;
  for (int64_t i = 0; i <= P.degree(); ++i) {
    const Series& a = P.coeffs[size_t(i)];
    if (detail::exact_zero(a)) continue;
    ValuationResult v = valuation(a, search_r, search_E);
    if (!v.resolved())
      fail(Errc::UnresolvedValuation, "coefficient " + std::to_string(i) +
                                          " has no terms on the search window (r=" +
                                          search_r.to_string() + ", E=" +
                                          std::to_string(search_E) + "); enlarge it");
    out.points.emplace_back(i, *v.value);
  }
  if (out.points.empty())
    fail(Errc::InvalidArgument, "every coefficient is the zero series");
  for (const auto& pt : out.points) {
    while (out.hull.size() >= 2) {
      const auto& [xa, ya] = out.hull[out.hull.size() - 2];
      const auto& [xb, yb] = out.hull.back();
      // keep b only if a -> b -> pt turns strictly left (convex from below)
      if ((pt.second - ya).scaled(xb - xa) > (yb - ya).scaled(pt.first - xa)) break;
      out.hull.pop_back();
    }
    out.hull.push_back(pt);
  }
  for (size_t k = 0; k + 1 < out.hull.size(); ++k) {
    const auto& [i1, v1] = out.hull[k];
    const auto& [i2, v2] = out.hull[k + 1];
    out.slopes.push_back(PolygonSlope{(v2 - v1).div_int(i2 - i1), i2 - i1, i1, i2, v1});
  }
  return out;
}

// Coefficient equation for the roots of valuation -seg.slope: collects the
// coefficient of each a_i on the edge's support line, so points above the
// edge contribute zero. Both endpoints are hull vertices, hence the result
// has nonzero constant and leading terms.
inline std::vector<Fq> residual_poly(const SeriesPoly& P, const PolygonSlope& seg) {
  if (seg.length < 1 || seg.i_lo < 0 || seg.i_hi > P.degree() || seg.i_lo + seg.length != seg.i_hi)
    fail(Errc::InvalidArgument, "residual needs a polygon edge of this polynomial");
  std::vector<Fq> r;
  for (int64_t j = 0; j <= seg.length; ++j)
    r.push_back(P.coeffs[size_t(seg.i_lo + j)].coeff(seg.v_lo + seg.slope.scaled(j)));
  return r;
}

// Q(x) = P(x + s) via the binomial expansion; Pascal rows are reduced mod p
// first, so characteristic-p cancellations keep literal coefficients literal.
inline SeriesPoly translate(const SeriesPoly& P, const Series& s) {
  if (!P.field.same(s.field())) fail(Errc::MixedFields, "translation amount outside the field");
  int64_t D = P.degree();
  int64_t p = P.field.p();
  std::vector<std::vector<int64_t>> C(size_t(D) + 1, std::vector<int64_t>(size_t(D) + 1, 0));
  for (int64_t j = 0; j <= D; ++j) {
    C[size_t(j)][0] = 1;
    for (int64_t k = 1; k <= j; ++k)
      C[size_t(j)][size_t(k)] =
          (C[size_t(j - 1)][size_t(k - 1)] + (k <= j - 1 ? C[size_t(j - 1)][size_t(k)] : 0)) % p;
  }
  std::vector<Series> spow = detail::powers_of(s, D);
  std::vector<Series> out;
  for (int64_t k = 0; k <= D; ++k) {
    Series acc = Series::from_terms(P.field, {});
    for (int64_t j = k; j <= D; ++j) {
      int64_t bin = C[size_t(j)][size_t(k)];
      if (bin == 0) continue;
      Series term = mul(P.coeffs[size_t(j)], spow[size_t(j - k)]);
      if (bin != 1) term = scale(term, P.field.from_int(bin));
      acc = add(acc, term);
    }
    out.push_back(acc);
  }
  return SeriesPoly{P.field, std::move(out)};
}

// Largest e with P(x) = Q(x^{p^e}). Exactly-zero coefficients are
// transparent; any other coefficient at an index not divisible by p blocks
// the reduction. Roots of P are the p^e-th roots of the roots of Q.
inline std::pair<SeriesPoly, int64_t> inseparable_reduce(const SeriesPoly& P) {
  SeriesPoly Q = P;
  int64_t p = P.field.p();
  int64_t e = 0;
  for (;;) {
    if (Q.degree() % p != 0) break;
    bool reducible = true;
    for (int64_t i = 0; i <= Q.degree(); ++i)
      if (i % p != 0 && !detail::exact_zero(Q.coeffs[size_t(i)])) {
        reducible = false;
        break;
      }
    if (!reducible) break;
    std::vector<Series> sub;
    for (int64_t i = 0; i <= Q.degree(); i += p) sub.push_back(Q.coeffs[size_t(i)]);
    Q = SeriesPoly{Q.field, std::move(sub)};
    ++e;
  }
  return {Q, e};
}

enum class RootStatus { ExactPeriodic, WindowOnly };

inline const char* root_status_name(RootStatus s) {
  return s == RootStatus::ExactPeriodic ? "exact-periodic" : "window-only";
}

// Nonzero coefficients of P(x) found on the verification window; an empty
// list verifies x on that window. `exhaustive` is set when the certificate
// of P(x) places every possible exponent below r inside depth E, so the
// window provably missed nothing below r.
struct VerifyReport {
  Window window;
  bool exhaustive = false;

  bool clean() const { return window.terms.empty(); }
};

inline VerifyReport verify_root(const SeriesPoly& P, const Series& x, const ExpQ& r, int64_t E) {
  Series px = eval_poly(P, x);
  VerifyReport rep;
  rep.window = materialize(px, r, E);
  rep.exhaustive = px.cert().c == 0 && detail::vp_int(px.cert().a, px.p()) <= E;
  return rep;
}

// One root of the input polynomial, or a family of `multiplicity` roots that
// agree on the reported window when the expansion could not separate them.
struct RootResult {
  Series series;
  std::optional<TRSeries> tr;  // recovered periodic expansion, before the twist below
  int64_t twist_down = 0;      // series = twist(build_tr(*tr), Down, twist_down)
  int64_t multiplicity = 1;
  RootStatus status = RootStatus::WindowOnly;
  ExpQ window_r;
  int64_t window_E = 0;
  VerifyReport verification;
};

// A branch whose residual equation did not split over the ambient field: the
// partial expansion reached, the number of roots lost, and a total extension
// degree over the prime field that would recover them.
struct BlockedBranch {
  Window partial;
  int64_t missing = 0;
  int required_degree = 0;
};

struct ExpandOutcome {
  std::vector<RootResult> roots;
  std::vector<BlockedBranch> blocked;
};

struct ExpandJob {
  ExpQ r;                       // report window exponent bound
  int64_t E = 8;                // report window denominator depth
  DetectBounds period_bounds{};
  int64_t max_steps = 4096;     // translation budget across all branches
  int64_t search_pad = 2;       // widens the polygon valuation search beyond (r, E)
  bool require_split = false;   // blocked branches raise FieldTooSmall instead
};

inline std::string root_result_to_string(const RootResult& res) {
  std::ostringstream os;
  os << "root: " << materialize(res.series, res.window_r, res.window_E).to_string();
  os << " | cert: " << res.series.cert().to_string();
  if (res.tr) {
    os << " | period: " << res.tr->period.to_string();
    if (res.twist_down) os << " | twist_down: " << res.twist_down;
  }
  os << " | mult: " << res.multiplicity;
  os << " | status: " << root_status_name(res.status);
  os << " | verify(r=" << res.window_r.to_string() << ",E=" << res.window_E
     << "): " << (res.verification.clean() ? "clean" : res.verification.window.to_string());
  return os.str();
}

namespace detail {

// Depth-first expansion over one inseparability-reduced polynomial. Branch
// state is (translated polynomial, periodic base + appended literal terms);
// results and blocked branches are appended in deterministic preorder.
struct ExpandCore {
  const SeriesPoly& P;   // original polynomial, used for every verification
  const SeriesPoly& P0;  // inseparability-reduced polynomial being expanded
  int64_t e_twist;
  const ExpandJob& job;
  ExpandOutcome& out;

  ExpQ r_here;      // job window transported through the inseparable twist
  int64_t E_here = 0;
  ExpQ search_r;
  int64_t search_E = 0;
  int64_t steps = 0;

  ExpandCore(const SeriesPoly& P_, const SeriesPoly& P0_, int64_t e_, const ExpandJob& job_,
             ExpandOutcome& out_)
      : P(P_), P0(P0_), e_twist(e_), job(job_), out(out_) {
    r_here = job.r.times_ppow(e_twist);
    E_here = std::max<int64_t>(0, job.E - e_twist);
    ExpQ base = r_here + ExpQ(P.field.p(), job.search_pad);
    search_r = std::max(base, base.scaled(P0.degree() + 1));
    search_E = E_here + job.search_pad;
  }

  void run() {
    std::vector<std::pair<ExpQ, Fq>> acc;
    Series zero = Series::from_terms(P0.field, {});
    dfs(P0, zero, acc, std::nullopt, P0.degree(), E_here + 1);
  }

  Series make_head(const Series& base, const std::vector<std::pair<ExpQ, Fq>>& acc) const {
    if (acc.empty()) return base;
    Series tail = detail::digit_view(Series::from_terms(P0.field, acc));
    return detail::exact_zero(base) ? tail : add(base, tail);
  }

  void charge_step() {
    if (++steps > job.max_steps)
      fail(Errc::BudgetExceeded, "root expansion exceeded " + std::to_string(job.max_steps) +
                                     " translation steps");
  }

  // Period detection plus an independent re-verification on a strictly
  // larger window than both the detection samples and the report window.
  // The upgrade certifies the periodic extension as a root on the stated
  // windows; it is evidence at that precision, not a proof beyond it.
  RootResult finalize(const Series& head, int64_t mult, bool allow_upgrade) {
    const Field& field = P.field;
    RootResult res;
    res.multiplicity = mult * pow_i64_checked(field.p(), e_twist);
    res.window_r = job.r;
    res.window_E = job.E;
    res.series = e_twist ? twist(head, TwistDir::Down, e_twist) : head;
    if (allow_upgrade) {
      DetectBounds bounds = job.period_bounds;
      Window seen = materialize(head, r_here, E_here);
      if (!seen.terms.empty()) {
        ExpQ top = seen.terms.back().first.scaled(head.cert().a);
        bounds.m_max = std::max(bounds.m_max, to_i64(top.ceil(), "detection bound") + 2);
      }
      // A finite literal root is describable exactly once the aperiodic
      // prefix reaches its deepest digit.
      if (const auto* lit = head.literal())
        for (const auto& [e, c] : *lit)
          bounds.N_max = std::max(bounds.N_max, int64_t(e.den_e()));
      std::optional<TRSeries> det;
      try {
        det = detect_tr(head, bounds);
      } catch (const Error&) {
        det.reset();
      }
      if (det) {
        Series ext = build_tr(*det);
        bool consistent = true;
        for (const auto& [e, c] : seen.terms)
          if (!(ext.coeff(e) == c)) {
            consistent = false;
            break;
          }
        if (consistent) {
          Series full = e_twist ? twist(ext, TwistDir::Down, e_twist) : ext;
          if (verify_root(P, full, job.r + ExpQ(field.p(), 1), job.E + 2).clean()) {
            res.series = full;
            res.tr = std::move(det);
            res.twist_down = e_twist;
            res.status = RootStatus::ExactPeriodic;
          }
        }
      }
    }
    res.verification = verify_root(P, res.series, job.r, job.E);
    return res;
  }

  void dfs(const SeriesPoly& Q, const Series& base, std::vector<std::pair<ExpQ, Fq>>& acc,
           const std::optional<ExpQ>& last, int64_t mult, int64_t jumps_left) {
    const Field& field = P0.field;

    // x^{i_min} divides Q exactly: the accumulated expansion is an exact root.
    int64_t i_min = 0;
    while (i_min <= Q.degree() && detail::exact_zero(Q.coeffs[size_t(i_min)])) ++i_min;
    if (i_min > 0) out.roots.push_back(finalize(make_head(base, acc), i_min, true));
    if (i_min >= Q.degree()) return;

    // An oracle constant term that vanishes on the whole search window: the
    // window cannot separate the remaining families from the head.
    bool a0_dead = false;
    if (i_min == 0 && !Q.coeffs[0].literal())
      a0_dead = !valuation(Q.coeffs[0], search_r, search_E).resolved();

    SeriesPoly Qp = Q;
    if (a0_dead) Qp.coeffs[0] = Series::from_terms(field, {});
    NewtonPolygon polygon = newton_polygon(Qp, search_r, search_E);

    struct Cont {
      ExpQ mu;
      Fq c;
      int64_t m;
    };
    std::vector<Cont> conts;
    int64_t stalled = 0;     // next exponent needs denominator depth > E
    int64_t stopped = 0;     // next exponent is at or beyond the precision bound
    int64_t continued = 0;
    int64_t blocked_here = 0;
    for (auto it = polygon.slopes.rbegin(); it != polygon.slopes.rend(); ++it) {
      ExpQ mu = it->root_valuation();
      if (last && !(mu > *last)) continue;  // covered by sibling branches
      if (!(mu < r_here)) {
        stopped += it->length;
        continue;
      }
      if (mu.den_e() > E_here) {
        stalled += it->length;
        continue;
      }
      std::vector<Fq> res = residual_poly(Q, *it);
      auto roots = poly_roots(res);
      int64_t found = 0;
      for (const auto& [c, m] : roots) found += m;
      if (found < it->length) {
        int required = P.field.d() * splitting_extension(res);
        if (job.require_split)
          fail_field_too_small("a residual equation of degree " + std::to_string(it->length) +
                                   " does not split over the coefficient field",
                               required);
        Series head = make_head(base, acc);
        Series shown = e_twist ? twist(head, TwistDir::Down, e_twist) : head;
        out.blocked.push_back(BlockedBranch{materialize(shown, job.r, job.E),
                                            (it->length - found) * pow_i64_checked(field.p(), e_twist),
                                            required});
        blocked_here += it->length - found;
      }
      for (const auto& [c, m] : roots) {
        conts.push_back(Cont{mu, c, m});
        continued += m;
      }
    }

    // Crossing a limit of the exponent sequence: when the next exponents sink
    // below the depth bound, a detected period extends the head past the
    // accumulation point and the expansion restarts on the translated
    // polynomial. Chevalley-type roots separate from their constant shifts
    // only through this jump.
    std::optional<std::pair<SeriesPoly, Series>> jump;
    if (stalled > 0 && jumps_left > 0) {
      Series head = make_head(base, acc);
      DetectBounds bounds = job.period_bounds;
      // The head is only certified to digit depth E: fit the period inside
      // that window and extrapolate, rather than reading truncation zeros.
      bounds.depth_limit = E_here;
      Window seen = materialize(head, r_here, E_here);
      if (!seen.terms.empty()) {
        ExpQ top = seen.terms.back().first.scaled(head.cert().a);
        bounds.m_max = std::max(bounds.m_max, to_i64(top.ceil(), "detection bound") + 2);
      }
      std::optional<TRSeries> det;
      try {
        det = detect_tr(head, bounds);
      } catch (const Error&) {
        det.reset();
      }
      if (det && det->period.N + 2 * det->period.M <= E_here) {
        Series ext = build_tr(*det);
        int64_t probe_E = E_here + det->period.M + det->period.N + 2;
        bool progress = !window_equal(ext, head, r_here, probe_E);
        bool consistent = true;
        for (const auto& [e, c] : seen.terms)
          if (!(ext.coeff(e) == c)) {
            consistent = false;
            break;
          }
        if (progress && consistent) {
          charge_step();
          jump.emplace(translate(P0, ext), ext);
        }
      }
    }

    int64_t window_mult = stopped + (jump ? 0 : stalled);
    if (window_mult > 0) out.roots.push_back(finalize(make_head(base, acc), window_mult, false));
    if (a0_dead) {
      int64_t rest = mult - continued - blocked_here - stopped - stalled;
      if (rest > 0) out.roots.push_back(finalize(make_head(base, acc), rest, true));
    }

    for (const Cont& cont : conts) {
      charge_step();
      SeriesPoly Qc = translate(Q, monomial(field, cont.mu, cont.c));
      acc.emplace_back(cont.mu, cont.c);
      dfs(Qc, base, acc, cont.mu, cont.m, jumps_left);
      acc.pop_back();
    }
    if (jump) {
      std::vector<std::pair<ExpQ, Fq>> fresh;
      dfs(jump->first, jump->second, fresh, last, stalled, jumps_left - 1);
    }
  }
};

}  // namespace detail

// Depth-first branching over polygon edges and residual roots. Every branch
// termination (precision reached, denominator depth exhausted, or residual
// constant dead on its window) produces a window-faithful result; exact and
// window-exhausted heads additionally attempt the periodic upgrade.
inline ExpandOutcome expand_root(const SeriesPoly& P, const ExpandJob& job) {
  if (job.r.null() || job.r.p() != P.field.p())
    fail(Errc::InvalidArgument, "expansion window needs an exponent bound over the ambient field");
  if (job.E < 0 || job.max_steps < 1 || job.search_pad < 1)
    fail(Errc::InvalidArgument, "expansion job bounds must be positive");
  auto [Q, e] = inseparable_reduce(P);
  ExpandOutcome out;
  detail::ExpandCore core(P, Q, e, job, out);
  core.run();
  return out;
}

// Recognizes u (x^p - x - y) for a scalar unit u and routes to the direct
// construction, returning the orbit x0 + F_p of all p roots. Absent when the
// polynomial does not have that shape with literal scalar ends.
inline std::optional<std::vector<RootResult>> as_fast_path(const SeriesPoly& P,
                                                           const ExpandJob& job) {
  const Field& field = P.field;
  int64_t p = field.p();
  if (P.degree() != p) return std::nullopt;
  auto constant_of = [&](const Series& s) -> std::optional<Fq> {
    const auto* lit = s.literal();
    if (!lit) return std::nullopt;
    if (lit->empty()) return field.zero();
    if (lit->size() != 1 || !lit->begin()->first.is_zero()) return std::nullopt;
    return lit->begin()->second;
  };
  auto u = constant_of(P.coeffs.back());
  if (!u || u->is_zero()) return std::nullopt;
  auto a1 = constant_of(P.coeffs[1]);
  if (!a1 || !(*a1 == -*u)) return std::nullopt;
  for (int64_t i = 2; i < p; ++i)
    if (!detail::exact_zero(P.coeffs[size_t(i)])) return std::nullopt;

  Series y = scale(P.coeffs[0], -(u->inverse()));
  Series x0 = as_solve(y);
  ExpandOutcome scratch;
  detail::ExpandCore core(P, P, 0, job, scratch);
  std::vector<RootResult> roots;
  for (int64_t k = 0; k < p; ++k) {
    Series cand =
        k ? add(x0, Series::from_terms(field, {{ExpQ(p, 0), field.from_int(k)}})) : x0;
    roots.push_back(core.finalize(cand, 1, true));
  }
  return roots;
}

}  // namespace hahn
