#include "hahn/series.hpp"

#include <map>
#include <memory>
#include <random>
#include <thread>
#include <vector>

#include "doctest.h"

using namespace hahn;

namespace {

ExpQ q2(int64_t num, int64_t den = 1) { return ExpQ(2, num, den); }

using TermMap = std::map<ExpQ, Fq>;

// Brute-force convolution coefficient straight off the term maps.
Fq brute_prod_coeff(const TermMap& x, const TermMap& y, const ExpQ& k, const Field& f) {
  Fq acc = f.zero();
  for (const auto& [e, c] : x) {
    auto it = y.find(k - e);
    if (it != y.end()) acc = acc + c * it->second;
  }
  return acc;
}

Series lift(const Field& f, const TermMap& m) {
  return Series::from_terms(f, std::vector<std::pair<ExpQ, Fq>>(m.begin(), m.end()));
}

// Same series routed through the oracle path, hiding the literal fast paths.
Series as_oracle(const Series& s) {
  return Series::from_oracle(s.field(), s.cert(), [s](const ExpQ& e) { return s.coeff(e); });
}

TermMap random_terms(const Field& f, std::mt19937& rng, int max_terms) {
  TermMap m;
  int n = int(rng() % uint64_t(max_terms + 1));
  for (int i = 0; i < n; ++i) {
    ExpQ e(f.p(), int64_t(rng() % 17) - 8, int64_t(1) << (rng() % 3));
    Fq c = f.element_at(int64_t(rng() % uint64_t(f.q())));
    if (!c.is_zero()) m[e] = c;
  }
  return m;
}

}  // namespace

TEST_CASE("literal series compute minimal certificates") {
  Field f2 = Field::gf(2, 1), f4 = Field::gf(2, 2);
  Fq g = f4.gen();

  CHECK(Series::from_terms(f2, {}).cert() == SupportCert{1, 0, 0});
  CHECK(Series::from_terms(f2, {{q2(-1), f2.one()}}).cert() == SupportCert{1, 1, 0});
  CHECK(Series::from_terms(f4, {{q2(1, 2), g}}).cert() == SupportCert{2, 0, 0});
  CHECK(Series::from_terms(f2, {{q2(-1, 2), f2.one()}, {q2(3), f2.one()}}).cert() ==
        SupportCert{2, 1, 0});
  // Zero coefficients drop out before the certificate is computed.
  CHECK(Series::from_terms(f2, {{q2(1), f2.zero()}}).cert() == SupportCert{1, 0, 0});

  CHECK_THROWS_WITH_AS(
      Series::from_terms(f2, {{q2(1), f2.one()}, {q2(1), f2.one()}}),
      doctest::Contains("DuplicateExponent"), Error);
  CHECK_THROWS_WITH_AS(Series::from_terms(f2, {{ExpQ(3, 1), f2.one()}}),
                       doctest::Contains("InvalidArgument"), Error);
  CHECK_THROWS_WITH_AS(Series::from_terms(f2, {{q2(1), f4.one()}}),
                       doctest::Contains("MixedFields"), Error);
}

TEST_CASE("coefficients come from the oracle only inside the certificate") {
  Field f2 = Field::gf(2, 1);
  Series x = chevalley_root(f2);
  CHECK(x.coeff(q2(-1, 32)) == f2.one());
  CHECK(x.coeff(q2(-1, 2)) == f2.one());
  CHECK(x.coeff(q2(-3, 4)).is_zero());
  CHECK(x.coeff(q2(0)).is_zero());
  CHECK(x.coeff(q2(-1)).is_zero());  // outside (1,0,1): needs n >= 0

  auto calls = std::make_shared<int>(0);
  Series guarded = Series::from_oracle(f2, SupportCert{1, 0, 1}, [calls, f2](const ExpQ&) {
    ++*calls;
    return f2.one();
  });
  CHECK(guarded.coeff(q2(-5)).is_zero());
  CHECK(*calls == 0);
  CHECK(guarded.coeff(q2(-1, 2)) == f2.one());
  guarded.coeff(q2(-1, 2));
  CHECK(*calls == 1);  // memoized
}

TEST_CASE("addition and negation act coefficientwise") {
  Field f2 = Field::gf(2, 1);
  Series tinv = Series::from_terms(f2, {{q2(-1), f2.one()}});
  CHECK(materialize(add(tinv, tinv), q2(2), 4).terms.empty());

  Series x = chevalley_root(f2);
  Series second = add(x, Series::from_terms(f2, {{q2(0), f2.one()}}));
  CHECK(second.coeff(q2(0)) == f2.one());
  CHECK(second.coeff(q2(-1, 2)) == f2.one());

  CHECK(window_equal(add(x, Series::from_terms(f2, {})), x, q2(1), 6));
  CHECK(materialize(add(x, negate(x)), q2(1), 6).terms.empty());
  CHECK(add(x, x).provenance() == Provenance::Sum);
}

TEST_CASE("products of monomials and the squared Chevalley root") {
  Field f2 = Field::gf(2, 1);
  Fq one = f2.one();
  Series half = Series::from_terms(f2, {{q2(-1, 2), one}});
  Window w = materialize(mul(half, half), q2(2), 4);
  REQUIRE(w.terms.size() == 1);
  CHECK(w.terms[0].first == q2(-1));
  CHECK(w.terms[0].second == one);

  Series mixed = mul(Series::from_terms(f2, {{q2(0), one}, {q2(1), one}}), half);
  Window wm = materialize(mixed, q2(2), 4);
  REQUIRE(wm.terms.size() == 2);
  CHECK(wm.terms[0].first == q2(-1, 2));
  CHECK(wm.terms[1].first == q2(1, 2));

  // s^2 = s + t^{-1} in characteristic 2: squaring maps t^{-1/2^n} to
  // t^{-1/2^{n-1}} termwise, which re-creates the series plus t^{-1}.
  Series s = chevalley_root(f2);
  Series s2 = mul(s, s);
  Window ws = materialize(s2, q2(0), 3);
  REQUIRE(ws.terms.size() == 4);
  CHECK(ws.terms[0].first == q2(-1));
  CHECK(ws.terms[1].first == q2(-1, 2));
  CHECK(ws.terms[2].first == q2(-1, 4));
  CHECK(ws.terms[3].first == q2(-1, 8));
  Series tinv = Series::from_terms(f2, {{q2(-1), one}});
  CHECK(window_equal(s2, add(s, tinv), q2(0), 6));

  // Same Artin-Schreier identity at p = 3: s^3 - s = t^{-1}.
  Field f3 = Field::gf(3, 1);
  Series u = chevalley_root(f3);
  Series u3 = mul(mul(u, u), u);
  Series rhs = add(u, Series::from_terms(f3, {{ExpQ(3, -1), f3.one()}}));
  CHECK(window_equal(u3, rhs, ExpQ(3, 0), 4));
}

TEST_CASE("twists divide or multiply exponents by p powers") {
  Field f2 = Field::gf(2, 1), f4 = Field::gf(2, 2);
  Fq g = f4.gen();

  Window w = materialize(twist(Series::from_terms(f2, {{q2(-1), f2.one()}}), TwistDir::Down, 1),
                         q2(1), 4);
  REQUIRE(w.terms.size() == 1);
  CHECK(w.terms[0].first == q2(-1, 2));

  Series gt = Series::from_terms(f4, {{q2(1), g}});
  Window wu = materialize(twist(gt, TwistDir::Up, 1), q2(4), 2);
  REQUIRE(wu.terms.size() == 1);
  CHECK(wu.terms[0].first == q2(2));
  CHECK(wu.terms[0].second == g + f4.one());

  Series x = chevalley_root(f2);
  CHECK(window_equal(twist(twist(x, TwistDir::Down, 2), TwistDir::Up, 2), x, q2(0), 5));
  CHECK(twist(x, TwistDir::Down, 0).cert() == x.cert());
}

TEST_CASE("valuation reports the least nonzero exponent or gives up honestly") {
  Field f2 = Field::gf(2, 1);
  ValuationResult v = valuation(chevalley_root(f2), q2(0), 8);
  REQUIRE(v.resolved());
  CHECK(*v.value == q2(-1, 2));

  ValuationResult none = valuation(Series::from_terms(f2, {}), q2(0), 4);
  CHECK(!none.resolved());
  CHECK(none.to_string() == "at_least(r=0,E=4)");

  Series poly = Series::from_terms(f2, {{q2(3), f2.one()}, {q2(5), f2.one()}});
  ValuationResult vp = valuation(poly, q2(10), 0);
  REQUIRE(vp.resolved());
  CHECK(*vp.value == q2(3));
}

TEST_CASE("truncation keeps exponents strictly below the bound") {
  Field f2 = Field::gf(2, 1);
  Series x = chevalley_root(f2);

  Window w = materialize(truncate_below(x, q2(-1, 4)), q2(0), 6);
  REQUIRE(w.terms.size() == 1);
  CHECK(w.terms[0].first == q2(-1, 2));

  CHECK(materialize(truncate_below(x, q2(-1)), q2(0), 6).terms.empty());
  CHECK(window_equal(truncate_below(x, std::nullopt), x, q2(0), 6));

  // Idempotent, and commutes with addition.
  Series y = Series::from_terms(f2, {{q2(-1, 2), f2.one()}, {q2(1), f2.one()}});
  ExpQ j = q2(0);
  CHECK(window_equal(truncate_below(truncate_below(x, j), j), truncate_below(x, j), q2(1), 5));
  CHECK(window_equal(truncate_below(add(x, y), j), add(truncate_below(x, j), truncate_below(y, j)),
                     q2(1), 5));
}

TEST_CASE("windows list exactly the nonzero certificate coefficients") {
  Field f2 = Field::gf(2, 1), f4 = Field::gf(2, 2);
  Window w = materialize(chevalley_root(f2), q2(0), 3);
  REQUIRE(w.terms.size() == 3);
  CHECK(w.terms[0].first == q2(-1, 2));
  CHECK(w.terms[1].first == q2(-1, 4));
  CHECK(w.terms[2].first == q2(-1, 8));
  CHECK(w.to_string() == "1*t^(-1/2) + 1*t^(-1/4) + 1*t^(-1/8)");

  CHECK(materialize(Series::from_terms(f2, {}), q2(2), 4).to_string() == "0");
  CHECK(window_equal(chevalley_root(f2), chevalley_root(f2), q2(0), 6));

  Fq g = f4.gen();
  Window wg = materialize(Series::from_terms(f4, {{q2(1, 2), g + f4.one()}}), q2(1), 1);
  CHECK(wg.to_string() == "(1+g)*t^(1/2)");
}

TEST_CASE("ring laws hold on windows for random series") {
  Field f4 = Field::gf(2, 2);
  std::mt19937 rng(314);
  ExpQ r = q2(2);
  for (int trial = 0; trial < 12; ++trial) {
    TermMap ma = random_terms(f4, rng, 4);
    TermMap mb = random_terms(f4, rng, 4);
    TermMap mc = random_terms(f4, rng, 3);
    Series A = lift(f4, ma), B = lift(f4, mb), C = lift(f4, mc);
    // Route two of them through the oracle path to exercise the general code.
    Series Ao = as_oracle(A), Bo = as_oracle(B);

    CHECK(window_equal(add(Ao, Bo), add(Bo, Ao), r, 4));
    CHECK(window_equal(add(add(Ao, Bo), C), add(Ao, add(Bo, C)), r, 4));
    CHECK(window_equal(mul(Ao, Bo), mul(Bo, Ao), r, 4));
    CHECK(window_equal(mul(mul(Ao, Bo), C), mul(Ao, mul(Bo, C)), r, 4));
    CHECK(window_equal(mul(Ao, add(Bo, C)), add(mul(Ao, Bo), mul(Ao, C)), r, 4));

    // Certificate soundness of every materialized term.
    Series prod = mul(Ao, Bo);
    for (const auto& [e, c] : materialize(prod, r, 4).terms) {
      CHECK(cert_contains(prod.cert(), e));
      CHECK(!c.is_zero());
    }

    // Product coefficients match the brute convolution, including deep ones.
    for (const ExpQ& k : cert_window(prod.cert(), r, 4))
      CHECK(prod.coeff(k) == brute_prod_coeff(ma, mb, k, f4));
    CHECK(prod.coeff(q2(-9, 8)) == brute_prod_coeff(ma, mb, q2(-9, 8), f4));

    // The literal fast path agrees with the splitting-based general path.
    CHECK(window_equal(prod, mul(A, B), r, 4));
  }
}

TEST_CASE("p-th roots multiply back to the series") {
  Field f2 = Field::gf(2, 1);
  std::mt19937 rng(2718);
  for (int trial = 0; trial < 6; ++trial) {
    Series A = lift(f2, random_terms(f2, rng, 4));
    Series y = twist(A, TwistDir::Down, 1);
    CHECK(window_equal(mul(y, y), A, q2(2), 4));
  }
  Series x = chevalley_root(f2);
  Series y = twist(x, TwistDir::Down, 1);
  CHECK(window_equal(mul(y, y), x, q2(0), 5));

  Field f3 = Field::gf(3, 1);
  Series u = chevalley_root(f3);
  Series w = twist(u, TwistDir::Down, 1);
  CHECK(window_equal(mul(mul(w, w), w), u, ExpQ(3, 0), 4));
}

TEST_CASE("oracle evaluation is stable under concurrent queries") {
  Field f2 = Field::gf(2, 1);
  Series s = chevalley_root(f2);
  Series s2 = mul(s, s);

  // Race four cold materializations, then compare against a fresh readback.
  std::vector<Window> views(4, Window{q2(0), 5, {}});
  std::vector<std::thread> pool;
  for (int i = 0; i < 4; ++i)
    pool.emplace_back([&, i] { views[size_t(i)] = materialize(s2, q2(0), 5); });
  for (auto& t : pool) t.join();
  Window expected = materialize(s2, q2(0), 5);
  CHECK(expected.terms.size() == 6);
  for (int i = 0; i < 4; ++i) CHECK(views[size_t(i)].terms == expected.terms);
}

TEST_CASE("mixed fields and null handles are rejected") {
  Field f2 = Field::gf(2, 1), f4 = Field::gf(2, 2);
  Series a = Series::from_terms(f2, {{q2(0), f2.one()}});
  Series b = Series::from_terms(f4, {{q2(0), f4.one()}});
  CHECK_THROWS_WITH_AS(add(a, b), doctest::Contains("MixedFields"), Error);
  CHECK_THROWS_WITH_AS(add(a, Series()), doctest::Contains("InvalidArgument"), Error);
  CHECK_THROWS_WITH_AS(a.coeff(ExpQ(3, 1)), doctest::Contains("InvalidArgument"), Error);
  CHECK_THROWS_WITH_AS(scale(a, f4.one()), doctest::Contains("MixedFields"), Error);
}
