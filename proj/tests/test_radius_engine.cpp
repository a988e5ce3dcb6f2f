#include <doctest.h>

#include <algorithm>
#include <random>

#include "padiff/radius_engine.hpp"

using namespace padiff;

namespace {

CompanionSystem rank_one(const GaussSeries& g) {
  CompanionSystem s;
  s.rank = 1;
  s.G = SeriesMatrix(1);
  s.G.at(0, 0) = g;
  return s;
}

std::vector<LogValue> padded(std::initializer_list<long> vals) {
  std::vector<LogValue> w;
  for (long v : vals) w.emplace_back(mpq_class(v));
  return w;
}

}  // namespace

TEST_CASE("tail slope detection") {
  // Strictly linear: w_n = 2n.
  std::vector<LogValue> lin;
  for (int n = 0; n <= 40; ++n) lin.emplace_back(mpq_class(2 * n));
  SlopeDetection d = detect_tail_slope(lin, 20);
  CHECK(d.status == SlopeDetection::Status::linear);
  CHECK(d.slope == 2);
  CHECK(d.period == 1);

  // Linear-periodic: w_n = 3n/2 + (n mod 2), period 2.
  std::vector<LogValue> per;
  for (int n = 0; n <= 40; ++n) {
    mpq_class v = mpq_class(3 * n, 2) + (n % 2);
    v.canonicalize();
    per.emplace_back(v);
  }
  d = detect_tail_slope(per, 20);
  CHECK(d.status == SlopeDetection::Status::linear);
  CHECK(d.slope == mpq_class(3, 2));
  CHECK(d.period == 2);

  // Terminating expansion: all infinite in the window.
  std::vector<LogValue> fin = padded({0, 1, 1});
  for (int n = 0; n < 40; ++n) fin.push_back(LogValue::pos_infinity());
  CHECK(detect_tail_slope(fin, 20).status == SlopeDetection::Status::all_zero);

  // The 2-adic factorial valuation n - s_2(n) is not eventually
  // linear-periodic for any period up to the search cap.
  std::vector<LogValue> fact;
  FieldSpec q2 = FieldSpec::padic(2, 20);
  for (unsigned long n = 0; n <= 80; ++n)
    fact.emplace_back(factorial_valuation(n, q2));
  CHECK(detect_tail_slope(fact, 40).status == SlopeDetection::Status::inconclusive);
}

TEST_CASE("rank-one closed form") {
  // For y' = a y with constant a: log R = v(a) - 1/(p-1), uncapped.
  for (unsigned long p : {2ul, 3ul, 5ul}) {
    FieldSpec f = FieldSpec::padic(p, 30);
    mpq_class kappa(1, static_cast<long>(p) - 1);
    kappa.canonicalize();
    for (mpq_class a : {mpq_class(1), mpq_class(static_cast<long>(p)),
                        mpq_class(1, static_cast<long>(p))}) {
      a.canonicalize();
      RadiusEngine eng(rank_one(GaussSeries(a)), f);
      RadiusOutcome ro =
          first_radius(eng, mpq_class(0), TriangulationDatum::fixed_outer(mpq_class(0)));
      REQUIRE(ro.conclusive);
      mpq_class expect = valuation(a, f).value() - kappa;
      expect.canonicalize();
      CHECK(ro.log_taylor.value() == expect);
      CHECK(ro.log_rel == min(LogValue(mpq_class(0)), LogValue(expect)));
    }
  }
  // p = 2, a = 1: radius 2^-1, the classical exp disk.
  RadiusEngine eng(rank_one(GaussSeries(mpq_class(1))), FieldSpec::padic(2, 30));
  CHECK(first_radius(eng, mpq_class(0), TriangulationDatum::fixed_outer(mpq_class(0)))
            .log_taylor.value() == -1);
}

TEST_CASE("trivially valued rank one with a pole") {
  // y' = T^-2 y: log R(u) = 2u, relative to the moving outer disk it is u.
  RadiusEngine eng(rank_one(GaussSeries::monomial(mpq_class(1), -2)),
                   FieldSpec::trivial());
  mpq_class u(-1, 2);
  RadiusOutcome ro = first_radius(eng, u, TriangulationDatum::moving_outer());
  REQUIRE(ro.conclusive);
  CHECK(ro.log_taylor.value() == 2 * u);
  CHECK(ro.log_rel.value() == u);
}

TEST_CASE("order-two operator with a polynomial solution") {
  // (d^2 - d) y = 0: solutions 1 and e^T.  Over Q_2 the multiradius at the
  // Gauss point of the unit disk is (1/2, 1).
  FieldSpec q2 = FieldSpec::padic(2, 30);
  RadiusEngine eng(companion(DiffOperator::parse("d^2 - d"), q2), q2);
  TriangulationDatum datum = TriangulationDatum::fixed_outer(mpq_class(0));
  MultiradiusPoint mp = multiradius_at(eng, mpq_class(0), datum);
  REQUIRE(mp.conclusive);
  REQUIRE(mp.per_index.size() == 2);
  CHECK(mp.per_index[0].log_taylor.value() == -1);
  CHECK(mp.per_index[1].log_taylor.is_pos_infinity());
  CHECK(mp.per_index[0].log_rel.value() == -1);
  CHECK(mp.per_index[1].log_rel.value() == 0);
  CHECK(first_radius(eng, mpq_class(0), datum).log_taylor.value() == -1);
}

TEST_CASE("direct sum multiset law") {
  FieldSpec q3 = FieldSpec::padic(3, 30);
  TriangulationDatum datum = TriangulationDatum::fixed_outer(mpq_class(0));
  std::mt19937 rng(415);
  std::uniform_int_distribution<int> nblocks(2, 3);
  std::uniform_int_distribution<long> nums(1, 40);
  for (int iter = 0; iter < 20; ++iter) {
    int k = nblocks(rng);
    std::vector<mpq_class> as;
    for (int i = 0; i < k; ++i) {
      mpq_class a(nums(rng), nums(rng));
      a.canonicalize();
      as.push_back(a);
    }
    CompanionSystem sys = rank_one(GaussSeries(as[0]));
    std::vector<mpq_class> expect;
    for (int i = 0; i < k; ++i) {
      if (i > 0) sys = direct_sum(sys, rank_one(GaussSeries(as[static_cast<std::size_t>(i)])));
      mpq_class t = valuation(as[static_cast<std::size_t>(i)], q3).value() - mpq_class(1, 2);
      t.canonicalize();
      expect.push_back(t);
    }
    std::sort(expect.begin(), expect.end());
    RadiusEngine eng(sys, q3);
    MultiradiusPoint mp = multiradius_at(eng, mpq_class(0), datum);
    REQUIRE(mp.conclusive);
    REQUIRE(mp.per_index.size() == static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i)
      CHECK(mp.per_index[static_cast<std::size_t>(i)].log_taylor.value() ==
            expect[static_cast<std::size_t>(i)]);
    CHECK(first_radius(eng, mpq_class(0), datum).log_taylor.value() == expect.front());
  }
}

TEST_CASE("tied columns refined by elimination") {
  // diag(1, 2) conjugated by [[1, T], [0, 1]] gives G = [[1, T+1], [0, 2]].
  // Both fundamental-matrix columns grow like the small solution e^T, but a
  // combination over the point's field recovers the large one e^{2T}:
  // true radii over Q_2 are (1/2, 1).
  FieldSpec q2 = FieldSpec::padic(2, 30);
  CompanionSystem sys;
  sys.rank = 2;
  sys.G = SeriesMatrix(2);
  sys.G.at(0, 0) = GaussSeries(mpq_class(1));
  sys.G.at(0, 1) = GaussSeries::parse("T + 1");
  sys.G.at(1, 1) = GaussSeries(mpq_class(2));
  TriangulationDatum datum = TriangulationDatum::fixed_outer(mpq_class(0));

  RadiusEngine eng(sys, q2);
  MultiradiusPoint mp = multiradius_at(eng, mpq_class(0), datum);
  REQUIRE(mp.conclusive);
  CHECK(mp.refined);
  CHECK(mp.per_index[0].log_taylor.value() == -1);
  CHECK(mp.per_index[1].log_taylor.value() == 0);

  // Without refinement the tie stands and the second radius is understated.
  RadiusEngine eng2(sys, q2);
  MultiradiusPoint raw = multiradius_at(eng2, mpq_class(0), datum, 128, 1024, false);
  CHECK_FALSE(raw.refined);
  CHECK(raw.per_index[1].log_taylor.value() == -1);

  // A genuine tie is left alone: identical independent blocks.
  CompanionSystem twin = direct_sum(rank_one(GaussSeries(mpq_class(1))),
                                    rank_one(GaussSeries(mpq_class(1))));
  RadiusEngine eng3(twin, q2);
  MultiradiusPoint tie = multiradius_at(eng3, mpq_class(0), datum);
  REQUIRE(tie.conclusive);
  CHECK_FALSE(tie.refined);
  CHECK(tie.per_index[0].log_taylor.value() == -1);
  CHECK(tie.per_index[1].log_taylor.value() == -1);
}

TEST_CASE("profiles") {
  // Trivially valued, moving outer: log R_rel(u) = u on any segment.
  {
    RadiusEngine eng(rank_one(GaussSeries::monomial(mpq_class(1), -2)),
                     FieldSpec::trivial());
    MultiradiusProfile prof = radius_profile(eng, mpq_class(-7, 8), mpq_class(-1, 8),
                                             TriangulationDatum::moving_outer());
    REQUIRE(prof.log_rel.size() == 1);
    const PLFunction& f = prof.log_rel[0];
    CHECK(f.eval(mpq_class(-1, 2)) == mpq_class(-1, 2));
    CHECK(f.piece_slopes() == std::vector<mpq_class>{mpq_class(1)});
    CHECK(f.interior_breakpoints().empty());
  }
  // p-adic, moving outer: rel = min(0, -1 - u) has a kink at u = -1.
  {
    RadiusEngine eng(rank_one(GaussSeries(mpq_class(1))), FieldSpec::padic(2, 30));
    MultiradiusProfile prof = radius_profile(eng, mpq_class(-2), mpq_class(0),
                                             TriangulationDatum::moving_outer());
    const PLFunction& f = prof.log_rel[0];
    CHECK(f.interior_breakpoints() == std::vector<mpq_class>{mpq_class(-1)});
    CHECK(f.eval(mpq_class(-2)) == 0);
    CHECK(f.eval(mpq_class(-1)) == 0);
    CHECK(f.eval(mpq_class(0)) == -1);
    CHECK(f.is_concave());
  }
  // Rank two, fixed outer: two constant profiles; coincidence sets.
  {
    FieldSpec q2 = FieldSpec::padic(2, 30);
    CompanionSystem sys = direct_sum(rank_one(GaussSeries(mpq_class(1))),
                                     rank_one(GaussSeries(mpq_class(2))));
    RadiusEngine eng(sys, q2);
    MultiradiusProfile prof = radius_profile(
        eng, mpq_class(-1, 2), mpq_class(0), TriangulationDatum::fixed_outer(mpq_class(0)));
    REQUIRE(prof.log_rel.size() == 2);
    CHECK(prof.log_rel[0].is_constant());
    CHECK(prof.log_rel[0].eval(mpq_class(-1, 4)) == -1);
    CHECK(prof.log_rel[1].eval(mpq_class(-1, 4)) == 0);
    auto coin = coincidence_segments(prof);
    REQUIRE(coin.size() == 1);
    CHECK(coin[0].empty());
  }
  // Identical blocks coincide everywhere.
  {
    FieldSpec q2 = FieldSpec::padic(2, 30);
    CompanionSystem sys = direct_sum(rank_one(GaussSeries(mpq_class(1))),
                                     rank_one(GaussSeries(mpq_class(1))));
    RadiusEngine eng(sys, q2);
    MultiradiusProfile prof = radius_profile(
        eng, mpq_class(-1, 2), mpq_class(0), TriangulationDatum::fixed_outer(mpq_class(0)));
    auto coin = coincidence_segments(prof);
    REQUIRE(coin.size() == 1);
    REQUIRE(coin[0].size() == 1);
    CHECK(coin[0][0] == std::make_pair(mpq_class(-1, 2), mpq_class(0)));
  }
  // Sample budget guard.
  {
    RadiusEngine eng(rank_one(GaussSeries(mpq_class(1))), FieldSpec::padic(2, 30));
    ProfileOptions opt;
    opt.max_samples = 1;
    CHECK_THROWS_AS(radius_profile(eng, mpq_class(-2), mpq_class(0),
                                   TriangulationDatum::moving_outer(), opt),
                    guard_error);
  }
}

TEST_CASE("point classification") {
  FieldSpec q2 = FieldSpec::padic(2, 30);
  CompanionSystem sys = direct_sum(rank_one(GaussSeries(mpq_class(1, 4))),
                                   rank_one(GaussSeries(mpq_class(2))));
  RadiusEngine eng(sys, q2);
  TriangulationDatum datum = TriangulationDatum::fixed_outer(mpq_class(0));
  // taylor radii: v(1/4) - 1 = -3 and v(2) - 1 = 0.
  {
    MultiradiusPoint mp = multiradius_at(eng, mpq_class(-2), datum);
    PointClassification c = classify_point(mp, mpq_class(-2), datum);
    CHECK(c.kind == std::vector<int>{0, 2});
    CHECK(c.i_sp == 1);
    CHECK(c.i_sol == 1);
  }
  {
    MultiradiusPoint mp = multiradius_at(eng, mpq_class(-3), datum);
    PointClassification c = classify_point(mp, mpq_class(-3), datum);
    CHECK(c.kind == std::vector<int>{1, 2});  // solvable exactly at u = -3
    CHECK(c.i_sp == 0);
    CHECK(c.i_sol == 1);
  }
  {
    MultiradiusPoint mp = multiradius_at(eng, mpq_class(0), datum);
    PointClassification c = classify_point(mp, mpq_class(0), datum);
    CHECK(c.kind == std::vector<int>{0, 1});
    CHECK(c.i_sp == 1);
    CHECK(c.i_sol == 2);
  }
}

TEST_CASE("solution matrix solves the system") {
  FieldSpec q2 = FieldSpec::padic(2, 30);
  DiffOperator airy = DiffOperator::parse("d^2 - T");
  RadiusEngine eng(companion(airy, q2), q2);
  int n_terms = 10;
  SeriesMatrix y = solution_matrix_at(eng, mpq_class(1), n_terms);

  // Initial condition: Y(0) = I.
  CHECK(y.at(0, 0).coeff(0) == 1);
  CHECK(y.at(0, 1).coeff(0) == 0);
  CHECK(y.at(1, 1).coeff(0) == 1);

  // Second row is the derivative of the first (companion structure).
  for (int j = 0; j < 2; ++j)
    CHECK(y.at(1, j).truncated(n_terms) == y.at(0, j).derivative().truncated(n_terms));

  // Y' = G(t0 + U) Y up to the truncation order, with G recentered at t0 = 1.
  SeriesMatrix g(2);
  g.at(0, 1) = GaussSeries(mpq_class(1));
  g.at(1, 0) = GaussSeries(mpq_class(1)) + GaussSeries::monomial(mpq_class(1), 1);
  SeriesMatrix rhs = g * y;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      CHECK(y.at(i, j).derivative().truncated(n_terms - 1) ==
            rhs.at(i, j).truncated(n_terms - 1));

  // Pole guard.
  RadiusEngine pole(rank_one(GaussSeries::monomial(mpq_class(1), -1)), q2);
  CHECK_THROWS_AS(solution_matrix_at(pole, mpq_class(0), 4), guard_error);

  // Row shift invariant of companion systems: A_{n+1} row 0 = A_n row 1.
  eng.extend(8);
  for (int n = 0; n < 8; ++n)
    for (int j = 0; j < 2; ++j)
      CHECK(eng.coefficient_matrix(n + 1).at(0, j) == eng.coefficient_matrix(n).at(1, j));
}
