#include <doctest.h>

#include <algorithm>
#include <vector>

#include "padiff/slope_factorization.hpp"

using namespace padiff;

namespace {

// v_2(1!..) offset: kappa = 1/(p-1).
const FieldSpec q2 = FieldSpec::padic(2, 40);
const FieldSpec q3 = FieldSpec::padic(3, 40);
const FieldSpec triv = FieldSpec::trivial();

std::vector<LogValue> rel_radii(const DiffOperator& P, const FieldSpec& field,
                                const mpq_class& u0) {
  RadiusEngine eng(companion(P, field, u0), field);
  MultiradiusPoint mr =
      multiradius_at(eng, u0, TriangulationDatum::moving_outer(), 128, 512, true);
  REQUIRE(mr.conclusive);
  std::vector<LogValue> rel;
  for (const auto& o : mr.per_index) rel.push_back(o.log_rel);
  return rel;
}

LogValue coeff_gap(const DiffOperator& a, const DiffOperator& b, const FieldSpec& field) {
  DiffOperator d = a - b;
  LogValue worst = LogValue::pos_infinity();
  for (int k = 0; k <= d.order(); ++k) {
    const GaussSeries& f = d.coefficient(k);
    for (const auto& [e, c] : f.coefficients()) {
      LogValue v = valuation(c, field);
      if (v < worst) worst = v;
    }
  }
  return worst;  // +inf when the operators agree exactly
}

}  // namespace

TEST_CASE("residual of exact and perturbed factorizations") {
  DiffOperator a = DiffOperator::parse("d - 1");
  DiffOperator b = DiffOperator::parse("d - 1/2");
  DiffOperator P = a * b;
  CHECK(residual(P, a, b, 0, mpq_class(-3, 2), q2).is_neg_infinity());

  // Adding 2^40 to one coefficient perturbs the residual at that size alone:
  // log-norm -(M) + order-weight, so the valuation stays >= M - 2.
  DiffOperator pert = P + DiffOperator::from_series(GaussSeries(mpq_class(mpz_class(1) << 40)));
  LogValue r = residual(pert, a, b, 0, mpq_class(-3, 2), q2);
  CHECK(r.finite());
  CHECK(-r.value() >= 38);

  // Exactness is measured at the product level; a non-commuting swap is seen.
  DiffOperator t = DiffOperator::parse("d - T");
  CHECK(residual(a * t, t, a, 0, mpq_class(-3, 2), q2).finite());
  CHECK(residual(a * t, a, t, 0, mpq_class(-3, 2), q2).is_neg_infinity());
}

TEST_CASE("newton step fixes exact factors") {
  DiffOperator a = DiffOperator::parse("d - 1");
  DiffOperator b = DiffOperator::parse("d - 1/2");
  FactorizationProblem prob =
      make_factorization_problem(a * b, q2, 0, mpq_class(-3, 2), 1, 8);
  auto [p1, p2] = newton_step(prob, a, b);
  CHECK(p1 == a);
  CHECK(p2 == b);
}

TEST_CASE("newton step contracts quadratically") {
  DiffOperator a = DiffOperator::parse("d - 1");
  DiffOperator b = DiffOperator::parse("d - 1/2");
  FactorizationProblem prob =
      make_factorization_problem(a * b, q2, 0, mpq_class(-3, 2), 1, 8);
  for (long m : {4L, 6L, 9L}) {
    DiffOperator a_off = a + DiffOperator::from_series(GaussSeries(mpq_class(mpz_class(1) << m)));
    LogValue before = residual(prob.P, a_off, b, prob.u0, prob.lr, q2);
    REQUIRE(before.finite());
    auto [p1, p2] = newton_step(prob, a_off, b);
    LogValue after = residual(prob.P, p1, p2, prob.u0, prob.lr, q2);
    mpq_class v_before = -before.value();
    mpq_class v_after = after.is_neg_infinity() ? mpq_class(1000) : mpq_class(-after.value());
    CHECK(v_after >= 2 * v_before - 4);
  }
}

TEST_CASE("initial guess from the weighted symbol polygon") {
  // P = (d-1)(d-1/2) over Q_2: dominant monomials 1/2, -3/2, 1; at the
  // separating threshold the polygon vertex sits at k = 1 and the lifts are
  // the unit-size and the half-size linear parts.
  DiffOperator P = DiffOperator::parse("d^2 - 3/2*d + 1/2");
  auto [g1, g2] = init_guess(P, q2, 0, mpq_class(-3, 2), 1);
  CHECK(g1 == DiffOperator::parse("d - 1/3"));
  CHECK(g2 == DiffOperator::parse("d - 3/2"));

  // Equal radii: flat polygon bottom, no vertex.
  DiffOperator flat = DiffOperator::parse("d - 1") * DiffOperator::parse("d - 3");
  CHECK_THROWS_WITH_AS(init_guess(flat, q2, 0, mpq_class(-1), 1), doctest::Contains("vertex"),
                       guard_error);

  // Already split-diagonal: the guesses carry the true factors' dominant
  // coefficients exactly.
  DiffOperator diag = DiffOperator::parse("d - 1/4") * DiffOperator::parse("d - 8");
  auto [h1, h2] = init_guess(diag, q2, 0, mpq_class(-2), 1);
  CHECK(h2.coefficient(0).coeff(0) != 0);
  CHECK(valuation(h2.coefficient(0).coeff(0), q2) == LogValue(mpq_class(-2)));
  CHECK(valuation(h1.coefficient(0).coeff(0), q2) == LogValue(mpq_class(3)));
}

TEST_CASE("factor recovery round trips") {
  struct Fixture {
    const FieldSpec* field;
    DiffOperator left, right;
    mpq_class u0, lr;
  };
  std::vector<Fixture> fixtures = {
      {&q2, DiffOperator::parse("d - 1"), DiffOperator::parse("d - 1/2"), 0, {-3, 2}},
      {&q3, DiffOperator::parse("d - 1"), DiffOperator::parse("d - 1/3"), 0, {-1}},
      // A series coefficient; the radii separate away from the boundary.
      {&q2, DiffOperator::parse("d - 1"), DiffOperator::parse("d - T"), {-1, 2}, {-1, 4}},
  };
  for (auto& fx : fixtures) {
    CAPTURE(fx.left.str());
    CAPTURE(fx.right.str());
    DiffOperator P = fx.left * fx.right;
    FactorizationProblem prob = make_factorization_problem(P, *fx.field, fx.u0, fx.lr, 1, 20);
    Factorization f = robba_factor(prob);
    CHECK(f.cert.accepted);
    CHECK(f.cert.partition_ok);
    CHECK(f.ge.order() == 1);
    CHECK(f.lt.order() == 1);
    CHECK(f.cert.residual <= prob.tolerance);
    CHECK(f.cert.contraction_estimate <= 4);
  }

  // Degenerate split orders are rejected outright.
  DiffOperator P = DiffOperator::parse("d^2 - 3/2*d + 1/2");
  FactorizationProblem bad = make_factorization_problem(P, q2, 0, mpq_class(-3, 2), 0, 8);
  CHECK_THROWS_AS(robba_factor(bad), guard_error);

  // A threshold that does not split the radii at the requested position.
  FactorizationProblem off = make_factorization_problem(P, q2, 0, mpq_class(-5), 1, 8);
  CHECK_THROWS_WITH_AS(robba_factor(off), doctest::Contains("threshold"), guard_error);
}

TEST_CASE("factorization is unique past the guess") {
  DiffOperator a = DiffOperator::parse("d - 1");
  DiffOperator b = DiffOperator::parse("d - 1/2");
  DiffOperator P = a * b;
  FactorizationProblem prob = make_factorization_problem(P, q2, 0, mpq_class(-3, 2), 1, 8);
  Factorization from_symbol = robba_factor(prob);

  FactorizationProblem seeded = prob;
  seeded.guess = {{a + DiffOperator::from_series(GaussSeries(mpq_class(256))), b}};
  Factorization from_seed = robba_factor(seeded);

  CHECK(coeff_gap(from_symbol.ge, from_seed.ge, q2) >= LogValue(mpq_class(30)));
  CHECK(coeff_gap(from_symbol.lt, from_seed.lt, q2) >= LogValue(mpq_class(30)));
}

TEST_CASE("adjoint factorization sees the same radii") {
  DiffOperator a = DiffOperator::parse("d - 1");
  DiffOperator b = DiffOperator::parse("d - 1/2");

  // Anti-homomorphism, and an involution on these fixtures.
  CHECK(adjoint(a * b) == adjoint(b) * adjoint(a));
  CHECK(adjoint(adjoint(a * b)) == a * b);

  DiffOperator P = a * b;
  FactorizationProblem prob = make_factorization_problem(P, q2, 0, mpq_class(-3, 2), 1, 8);
  Factorization f = robba_factor(prob);
  FactorizationProblem dual_prob =
      make_factorization_problem(adjoint(P), q2, 0, mpq_class(-3, 2), 1, 8);
  Factorization fd = robba_factor(dual_prob);
  CHECK(fd.cert.accepted);
  CHECK(rel_radii(fd.ge, q2, 0) == rel_radii(f.ge, q2, 0));
  CHECK(rel_radii(fd.lt, q2, 0) == rel_radii(f.lt, q2, 0));
}

TEST_CASE("singular linearization guard trips on a raised floor") {
  DiffOperator a = DiffOperator::parse("d - 1");
  DiffOperator b = DiffOperator::parse("d - 1/2");
  FactorizationProblem prob =
      make_factorization_problem(a * b, q2, 0, mpq_class(-3, 2), 1, 8);
  prob.pivot_floor = LogValue(mpq_class(10));
  CHECK_THROWS_WITH_AS(newton_step(prob, a, b), doctest::Contains("pivot"), guard_error);
}

TEST_CASE("slope decomposition over a trivially valued annulus") {
  mpq_class u0(-1, 2);

  // Slopes 0 and 1.
  DiffOperator P = DiffOperator::parse("d - T^-1") * DiffOperator::parse("d - T^-2");
  std::vector<SlopeFactor> parts = cm_decompose(P, triv, u0, 24);
  REQUIRE(parts.size() == 2);
  CHECK(parts[0].slope == 0);
  CHECK(parts[1].slope == 1);
  CHECK(parts[0].factor * parts[1].factor == P);

  // A single pure slope comes back unsplit.
  DiffOperator pure = DiffOperator::parse("d - T^-2");
  parts = cm_decompose(pure, triv, u0, 24);
  REQUIRE(parts.size() == 1);
  CHECK(parts[0].slope == 1);
  CHECK(parts[0].factor == pure);

  // Three distinct slopes give three rank-one factors multiplying back.
  DiffOperator Q = DiffOperator::parse("d - T^-1") *
                   (DiffOperator::parse("d - T^-2") * DiffOperator::parse("d - T^-3"));
  parts = cm_decompose(Q, triv, u0, 24);
  REQUIRE(parts.size() == 3);
  CHECK(parts[0].slope == 0);
  CHECK(parts[1].slope == 1);
  CHECK(parts[2].slope == 2);
  for (const auto& p : parts) CHECK(p.factor.order() == 1);
  CHECK(parts[0].factor * (parts[1].factor * parts[2].factor) == Q);

  // Repeated slope next to a distinct one.
  DiffOperator R = DiffOperator::parse("d - T^-2") *
                   (DiffOperator::parse("d - 2*T^-2") * DiffOperator::parse("d - T^-1"));
  CHECK_THROWS_WITH_AS(cm_decompose(R, triv, u0, 24), doctest::Contains("repeated"),
                       guard_error);
}
