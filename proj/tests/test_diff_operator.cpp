#include <doctest.h>

#include <random>

#include "padiff/diff_operator.hpp"

using namespace padiff;

namespace {

DiffOperator random_operator(std::mt19937& rng, int max_order) {
  std::uniform_int_distribution<int> ord(0, max_order);
  std::uniform_int_distribution<long> expo(-3, 3);
  std::uniform_int_distribution<long> num(-9, 9);
  int n = ord(rng);
  std::vector<GaussSeries> c(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    int terms = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < terms; ++i)
      c[static_cast<std::size_t>(k)] +=
          GaussSeries::monomial(mpq_class(num(rng)), expo(rng));
  }
  return DiffOperator(std::move(c));
}

}  // namespace

TEST_CASE("parser") {
  DiffOperator p = DiffOperator::parse("d^2 - (1+T)*d + T^-1");
  CHECK(p.order() == 2);
  CHECK(p.coefficient(2) == GaussSeries(mpq_class(1)));
  CHECK(p.coefficient(1).coeff(0) == -1);
  CHECK(p.coefficient(1).coeff(1) == -1);
  CHECK(p.coefficient(0).coeff(-1) == 1);

  CHECK(DiffOperator::parse("3/4*T^2") ==
        DiffOperator::from_series(GaussSeries::monomial(mpq_class(3, 4), 2)));
  CHECK(DiffOperator::parse("-d") == DiffOperator::derivation().scaled(-1));
  CHECK(DiffOperator::parse("d*d") == DiffOperator::parse("d^2"));
  CHECK(DiffOperator::parse("(d-1)*(d+1)") == DiffOperator::parse("d^2 - 1"));
  // Non-commutativity: d*T = T*d + 1.
  CHECK(DiffOperator::parse("d*T") == DiffOperator::parse("T*d + 1"));
  CHECK(DiffOperator::parse("T*d") != DiffOperator::parse("d*T"));

  CHECK_THROWS_AS(DiffOperator::parse("d^-1"), input_error);
  CHECK_THROWS_AS(DiffOperator::parse("T^"), input_error);
  CHECK_THROWS_AS(DiffOperator::parse("(d"), input_error);
  CHECK_THROWS_AS(DiffOperator::parse("x+1"), input_error);
  CHECK_THROWS_AS(DiffOperator::parse("1 1"), input_error);
  CHECK_THROWS_AS(GaussSeries::parse("d+1"), input_error);
  CHECK(GaussSeries::parse("T^-2 + 5").coeff(-2) == 1);

  // Round trip through str().
  DiffOperator q = DiffOperator::parse("d^3 + (2*T^-1 + 3)*d - 7/2");
  CHECK(DiffOperator::parse(q.str()) == q);
}

TEST_CASE("Weyl relations") {
  DiffOperator d = DiffOperator::derivation();
  DiffOperator t = DiffOperator::from_series(GaussSeries::monomial(mpq_class(1), 1));
  DiffOperator one = DiffOperator::from_series(GaussSeries(mpq_class(1)));
  CHECK(d * t - t * d == one);

  // Leibniz at higher order: d^2 * f = f*d^2 + 2f'*d + f''.
  GaussSeries f = GaussSeries::parse("T^3 + 2*T");
  DiffOperator lhs = DiffOperator::parse("d^2") * DiffOperator::from_series(f);
  DiffOperator rhs = DiffOperator::from_series(f) * DiffOperator::parse("d^2") +
                     DiffOperator::from_series(f.derivative()).scaled(2) *
                         DiffOperator::derivation() +
                     DiffOperator::from_series(f.derivative().derivative());
  CHECK(lhs == rhs);
}

TEST_CASE("operator algebra is associative and distributive") {
  std::mt19937 rng(17);
  for (int i = 0; i < 200; ++i) {
    DiffOperator a = random_operator(rng, 2);
    DiffOperator b = random_operator(rng, 2);
    DiffOperator c = random_operator(rng, 2);
    CHECK((a * b) * c == a * (b * c));
    CHECK(a * (b + c) == a * b + a * c);
    CHECK((a + b) * c == a * c + b * c);
  }
}

TEST_CASE("operator norm") {
  FieldSpec q3 = FieldSpec::padic(3, 30);
  FieldSpec triv = FieldSpec::trivial();

  // The derivation d at any point of the open unit disk over Q_p:
  // log|d| = -v(1!) - 0 - (u + u0) with k = 1 dominating at u0 = u = 0.
  CHECK(operator_norm(DiffOperator::derivation(), mpq_class(0), mpq_class(0), q3)
            .value() == 0);
  // d^3 at u0 = u = 0 over Q_3: -v(3!) = -1.
  CHECK(operator_norm(DiffOperator::parse("d^3"), mpq_class(0), mpq_class(0), q3)
            .value() == -1);
  // T*d trivially valued at u0 = 0: log|T*d| = -0 - 0 - (u + 0) from k = 1,
  // against k = 0 contributing nothing (no constant term); at u = 0 the norm
  // is 0 for every u0 <= 0 since v_gauss(T, u0) = -u0 cancels the shift.
  CHECK(operator_norm(DiffOperator::parse("T*d"), mpq_class(0), mpq_class(0), triv)
            .value() == 0);
  CHECK(operator_norm(DiffOperator::parse("T*d"), mpq_class(-2), mpq_class(0), triv)
            .value() == 0);
  // Norm of a multiplication operator is the Gauss norm of the multiplier.
  GaussSeries f = GaussSeries::parse("3 + T^2");
  CHECK(operator_norm(DiffOperator::from_series(f), mpq_class(-1), mpq_class(-1), q3) ==
        -gauss_norm(f, mpq_class(-1), q3));
  CHECK(operator_norm(DiffOperator(), mpq_class(0), mpq_class(0), q3)
            .is_neg_infinity());

  // Submultiplicative at matching points and monotone in u.
  std::mt19937 rng(5);
  for (int i = 0; i < 100; ++i) {
    DiffOperator a = random_operator(rng, 2), b = random_operator(rng, 2);
    LogValue na = operator_norm(a, mpq_class(0), mpq_class(0), q3);
    LogValue nb = operator_norm(b, mpq_class(0), mpq_class(0), q3);
    LogValue nab = operator_norm(a * b, mpq_class(0), mpq_class(0), q3);
    if (!na.is_neg_infinity() && !nb.is_neg_infinity()) CHECK(nab <= na + nb);
  }
}

TEST_CASE("companion system") {
  FieldSpec q2 = FieldSpec::padic(2, 30);
  // d^2 - 1: G = [[0, 1], [1, 0]].
  CompanionSystem sys = companion(DiffOperator::parse("d^2 - 1"), q2);
  CHECK(sys.rank == 2);
  CHECK(sys.G.at(0, 0).is_zero());
  CHECK(sys.G.at(0, 1) == GaussSeries(mpq_class(1)));
  CHECK(sys.G.at(1, 0) == GaussSeries(mpq_class(1)));
  CHECK(sys.G.at(1, 1).is_zero());

  // Non-monic monomial leading coefficient: T*d - 1 gives G = (T^-1).
  CompanionSystem m = companion(DiffOperator::parse("T*d - 1"), q2);
  CHECK(m.rank == 1);
  CHECK(m.G.at(0, 0) == GaussSeries::monomial(mpq_class(1), -1));

  // Non-monomial leading coefficient invertible at the working point.
  CompanionSystem nm = companion(DiffOperator::parse("(1 + 2*T)*d - 1"), q2);
  CHECK(nm.rank == 1);
  CHECK(nm.G.at(0, 0).coeff(0) == 1);
  CHECK(nm.G.at(0, 0).coeff(1) == -2);

  // Leading coefficient with no dominant monomial fails loudly.
  CHECK_THROWS_AS(
      companion(DiffOperator::parse("(T^-1 + T)*d - 1"), FieldSpec::trivial()),
      guard_error);
  CHECK_THROWS_AS(companion(DiffOperator::parse("5"), q2), guard_error);
}

TEST_CASE("dual system is an involution") {
  FieldSpec q2 = FieldSpec::padic(2, 30);
  std::mt19937 rng(29);
  for (int i = 0; i < 50; ++i) {
    DiffOperator p = random_operator(rng, 3);
    if (p.order() < 1) continue;
    CompanionSystem sys = [&]() -> CompanionSystem {
      try {
        return companion(p, q2);
      } catch (const guard_error&) {
        return companion(DiffOperator::parse("d^2 - T"), q2);
      }
    }();
    CompanionSystem dd = dual_system(dual_system(sys));
    CHECK(dd.rank == sys.rank);
    bool same = true;
    for (int r = 0; r < sys.rank; ++r)
      for (int c = 0; c < sys.rank; ++c)
        if (!(dd.G.at(r, c) == sys.G.at(r, c))) same = false;
    CHECK(same);
  }
}

TEST_CASE("series matrices multiply correctly") {
  SeriesMatrix a(2), b(2);
  a.at(0, 0) = GaussSeries::parse("T");
  a.at(0, 1) = GaussSeries(mpq_class(1));
  a.at(1, 1) = GaussSeries::parse("T^-1");
  b.at(0, 0) = GaussSeries(mpq_class(2));
  b.at(1, 0) = GaussSeries::parse("T^2");
  SeriesMatrix c = a * b;
  CHECK(c.at(0, 0) == GaussSeries::parse("2*T + T^2"));
  CHECK(c.at(1, 0) == GaussSeries::parse("T"));
  CHECK(c.at(0, 1).is_zero());
  CHECK((a * SeriesMatrix::identity(2)).at(0, 0) == a.at(0, 0));
  CHECK(a.derivative().at(0, 0) == GaussSeries(mpq_class(1)));
  CHECK(a.transpose().at(1, 0) == GaussSeries(mpq_class(1)));
}
