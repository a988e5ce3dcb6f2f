#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "padiff/diff_operator.hpp"
#include "padiff/radius_engine.hpp"

namespace padiff {

// A factorization job at the Gauss point of log-radius u0 <= 0: split the
// monic operator P = P_ge * P_lt by spectral radii, the left factor carrying
// the n1 = ord(P) - n2 radii at or above the threshold and the right factor
// the n2 radii below it.  lr = log of the threshold radius relative to the
// point (the working sub-disk has log-radius u0 + lr), so radii compare as
// log_rel < lr.  Factor coefficients are Laurent polynomials supported on
// T-exponents [t_lo, t_lo + series_order); the residual is always measured
// exactly, so truncation never hides an error, it only limits which factors
// are reachable.
struct FactorizationProblem {
  DiffOperator P;
  FieldSpec field;
  mpq_class u0 = 0;
  mpq_class lr = 0;
  int n2 = 0;
  int series_order = 24;
  long t_lo = 0;
  // Accept when the residual log-norm at (u0, lr) is <= tolerance.
  LogValue tolerance = LogValue::neg_infinity();
  int max_iterations = 24;
  // SingularLinearization when the best remaining pivot's balanced log-norm
  // falls below this floor during the linear solve.
  LogValue pivot_floor = LogValue::neg_infinity();
  // Starting point; when absent robba_factor calls init_guess.
  std::optional<std::pair<DiffOperator, DiffOperator>> guess;
  // Engine budget for the radius checks (separation pre, partition law).
  int radius_terms = 128;
};

// Defaults: t_lo = min(0, lowest exponent in P), tolerance = valuation M - 5
// p-adically (log-norm -(M-5)) and half the truncation depth of the window in
// trivially valued mode, pivot_floor = -(2M + 10) resp. a deep constant.
FactorizationProblem make_factorization_problem(DiffOperator P, const FieldSpec& field,
                                                const mpq_class& u0, const mpq_class& lr,
                                                int n2, int series_order = 24);

struct FactorizationCertificate {
  // log operator norm of P1*P2 - P at (u0, lr); -inf means an exact product.
  LogValue residual = LogValue::neg_infinity();
  // Residual log-norm before each Newton step, final residual appended last.
  std::vector<LogValue> residual_history;
  // multiradius(P1) and multiradius(P2) jointly equal multiradius(P).  When
  // the radii of P carry an unresolved tie (refinement only ever narrows from
  // below, so a tie may understate) the reference multiset is unusable;
  // the check then certifies the split itself: radii(P1) >= threshold and
  // radii(P2) < threshold with radii(P2) tie-free.
  bool partition_ok = false;
  bool accepted = false;
  // Worst observed quadratic defect: max of (2 v_k - v_{k+1}) over successive
  // residual valuations, 0 when fewer than two iterations ran.
  mpq_class contraction_estimate;
};

struct Factorization {
  DiffOperator ge;  // left factor, radii >= threshold, order n1
  DiffOperator lt;  // right factor, radii < threshold, order n2
  FactorizationCertificate cert;
};

// log operator norm of P1*P2 - P on the sub-disk of relative log-radius lr
// at the point u0.
LogValue residual(const DiffOperator& P, const DiffOperator& P1, const DiffOperator& P2,
                  const mpq_class& u0, const mpq_class& lr, const FieldSpec& field);

// One Newton update for the map (Q1,Q2) |-> Q1*Q2 - P: solves the linearized
// system Q1*P2 + P1*Q2 = P - P1*P2 for the non-leading coefficients over the
// truncation lattice, with pivoting on the balanced cell norms at (u0, lr),
// and returns the corrected pair (heights compressed mod p^(M+16) p-adically).
// Columns without a usable pivot keep their cell at zero (the window can cut
// a series kernel mid-stream); throws guard_error(SINGULAR_LINEARIZATION)
// only when no pivot at all clears the floor.
std::pair<DiffOperator, DiffOperator> newton_step(const FactorizationProblem& prob,
                                                  const DiffOperator& P1,
                                                  const DiffOperator& P2);

// Starting pair from the symbol polygon: weigh each coefficient's dominant
// monomial c_k at u0 by k*(lr + u0 + kappa), kappa the solvability offset
// (the exact exponential rate of |k!| (rho rho0)^(-k), whose sublinear digit
// wobble would otherwise destroy hull vertices).  The weighted polygon must
// have a lower-hull vertex at k = n1; the low part [0, n1] lifts to the
// large-radius guess and the high part [n1, n] to the small-radius guess.
// Throws guard_error(NO_POLYGON_VERTEX) when the hull does not break there
// (the radii are not separated at this split order/threshold).
std::pair<DiffOperator, DiffOperator> init_guess(const DiffOperator& P,
                                                 const FieldSpec& field,
                                                 const mpq_class& u0, const mpq_class& lr,
                                                 int n2);

// Full factorization: verify the radii of P separate at the threshold (via
// the radius engine; guard_error(NO_SEPARATION) otherwise), run the Newton
// iteration from the guess to tolerance, and certify the result.  Throws
// guard_error(DID_NOT_CONVERGE) when the iteration budget runs out or the
// residual stalls above tolerance.  The separation guard only fires on a
// tie-free radius multiset; with an unresolved tie the split is attempted
// anyway and the certificate's partition check carries the verdict.
Factorization robba_factor(const FactorizationProblem& prob);

struct SlopeFactor {
  mpq_class slope;      // beta with log R = beta * u on the annulus
  DiffOperator factor;  // pure of that slope
};

// Decompose a solvable operator on the annulus near the outer boundary into
// pure-slope factors: one robba_factor split per gap in the slope spectrum
// at the working point u0 < 0, smallest radius split off first.  A single
// repeated slope returns the operator unsplit; a repeated slope next to a
// distinct one throws guard_error(SLOPES_NOT_DISTINCT).
std::vector<SlopeFactor> cm_decompose(const DiffOperator& P, const FieldSpec& field,
                                      const mpq_class& u0, int series_order = 24);

}  // namespace padiff
