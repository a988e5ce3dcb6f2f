#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "padiff/diff_operator.hpp"
#include "padiff/pl_function.hpp"

namespace padiff {

// Assignment of the outer disk against which radii at a point are measured.
// fixed_outer: every point of the disk log|T| <= log_R0 is measured against
// that one disk (the skeleton is a single vertex).  moving_outer: the outer
// radius tracks the point itself, log R0(u) = u (annulus-like geometry, the
// natural choice in trivially valued mode).
struct TriangulationDatum {
  enum class Kind { fixed_outer, moving_outer };
  Kind kind = Kind::fixed_outer;
  mpq_class log_R0;

  static TriangulationDatum fixed_outer(const mpq_class& log_R0) {
    TriangulationDatum d;
    d.kind = Kind::fixed_outer;
    d.log_R0 = log_R0;
    return d;
  }
  static TriangulationDatum moving_outer() {
    TriangulationDatum d;
    d.kind = Kind::moving_outer;
    return d;
  }
  mpq_class outer_log(const mpq_class& u) const {
    return kind == Kind::fixed_outer ? log_R0 : u;
  }
};

// Eventual linear-periodic behaviour of a valuation sequence w_0..w_N:
// w_{n+q} = w_n + q*slope for all n in the trust window.  all_zero means the
// sequence is +inf throughout the window (a terminating Taylor expansion).
struct SlopeDetection {
  enum class Status { linear, all_zero, inconclusive };
  Status status = Status::inconclusive;
  mpq_class slope;
  int period = 0;
};

// Detect the tail slope of w over the window [window_lo, w.size()-1].
SlopeDetection detect_tail_slope(const std::vector<LogValue>& w, int window_lo);

using ValuationHull = std::vector<std::pair<long, mpq_class>>;

// Streams the Taylor coefficient matrices A_n of the fundamental solution of
// y' = G y: A_0 = I, A_{n+1} = A_n' + A_n G, so that the local solution at
// t0 is Y(U) = sum_n A_n(t0) U^n / n!.  The A_n do not depend on the point,
// so per-column valuation hulls are cached and reused across profile samples.
class RadiusEngine {
 public:
  RadiusEngine(CompanionSystem sys, FieldSpec field);

  int rank() const { return sys_.rank; }
  const FieldSpec& field() const { return field_; }
  const CompanionSystem& system() const { return sys_; }

  // Ensure A_0..A_n are computed.
  void extend(int n);
  int computed() const { return static_cast<int>(a_.size()) - 1; }
  const SeriesMatrix& coefficient_matrix(int n) const;

  // v(A_n e_j) and v(A_n) at the point log|T| = u.  May raise
  // ALL_COEFFICIENTS_UNKNOWN when precision windows have closed.
  LogValue column_valuation(int n, int j, const mpq_class& u);
  LogValue matrix_valuation(int n, const mpq_class& u);

 private:
  const ValuationHull& column_hull(int n, int j);

  CompanionSystem sys_;
  FieldSpec field_;
  std::vector<SeriesMatrix> a_;
  std::vector<std::vector<std::optional<ValuationHull>>> hulls_;
  bool exact_ = true;
};

// Radius of one solution (or of the whole matrix) at a point, in log form.
// log_taylor is the uncapped radius of the Taylor expansion; log_rel is the
// radius relative to the outer disk, capped at 0.  When inconclusive, the
// bracket encloses the normalized growth slopes seen in the window.
struct RadiusOutcome {
  bool conclusive = true;
  LogValue log_taylor;
  LogValue log_rel;
  int period = 0;
  mpq_class bracket_lo, bracket_hi;
};

struct MultiradiusPoint {
  std::vector<RadiusOutcome> per_index;  // ascending, size = rank
  bool conclusive = true;
  bool refined = false;
};

struct ProfileOptions {
  int terms = 128;
  int terms_cap = 1024;
  int max_samples = 4000;
  long resolution_den = 1024;  // smallest handled feature, as a fraction of the interval
  bool refine_ties = true;
};

struct MultiradiusProfile {
  std::vector<PLFunction> log_rel;  // index 0 = smallest radius
  bool refined = false;
};

// Smallest radius at the point u, from the matrix valuation sequence.
RadiusOutcome first_radius(RadiusEngine& eng, const mpq_class& u,
                           const TriangulationDatum& datum, int terms = 128,
                           int terms_cap = 1024);

// The full multiset of radii at u.  Columns of the fundamental matrix give a
// basis of solutions; columns whose detected growth ties are refined by a
// quotient-cascade elimination against already-settled columns, which can
// only raise a radius.  refined marks when that happened.
MultiradiusPoint multiradius_at(RadiusEngine& eng, const mpq_class& u,
                                const TriangulationDatum& datum, int terms = 128,
                                int terms_cap = 1024, bool refine_ties = true);

// Piecewise-linear profiles of all log-radii over u in [u_lo, u_hi].
// Throws INCONCLUSIVE if detection fails at some sample even after extending
// the term budget, BUDGET_EXHAUSTED if adaptive refinement needs more than
// max_samples points.
MultiradiusProfile radius_profile(RadiusEngine& eng, const mpq_class& u_lo,
                                  const mpq_class& u_hi,
                                  const TriangulationDatum& datum,
                                  const ProfileOptions& opt = {});

// Index classification at a point: compare each absolute radius with the
// point's own log-radius u.  kind[i]: 0 spectral (<), 1 solvable (=),
// 2 over-solvable (>).  i_sp / i_sol count the spectral / non-over-solvable
// indices (radii sorted ascending, so these are prefix counts).
struct PointClassification {
  std::vector<int> kind;
  int i_sp = 0;
  int i_sol = 0;
};
PointClassification classify_point(const MultiradiusPoint& pt, const mpq_class& u,
                                   const TriangulationDatum& datum);

// For each consecutive pair (i, i+1) of radius profiles, the closed segments
// where they coincide.  Complements of these are where the radii separate.
std::vector<std::vector<std::pair<mpq_class, mpq_class>>> coincidence_segments(
    const MultiradiusProfile& prof);

// Block-diagonal join of two systems.
CompanionSystem direct_sum(const CompanionSystem& a, const CompanionSystem& b);

// Truncated fundamental solution matrix at the rational center t0:
// sum_{n<=N} A_n(t0) U^n / n!, entries polynomial in U.
SeriesMatrix solution_matrix_at(RadiusEngine& eng, const mpq_class& t0, int N);

}  // namespace padiff
