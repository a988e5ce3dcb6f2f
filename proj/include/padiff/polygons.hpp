#pragma once

#include "padiff/radius_engine.hpp"

namespace padiff {

// Convergence polygon at a point: vertices (i, h_i) for i = 0..r, where the
// i-th increment is -log R_{S, r-i+1} (largest radius first).  Radii sorted
// ascending make the increments nonnegative and nondecreasing, so the polygon
// is convex; convex() re-checks that from the stored heights.
struct ConvergencePolygon {
  std::vector<mpq_class> heights;  // size r+1, heights[0] = 0
  std::vector<mpq_class> increments() const;
  bool convex() const;
};
ConvergencePolygon convergence_polygon(const MultiradiusPoint& pt);

// log H_i: the sum of the i smallest relative log-radii at the point.
mpq_class partial_height(const MultiradiusPoint& pt, int i);

// Formal Newton polygon at the origin, from the T-adic valuations of the
// coefficients: the boundary of the convex hull of the quadrants
// {x <= k, y >= v_T(g_k) + r - k} over nonzero coefficients g_k of d^k.
// Slopes are read off at unit steps; they are >= 0 and nondecreasing, and
// their sum is the irregularity.
struct FormalPolygon {
  std::vector<mpq_class> slopes;  // size = order, ascending
  mpq_class irregularity;
  std::vector<std::pair<mpq_class, mpq_class>> vertices;  // flattened boundary
};
FormalPolygon formal_newton_polygon(const DiffOperator& p);

// Dictionary between the formal polygon and convergence: trivially valued,
// the relative radius profile on any segment of u < 0 is exactly
// log R_{S,i}(u) = mu_{r-i+1} * u.  WRONG_MODE on a p-adic field, where the
// dictionary only holds asymptotically.
struct FormalComparison {
  FormalPolygon formal;
  MultiradiusProfile profile;
  bool match = false;
};
FormalComparison check_formal_vs_convergence(const DiffOperator& p,
                                             const FieldSpec& field,
                                             const mpq_class& u_lo,
                                             const mpq_class& u_hi,
                                             const ProfileOptions& opt = {});

// Irregularity at the boundary point u = boundary_u of the reference disk,
// read off the germ of the top partial height H_r(u) = sum_i log R_i(u) on
// the far side of the boundary (prolonging the last affine piece when the
// profile stops exactly there).  With s the one-sided d/du slope of H_r on
// that germ:
//   annulus side: the profile carries the radii localized to the outer
//                 annulus; Irr = -s.  The first radius must reach the
//                 boundary (log R_1(boundary) = 0), else
//                 NOT_SOLVABLE_AT_BOUNDARY.
//   disk side:    the profile carries the disk-datum radii; localization
//                 subtracts 1 from the slope of each index that is not
//                 locally constant solvable, so Irr = -s + (r - h0).
// h0 reports the indices whose radius is 0 with zero slope on the inner
// germ: the directions solvable at the boundary with locally constant
// radius just inside.
enum class BoundarySide { disk, annulus };
struct BoundaryIrregularity {
  mpq_class irregularity;
  mpq_class height_slope;  // outward germ slope s
  int h0 = 0;
};
BoundaryIrregularity irregularity_at_boundary(const MultiradiusProfile& prof,
                                              BoundarySide side,
                                              const mpq_class& boundary_u);
// Boundary at the right end of the profile.
BoundaryIrregularity irregularity_at_boundary(const MultiradiusProfile& prof,
                                              BoundarySide side);

// Euler characteristic and cohomology counts of the solution complex on the
// disk from the counting formula chi = h0 - h1 = r - Irr.  The number h0 of
// global solutions is an input (for profile fixtures it is the count of
// over-solvable indices at the boundary datum), the formula then pins h1.
struct IndexCount {
  int h0 = 0;
  mpq_class chi;
  mpq_class h1;
  mpq_class irregularity;
};
IndexCount gos_index(int rank, const mpq_class& irregularity, int h0);

}  // namespace padiff
