#include "padiff/polygons.hpp"

#include <algorithm>

namespace padiff {

std::vector<mpq_class> ConvergencePolygon::increments() const {
  std::vector<mpq_class> inc;
  for (std::size_t i = 1; i < heights.size(); ++i)
    inc.push_back(heights[i] - heights[i - 1]);
  return inc;
}

bool ConvergencePolygon::convex() const {
  std::vector<mpq_class> inc = increments();
  for (std::size_t i = 0; i < inc.size(); ++i) {
    if (inc[i] < 0) return false;
    if (i > 0 && inc[i] < inc[i - 1]) return false;
  }
  return true;
}

ConvergencePolygon convergence_polygon(const MultiradiusPoint& pt) {
  if (!pt.conclusive)
    throw guard_error(code::inconclusive, "polygon from an undetected multiradius");
  ConvergencePolygon poly;
  poly.heights.push_back(mpq_class(0));
  int r = static_cast<int>(pt.per_index.size());
  for (int i = 1; i <= r; ++i) {
    mpq_class inc = -pt.per_index[static_cast<std::size_t>(r - i)].log_rel.value();
    mpq_class h = poly.heights.back() + inc;
    h.canonicalize();
    poly.heights.push_back(h);
  }
  return poly;
}

mpq_class partial_height(const MultiradiusPoint& pt, int i) {
  if (!pt.conclusive)
    throw guard_error(code::inconclusive, "height from an undetected multiradius");
  if (i < 0 || i > static_cast<int>(pt.per_index.size()))
    throw guard_error(code::validation_error, "partial height index out of range");
  mpq_class h(0);
  for (int k = 0; k < i; ++k) h += pt.per_index[static_cast<std::size_t>(k)].log_rel.value();
  h.canonicalize();
  return h;
}

FormalPolygon formal_newton_polygon(const DiffOperator& p) {
  int r = p.order();
  if (r < 1)
    throw guard_error(code::validation_error, "formal polygon needs order >= 1");
  std::vector<std::pair<long, mpq_class>> pts;
  for (int k = 0; k <= r; ++k) {
    const GaussSeries& g = p.coefficient(k);
    if (g.is_zero()) {
      if (!g.exact())
        throw guard_error(code::precision_exhausted,
                          "coefficient zero on the known window only");
      continue;
    }
    if (g.precision_floor())
      throw guard_error(code::precision_exhausted,
                        "T-adic valuation hidden below the precision floor");
    pts.emplace_back(k, mpq_class(g.min_exponent() + r - k));
  }
  // Lower convex hull over k ascending, then flatten negative leading edges
  // to a horizontal at the global minimum (the quadrants extend left and up).
  std::vector<std::pair<long, mpq_class>> hull;
  for (const auto& [x, y] : pts) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull[hull.size() - 1];
      mpq_class cross = mpq_class(b.first - a.first) * (y - a.second) -
                        (b.second - a.second) * mpq_class(x - a.first);
      if (cross <= 0) hull.pop_back();
      else break;
    }
    hull.emplace_back(x, y);
  }
  std::size_t start = 0;
  for (std::size_t i = 1; i < hull.size(); ++i)
    if (hull[i].second <= hull[start].second) start = i;

  FormalPolygon out;
  out.vertices.emplace_back(mpq_class(0), hull[start].second);
  for (std::size_t i = start; i < hull.size(); ++i) {
    mpq_class x(hull[i].first);
    if (out.vertices.back().first != x)
      out.vertices.emplace_back(x, hull[i].second);
  }
  if (out.vertices.back().first != r)
    out.vertices.emplace_back(mpq_class(r), out.vertices.back().second);

  PLFunction h = PLFunction::from_knots(out.vertices);
  for (int i = 1; i <= r; ++i) {
    mpq_class s = h.eval(mpq_class(i)) - h.eval(mpq_class(i - 1));
    s.canonicalize();
    out.slopes.push_back(s);
  }
  out.irregularity = h.eval(mpq_class(r)) - h.eval(mpq_class(0));
  out.irregularity.canonicalize();
  return out;
}

FormalComparison check_formal_vs_convergence(const DiffOperator& p,
                                             const FieldSpec& field,
                                             const mpq_class& u_lo,
                                             const mpq_class& u_hi,
                                             const ProfileOptions& opt) {
  if (field.is_padic())
    throw guard_error(code::wrong_mode,
                      "formal/convergence dictionary is exact only in the "
                      "trivially valued mode");
  if (u_hi >= 0 || u_lo > u_hi)
    throw guard_error(code::validation_error, "segment must satisfy u_lo <= u_hi < 0");
  FormalComparison out;
  out.formal = formal_newton_polygon(p);
  int r = p.order();
  RadiusEngine eng(companion(p, field, u_lo, 4 * opt.terms_cap), field);
  out.profile = radius_profile(eng, u_lo, u_hi, TriangulationDatum::moving_outer(), opt);
  out.match = true;
  for (int i = 0; i < r; ++i) {
    const mpq_class& mu = out.formal.slopes[static_cast<std::size_t>(r - 1 - i)];
    PLFunction expect = PLFunction::affine(u_lo, u_hi, mu * u_lo, mu);
    if (!(out.profile.log_rel[static_cast<std::size_t>(i)] == expect)) out.match = false;
  }
  return out;
}

BoundaryIrregularity irregularity_at_boundary(const MultiradiusProfile& prof,
                                              BoundarySide side,
                                              const mpq_class& boundary_u) {
  if (prof.log_rel.empty())
    throw guard_error(code::validation_error, "empty profile");
  int r = static_cast<int>(prof.log_rel.size());
  PLFunction height = prof.log_rel[0];
  for (int i = 1; i < r; ++i) height = height + prof.log_rel[static_cast<std::size_t>(i)];
  if (height.degenerate())
    throw guard_error(code::validation_error,
                      "boundary slope needs a nondegenerate profile segment");
  if (!height.contains(boundary_u))
    throw guard_error(code::validation_error, "boundary point outside the profile");
  bool has_inner = height.unbounded_left() || boundary_u > height.lo();
  bool has_outer = boundary_u < height.hi();

  BoundaryIrregularity out;
  out.height_slope =
      has_outer ? height.slope_right(boundary_u) : height.slope_left(boundary_u);
  for (int i = 0; i < r; ++i) {
    const PLFunction& f = prof.log_rel[static_cast<std::size_t>(i)];
    mpq_class inner_slope =
        has_inner ? f.slope_left(boundary_u) : f.slope_right(boundary_u);
    if (f.eval(boundary_u) == 0 && inner_slope == 0) ++out.h0;
  }
  if (side == BoundarySide::annulus) {
    if (prof.log_rel[0].eval(boundary_u) != 0)
      throw guard_error(code::not_solvable_at_boundary,
                        "first radius does not reach the boundary");
    out.irregularity = -out.height_slope;
  } else {
    out.irregularity = -out.height_slope + (r - out.h0);
  }
  out.irregularity.canonicalize();
  return out;
}

BoundaryIrregularity irregularity_at_boundary(const MultiradiusProfile& prof,
                                              BoundarySide side) {
  if (prof.log_rel.empty() || prof.log_rel[0].empty())
    throw guard_error(code::validation_error, "empty profile");
  return irregularity_at_boundary(prof, side, prof.log_rel[0].hi());
}

IndexCount gos_index(int rank, const mpq_class& irregularity, int h0) {
  if (rank < 1 || h0 < 0 || h0 > rank)
    throw guard_error(code::validation_error, "need 0 <= h0 <= rank, rank >= 1");
  IndexCount out;
  out.h0 = h0;
  out.irregularity = irregularity;
  out.irregularity.canonicalize();
  out.chi = rank - out.irregularity;
  out.chi.canonicalize();
  out.h1 = out.h0 - out.chi;
  out.h1.canonicalize();
  return out;
}

}  // namespace padiff
