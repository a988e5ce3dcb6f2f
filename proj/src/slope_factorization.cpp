#include "padiff/slope_factorization.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace padiff {

namespace {

// log-norm weight of a unit coefficient sitting at T^e d^k, measured on the
// sub-disk of relative log-radius lr at the point u0: the |k!| (rho rho0)^-k
// derivation weight plus the monomial's own size.
mpq_class cell_weight(int k, long e, const mpq_class& u0, const mpq_class& lr,
                      const FieldSpec& field) {
  mpq_class w = -factorial_valuation(static_cast<unsigned long>(k), field);
  w += e * u0;
  w -= k * (lr + u0);
  mpq_class out(w);
  out.canonicalize();
  return out;
}

GaussSeries series_from_cells(const std::map<long, mpq_class>& cells) {
  GaussSeries s;
  for (const auto& [e, c] : cells)
    if (c != 0) s += GaussSeries::monomial(c, e);
  return s;
}

DiffOperator reduce_heights(const DiffOperator& P, const FieldSpec& field, long known_to) {
  if (!field.is_padic()) return P;
  std::vector<GaussSeries> out;
  for (int k = 0; k <= P.order(); ++k) {
    std::map<long, mpq_class> cells;
    for (const auto& [e, c] : P.coefficient(k).coefficients())
      cells[e] = reduce_mod(c, field, known_to);
    out.push_back(series_from_cells(cells));
  }
  return DiffOperator(std::move(out));
}

// Unknown/equation lattice of the linearized problem: per operator order a
// window of series_order consecutive T-exponents starting at t_lo.
struct Lattice {
  int n1, n2, O;
  long t_lo;
  int orders() const { return n1 + n2; }
  int size() const { return orders() * O; }
  bool holds(long e) const { return e >= t_lo && e < t_lo + O; }
  int cell(int k, long e) const { return k * O + static_cast<int>(e - t_lo); }
};

void require_exact_monic(const DiffOperator& P, const char* what) {
  if (P.order() < 1 || !P.monic())
    throw guard_error(code::validation_error,
                      std::string(what) + " must be monic of order >= 1");
  for (int k = 0; k <= P.order(); ++k)
    if (!P.coefficient(k).exact())
      throw guard_error(code::validation_error,
                        std::string(what) + " needs exact polynomial coefficients");
}

std::vector<LogValue> sorted_rel(RadiusEngine& eng, const mpq_class& u0, int terms) {
  MultiradiusPoint mr = multiradius_at(eng, u0, TriangulationDatum::moving_outer(), terms,
                                       4 * terms, true);
  if (!mr.conclusive)
    throw guard_error(code::inconclusive, "radius detection inconclusive at the base point");
  std::vector<LogValue> rel;
  rel.reserve(mr.per_index.size());
  for (const auto& o : mr.per_index) rel.push_back(o.log_rel);
  return rel;  // already ascending
}

std::vector<LogValue> operator_rel_radii(const DiffOperator& P, const FieldSpec& field,
                                         const mpq_class& u0, int terms) {
  RadiusEngine eng(companion(P, field, u0), field);
  return sorted_rel(eng, u0, terms);
}

}  // namespace

LogValue residual(const DiffOperator& P, const DiffOperator& P1, const DiffOperator& P2,
                  const mpq_class& u0, const mpq_class& lr, const FieldSpec& field) {
  return operator_norm(P1 * P2 - P, u0, lr, field);
}

FactorizationProblem make_factorization_problem(DiffOperator P, const FieldSpec& field,
                                                const mpq_class& u0, const mpq_class& lr,
                                                int n2, int series_order) {
  FactorizationProblem prob;
  prob.field = field;
  prob.u0 = u0;
  prob.lr = lr;
  prob.n2 = n2;
  prob.series_order = series_order;
  prob.t_lo = 0;
  for (int k = 0; k <= P.order(); ++k) {
    const GaussSeries& f = P.coefficient(k);
    if (!f.is_zero()) prob.t_lo = std::min(prob.t_lo, f.min_exponent());
  }
  if (field.is_padic()) {
    long M = static_cast<long>(field.precision);
    prob.tolerance = LogValue(mpq_class(-(M - 5)));
    prob.pivot_floor = LogValue(mpq_class(-(2 * M + 10)));
  } else {
    // Trivially valued: accept once every surviving term is confined to the
    // upper half of the truncation window (norm-dominated there when u0 < 0).
    mpq_class depth = (prob.t_lo + mpq_class(series_order) / 2) * u0;
    prob.tolerance = u0 < 0 ? LogValue(depth) : LogValue::neg_infinity();
    prob.pivot_floor = LogValue(mpq_class(-1000000));
  }
  prob.P = std::move(P);
  return prob;
}

std::pair<DiffOperator, DiffOperator> init_guess(const DiffOperator& P,
                                                 const FieldSpec& field,
                                                 const mpq_class& u0, const mpq_class& lr,
                                                 int n2) {
  require_exact_monic(P, "operator");
  int n = P.order();
  if (n2 < 1 || n2 > n - 1)
    throw guard_error(code::validation_error, "split order must satisfy 1 <= n2 <= n-1");
  int n1 = n - n2;
  mpq_class kappa = solvability_constant(field);

  // Weighted symbol heights; +inf where the coefficient vanishes.
  std::vector<LogValue> height(static_cast<std::size_t>(n) + 1, LogValue::pos_infinity());
  for (int k = 0; k <= n; ++k) {
    const GaussSeries& f = P.coefficient(k);
    if (f.is_zero()) continue;
    height[static_cast<std::size_t>(k)] =
        gauss_norm(f, u0, field) + LogValue(mpq_class(k * (lr + u0 + kappa)));
  }
  // k = n1 must be a vertex of the lower convex hull: the steepest chord
  // arriving from the left stays strictly below the shallowest chord leaving
  // to the right.  Points with a vanishing coefficient sit at +inf and never
  // constrain the hull.
  const LogValue& h1 = height[static_cast<std::size_t>(n1)];
  bool vertex = h1.finite();
  if (vertex) {
    std::optional<mpq_class> lmax, rmin;
    for (int j = 0; j < n1; ++j) {
      const LogValue& hj = height[static_cast<std::size_t>(j)];
      if (!hj.finite()) continue;
      mpq_class s = (h1.value() - hj.value()) / (n1 - j);
      if (!lmax || s > *lmax) lmax = s;
    }
    for (int j = n1 + 1; j <= n; ++j) {
      const LogValue& hj = height[static_cast<std::size_t>(j)];
      if (!hj.finite()) continue;
      mpq_class s = (hj.value() - h1.value()) / (j - n1);
      if (!rmin || s < *rmin) rmin = s;
    }
    // The leading coefficient is monic, so the right side always has a point.
    vertex = rmin && (!lmax || *lmax < *rmin);
  }
  if (!vertex)
    throw guard_error(code::no_polygon_vertex,
                      "weighted symbol polygon has no vertex at the requested split");

  auto dom = [&](int k) { return dominant_monomial(P.coefficient(k), u0, field); };
  auto [e_piv, c_piv] = dom(n1);

  std::vector<GaussSeries> low(static_cast<std::size_t>(n1) + 1);
  low[static_cast<std::size_t>(n1)] = GaussSeries(mpq_class(1));
  for (int k = 0; k < n1; ++k) {
    if (P.coefficient(k).is_zero()) continue;
    auto [e, c] = dom(k);
    low[static_cast<std::size_t>(k)] = GaussSeries::monomial(c / c_piv, e - e_piv);
  }
  std::vector<GaussSeries> high(static_cast<std::size_t>(n2) + 1);
  high[static_cast<std::size_t>(n2)] = GaussSeries(mpq_class(1));
  for (int j = 0; j < n2; ++j) {
    if (P.coefficient(j + n1).is_zero()) continue;
    auto [e, c] = dom(j + n1);
    high[static_cast<std::size_t>(j)] = GaussSeries::monomial(c, e);
  }
  return {DiffOperator(std::move(low)), DiffOperator(std::move(high))};
}

std::pair<DiffOperator, DiffOperator> newton_step(const FactorizationProblem& prob,
                                                  const DiffOperator& P1,
                                                  const DiffOperator& P2) {
  int n1 = prob.P.order() - prob.n2, n2 = prob.n2;
  if (P1.order() != n1 || P2.order() != n2 || !P1.monic() || !P2.monic())
    throw guard_error(code::validation_error, "newton_step needs monic factors of the split orders");
  Lattice lat{n1, n2, prob.series_order, prob.t_lo};
  const int N = lat.size();
  const FieldSpec& field = prob.field;

  // Column c of the linear map: the cells of (unit cell operator) * P2 for
  // Q1 unknowns, P1 * (unit cell operator) for Q2 unknowns.
  std::vector<mpq_class> M(static_cast<std::size_t>(N) * N);
  auto scatter = [&](const DiffOperator& img, int col) {
    for (int m = 0; m <= img.order() && m < lat.orders(); ++m)
      for (const auto& [e, c] : img.coefficient(m).coefficients())
        if (lat.holds(e)) M[static_cast<std::size_t>(lat.cell(m, e)) * N + col] = c;
  };
  for (int k = 0; k < n1; ++k)
    for (int t = 0; t < lat.O; ++t) {
      std::vector<GaussSeries> mono(static_cast<std::size_t>(k) + 1);
      mono[static_cast<std::size_t>(k)] = GaussSeries::monomial(1, lat.t_lo + t);
      scatter(op_multiply(DiffOperator(std::move(mono)), P2), lat.cell(k, lat.t_lo + t));
    }
  for (int k = 0; k < n2; ++k)
    for (int t = 0; t < lat.O; ++t) {
      std::vector<GaussSeries> mono(static_cast<std::size_t>(k) + 1);
      mono[static_cast<std::size_t>(k)] = GaussSeries::monomial(1, lat.t_lo + t);
      scatter(op_multiply(P1, DiffOperator(std::move(mono))),
              n1 * lat.O + lat.cell(k, lat.t_lo + t));
    }

  std::vector<mpq_class> rhs(static_cast<std::size_t>(N));
  DiffOperator E = prob.P - P1 * P2;
  for (int m = 0; m <= E.order() && m < lat.orders(); ++m)
    for (const auto& [e, c] : E.coefficient(m).coefficients())
      if (lat.holds(e)) rhs[static_cast<std::size_t>(lat.cell(m, e))] = c;

  // Balanced norms: the weight of a row/column cell, so that the pivot choice
  // maximizes the entry's contribution to the operator norm.
  auto weight_of = [&](int idx, bool is_col) -> mpq_class {
    int k = idx / lat.O;
    long e = lat.t_lo + idx % lat.O;
    if (is_col && k >= n1) k -= n1;
    return cell_weight(k, e, prob.u0, prob.lr, field);
  };
  std::vector<mpq_class> row_w(static_cast<std::size_t>(N)), col_w(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) {
    row_w[static_cast<std::size_t>(i)] = weight_of(i, false);
    col_w[static_cast<std::size_t>(i)] = weight_of(i, true);
  }

  // Row-pivoted elimination in column order; heights compressed periodically
  // in p-adic mode (the system is only meaningful to working precision).
  long known_to = field.is_padic() ? static_cast<long>(field.precision) + 32 : 0;
  // The truncated system may be rank-deficient (the window cuts series
  // kernels mid-stream), so a column with no usable pivot leaves its unknown
  // at zero; the residual gate in the Newton loop rejects any step this made
  // inconsistent.  Only a fully degenerate system is fatal here.
  std::vector<int> rows(static_cast<std::size_t>(N));
  for (int i = 0; i < N; ++i) rows[static_cast<std::size_t>(i)] = i;
  std::vector<int> pivot_row_of_col(static_cast<std::size_t>(N), -1);
  int rank = 0;
  for (int c = 0; c < N; ++c) {
    int best = -1;
    LogValue best_adj = LogValue::neg_infinity();
    for (int ri = rank; ri < N; ++ri) {
      const mpq_class& a = M[static_cast<std::size_t>(rows[static_cast<std::size_t>(ri)]) * N + c];
      if (a == 0) continue;
      LogValue adj = -(valuation(a, field) + LogValue(col_w[static_cast<std::size_t>(c)])) +
                     LogValue(row_w[static_cast<std::size_t>(rows[static_cast<std::size_t>(ri)])]);
      if (best < 0 || adj > best_adj) {
        best = ri;
        best_adj = adj;
      }
    }
    if (best < 0 || best_adj < prob.pivot_floor) continue;  // free unknown
    std::swap(rows[static_cast<std::size_t>(rank)], rows[static_cast<std::size_t>(best)]);
    const std::size_t pr = static_cast<std::size_t>(rows[static_cast<std::size_t>(rank)]);
    pivot_row_of_col[static_cast<std::size_t>(c)] = static_cast<int>(pr);
    const mpq_class& piv = M[pr * N + c];
    for (int ri = rank + 1; ri < N; ++ri) {
      const std::size_t r = static_cast<std::size_t>(rows[static_cast<std::size_t>(ri)]);
      mpq_class& lead = M[r * N + c];
      if (lead == 0) continue;
      mpq_class f = lead / piv;
      for (int cc = c + 1; cc < N; ++cc) {
        const mpq_class& pv = M[pr * N + cc];
        if (pv != 0) M[r * N + cc] -= f * pv;
      }
      rhs[r] -= f * rhs[pr];
      lead = 0;
    }
    ++rank;
    if (known_to && (rank % 16 == 0))
      for (int ri = rank; ri < N; ++ri) {
        const std::size_t r = static_cast<std::size_t>(rows[static_cast<std::size_t>(ri)]);
        for (int cc = c + 1; cc < N; ++cc) {
          mpq_class& a = M[r * N + cc];
          if (a != 0) a = reduce_mod(a, field, known_to);
        }
        rhs[r] = reduce_mod(rhs[r], field, known_to);
      }
  }
  if (rank == 0)
    throw guard_error(code::singular_linearization,
                      "linearized factorization system has no usable pivot");
  std::vector<mpq_class> sol(static_cast<std::size_t>(N));
  for (int c = N - 1; c >= 0; --c) {
    if (pivot_row_of_col[static_cast<std::size_t>(c)] < 0) continue;  // free, stays zero
    const std::size_t pr = static_cast<std::size_t>(pivot_row_of_col[static_cast<std::size_t>(c)]);
    mpq_class acc = rhs[pr];
    for (int cc = c + 1; cc < N; ++cc) {
      const mpq_class& a = M[pr * N + cc];
      if (a != 0) acc -= a * sol[static_cast<std::size_t>(cc)];
    }
    acc /= M[pr * N + c];
    if (known_to) acc = reduce_mod(acc, field, known_to);
    sol[static_cast<std::size_t>(c)] = std::move(acc);
  }

  auto updated = [&](const DiffOperator& P0, int ord, int col0) {
    std::vector<GaussSeries> out;
    for (int k = 0; k <= ord; ++k) {
      std::map<long, mpq_class> cells;
      for (const auto& [e, cc] : P0.coefficient(k).coefficients()) cells[e] = cc;
      if (k < ord)
        for (int t = 0; t < lat.O; ++t)
          cells[lat.t_lo + t] += sol[static_cast<std::size_t>(col0 + k * lat.O + t)];
      out.push_back(series_from_cells(cells));
    }
    return DiffOperator(std::move(out));
  };
  long factor_known = field.is_padic() ? static_cast<long>(field.precision) + 16 : 0;
  DiffOperator Q1 = updated(P1, n1, 0);
  DiffOperator Q2 = updated(P2, n2, n1 * lat.O);
  if (factor_known) {
    Q1 = reduce_heights(Q1, field, factor_known);
    Q2 = reduce_heights(Q2, field, factor_known);
  }
  return {std::move(Q1), std::move(Q2)};
}

Factorization robba_factor(const FactorizationProblem& prob) {
  require_exact_monic(prob.P, "operator");
  int n = prob.P.order();
  if (prob.n2 < 1 || prob.n2 > n - 1)
    throw guard_error(code::validation_error, "split order must satisfy 1 <= n2 <= n-1");

  std::vector<LogValue> rel = operator_rel_radii(prob.P, prob.field, prob.u0, prob.radius_terms);
  LogValue thr = LogValue(prob.lr);
  // Tie refinement only ever narrows radii from below, so a surviving tie may
  // understate the upper members of the pair.  Distinct values are each a
  // settled detection, so only a tie-free multiset is held to strict checks;
  // otherwise the separation guard is skipped here and the factor radii carry
  // the certificate below.
  bool rel_trusted = std::adjacent_find(rel.begin(), rel.end()) == rel.end();
  int below = 0;
  for (const auto& r : rel)
    if (r < thr) ++below;
  if (rel_trusted && below != prob.n2)
    throw guard_error(code::no_separation,
                      "threshold splits the radii at position " + std::to_string(below) +
                          ", not the requested " + std::to_string(prob.n2));

  auto [P1, P2] = prob.guess ? *prob.guess
                             : init_guess(prob.P, prob.field, prob.u0, prob.lr, prob.n2);

  FactorizationCertificate cert;
  LogValue r = residual(prob.P, P1, P2, prob.u0, prob.lr, prob.field);
  cert.residual_history.push_back(r);
  for (int it = 0; it < prob.max_iterations && r > prob.tolerance; ++it) {
    auto next = newton_step(prob, P1, P2);
    LogValue r2 = residual(prob.P, next.first, next.second, prob.u0, prob.lr, prob.field);
    if (!(r2 < r)) break;  // stalled; accept only if already inside tolerance
    P1 = std::move(next.first);
    P2 = std::move(next.second);
    r = r2;
    cert.residual_history.push_back(r);
  }
  if (r > prob.tolerance)
    throw guard_error(code::did_not_converge,
                      "residual log-norm stalled at " + r.str() + " above tolerance " +
                          prob.tolerance.str());
  cert.residual = r;

  // Worst quadratic defect 2 v_k - v_{k+1} over the recorded valuations.
  cert.contraction_estimate = 0;
  for (std::size_t i = 0; i + 1 < cert.residual_history.size(); ++i) {
    const LogValue& a = cert.residual_history[i];
    const LogValue& b = cert.residual_history[i + 1];
    if (!a.finite() || !b.finite()) continue;
    mpq_class defect = -2 * a.value() + b.value();  // valuations are -log-norms
    if (defect > cert.contraction_estimate) cert.contraction_estimate = defect;
  }

  std::vector<LogValue> got1 = operator_rel_radii(P1, prob.field, prob.u0, prob.radius_terms);
  std::vector<LogValue> got2 = operator_rel_radii(P2, prob.field, prob.u0, prob.radius_terms);
  if (rel_trusted) {
    std::vector<LogValue> got = got1;
    got.insert(got.end(), got2.begin(), got2.end());
    std::sort(got.begin(), got.end());
    cert.partition_ok = got == rel;
  } else {
    // The operator's own radii are not usable as a reference, so certify the
    // split directly: every radius of the outer factor clears the threshold
    // and every radius of the inner factor stays under it.  An understated
    // value can only fail the outer side (an honest rejection), but it could
    // falsely pass the inner side, so the inner radii must be tie-free.
    bool ge_ok = std::all_of(got1.begin(), got1.end(),
                             [&](const LogValue& v) { return v >= thr; });
    bool lt_ok = std::all_of(got2.begin(), got2.end(),
                             [&](const LogValue& v) { return v < thr; }) &&
                 std::adjacent_find(got2.begin(), got2.end()) == got2.end();
    cert.partition_ok = ge_ok && lt_ok;
  }
  cert.accepted = cert.partition_ok && r <= prob.tolerance;

  Factorization out;
  out.ge = std::move(P1);
  out.lt = std::move(P2);
  out.cert = std::move(cert);
  return out;
}

std::vector<SlopeFactor> cm_decompose(const DiffOperator& P, const FieldSpec& field,
                                      const mpq_class& u0, int series_order) {
  require_exact_monic(P, "operator");
  if (!(u0 < 0))
    throw guard_error(code::validation_error,
                      "slope decomposition works at an interior annulus point u0 < 0");
  std::vector<LogValue> rel = operator_rel_radii(P, field, u0, 128);
  std::vector<mpq_class> distinct;
  for (const auto& r : rel) {
    mpq_class beta = r.finite() ? mpq_class(r.value() / u0) : mpq_class(0);
    beta.canonicalize();
    if (distinct.empty() || beta != distinct.back()) distinct.push_back(beta);
  }
  // rel ascending and u0 < 0 make the betas descending.
  if (distinct.size() == 1) return {{distinct.front(), P}};
  if (distinct.size() != rel.size())
    throw guard_error(code::slopes_not_distinct,
                      "slope spectrum has a repeated value next to a distinct one");

  std::vector<SlopeFactor> parts;
  DiffOperator rest = P;
  for (std::size_t s = 0; s + 1 < rel.size(); ++s) {
    // Split the single smallest remaining radius (largest slope) off the
    // right; rest keeps the radii above the threshold.
    mpq_class lr = (rel[s].value() + rel[s + 1].value()) / 2;
    FactorizationProblem prob =
        make_factorization_problem(rest, field, u0, lr, 1, series_order);
    Factorization f = robba_factor(prob);
    parts.push_back({distinct[s], std::move(f.lt)});
    rest = std::move(f.ge);
  }
  parts.push_back({distinct.back(), std::move(rest)});
  // Left-to-right product order: descending radius, ascending slope.
  std::reverse(parts.begin(), parts.end());
  return parts;
}

}  // namespace padiff
