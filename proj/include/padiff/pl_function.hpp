#pragma once

#include <gmpxx.h>

#include <utility>
#include <vector>

namespace padiff {

// Continuous piecewise-affine function with exact rational breakpoints,
// values and slopes.  Domain is a closed interval [lo, hi]; lo may be -inf,
// in which case the leftmost piece must be constant.  Canonical form: no
// interior knot where the slope does not change.
//
// Coordinate convention used throughout the library: the domain variable is
// u = log(radius) (so u <= 0 inside the unit disk) and values are logs of
// the tracked quantity, both base p in p-adic mode and in the abstract log
// unit in trivially valued mode.
class PLFunction {
 public:
  using Knot = std::pair<mpq_class, mpq_class>;  // (t, value)

  PLFunction() = default;

  static PLFunction constant(const mpq_class& lo, const mpq_class& hi,
                             const mpq_class& value);
  static PLFunction affine(const mpq_class& lo, const mpq_class& hi,
                           const mpq_class& value_at_lo, const mpq_class& slope);
  // knots strictly increasing in t; one knot gives the degenerate domain [t,t].
  static PLFunction from_knots(std::vector<Knot> knots);
  // Same, with the domain extended to -inf by the constant value of the first
  // knot.
  static PLFunction from_knots_unbounded_left(std::vector<Knot> knots);

  bool empty() const { return knots_.empty(); }
  bool unbounded_left() const { return unbounded_left_; }
  const mpq_class& lo() const;  // requires a bounded-left domain
  const mpq_class& hi() const;
  bool degenerate() const { return knots_.size() == 1 && !unbounded_left_; }

  bool contains(const mpq_class& t) const;
  mpq_class eval(const mpq_class& t) const;
  // One-sided slopes; slope_left at interior/hi, slope_right at interior/lo.
  // On the unbounded left tail both are 0.
  mpq_class slope_left(const mpq_class& t) const;
  mpq_class slope_right(const mpq_class& t) const;

  const std::vector<Knot>& knots() const { return knots_; }
  std::vector<mpq_class> piece_slopes() const;       // left to right
  std::vector<mpq_class> interior_breakpoints() const;

  bool is_convex() const;    // slopes non-decreasing
  bool is_concave() const;
  bool is_constant() const;

  PLFunction operator+(const PLFunction& o) const;   // identical domains
  PLFunction operator-(const PLFunction& o) const;
  PLFunction operator-() const;
  PLFunction scaled(const mpq_class& c) const;
  PLFunction shifted(const mpq_class& c) const;      // value offset
  PLFunction restricted(const mpq_class& a, const mpq_class& b) const;

  // Equality as functions (canonical forms compared).
  bool operator==(const PLFunction& o) const;
  bool operator!=(const PLFunction& o) const { return !(*this == o); }

 private:
  // Invariants: knots_ strictly increasing, canonical (slope changes at every
  // interior knot); unbounded_left_ extends knots_.front() leftwards.
  std::vector<Knot> knots_;
  bool unbounded_left_ = false;

  void normalize();
  friend PLFunction pl_merge_binary(const PLFunction& f, const PLFunction& g, int op);
};

PLFunction pl_min(const PLFunction& f, const PLFunction& g);
PLFunction pl_max(const PLFunction& f, const PLFunction& g);

// Closed segments (possibly degenerate points) of the common domain where
// f == g.  Preconditions: identical domains.
std::vector<std::pair<mpq_class, mpq_class>> equality_set(const PLFunction& f,
                                                          const PLFunction& g);

}  // namespace padiff
