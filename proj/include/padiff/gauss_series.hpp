#pragma once

#include <gmpxx.h>

#include <map>
#include <optional>
#include <string>
#include <utility>

#include "padiff/pl_function.hpp"
#include "padiff/valued_scalar.hpp"

namespace padiff {

// Finite Laurent expansion sum a_e (T - c)^e with exact rational coefficients
// and a known-exponent window: coefficients at exponents >= prec_hi or
// < prec_lo are unknown (not zero).  Absent bounds mean knowledge extends to
// +/-infinity; a series with neither bound is exact (a Laurent polynomial).
// No zero coefficients are stored and the stored support always sits inside
// the window.
class GaussSeries {
 public:
  GaussSeries() = default;                       // exact zero, center 0
  explicit GaussSeries(const mpq_class& constant);
  static GaussSeries monomial(const mpq_class& a, long e, mpq_class center = 0);
  static GaussSeries zero_with_window(std::optional<long> lo, std::optional<long> hi,
                                      mpq_class center = 0);
  // Parses "3*T^-2 + 1/2*T^0 + 5*T^3" style literals (center 0).  Defined with
  // the operator grammar so both share one tokenizer; rejects any 'd' factor.
  static GaussSeries parse(const std::string& text);

  const mpq_class& center() const { return center_; }
  const std::map<long, mpq_class>& coefficients() const { return coeff_; }
  // Unknown at exponents >= prec_hi (the truncation order of disk-side tails).
  std::optional<long> precision_order() const { return prec_hi_; }
  // Unknown at exponents < prec_lo (co-disk tails).
  std::optional<long> precision_floor() const { return prec_lo_; }
  bool exact() const { return !prec_hi_ && !prec_lo_; }
  bool is_zero() const { return coeff_.empty(); }       // zero on known support
  mpq_class coeff(long e) const;                        // 0 outside support
  bool known_at(long e) const;
  long min_exponent() const;  // requires nonzero support
  long max_exponent() const;

  GaussSeries& operator+=(const GaussSeries& o);
  GaussSeries& operator-=(const GaussSeries& o);
  GaussSeries operator+(const GaussSeries& o) const;
  GaussSeries operator-(const GaussSeries& o) const;
  GaussSeries operator*(const GaussSeries& o) const;
  GaussSeries operator-() const;
  GaussSeries scaled(const mpq_class& c) const;
  GaussSeries mul_monomial(const mpq_class& a, long e) const;

  // d/dT; both window edges shift down by one.
  GaussSeries derivative() const;
  // Binomial re-expansion around a new center.  Exact polynomial expansions
  // only: negative exponents or a finite window throw
  // guard_error(PRECISION_EXHAUSTED) since every output coefficient would
  // depend on unknown data.
  GaussSeries recentered(const mpq_class& new_center) const;
  // Forget knowledge at exponents >= order / below order.
  GaussSeries truncated(long order) const;
  GaussSeries truncated_below(long order) const;
  // Exact evaluation of the known support; negative exponents require
  // point != center.  Meaningful for exact series.
  mpq_class evaluate(const mpq_class& point) const;

  bool operator==(const GaussSeries& o) const;
  bool operator!=(const GaussSeries& o) const { return !(*this == o); }
  std::string str() const;

 private:
  mpq_class center_ = 0;
  std::map<long, mpq_class> coeff_;
  std::optional<long> prec_lo_, prec_hi_;

  void trim();
  void require_same_frame(const GaussSeries& o) const;
};

// v(f) at the point of log-radius u (u = log rho <= 0 on the unit disk):
// min_e (v(a_e) - e*u) over the known support.  +inf for the exact zero
// series; guard_error(ALL_COEFFICIENTS_UNKNOWN) when the support is empty but
// the window is finite.  Truncated series are faithful at the working point
// they were produced for: dropped tails are norm-dominated there.
LogValue gauss_norm(const GaussSeries& f, const mpq_class& u, const FieldSpec& field);

// The (exponent, coefficient) of the term attaining the norm at u; ties pick
// the smallest exponent.  Same preconditions as gauss_norm, plus f nonzero.
std::pair<long, mpq_class> dominant_monomial(const GaussSeries& f, const mpq_class& u,
                                             const FieldSpec& field);

// log|f| as a function of u = log rho on [u_lo, u_hi]: the upper envelope
// max_e (e*u - v(a_e)).  Convex with integer slopes (the exponents met along
// the lower hull of (e, v(a_e))), breakpoints exact.
PLFunction norm_profile(const GaussSeries& f, const mpq_class& u_lo,
                        const mpq_class& u_hi, const FieldSpec& field);

// Truncated multiplicative inverse at working point u: f = a T^m (1 + h) with
// |h|_u < 1 strictly; returns g with f*g == 1 through rel_order geometric
// terms, the unknown tail recorded in g's window.  Center must be 0 and h
// must be one-sided in exponent (otherwise the error support is not a window
// and guard_error(PRECISION_EXHAUSTED) is thrown).  Throws
// guard_error(NON_INVERTIBLE_LEADING_COEFFICIENT) when no strictly dominant
// monomial exists at u.
GaussSeries invert_at(const GaussSeries& f, const mpq_class& u, const FieldSpec& field,
                      int rel_order);

}  // namespace padiff
