#pragma once

#include <gmpxx.h>

#include <string>

#include "padiff/guards.hpp"

namespace padiff {

// Ground field of the computation. Two modes:
//   - p-adic: Q with the p-adic absolute value, |p| = 1/p; "precision" is the
//     residue window M used when coefficient height is compressed mod p^M.
//   - trivially valued: Q with the trivial absolute value (|x| = 1 for x != 0).
// Logarithms are taken base p in p-adic mode and in an abstract unit in
// trivially valued mode, so every log-value handled by the library is an
// exact rational.
struct FieldSpec {
  enum class Mode { padic, trivial };

  Mode mode = Mode::trivial;
  unsigned long p = 0;       // prime, p-adic mode only
  unsigned precision = 0;    // M >= 1, p-adic mode only

  static FieldSpec padic(unsigned long p, unsigned precision);
  static FieldSpec trivial();

  bool is_padic() const { return mode == Mode::padic; }
  // Throws input_error(VALIDATION_ERROR) on composite p or zero precision.
  void validate() const;
};

// Element of Q `union` {-inf, +inf}.  Carries both valuations v = -log|x|
// (+inf encodes x = 0) and log-radii (+inf encodes an everywhere-convergent
// solution before capping).  Total order: -inf < every rational < +inf.
class LogValue {
 public:
  LogValue() : sign_(0), q_(0) {}
  LogValue(long n) : sign_(0), q_(n) {}
  LogValue(int n) : sign_(0), q_(n) {}
  LogValue(mpq_class q) : sign_(0), q_(std::move(q)) { q_.canonicalize(); }

  static LogValue pos_infinity();
  static LogValue neg_infinity();

  bool finite() const { return sign_ == 0; }
  bool is_pos_infinity() const { return sign_ > 0; }
  bool is_neg_infinity() const { return sign_ < 0; }
  // Requires finite().
  const mpq_class& value() const;

  // +inf absorbs; adding opposite infinities is a programming error.
  LogValue operator+(const LogValue& o) const;
  LogValue operator-() const;
  LogValue operator-(const LogValue& o) const { return *this + (-o); }
  // Scale by a rational; scaling an infinity by 0 is a programming error.
  LogValue scaled(const mpq_class& c) const;

  bool operator==(const LogValue& o) const;
  bool operator!=(const LogValue& o) const { return !(*this == o); }
  bool operator<(const LogValue& o) const;
  bool operator>(const LogValue& o) const { return o < *this; }
  bool operator<=(const LogValue& o) const { return !(o < *this); }
  bool operator>=(const LogValue& o) const { return !(*this < o); }

  std::string str() const;  // "a/b", "inf", "-inf"

 private:
  int sign_;      // -1, 0, +1; nonzero means infinite
  mpq_class q_;   // meaningful iff sign_ == 0
};

LogValue min(const LogValue& a, const LogValue& b);
LogValue max(const LogValue& a, const LogValue& b);

// v(x) as a LogValue: +inf at 0; v_p(num) - v_p(den) in p-adic mode; 0 for
// nonzero x in trivially valued mode.
LogValue valuation(const mpq_class& x, const FieldSpec& field);

// Integer p-adic valuation of a nonzero integer.
long padic_valuation(const mpz_class& n, unsigned long p);

// v(n!) by the Legendre digit formula (n - s_p(n)) / (p - 1); 0 in trivially
// valued mode.  Always finite.
mpq_class factorial_valuation(unsigned long n, const FieldSpec& field);

// The solvability offset: 1/(p-1) p-adically, 0 trivially valued.  The log of
// the generic first radius of d - a is this constant minus v(a), before the
// min(.,1) cap.
mpq_class solvability_constant(const FieldSpec& field);

// Height compression for p-adic Newton loops: the returned y satisfies
// v_p(y - x) >= known_to and has numerator/denominator of size O(p^known_to).
// Identity in trivially valued mode (no congruence structure to use).
mpq_class reduce_mod(const mpq_class& x, const FieldSpec& field, long known_to);

// Exact rational parsing/formatting used across the text formats:
// "-3/4", "17", "0".  Throws input_error(PARSE_ERROR) on malformed input.
mpq_class parse_rational(const std::string& text);
std::string rational_str(const mpq_class& q);

}  // namespace padiff
