#include "padiff/valued_scalar.hpp"

#include <cctype>
#include <stdexcept>

namespace padiff {

FieldSpec FieldSpec::padic(unsigned long p, unsigned precision) {
  FieldSpec f;
  f.mode = Mode::padic;
  f.p = p;
  f.precision = precision;
  f.validate();
  return f;
}

FieldSpec FieldSpec::trivial() {
  FieldSpec f;
  f.mode = Mode::trivial;
  return f;
}

void FieldSpec::validate() const {
  if (mode == Mode::trivial) return;
  if (p < 2)
    throw input_error(code::validation_error, "p-adic field needs a prime p >= 2");
  mpz_class zp(static_cast<unsigned long>(p));
  if (mpz_probab_prime_p(zp.get_mpz_t(), 32) == 0)
    throw input_error(code::validation_error,
                      "p = " + zp.get_str() + " is not prime");
  if (precision == 0)
    throw input_error(code::validation_error, "precision must be >= 1");
}

LogValue LogValue::pos_infinity() {
  LogValue v;
  v.sign_ = +1;
  return v;
}

LogValue LogValue::neg_infinity() {
  LogValue v;
  v.sign_ = -1;
  return v;
}

const mpq_class& LogValue::value() const {
  if (!finite()) throw std::logic_error("LogValue::value() on infinity");
  return q_;
}

LogValue LogValue::operator+(const LogValue& o) const {
  if (finite() && o.finite()) return LogValue(mpq_class(q_ + o.q_));
  if (!finite() && !o.finite() && sign_ != o.sign_)
    throw std::logic_error("LogValue: inf + (-inf)");
  return finite() ? o : *this;
}

LogValue LogValue::operator-() const {
  if (finite()) return LogValue(mpq_class(-q_));
  return sign_ > 0 ? neg_infinity() : pos_infinity();
}

LogValue LogValue::scaled(const mpq_class& c) const {
  if (finite()) return LogValue(mpq_class(q_ * c));
  int s = sgn(c);
  if (s == 0) throw std::logic_error("LogValue: 0 * inf");
  return (s > 0) == (sign_ > 0) ? pos_infinity() : neg_infinity();
}

bool LogValue::operator==(const LogValue& o) const {
  if (sign_ != o.sign_) return false;
  return sign_ != 0 || q_ == o.q_;
}

bool LogValue::operator<(const LogValue& o) const {
  if (sign_ != o.sign_) return sign_ < o.sign_;
  return sign_ == 0 && q_ < o.q_;
}

std::string LogValue::str() const {
  if (is_pos_infinity()) return "inf";
  if (is_neg_infinity()) return "-inf";
  return rational_str(q_);
}

LogValue min(const LogValue& a, const LogValue& b) { return a < b ? a : b; }
LogValue max(const LogValue& a, const LogValue& b) { return a < b ? b : a; }

long padic_valuation(const mpz_class& n, unsigned long p) {
  if (n == 0) throw std::logic_error("padic_valuation of 0");
  mpz_class rest, zp(p);
  return static_cast<long>(mpz_remove(rest.get_mpz_t(), n.get_mpz_t(), zp.get_mpz_t()));
}

LogValue valuation(const mpq_class& x, const FieldSpec& field) {
  if (x == 0) return LogValue::pos_infinity();
  if (!field.is_padic()) return LogValue(0);
  long v = padic_valuation(x.get_num(), field.p) - padic_valuation(x.get_den(), field.p);
  return LogValue(v);
}

mpq_class factorial_valuation(unsigned long n, const FieldSpec& field) {
  if (!field.is_padic()) return mpq_class(0);
  // Legendre: v_p(n!) = (n - s_p(n)) / (p - 1) with s_p the base-p digit sum.
  mpz_class digits(0);
  mpz_class rest(static_cast<unsigned long>(n));
  while (rest > 0) {
    digits += rest % field.p;
    rest /= field.p;
  }
  mpq_class out(mpz_class(static_cast<unsigned long>(n)) - digits,
                mpz_class(field.p) - 1);
  out.canonicalize();
  return out;
}

mpq_class solvability_constant(const FieldSpec& field) {
  if (!field.is_padic()) return mpq_class(0);
  mpq_class c(1, static_cast<long>(field.p) - 1);
  c.canonicalize();
  return c;
}

mpq_class reduce_mod(const mpq_class& x, const FieldSpec& field, long known_to) {
  if (!field.is_padic() || x == 0) return x;
  long v = padic_valuation(x.get_num(), field.p) - padic_valuation(x.get_den(), field.p);
  if (v >= known_to) return mpq_class(0);
  // x = p^v * a/b with p coprime to a and b; replace a/b by its residue
  // mod p^(known_to - v), balanced to keep magnitudes near sqrt of the modulus.
  mpz_class zp(field.p), a = x.get_num(), b = x.get_den(), junk;
  mpz_remove(junk.get_mpz_t(), a.get_mpz_t(), zp.get_mpz_t());
  a = junk;
  mpz_remove(junk.get_mpz_t(), b.get_mpz_t(), zp.get_mpz_t());
  b = junk;
  mpz_class modulus;
  mpz_pow_ui(modulus.get_mpz_t(), zp.get_mpz_t(),
             static_cast<unsigned long>(known_to - v));
  mpz_class binv;
  if (mpz_invert(binv.get_mpz_t(), b.get_mpz_t(), modulus.get_mpz_t()) == 0)
    throw std::logic_error("reduce_mod: denominator not a p-adic unit");
  mpz_class c = (a * binv) % modulus;
  if (c < 0) c += modulus;
  if (2 * c > modulus) c -= modulus;
  mpq_class out(c);
  if (v >= 0) {
    mpz_class pv;
    mpz_pow_ui(pv.get_mpz_t(), zp.get_mpz_t(), static_cast<unsigned long>(v));
    out *= mpq_class(pv);
  } else {
    mpz_class pv;
    mpz_pow_ui(pv.get_mpz_t(), zp.get_mpz_t(), static_cast<unsigned long>(-v));
    out /= mpq_class(pv);
  }
  out.canonicalize();
  // Keep the input when it is already the smaller representative.
  mpz_class in_num = abs(x.get_num()), out_num = abs(out.get_num());
  mpz_class in_height = in_num > x.get_den() ? in_num : mpz_class(x.get_den());
  mpz_class out_height = out_num > out.get_den() ? out_num : mpz_class(out.get_den());
  return out_height < in_height ? out : x;
}

mpq_class parse_rational(const std::string& text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  if (s.empty()) throw input_error(code::parse_error, "empty rational literal");
  bool ok = true;
  std::size_t slash = s.find('/');
  auto is_int = [](const std::string& t) {
    if (t.empty()) return false;
    std::size_t i = (t[0] == '-' || t[0] == '+') ? 1 : 0;
    if (i == t.size()) return false;
    for (; i < t.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(t[i]))) return false;
    return true;
  };
  if (slash == std::string::npos) {
    ok = is_int(s);
  } else {
    ok = is_int(s.substr(0, slash)) && is_int(s.substr(slash + 1)) &&
         s.find('/', slash + 1) == std::string::npos;
  }
  if (!ok)
    throw input_error(code::parse_error, "malformed rational literal '" + text + "'");
  mpq_class q(s);
  if (q.get_den() == 0)
    throw input_error(code::parse_error, "zero denominator in '" + text + "'");
  q.canonicalize();
  return q;
}

std::string rational_str(const mpq_class& q) {
  return q.get_str();
}

}  // namespace padiff
