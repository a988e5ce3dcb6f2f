#include "padiff/gauss_series.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace padiff {

namespace {

mpq_class qpow(const mpq_class& base, long e) {
  if (e == 0) return mpq_class(1);
  mpq_class b = base;
  unsigned long n = static_cast<unsigned long>(e < 0 ? -e : e);
  if (e < 0) {
    if (b == 0) throw guard_error(code::pole_at_center, "1/0 in evaluation");
    b = mpq_class(1) / b;
  }
  mpq_class acc(1);
  while (n) {
    if (n & 1) acc *= b;
    b *= b;
    n >>= 1;
  }
  acc.canonicalize();
  return acc;
}

mpz_class binom(unsigned long n, unsigned long k) {
  mpz_class out;
  mpz_bin_uiui(out.get_mpz_t(), n, k);
  return out;
}

std::optional<long> opt_min(std::optional<long> a, std::optional<long> b) {
  if (!a) return b;
  if (!b) return a;
  return std::min(*a, *b);
}

std::optional<long> opt_max(std::optional<long> a, std::optional<long> b) {
  if (!a) return b;
  if (!b) return a;
  return std::max(*a, *b);
}

}  // namespace

GaussSeries::GaussSeries(const mpq_class& constant) {
  if (constant != 0) coeff_[0] = constant;
}

GaussSeries GaussSeries::monomial(const mpq_class& a, long e, mpq_class center) {
  GaussSeries f;
  f.center_ = std::move(center);
  if (a != 0) f.coeff_[e] = a;
  return f;
}

GaussSeries GaussSeries::zero_with_window(std::optional<long> lo, std::optional<long> hi,
                                          mpq_class center) {
  GaussSeries f;
  f.center_ = std::move(center);
  f.prec_lo_ = lo;
  f.prec_hi_ = hi;
  return f;
}

mpq_class GaussSeries::coeff(long e) const {
  auto it = coeff_.find(e);
  return it == coeff_.end() ? mpq_class(0) : it->second;
}

bool GaussSeries::known_at(long e) const {
  if (prec_hi_ && e >= *prec_hi_) return false;
  if (prec_lo_ && e < *prec_lo_) return false;
  return true;
}

long GaussSeries::min_exponent() const {
  if (coeff_.empty()) throw std::logic_error("min_exponent of zero series");
  return coeff_.begin()->first;
}

long GaussSeries::max_exponent() const {
  if (coeff_.empty()) throw std::logic_error("max_exponent of zero series");
  return coeff_.rbegin()->first;
}

void GaussSeries::trim() {
  for (auto it = coeff_.begin(); it != coeff_.end();) {
    if (it->second == 0 || !known_at(it->first))
      it = coeff_.erase(it);
    else
      ++it;
  }
}

void GaussSeries::require_same_frame(const GaussSeries& o) const {
  if (center_ != o.center_)
    throw std::logic_error("GaussSeries: mixed centers in arithmetic");
}

GaussSeries& GaussSeries::operator+=(const GaussSeries& o) {
  require_same_frame(o);
  prec_lo_ = opt_max(prec_lo_, o.prec_lo_);
  prec_hi_ = opt_min(prec_hi_, o.prec_hi_);
  for (const auto& [e, a] : o.coeff_) {
    auto [it, fresh] = coeff_.emplace(e, a);
    if (!fresh) it->second += a;
  }
  trim();
  return *this;
}

GaussSeries& GaussSeries::operator-=(const GaussSeries& o) { return *this += -o; }

GaussSeries GaussSeries::operator+(const GaussSeries& o) const {
  GaussSeries r(*this);
  r += o;
  return r;
}

GaussSeries GaussSeries::operator-(const GaussSeries& o) const {
  GaussSeries r(*this);
  r += -o;
  return r;
}

GaussSeries GaussSeries::operator-() const { return scaled(mpq_class(-1)); }

GaussSeries GaussSeries::scaled(const mpq_class& c) const {
  GaussSeries r;
  r.center_ = center_;
  if (c == 0) return r;  // scalar zero annihilates unknown tails as well
  r.prec_lo_ = prec_lo_;
  r.prec_hi_ = prec_hi_;
  for (const auto& [e, a] : coeff_) r.coeff_[e] = a * c;
  r.trim();
  return r;
}

GaussSeries GaussSeries::mul_monomial(const mpq_class& a, long e) const {
  GaussSeries r;
  r.center_ = center_;
  if (a == 0) return r;
  if (prec_lo_) r.prec_lo_ = *prec_lo_ + e;
  if (prec_hi_) r.prec_hi_ = *prec_hi_ + e;
  for (const auto& [d, c] : coeff_) r.coeff_[d + e] = c * a;
  r.trim();
  return r;
}

GaussSeries GaussSeries::operator*(const GaussSeries& o) const {
  require_same_frame(o);
  // Window of the product: every pairing of an unknown tail with any piece of
  // the other factor contaminates the reachable exponents.
  const bool fsup = !coeff_.empty(), gsup = !o.coeff_.empty();
  std::optional<long> hi, lo;
  bool dead = false;  // contamination covers every exponent
  auto add_hi = [&hi](long v) { hi = opt_min(hi, v); };
  auto add_lo = [&lo](long v) { lo = opt_max(lo, v); };
  if (prec_hi_) {
    if (gsup) add_hi(*prec_hi_ + o.min_exponent());
    if (o.prec_hi_) add_hi(*prec_hi_ + *o.prec_hi_);
    if (o.prec_lo_) dead = true;  // hi tail times lo tail reaches everything
  }
  if (o.prec_hi_) {
    if (fsup) add_hi(*o.prec_hi_ + min_exponent());
    if (prec_lo_) dead = true;
  }
  if (prec_lo_) {
    if (gsup) add_lo(*prec_lo_ + o.max_exponent());
    if (o.prec_lo_) add_lo(*prec_lo_ + *o.prec_lo_ - 1);
  }
  if (o.prec_lo_ && fsup) add_lo(*o.prec_lo_ + max_exponent());
  if (dead) return zero_with_window(0, 0, center_);

  GaussSeries r;
  r.center_ = center_;
  r.prec_lo_ = lo;
  r.prec_hi_ = hi;
  for (const auto& [e1, a1] : coeff_)
    for (const auto& [e2, a2] : o.coeff_) {
      long e = e1 + e2;
      if (!r.known_at(e)) continue;
      auto [it, fresh] = r.coeff_.emplace(e, a1 * a2);
      if (!fresh) it->second += a1 * a2;
    }
  r.trim();
  return r;
}

GaussSeries GaussSeries::derivative() const {
  GaussSeries r;
  r.center_ = center_;
  if (prec_lo_) r.prec_lo_ = *prec_lo_ - 1;
  if (prec_hi_) r.prec_hi_ = *prec_hi_ - 1;
  for (const auto& [e, a] : coeff_) {
    if (e == 0) continue;
    r.coeff_[e - 1] = a * e;
  }
  r.trim();
  return r;
}

GaussSeries GaussSeries::recentered(const mpq_class& new_center) const {
  if (!exact())
    throw guard_error(code::precision_exhausted,
                      "recentering needs the full expansion; window is finite");
  if (!coeff_.empty() && min_exponent() < 0)
    throw guard_error(code::precision_exhausted,
                      "recentering a Laurent tail does not terminate");
  if (new_center == center_) return *this;
  GaussSeries r;
  r.center_ = new_center;
  mpq_class delta(new_center - center_);
  for (const auto& [e, a] : coeff_) {
    // a (T-c)^e = a ((T-c') + delta)^e
    for (long j = 0; j <= e; ++j) {
      mpq_class term(a * mpq_class(binom(static_cast<unsigned long>(e),
                                         static_cast<unsigned long>(j))) *
                     qpow(delta, e - j));
      if (term == 0) continue;
      auto [it, fresh] = r.coeff_.emplace(j, term);
      if (!fresh) it->second += term;
    }
  }
  r.trim();
  return r;
}

GaussSeries GaussSeries::truncated(long order) const {
  GaussSeries r(*this);
  r.prec_hi_ = opt_min(r.prec_hi_, order);
  r.trim();
  return r;
}

GaussSeries GaussSeries::truncated_below(long order) const {
  GaussSeries r(*this);
  r.prec_lo_ = opt_max(r.prec_lo_, order);
  r.trim();
  return r;
}

mpq_class GaussSeries::evaluate(const mpq_class& point) const {
  mpq_class x(point - center_), acc(0);
  for (const auto& [e, a] : coeff_) acc += a * qpow(x, e);
  acc.canonicalize();
  return acc;
}

bool GaussSeries::operator==(const GaussSeries& o) const {
  return center_ == o.center_ && coeff_ == o.coeff_ && prec_lo_ == o.prec_lo_ &&
         prec_hi_ == o.prec_hi_;
}

std::string GaussSeries::str() const {
  std::ostringstream os;
  std::string var = "T";
  if (center_ != 0) var = "(T-" + rational_str(center_) + ")";
  bool first = true;
  for (const auto& [e, a] : coeff_) {
    mpq_class mag(abs(a));
    if (first) {
      if (a < 0) os << "-";
      first = false;
    } else {
      os << (a < 0 ? " - " : " + ");
    }
    if (e == 0) {
      os << rational_str(mag);
    } else {
      if (mag != 1) os << rational_str(mag) << "*";
      os << var;
      if (e != 1) os << "^" << e;
    }
  }
  if (first) os << "0";
  if (prec_hi_) os << " + O(" << var << "^" << *prec_hi_ << ")";
  if (prec_lo_) os << " + O(" << var << "^<" << *prec_lo_ << ")";
  return os.str();
}

LogValue gauss_norm(const GaussSeries& f, const mpq_class& u, const FieldSpec& field) {
  if (f.is_zero()) {
    if (f.exact()) return LogValue::pos_infinity();
    throw guard_error(code::all_coefficients_unknown,
                      "gauss_norm: every coefficient lies outside the window");
  }
  LogValue best = LogValue::pos_infinity();
  for (const auto& [e, a] : f.coefficients()) {
    LogValue v = valuation(a, field) + LogValue(mpq_class(-u * e));
    if (v < best) best = v;
  }
  return best;
}

std::pair<long, mpq_class> dominant_monomial(const GaussSeries& f, const mpq_class& u,
                                             const FieldSpec& field) {
  if (f.is_zero())
    throw guard_error(f.exact() ? code::validation_error : code::all_coefficients_unknown,
                      "dominant_monomial of a zero series");
  LogValue best = gauss_norm(f, u, field);
  for (const auto& [e, a] : f.coefficients())  // map order: smallest e first
    if (valuation(a, field) + LogValue(mpq_class(-u * e)) == best) return {e, a};
  throw std::logic_error("dominant_monomial: unreachable");
}

PLFunction norm_profile(const GaussSeries& f, const mpq_class& u_lo,
                        const mpq_class& u_hi, const FieldSpec& field) {
  if (u_lo > u_hi) throw std::logic_error("norm_profile: empty interval");
  if (f.is_zero())
    throw guard_error(f.exact() ? code::validation_error : code::all_coefficients_unknown,
                      "norm_profile of a zero series");
  // Lower convex hull of the points (e, v(a_e)); the envelope
  // min_e (v_e - e*u) follows the hull vertices as u increases.
  std::vector<std::pair<mpq_class, mpq_class>> pts;  // (e, v) with e ascending
  for (const auto& [e, a] : f.coefficients())
    pts.emplace_back(mpq_class(e), valuation(a, field).value());
  std::vector<std::pair<mpq_class, mpq_class>> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2) {
      const auto &a = hull[hull.size() - 2], &b = hull[hull.size() - 1];
      // keep b only if it bends upward-right: cross((b-a),(p-a)) < 0 keeps
      mpq_class cross((b.first - a.first) * (p.second - a.second) -
                      (b.second - a.second) * (p.first - a.first));
      if (cross <= 0)
        hull.pop_back();
      else
        break;
    }
    hull.push_back(p);
  }
  auto line_val = [](const std::pair<mpq_class, mpq_class>& v, const mpq_class& u) {
    mpq_class r(v.second - v.first * u);
    r.canonicalize();
    return r;
  };
  std::vector<PLFunction::Knot> knots;
  knots.emplace_back(u_lo, mpq_class(0));
  // crossing of hull vertex k and k+1 as functions of u is at the edge slope
  std::vector<mpq_class> cuts;
  for (std::size_t k = 1; k < hull.size(); ++k) {
    mpq_class s((hull[k].second - hull[k - 1].second) / (hull[k].first - hull[k - 1].first));
    s.canonicalize();
    if (s > u_lo && s < u_hi) cuts.push_back(s);
  }
  for (const auto& c : cuts) knots.emplace_back(c, mpq_class(0));
  if (u_hi > u_lo) knots.emplace_back(u_hi, mpq_class(0));
  for (auto& kn : knots) {
    mpq_class best = line_val(hull[0], kn.first);
    for (std::size_t k = 1; k < hull.size(); ++k)
      best = std::min(best, line_val(hull[k], kn.first));
    kn.second = best;
  }
  return PLFunction::from_knots(std::move(knots));
}

GaussSeries invert_at(const GaussSeries& f, const mpq_class& u, const FieldSpec& field,
                      int rel_order) {
  if (f.center() != 0)
    throw std::logic_error("invert_at: nonzero center");
  if (f.is_zero())
    throw guard_error(code::non_invertible_leading_coefficient, "inverse of zero");
  auto [m, a] = dominant_monomial(f, u, field);
  LogValue vmin = gauss_norm(f, u, field);
  // Strictness and the contraction gap of the remainder.
  GaussSeries h = f.mul_monomial(mpq_class(1) / a, -m) - GaussSeries(mpq_class(1));
  if (h.is_zero() && h.exact()) return GaussSeries::monomial(mpq_class(1) / a, -m);
  for (const auto& [e, c] : h.coefficients()) {
    LogValue v = valuation(c, field) + LogValue(mpq_class(-u * e));
    if (!(v > LogValue(0)))
      throw guard_error(code::non_invertible_leading_coefficient,
                        "no strictly dominant monomial at this point");
  }
  (void)vmin;
  long jmin = h.min_exponent(), jmax = h.max_exponent();
  if (jmin < 0 && jmax > 0)
    throw guard_error(code::precision_exhausted,
                      "inverse tail is not an exponent window (mixed-sign remainder)");
  if (rel_order < 1) rel_order = 1;
  GaussSeries acc{mpq_class(1)};
  for (int k = 1; k < rel_order; ++k) acc = GaussSeries(mpq_class(1)) - h * acc;
  GaussSeries g = acc.mul_monomial(mpq_class(1) / a, -m);
  if (jmin > 0)
    g = g.truncated(-m + rel_order * jmin);
  else
    g = g.truncated_below(-m + rel_order * jmax + 1);
  return g;
}

}  // namespace padiff
