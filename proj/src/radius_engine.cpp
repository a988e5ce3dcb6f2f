#include "padiff/radius_engine.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

namespace padiff {

namespace {

int tail_window_lo(int n_max) { return std::max(4, n_max / 2); }

mpz_class factorial_big(int n) {
  mpz_class f;
  mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(n));
  return f;
}

}  // namespace

SlopeDetection detect_tail_slope(const std::vector<LogValue>& w, int window_lo) {
  SlopeDetection out;
  int n_max = static_cast<int>(w.size()) - 1;
  if (n_max < window_lo + 2) return out;  // too little data
  bool all_inf = true, any_inf = false;
  for (int n = window_lo; n <= n_max; ++n) {
    if (w[static_cast<std::size_t>(n)].is_pos_infinity()) any_inf = true;
    else all_inf = false;
  }
  if (all_inf) {
    out.status = SlopeDetection::Status::all_zero;
    return out;
  }
  if (any_inf) return out;  // sporadic vanishing: no verdict
  int q_cap = std::min(24, (n_max - window_lo) / 2);
  for (int q = 1; q <= q_cap; ++q) {
    mpq_class d = w[static_cast<std::size_t>(n_max)].value() -
                  w[static_cast<std::size_t>(n_max - q)].value();
    bool ok = true;
    for (int n = window_lo; n + q <= n_max; ++n) {
      if (w[static_cast<std::size_t>(n + q)].value() -
              w[static_cast<std::size_t>(n)].value() !=
          d) {
        ok = false;
        break;
      }
    }
    if (ok) {
      out.status = SlopeDetection::Status::linear;
      out.slope = d / q;
      out.slope.canonicalize();
      out.period = q;
      return out;
    }
  }
  return out;
}

RadiusEngine::RadiusEngine(CompanionSystem sys, FieldSpec field)
    : sys_(std::move(sys)), field_(std::move(field)) {
  if (sys_.rank < 1 || sys_.G.n != sys_.rank)
    throw guard_error(code::validation_error, "system rank mismatch");
  for (const auto& e : sys_.G.a)
    if (!e.exact()) exact_ = false;
  a_.push_back(SeriesMatrix::identity(sys_.rank));
  hulls_.emplace_back(static_cast<std::size_t>(sys_.rank));
}

void RadiusEngine::extend(int n) {
  while (computed() < n) {
    a_.push_back(a_.back().derivative() + a_.back() * sys_.G);
    hulls_.emplace_back(static_cast<std::size_t>(sys_.rank));
  }
}

const SeriesMatrix& RadiusEngine::coefficient_matrix(int n) const {
  if (n < 0 || n > computed())
    throw std::logic_error("coefficient_matrix: index out of range");
  return a_[static_cast<std::size_t>(n)];
}

const ValuationHull& RadiusEngine::column_hull(int n, int j) {
  auto& slot = hulls_[static_cast<std::size_t>(n)][static_cast<std::size_t>(j)];
  if (slot) return *slot;
  // Merge the coefficient supports of all entries in the column, keeping the
  // minimal valuation per exponent, then take the lower convex hull: the
  // functional v - e*u is minimized on it for every u.
  std::map<long, mpq_class> pts;
  const SeriesMatrix& m = a_[static_cast<std::size_t>(n)];
  for (int i = 0; i < sys_.rank; ++i) {
    for (const auto& [e, c] : m.at(i, j).coefficients()) {
      mpq_class v = valuation(c, field_).value();
      auto it = pts.find(e);
      if (it == pts.end() || v < it->second) pts[e] = v;
    }
  }
  ValuationHull hull;
  for (const auto& [e, v] : pts) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull[hull.size() - 1];
      mpq_class cross = mpq_class(b.first - a.first) * (v - a.second) -
                        (b.second - a.second) * mpq_class(e - a.first);
      if (cross <= 0) hull.pop_back();
      else break;
    }
    hull.emplace_back(e, v);
  }
  slot = std::move(hull);
  return *slot;
}

LogValue RadiusEngine::column_valuation(int n, int j, const mpq_class& u) {
  extend(n);
  if (exact_) {
    const ValuationHull& hull = column_hull(n, j);
    if (hull.empty()) return LogValue::pos_infinity();
    LogValue best = LogValue::pos_infinity();
    for (const auto& [e, v] : hull) best = min(best, LogValue(v - e * u));
    return best;
  }
  LogValue best = LogValue::pos_infinity();
  for (int i = 0; i < sys_.rank; ++i)
    best = min(best, gauss_norm(a_[static_cast<std::size_t>(n)].at(i, j), u, field_));
  return best;
}

LogValue RadiusEngine::matrix_valuation(int n, const mpq_class& u) {
  LogValue best = LogValue::pos_infinity();
  for (int j = 0; j < sys_.rank; ++j) best = min(best, column_valuation(n, j, u));
  return best;
}

namespace {

RadiusOutcome outcome_from_detection(const SlopeDetection& det, const mpq_class& u,
                                     const TriangulationDatum& datum,
                                     const FieldSpec& field) {
  RadiusOutcome out;
  if (det.status == SlopeDetection::Status::all_zero) {
    out.log_taylor = LogValue::pos_infinity();
    out.log_rel = LogValue(mpq_class(0));
    return out;
  }
  out.period = det.period;
  mpq_class lt = det.slope - solvability_constant(field);
  lt.canonicalize();
  out.log_taylor = LogValue(lt);
  out.log_rel = min(LogValue(mpq_class(0)), out.log_taylor - LogValue(datum.outer_log(u)));
  return out;
}

void fill_bracket(RadiusOutcome& out, const std::vector<LogValue>& w, int window_lo,
                  const FieldSpec& field) {
  out.conclusive = false;
  bool first = true;
  for (int n = window_lo; n < static_cast<int>(w.size()); ++n) {
    if (!w[static_cast<std::size_t>(n)].finite()) continue;
    mpq_class s = (w[static_cast<std::size_t>(n)].value() -
                   factorial_valuation(static_cast<unsigned long>(n), field)) /
                  n;
    s.canonicalize();
    if (first || s < out.bracket_lo) out.bracket_lo = s;
    if (first || s > out.bracket_hi) out.bracket_hi = s;
    first = false;
  }
}

std::vector<int> term_schedule(int terms, int cap) {
  std::vector<int> sched{terms};
  while (sched.back() < cap) sched.push_back(std::min(2 * sched.back(), cap));
  return sched;
}

}  // namespace

RadiusOutcome first_radius(RadiusEngine& eng, const mpq_class& u,
                           const TriangulationDatum& datum, int terms, int terms_cap) {
  std::vector<LogValue> w;
  for (int n_max : term_schedule(terms, terms_cap)) {
    eng.extend(n_max);
    w.clear();
    for (int n = 0; n <= n_max; ++n) w.push_back(eng.matrix_valuation(n, u));
    SlopeDetection det = detect_tail_slope(w, tail_window_lo(n_max));
    if (det.status != SlopeDetection::Status::inconclusive)
      return outcome_from_detection(det, u, datum, eng.field());
  }
  RadiusOutcome out;
  fill_bracket(out, w, tail_window_lo(eng.computed()), eng.field());
  return out;
}

namespace {

// Elimination works on dense coefficient vectors rather than GaussSeries:
// entry supports grow linearly with n and the quotient subtractions convolve
// hundreds of terms, which the sparse map representation cannot afford.
struct DenseEntry {
  long base = 0;  // exponent of c.front(); no zero fringe after trim()
  std::vector<mpq_class> c;

  bool is_zero() const { return c.empty(); }
  void trim() {
    std::size_t lo = 0, hi = c.size();
    while (lo < hi && c[lo] == 0) ++lo;
    while (hi > lo && c[hi - 1] == 0) --hi;
    if (lo >= hi) {
      c.clear();
      base = 0;
      return;
    }
    if (lo == 0 && hi == c.size()) return;
    std::vector<mpq_class> kept(c.begin() + static_cast<long>(lo),
                                c.begin() + static_cast<long>(hi));
    base += static_cast<long>(lo);
    c = std::move(kept);
  }
};

// Over a trivially valued field only the support of an entry matters, so the
// elimination can run with coefficients reduced modulo a fixed 61-bit prime:
// products stay word-sized instead of accumulating the gcd-heavy rational
// growth of repeated long divisions.  A numerator vanishing mod the prime can
// only hide a coefficient, which lifts a single valuation point, breaks the
// detector's exact affinity and understates; faking a higher affine window
// would take dozens of simultaneous collisions.
const mpz_class& dense_modulus() {
  static const mpz_class m = (mpz_class(1) << 61) - 1;
  return m;
}

// Reduces an integer-valued (denominator 1) coefficient into [0, m) in place.
void reduce_int(mpq_class& c, const mpz_class& m) {
  mpz_mod(mpq_numref(c.get_mpq_t()), mpq_numref(c.get_mpq_t()), m.get_mpz_t());
}

// a mod m as a canonical integer in [0, m), or nullopt if the denominator is
// not invertible.
std::optional<mpq_class> reduce_coeff(const mpq_class& a, const mpz_class& m) {
  mpz_class inv;
  if (mpz_invert(inv.get_mpz_t(), a.get_den().get_mpz_t(), m.get_mpz_t()) == 0)
    return std::nullopt;
  mpz_class r;
  mpz_mod(r.get_mpz_t(), mpz_class(a.get_num() * inv).get_mpz_t(), m.get_mpz_t());
  return mpq_class(r);
}

// Coefficient height control for the elimination.  Repeated long divisions
// otherwise compound: each quotient drags in the pivot's lead coefficient, so
// denominators grow like lead^k and every product pays gcd on them.  Over a
// p-adic field, entries are renormalized to a fixed number of digits instead:
// every valuation below the ceiling stays exact and anything deeper reads as
// zero, so a truncation artifact can only make a read look dirtier than the
// truth, and the verdict belts below turn the two spots where a too-clean
// read could slip through (a manufactured zero tail, a window riding at the
// ceiling) back into no-verdicts.  Either way refinements only understate.
struct Clamp {
  const mpz_class* mod = nullptr;    // trivially valued: fixed-prime modulus
  const FieldSpec* padic = nullptr;  // p-adic: digit ceiling for reduce_mod
  long known_to = 0;
  explicit operator bool() const { return mod != nullptr || padic != nullptr; }
  void operator()(mpq_class& c) const {
    if (mod) reduce_int(c, *mod);
    else if (padic) c = reduce_mod(c, *padic, known_to);
  }
};

std::optional<DenseEntry> dense_from(const GaussSeries& f, const Clamp& clamp) {
  DenseEntry d;
  if (f.is_zero()) return d;
  d.base = f.min_exponent();
  d.c.assign(static_cast<std::size_t>(f.max_exponent() - d.base + 1), mpq_class(0));
  for (const auto& [e, a] : f.coefficients()) d.c[static_cast<std::size_t>(e - d.base)] = a;
  if (clamp.mod) {
    for (auto& c : d.c) {
      std::optional<mpq_class> r = reduce_coeff(c, *clamp.mod);
      if (!r) return std::nullopt;
      c = std::move(*r);
    }
    d.trim();
  } else if (clamp.padic) {
    for (auto& c : d.c) clamp(c);
    d.trim();
  }
  return d;
}

LogValue dense_valuation(const DenseEntry& d, const mpq_class& u, const FieldSpec& field) {
  if (d.is_zero()) return LogValue::pos_infinity();
  if (!field.is_padic()) {
    // Trivial coefficient valuations: only a support end can dominate.
    mpq_class lo = mpq_class(-d.base) * u;
    mpq_class hi = mpq_class(-(d.base + static_cast<long>(d.c.size()) - 1)) * u;
    return LogValue(lo < hi ? lo : hi);
  }
  std::optional<mpq_class> best;
  for (std::size_t k = 0; k < d.c.size(); ++k) {
    if (d.c[k] == 0) continue;
    mpq_class v =
        valuation(d.c[k], field).value() - mpq_class(d.base + static_cast<long>(k)) * u;
    if (!best || v < *best) best = v;
  }
  return LogValue(*best);
}

struct DenseColumn {
  std::vector<std::vector<DenseEntry>> at;  // [n][entry]
};

std::optional<DenseColumn> make_dense(RadiusEngine& eng, int j, int n_max,
                                      const Clamp& clamp) {
  DenseColumn col;
  col.at.resize(static_cast<std::size_t>(n_max) + 1);
  for (int n = 0; n <= n_max; ++n) {
    const SeriesMatrix& m = eng.coefficient_matrix(n);
    for (int i = 0; i < eng.rank(); ++i) {
      if (!m.at(i, j).exact()) return std::nullopt;
      std::optional<DenseEntry> d = dense_from(m.at(i, j), clamp);
      if (!d) return std::nullopt;
      col.at[static_cast<std::size_t>(n)].push_back(std::move(*d));
    }
  }
  return col;
}

LogValue dense_column_valuation(const std::vector<DenseEntry>& entries, const mpq_class& u,
                                const FieldSpec& field) {
  LogValue best = LogValue::pos_infinity();
  for (const auto& d : entries) {
    LogValue v = dense_valuation(d, u, field);
    if (v < best) best = v;
  }
  return best;
}

// Truncated quotient num/den: dense long division producing `terms`
// consecutive quotient coefficients.  The division error stays visible in
// the caller's exact residual.
DenseEntry dense_quotient(const DenseEntry& num, const DenseEntry& den, int terms,
                          const Clamp& clamp) {
  DenseEntry q;
  q.base = num.base - den.base;
  mpz_class d0inv;
  if (clamp.mod && mpz_invert(d0inv.get_mpz_t(), mpq_numref(den.c.front().get_mpq_t()),
                              clamp.mod->get_mpz_t()) == 0)
    return q;
  q.c.assign(static_cast<std::size_t>(terms), mpq_class(0));
  std::vector<mpq_class> rem(num.c);
  rem.resize(num.c.size() + static_cast<std::size_t>(terms) + den.c.size(), mpq_class(0));
  const mpq_class& d0 = den.c.front();
  for (int s = 0; s < terms; ++s) {
    mpq_class& r = rem[static_cast<std::size_t>(s)];
    if (r == 0) continue;
    mpq_class qc;
    if (clamp.mod) {
      qc = mpq_class(mpz_class(mpz_class(r.get_num()) * d0inv));
      reduce_int(qc, *clamp.mod);
    } else {
      qc = r / d0;
      if (clamp.padic) clamp(qc);
    }
    for (std::size_t t = 1; t < den.c.size(); ++t) {
      mpq_class& rt = rem[static_cast<std::size_t>(s) + t];
      rt -= qc * den.c[t];
      if (clamp) clamp(rt);
    }
    r = 0;
    q.c[static_cast<std::size_t>(s)] = std::move(qc);
  }
  q.trim();
  return q;
}

// b -= q * p, exact dense convolution (coefficients height-reduced when a
// clamp is set).
void subtract_scaled(DenseEntry& b, const DenseEntry& q, const DenseEntry& p,
                     const Clamp& clamp) {
  if (q.is_zero() || p.is_zero()) return;
  long lo = q.base + p.base;
  long hi = lo + static_cast<long>(q.c.size() + p.c.size()) - 2;
  long out_lo = lo, out_hi = hi;
  if (!b.is_zero()) {
    out_lo = std::min(out_lo, b.base);
    out_hi = std::max(out_hi, b.base + static_cast<long>(b.c.size()) - 1);
  }
  std::vector<mpq_class> out(static_cast<std::size_t>(out_hi - out_lo + 1), mpq_class(0));
  for (std::size_t k = 0; k < b.c.size(); ++k)
    out[static_cast<std::size_t>(b.base - out_lo) + k] = std::move(b.c[k]);
  for (std::size_t iq = 0; iq < q.c.size(); ++iq) {
    if (q.c[iq] == 0) continue;
    std::size_t off = static_cast<std::size_t>(lo - out_lo) + iq;
    for (std::size_t ip = 0; ip < p.c.size(); ++ip) {
      if (p.c[ip] == 0) continue;
      out[off + ip] -= q.c[iq] * p.c[ip];
    }
  }
  if (clamp)
    for (auto& c : out) clamp(c);
  b.base = out_lo;
  b.c = std::move(out);
  b.trim();
}

}  // namespace

MultiradiusPoint multiradius_at(RadiusEngine& eng, const mpq_class& u,
                                const TriangulationDatum& datum, int terms,
                                int terms_cap, bool refine_ties) {
  int r = eng.rank();
  std::vector<SlopeDetection> det(static_cast<std::size_t>(r));
  int n_max = terms;
  for (int sched : term_schedule(terms, terms_cap)) {
    n_max = sched;
    eng.extend(n_max);
    bool all_ok = true;
    for (int j = 0; j < r; ++j) {
      std::vector<LogValue> w;
      for (int n = 0; n <= n_max; ++n) w.push_back(eng.column_valuation(n, j, u));
      det[static_cast<std::size_t>(j)] = detect_tail_slope(w, tail_window_lo(n_max));
      if (det[static_cast<std::size_t>(j)].status == SlopeDetection::Status::inconclusive)
        all_ok = false;
    }
    if (all_ok) break;
  }

  MultiradiusPoint out;
  for (const auto& d : det)
    if (d.status == SlopeDetection::Status::inconclusive) out.conclusive = false;

  // Columns with identical detected slope can hide a larger radius behind a
  // shared leading solution component.  Gaussian elimination over the leading
  // blocks: walk the columns by detected slope and reduce each against the
  // already settled ones with exact truncated quotients of dominant entries.
  // A division at block n cancels the dominant component there up to the
  // T-adic gap to the nearest contaminating component at that block, so the
  // usable stride varies with the block; rounds rotate through lanes above
  // and below the detector window (keeping over-cancellation artifacts off
  // it) and the window top retreats when progress stalls, which lowers the
  // altitude the current component needs before the next slope shows on a
  // clean window.  Divisions only run against a pivot whose local structure
  // matches the column's dominant tail; mismatched lanes are skipped, since
  // a foreign quotient injects the pivot's components instead of cancelling.
  // Each accepted reading is an exact valuation window of an honest column
  // combination; failed rounds leave ties in place, so radii are understated,
  // never overstated.
  if (refine_ties && out.conclusive && r > 1) {
    std::vector<int> order;
    for (int j = 0; j < r; ++j)
      if (det[static_cast<std::size_t>(j)].status == SlopeDetection::Status::linear)
        order.push_back(j);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
      const auto& dx = det[static_cast<std::size_t>(x)];
      const auto& dy = det[static_cast<std::size_t>(y)];
      if (dx.slope != dy.slope) return dx.slope < dy.slope;
      return x < y;
    });
    bool tie = false;
    for (std::size_t k = 0; k + 1 < order.size(); ++k)
      if (det[static_cast<std::size_t>(order[k])].slope ==
          det[static_cast<std::size_t>(order[k + 1])].slope)
        tie = true;
    if (tie) {
      const FieldSpec& field = eng.field();
      int n_ref = std::min(n_max, 64);
      int win_end_full = n_ref - 3;  // division blocks sit outside the window
      int win_lo = tail_window_lo(win_end_full);
      int win_floor = std::min(win_lo + 16, win_end_full);
      int q_terms = n_ref + 16;
      Clamp clamp;
      if (field.is_padic()) {
        clamp.padic = &field;
        // Far above any valuation a verdict may read (window heights grow a
        // few digits per block at most), so truncation junk stays out of reach.
        clamp.known_to = 8L * n_ref + 4L * field.precision + 128;
      } else {
        clamp.mod = &dense_modulus();
      }

      std::vector<std::optional<DenseColumn>> cols(static_cast<std::size_t>(r));
      for (int j : order) cols[static_cast<std::size_t>(j)] = make_dense(eng, j, n_ref, clamp);
      std::vector<std::set<int>> spoiled(static_cast<std::size_t>(r));

      auto vals = [&](const DenseColumn& c) {
        std::vector<LogValue> w;
        w.reserve(c.at.size());
        for (const auto& entries : c.at) w.push_back(dense_column_valuation(entries, u, field));
        return w;
      };
      // Tail slope near n from the closest two sample points untouched by
      // divisions (their blocks carry over-cancellation artifacts).
      auto slope_near = [](const std::vector<LogValue>& w, int n,
                           const std::set<int>& bad) -> std::optional<mpq_class> {
        auto usable = [&](int m) {
          return m >= 1 && m < static_cast<int>(w.size()) && !bad.count(m) &&
                 w[static_cast<std::size_t>(m)].finite();
        };
        int n1 = n;
        while (n1 >= 1 && !usable(n1)) --n1;
        int n2 = n1 - 3;
        while (n2 >= 1 && !usable(n2)) --n2;
        if (n1 < 1 || n2 < 1) return std::nullopt;
        mpq_class s = (w[static_cast<std::size_t>(n1)].value() -
                       w[static_cast<std::size_t>(n2)].value()) /
                      (n1 - n2);
        s.canonicalize();
        return s;
      };

      std::vector<int> settled;
      std::vector<std::optional<mpq_class>> top_slope(static_cast<std::size_t>(r));
      for (int b : order) {
        auto& col_b = cols[static_cast<std::size_t>(b)];
        if (!col_b) continue;  // precision windows: leave as detected
        auto& d_b = det[static_cast<std::size_t>(b)];
        auto& bad = spoiled[static_cast<std::size_t>(b)];
        if (!settled.empty()) {
          DenseColumn& bc = *col_b;
          mpq_class alpha = d_b.slope;
          DenseColumn best_state = bc;
          int win_end = win_end_full;
          std::optional<mpq_class> best_off;
          int stalls = 0;
          for (int round = 0; round < 40; ++round) {
            std::vector<LogValue> w = vals(bc);
            std::vector<LogValue> w_det(w.begin(), w.begin() + win_end + 1);
            SlopeDetection d2 = detect_tail_slope(w_det, win_lo);
            if (d2.status == SlopeDetection::Status::linear && clamp.padic) {
              // Belt: a window reading near the digit ceiling could be
              // truncation junk posing as a tail; refuse the verdict.
              for (int n = win_lo; n <= win_end; ++n)
                if (w_det[static_cast<std::size_t>(n)].finite() &&
                    2 * w_det[static_cast<std::size_t>(n)].value() > clamp.known_to)
                  d2.status = SlopeDetection::Status::inconclusive;
            }
            if (d2.status == SlopeDetection::Status::all_zero) {
              // A zero tail manufactured by the subtractions would start
              // inside the window; a genuine one reaches visibly below it.
              // Under a p-adic clamp a zero entry might just sit beyond the
              // ceiling, so no zero-tail verdict is accepted at all there.
              bool genuine = clamp.padic == nullptr;
              for (int n = std::max(1, win_lo / 2); n < win_lo; ++n)
                if (w[static_cast<std::size_t>(n)].finite()) genuine = false;
              if (genuine) {
                d_b = d2;
                out.refined = true;
                best_state = bc;
              }
              break;
            }
            if (d2.status == SlopeDetection::Status::linear && d2.slope > alpha) {
              d_b = d2;
              alpha = d2.slope;
              out.refined = true;
              best_state = bc;
              best_off.reset();
              stalls = 0;
            }
            // Progress gate: the column's height above the current slope line
            // must keep beating its best, otherwise nothing further is being
            // cancelled at the blocks in reach.  Stalling first retreats the
            // window top (less altitude needed for the next reading), then
            // gives up; the window never grows back, so division artifacts
            // stay above it.
            std::optional<mpq_class> off;
            for (int n = win_lo; n <= win_end; ++n) {
              if (!w[static_cast<std::size_t>(n)].finite()) continue;
              mpq_class h = w[static_cast<std::size_t>(n)].value() - alpha * n;
              if (!off || h < *off) off = h;
            }
            if (!off) break;
            if (best_off && !(*off > *best_off)) {
              if (++stalls >= 3) {
                if (win_end - 12 < win_floor) break;
                win_end -= 12;
                best_off.reset();
                stalls = 0;
              }
            } else {
              stalls = 0;
              best_off = off;
            }

            // Division block for this round: rotate between the top lane, the
            // middle of the retreat zone, and a block below the window, then
            // scan down for a block where b is nonzero alongside a pivot.
            int lane = round % 3;
            int block_hi = lane == 0   ? n_ref
                           : lane == 1 ? (win_end + 1 + n_ref) / 2
                                       : std::max(win_lo - 2, 4);
            int block_lo = lane == 2 ? std::min(4, block_hi) : win_end + 1;
            int n_star = -1, arg = -1;
            for (int n = block_hi; n >= block_lo && n_star < 0; --n) {
              const auto& bn = bc.at[static_cast<std::size_t>(n)];
              LogValue best = LogValue::pos_infinity();
              for (int i = 0; i < static_cast<int>(bn.size()); ++i) {
                const DenseEntry& e = bn[static_cast<std::size_t>(i)];
                if (e.is_zero()) continue;
                bool divisible = false;
                for (int p : settled)
                  if (!cols[static_cast<std::size_t>(p)]
                           ->at[static_cast<std::size_t>(n)][static_cast<std::size_t>(i)]
                           .is_zero())
                    divisible = true;
                if (!divisible) continue;
                LogValue v = dense_valuation(e, u, field);
                if (v < best) {
                  best = v;
                  n_star = n;
                  arg = i;
                }
              }
            }
            if (n_star < 0) continue;  // nothing to divide in this lane
            // Pick the settled pivot whose structure near the block matches
            // b's current dominant tail; when even the best candidate is off
            // by more than half the least slope gap in play, dividing would
            // inject the pivot's own components, so the lane is skipped.
            std::optional<mpq_class> s_b = slope_near(w, n_star - 1, bad);
            int pivot = -1;
            std::optional<mpq_class> pivot_gap;
            std::vector<mpq_class> cand_slopes{alpha};
            for (int p : settled) {
              const DenseEntry& pe =
                  cols[static_cast<std::size_t>(p)]
                      ->at[static_cast<std::size_t>(n_star)][static_cast<std::size_t>(arg)];
              if (pe.is_zero()) continue;
              std::optional<mpq_class> s_p = lane == 2
                                                 ? det[static_cast<std::size_t>(p)].slope
                                                 : top_slope[static_cast<std::size_t>(p)];
              if (pivot < 0) pivot = p;
              if (!s_p) continue;
              cand_slopes.push_back(*s_p);
              if (!s_b) continue;
              mpq_class gap = *s_p - *s_b;
              if (gap < 0) gap = -gap;
              if (!pivot_gap || gap < *pivot_gap) {
                pivot_gap = gap;
                pivot = p;
              }
            }
            if (pivot < 0) continue;
            if (s_b && pivot_gap) {
              std::optional<mpq_class> least;
              for (std::size_t x = 0; x < cand_slopes.size(); ++x)
                for (std::size_t y = x + 1; y < cand_slopes.size(); ++y) {
                  mpq_class g = cand_slopes[x] - cand_slopes[y];
                  if (g < 0) g = -g;
                  if (g != 0 && (!least || g < *least)) least = g;
                }
              if (least && *pivot_gap * 2 > *least) continue;  // mismatch
            }
            const DenseColumn& pc = *cols[static_cast<std::size_t>(pivot)];
            DenseEntry q = dense_quotient(
                bc.at[static_cast<std::size_t>(n_star)][static_cast<std::size_t>(arg)],
                pc.at[static_cast<std::size_t>(n_star)][static_cast<std::size_t>(arg)], q_terms,
                clamp);
            if (q.is_zero()) continue;
            bad.insert(n_star);
            for (std::size_t n = 0; n < bc.at.size(); ++n)
              for (std::size_t i = 0; i < bc.at[n].size(); ++i)
                subtract_scaled(bc.at[n][i], q, pc.at[n][i], clamp);
          }
          bc = std::move(best_state);  // keep the state behind the best reading
        }
        settled.push_back(b);
        top_slope[static_cast<std::size_t>(b)] = slope_near(vals(*col_b), win_end_full, bad);
      }
    }
  }

  for (int j = 0; j < r; ++j) {
    const auto& d = det[static_cast<std::size_t>(j)];
    if (d.status == SlopeDetection::Status::inconclusive) {
      RadiusOutcome ro;
      std::vector<LogValue> w;
      for (int n = 0; n <= n_max; ++n) w.push_back(eng.column_valuation(n, j, u));
      fill_bracket(ro, w, tail_window_lo(n_max), eng.field());
      out.per_index.push_back(std::move(ro));
    } else {
      out.per_index.push_back(outcome_from_detection(d, u, datum, eng.field()));
    }
  }
  std::sort(out.per_index.begin(), out.per_index.end(),
            [](const RadiusOutcome& x, const RadiusOutcome& y) {
              if (!x.conclusive || !y.conclusive) return !x.conclusive && y.conclusive;
              if (x.log_taylor < y.log_taylor) return true;
              return false;
            });
  return out;
}

MultiradiusProfile radius_profile(RadiusEngine& eng, const mpq_class& u_lo,
                                  const mpq_class& u_hi, const TriangulationDatum& datum,
                                  const ProfileOptions& opt) {
  if (u_lo > u_hi) throw guard_error(code::validation_error, "empty profile interval");
  int r = eng.rank();
  mpz_class d_lattice(1);
  for (int i = 2; i <= r; ++i)
    mpz_lcm_ui(d_lattice.get_mpz_t(), d_lattice.get_mpz_t(), static_cast<unsigned long>(i));

  MultiradiusProfile prof;
  std::map<mpq_class, std::vector<mpq_class>> samples;
  int budget = opt.max_samples;

  auto sample = [&](const mpq_class& u) -> const std::vector<mpq_class>& {
    auto it = samples.find(u);
    if (it != samples.end()) return it->second;
    if (--budget < 0)
      throw guard_error(code::budget_exhausted, "profile sample budget exceeded");
    MultiradiusPoint pt =
        multiradius_at(eng, u, datum, opt.terms, opt.terms_cap, opt.refine_ties);
    if (!pt.conclusive)
      throw guard_error(code::inconclusive, "growth detection failed at a profile point");
    if (pt.refined) prof.refined = true;
    std::vector<mpq_class> vals;
    for (const auto& ro : pt.per_index) vals.push_back(ro.log_rel.value());
    return samples.emplace(u, std::move(vals)).first->second;
  };

  sample(u_lo);
  if (u_hi == u_lo) {
    for (int i = 0; i < r; ++i) {
      const mpq_class& v = samples.at(u_lo)[static_cast<std::size_t>(i)];
      prof.log_rel.push_back(
          PLFunction::from_knots({{u_lo, v}}));
    }
    return prof;
  }
  sample(u_hi);
  mpq_class floor_width = (u_hi - u_lo) / opt.resolution_den;

  std::deque<std::pair<mpq_class, mpq_class>> work{{u_lo, u_hi}};
  while (!work.empty()) {
    auto [a, b] = work.front();
    work.pop_front();
    if (b - a <= floor_width) continue;
    mpq_class mid = (a + b) / 2;
    const auto va = sample(a), vb = sample(b);
    const auto& vm = sample(mid);
    bool flat = true;
    for (int i = 0; i < r && flat; ++i) {
      const mpq_class &fa = va[static_cast<std::size_t>(i)], &fb = vb[static_cast<std::size_t>(i)];
      if (2 * vm[static_cast<std::size_t>(i)] != fa + fb) flat = false;
      else {
        mpq_class s = (fb - fa) / (b - a);
        s.canonicalize();
        if (!mpz_divisible_p(d_lattice.get_mpz_t(), s.get_den().get_mpz_t()) &&
            s != 0)
          flat = false;
      }
    }
    if (!flat) {
      work.emplace_back(a, mid);
      work.emplace_back(mid, b);
    }
  }

  for (int i = 0; i < r; ++i) {
    std::vector<PLFunction::Knot> knots;
    for (const auto& [u, vals] : samples)
      knots.emplace_back(u, vals[static_cast<std::size_t>(i)]);
    prof.log_rel.push_back(PLFunction::from_knots(std::move(knots)));
  }
  return prof;
}

PointClassification classify_point(const MultiradiusPoint& pt, const mpq_class& u,
                                   const TriangulationDatum&) {
  PointClassification out;
  LogValue at(u);
  for (const auto& ro : pt.per_index) {
    if (!ro.conclusive)
      throw guard_error(code::inconclusive, "cannot classify an undetected radius");
    int k = ro.log_taylor < at ? 0 : (ro.log_taylor == at ? 1 : 2);
    out.kind.push_back(k);
    if (k == 0) ++out.i_sp;
    if (k <= 1) ++out.i_sol;
  }
  return out;
}

std::vector<std::vector<std::pair<mpq_class, mpq_class>>> coincidence_segments(
    const MultiradiusProfile& prof) {
  std::vector<std::vector<std::pair<mpq_class, mpq_class>>> out;
  for (std::size_t i = 0; i + 1 < prof.log_rel.size(); ++i)
    out.push_back(equality_set(prof.log_rel[i], prof.log_rel[i + 1]));
  return out;
}

CompanionSystem direct_sum(const CompanionSystem& a, const CompanionSystem& b) {
  CompanionSystem s;
  s.rank = a.rank + b.rank;
  s.G = SeriesMatrix(s.rank);
  for (int i = 0; i < a.rank; ++i)
    for (int j = 0; j < a.rank; ++j) s.G.at(i, j) = a.G.at(i, j);
  for (int i = 0; i < b.rank; ++i)
    for (int j = 0; j < b.rank; ++j) s.G.at(a.rank + i, a.rank + j) = b.G.at(i, j);
  return s;
}

SeriesMatrix solution_matrix_at(RadiusEngine& eng, const mpq_class& t0, int n_terms) {
  eng.extend(n_terms);
  int r = eng.rank();
  SeriesMatrix y(r);
  for (int n = 0; n <= n_terms; ++n) {
    mpq_class inv_fact(1);
    inv_fact /= factorial_big(n);
    const SeriesMatrix& m = eng.coefficient_matrix(n);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        if (m.at(i, j).is_zero() && m.at(i, j).exact()) continue;
        mpq_class c = m.at(i, j).evaluate(t0) * inv_fact;
        c.canonicalize();
        if (c != 0) y.at(i, j) += GaussSeries::monomial(c, n);
      }
  }
  return y;
}

}  // namespace padiff
