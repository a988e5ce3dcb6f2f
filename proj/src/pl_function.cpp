#include "padiff/pl_function.hpp"

#include <algorithm>
#include <stdexcept>

namespace padiff {

namespace {

mpq_class segment_slope(const PLFunction::Knot& a, const PLFunction::Knot& b) {
  mpq_class s((b.second - a.second) / (b.first - a.first));
  s.canonicalize();
  return s;
}

}  // namespace

PLFunction PLFunction::constant(const mpq_class& lo, const mpq_class& hi,
                                const mpq_class& value) {
  return affine(lo, hi, value, mpq_class(0));
}

PLFunction PLFunction::affine(const mpq_class& lo, const mpq_class& hi,
                              const mpq_class& value_at_lo, const mpq_class& slope) {
  if (lo > hi) throw std::logic_error("PLFunction::affine: lo > hi");
  std::vector<Knot> k;
  k.emplace_back(lo, value_at_lo);
  if (hi > lo) k.emplace_back(hi, mpq_class(value_at_lo + slope * (hi - lo)));
  return from_knots(std::move(k));
}

PLFunction PLFunction::from_knots(std::vector<Knot> knots) {
  if (knots.empty()) throw std::logic_error("PLFunction: no knots");
  for (std::size_t i = 1; i < knots.size(); ++i)
    if (!(knots[i - 1].first < knots[i].first))
      throw std::logic_error("PLFunction: knots not strictly increasing");
  PLFunction f;
  f.knots_ = std::move(knots);
  f.normalize();
  return f;
}

PLFunction PLFunction::from_knots_unbounded_left(std::vector<Knot> knots) {
  PLFunction f = from_knots(std::move(knots));
  f.unbounded_left_ = true;
  return f;
}

void PLFunction::normalize() {
  if (knots_.size() < 3) return;
  std::vector<Knot> out;
  out.push_back(knots_.front());
  for (std::size_t i = 1; i + 1 < knots_.size(); ++i) {
    if (segment_slope(out.back(), knots_[i]) != segment_slope(knots_[i], knots_[i + 1]))
      out.push_back(knots_[i]);
  }
  out.push_back(knots_.back());
  knots_ = std::move(out);
}

const mpq_class& PLFunction::lo() const {
  if (unbounded_left_) throw std::logic_error("PLFunction::lo on unbounded domain");
  return knots_.front().first;
}

const mpq_class& PLFunction::hi() const { return knots_.back().first; }

bool PLFunction::contains(const mpq_class& t) const {
  if (knots_.empty()) return false;
  if (t > knots_.back().first) return false;
  return unbounded_left_ || t >= knots_.front().first;
}

mpq_class PLFunction::eval(const mpq_class& t) const {
  if (!contains(t)) throw std::logic_error("PLFunction::eval outside domain");
  if (t <= knots_.front().first) return knots_.front().second;
  for (std::size_t i = 1; i < knots_.size(); ++i) {
    if (t <= knots_[i].first) {
      mpq_class s = segment_slope(knots_[i - 1], knots_[i]);
      mpq_class v(knots_[i - 1].second + s * (t - knots_[i - 1].first));
      v.canonicalize();
      return v;
    }
  }
  return knots_.back().second;  // unreachable
}

mpq_class PLFunction::slope_left(const mpq_class& t) const {
  if (!contains(t)) throw std::logic_error("PLFunction::slope_left outside domain");
  if (t <= knots_.front().first) {
    if (unbounded_left_) return mpq_class(0);
    throw std::logic_error("PLFunction::slope_left at bounded lo");
  }
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (t <= knots_[i].first) return segment_slope(knots_[i - 1], knots_[i]);
  throw std::logic_error("PLFunction::slope_left: unreachable");
}

mpq_class PLFunction::slope_right(const mpq_class& t) const {
  if (!contains(t)) throw std::logic_error("PLFunction::slope_right outside domain");
  if (t >= knots_.back().first)
    throw std::logic_error("PLFunction::slope_right at hi");
  if (t < knots_.front().first) return mpq_class(0);  // unbounded tail
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (t < knots_[i].first) return segment_slope(knots_[i - 1], knots_[i]);
  throw std::logic_error("PLFunction::slope_right: unreachable");
}

std::vector<mpq_class> PLFunction::piece_slopes() const {
  std::vector<mpq_class> s;
  if (unbounded_left_) s.emplace_back(0);
  for (std::size_t i = 1; i < knots_.size(); ++i)
    s.push_back(segment_slope(knots_[i - 1], knots_[i]));
  if (s.empty()) s.emplace_back(0);  // degenerate point domain
  return s;
}

std::vector<mpq_class> PLFunction::interior_breakpoints() const {
  std::vector<mpq_class> b;
  for (std::size_t i = 1; i + 1 < knots_.size(); ++i) b.push_back(knots_[i].first);
  if (unbounded_left_ && knots_.size() >= 2) {
    // The leftmost knot is interior when the first bounded piece is not flat.
    if (segment_slope(knots_[0], knots_[1]) != 0)
      b.insert(b.begin(), knots_.front().first);
  }
  return b;
}

bool PLFunction::is_convex() const {
  auto s = piece_slopes();
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i] < s[i - 1]) return false;
  return true;
}

bool PLFunction::is_concave() const {
  auto s = piece_slopes();
  for (std::size_t i = 1; i < s.size(); ++i)
    if (s[i] > s[i - 1]) return false;
  return true;
}

bool PLFunction::is_constant() const {
  for (std::size_t i = 1; i < knots_.size(); ++i)
    if (knots_[i].second != knots_[0].second) return false;
  return true;
}

PLFunction pl_merge_binary(const PLFunction& f, const PLFunction& g, int op) {
  if (f.unbounded_left_ != g.unbounded_left_ ||
      (!f.unbounded_left_ && f.lo() != g.lo()) || f.hi() != g.hi())
    throw std::logic_error("PLFunction: binary op on mismatched domains");
  // Merged grid: all knot abscissae plus crossing points of the two graphs.
  std::vector<mpq_class> grid;
  for (const auto& k : f.knots_) grid.push_back(k.first);
  for (const auto& k : g.knots_) grid.push_back(k.first);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (op != 0) {
    std::vector<mpq_class> cross;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const mpq_class &a = grid[i - 1], &b = grid[i];
      mpq_class fa = f.eval(a), fb = f.eval(b), ga = g.eval(a), gb = g.eval(b);
      mpq_class da(fa - ga), db(fb - gb);
      if (sgn(da) * sgn(db) < 0) {
        mpq_class t(a + (b - a) * da / (da - db));
        t.canonicalize();
        cross.push_back(t);
      }
    }
    grid.insert(grid.end(), cross.begin(), cross.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  }
  std::vector<PLFunction::Knot> out;
  out.reserve(grid.size());
  for (const auto& t : grid) {
    mpq_class fv = f.eval(t), gv = g.eval(t), v;
    if (op == 0) v = fv + gv;
    else if (op == 1) v = std::min(fv, gv);
    else v = std::max(fv, gv);
    v.canonicalize();
    out.emplace_back(t, v);
  }
  PLFunction r = PLFunction::from_knots(std::move(out));
  r.unbounded_left_ = f.unbounded_left_;
  return r;
}

PLFunction PLFunction::operator+(const PLFunction& o) const {
  return pl_merge_binary(*this, o, 0);
}

PLFunction PLFunction::operator-(const PLFunction& o) const { return *this + (-o); }

PLFunction PLFunction::operator-() const { return scaled(mpq_class(-1)); }

PLFunction PLFunction::scaled(const mpq_class& c) const {
  PLFunction r(*this);
  for (auto& k : r.knots_) {
    k.second *= c;
    k.second.canonicalize();
  }
  r.normalize();
  return r;
}

PLFunction PLFunction::shifted(const mpq_class& c) const {
  PLFunction r(*this);
  for (auto& k : r.knots_) {
    k.second += c;
    k.second.canonicalize();
  }
  return r;
}

PLFunction PLFunction::restricted(const mpq_class& a, const mpq_class& b) const {
  if (a > b || !contains(a) || !contains(b))
    throw std::logic_error("PLFunction::restricted: bad subinterval");
  std::vector<Knot> out;
  out.emplace_back(a, eval(a));
  for (const auto& k : knots_)
    if (k.first > a && k.first < b) out.push_back(k);
  if (b > a) out.emplace_back(b, eval(b));
  return from_knots(std::move(out));
}

bool PLFunction::operator==(const PLFunction& o) const {
  return unbounded_left_ == o.unbounded_left_ && knots_ == o.knots_;
}

PLFunction pl_min(const PLFunction& f, const PLFunction& g) {
  return pl_merge_binary(f, g, 1);
}

PLFunction pl_max(const PLFunction& f, const PLFunction& g) {
  return pl_merge_binary(f, g, 2);
}

std::vector<std::pair<mpq_class, mpq_class>> equality_set(const PLFunction& f,
                                                          const PLFunction& g) {
  PLFunction d = f - g;
  // Zero set of a PL function: union of knot-interval pieces where d == 0 and
  // isolated interior zeros of sign-changing pieces.
  std::vector<std::pair<mpq_class, mpq_class>> out;
  auto push = [&out](const mpq_class& a, const mpq_class& b) {
    if (!out.empty() && out.back().second == a)
      out.back().second = b;
    else
      out.emplace_back(a, b);
  };
  const auto& ks = d.knots();
  if (ks.size() == 1) {
    if (ks[0].second == 0) push(ks[0].first, ks[0].first);
    return out;
  }
  for (std::size_t i = 1; i < ks.size(); ++i) {
    const auto &a = ks[i - 1], &b = ks[i];
    if (a.second == 0 && b.second == 0) {
      push(a.first, b.first);
    } else if (a.second == 0) {
      push(a.first, a.first);
    } else if (b.second == 0) {
      push(b.first, b.first);
    } else if (sgn(a.second) * sgn(b.second) < 0) {
      mpq_class t(a.first + (b.first - a.first) * a.second / (a.second - b.second));
      t.canonicalize();
      push(t, t);
    }
  }
  return out;
}

}  // namespace padiff
