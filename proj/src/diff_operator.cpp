#include "padiff/diff_operator.hpp"

#include <cctype>
#include <sstream>
#include <stdexcept>

namespace padiff {

SeriesMatrix SeriesMatrix::identity(int size) {
  SeriesMatrix m(size);
  for (int i = 0; i < size; ++i) m.at(i, i) = GaussSeries(mpq_class(1));
  return m;
}

SeriesMatrix SeriesMatrix::operator+(const SeriesMatrix& o) const {
  if (n != o.n) throw std::logic_error("SeriesMatrix: size mismatch");
  SeriesMatrix r(n);
  for (std::size_t i = 0; i < a.size(); ++i) r.a[i] = a[i] + o.a[i];
  return r;
}

SeriesMatrix SeriesMatrix::operator*(const SeriesMatrix& o) const {
  if (n != o.n) throw std::logic_error("SeriesMatrix: size mismatch");
  SeriesMatrix r(n);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const GaussSeries& left = at(i, k);
      if (left.is_zero() && left.exact()) continue;
      for (int j = 0; j < n; ++j) {
        const GaussSeries& right = o.at(k, j);
        if (right.is_zero() && right.exact()) continue;
        r.at(i, j) += left * right;
      }
    }
  return r;
}

SeriesMatrix SeriesMatrix::derivative() const {
  SeriesMatrix r(n);
  for (std::size_t i = 0; i < a.size(); ++i) r.a[i] = a[i].derivative();
  return r;
}

SeriesMatrix SeriesMatrix::transpose() const {
  SeriesMatrix r(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) r.at(j, i) = at(i, j);
  return r;
}

SeriesMatrix SeriesMatrix::negated() const {
  SeriesMatrix r(n);
  for (std::size_t i = 0; i < a.size(); ++i) r.a[i] = -a[i];
  return r;
}

bool SeriesMatrix::is_zero() const {
  for (const auto& f : a)
    if (!f.is_zero()) return false;
  return true;
}

DiffOperator::DiffOperator(std::vector<GaussSeries> coeffs) : coeff_(std::move(coeffs)) {
  normalize();
}

void DiffOperator::normalize() {
  while (!coeff_.empty() && coeff_.back().is_zero() && coeff_.back().exact())
    coeff_.pop_back();
}

DiffOperator DiffOperator::derivation() {
  std::vector<GaussSeries> c(2);
  c[1] = GaussSeries(mpq_class(1));
  return DiffOperator(std::move(c));
}

DiffOperator DiffOperator::from_series(GaussSeries f) {
  std::vector<GaussSeries> c;
  c.push_back(std::move(f));
  return DiffOperator(std::move(c));
}

const GaussSeries& DiffOperator::coefficient(int k) const {
  static const GaussSeries zero;
  if (k < 0 || k >= static_cast<int>(coeff_.size())) return zero;
  return coeff_[static_cast<std::size_t>(k)];
}

bool DiffOperator::monic() const {
  return !coeff_.empty() && coeff_.back() == GaussSeries(mpq_class(1));
}

DiffOperator DiffOperator::operator+(const DiffOperator& o) const {
  std::vector<GaussSeries> c(std::max(coeff_.size(), o.coeff_.size()));
  for (std::size_t k = 0; k < c.size(); ++k)
    c[k] = coefficient(static_cast<int>(k)) + o.coefficient(static_cast<int>(k));
  return DiffOperator(std::move(c));
}

DiffOperator DiffOperator::operator-(const DiffOperator& o) const {
  return *this + o.scaled(mpq_class(-1));
}

DiffOperator DiffOperator::scaled(const mpq_class& c) const {
  std::vector<GaussSeries> out(coeff_.size());
  for (std::size_t k = 0; k < coeff_.size(); ++k) out[k] = coeff_[k].scaled(c);
  return DiffOperator(std::move(out));
}

DiffOperator DiffOperator::operator*(const DiffOperator& o) const {
  return op_multiply(*this, o);
}

DiffOperator op_multiply(const DiffOperator& a, const DiffOperator& b) {
  if (a.is_zero() || b.is_zero()) return DiffOperator();
  int na = a.order(), nb = b.order();
  // d^k g = sum_m C(k, m) g^(m) d^(k-m); precompute the derivatives of b's
  // coefficients up to order na.
  std::vector<std::vector<GaussSeries>> der(static_cast<std::size_t>(nb) + 1);
  for (int j = 0; j <= nb; ++j) {
    der[j].push_back(b.coefficient(j));
    for (int m = 1; m <= na; ++m) der[j].push_back(der[j].back().derivative());
  }
  std::vector<GaussSeries> out(static_cast<std::size_t>(na + nb) + 1);
  for (int k = 0; k <= na; ++k) {
    const GaussSeries& f = a.coefficient(k);
    if (f.is_zero() && f.exact()) continue;
    for (int j = 0; j <= nb; ++j) {
      for (int m = 0; m <= k; ++m) {
        const GaussSeries& gm = der[j][static_cast<std::size_t>(m)];
        if (gm.is_zero() && gm.exact()) continue;
        mpz_class c;
        mpz_bin_uiui(c.get_mpz_t(), static_cast<unsigned long>(k),
                     static_cast<unsigned long>(m));
        out[static_cast<std::size_t>(k - m + j)] += (f * gm).scaled(mpq_class(c));
      }
    }
  }
  return DiffOperator(std::move(out));
}

DiffOperator adjoint(const DiffOperator& P) {
  DiffOperator out;
  DiffOperator md = DiffOperator::derivation().scaled(mpq_class(-1));
  DiffOperator pow;  // (-d)^k, starting at k = 0
  pow = DiffOperator::from_series(GaussSeries(mpq_class(1)));
  for (int k = 0; k <= P.order(); ++k) {
    const GaussSeries& f = P.coefficient(k);
    if (!(f.is_zero() && f.exact()))
      out = out + op_multiply(pow, DiffOperator::from_series(f));
    pow = op_multiply(md, pow);
  }
  return out;
}

std::string DiffOperator::str() const {
  if (is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (int k = order(); k >= 0; --k) {
    const GaussSeries& f = coefficient(k);
    if (f.is_zero() && f.exact()) continue;
    if (!first) os << " + ";
    first = false;
    bool needs_parens = f.coefficients().size() > 1 || !f.exact();
    if (k == 0) {
      os << (needs_parens ? "(" + f.str() + ")" : f.str());
      continue;
    }
    if (f == GaussSeries(mpq_class(1))) {
    } else if (needs_parens) {
      os << "(" << f.str() << ")*";
    } else {
      os << f.str() << "*";
    }
    os << "d";
    if (k != 1) os << "^" << k;
  }
  return os.str();
}

LogValue operator_norm(const DiffOperator& P, const mpq_class& u0, const mpq_class& u,
                       const FieldSpec& field) {
  if (P.is_zero()) return LogValue::neg_infinity();
  LogValue best = LogValue::neg_infinity();
  for (int k = 0; k <= P.order(); ++k) {
    const GaussSeries& f = P.coefficient(k);
    if (f.is_zero() && f.exact()) continue;
    LogValue term = -(LogValue(factorial_valuation(static_cast<unsigned long>(k), field)) +
                      gauss_norm(f, u0, field)) +
                    LogValue(mpq_class(-(u + u0) * k));
    best = max(best, term);
  }
  return best;
}

CompanionSystem companion(const DiffOperator& P, const FieldSpec& field,
                          const mpq_class& u0, int invert_order) {
  int n = P.order();
  if (n < 1)
    throw guard_error(code::validation_error,
                      "companion system needs an operator of order >= 1");
  std::vector<GaussSeries> f(P.coefficients());
  if (!P.monic()) {
    GaussSeries inv = invert_at(f.back(), u0, field, invert_order);
    for (auto& c : f) c = c * inv;
  }
  CompanionSystem sys;
  sys.rank = n;
  sys.G = SeriesMatrix(n);
  for (int i = 0; i + 1 < n; ++i) sys.G.at(i, i + 1) = GaussSeries(mpq_class(1));
  for (int j = 0; j < n; ++j) sys.G.at(n - 1, j) = -f[static_cast<std::size_t>(j)];
  return sys;
}

CompanionSystem dual_system(const CompanionSystem& sys) {
  CompanionSystem out;
  out.rank = sys.rank;
  out.G = sys.G.transpose().negated();
  return out;
}

// ---------------------------------------------------------------------------
// Expression parser shared by DiffOperator::parse and GaussSeries::parse.

namespace {

struct Token {
  enum Kind { number, var_T, var_d, plus, minus, star, caret, lparen, rparen, end };
  Kind kind;
  mpq_class value;  // number
  int pos;
};

class Lexer {
 public:
  explicit Lexer(const std::string& s) : s_(s) { advance(); }
  const Token& peek() const { return tok_; }
  Token take() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    tok_.pos = static_cast<int>(i_) + 1;
    if (i_ >= s_.size()) {
      tok_.kind = Token::end;
      return;
    }
    char c = s_[i_];
    switch (c) {
      case '+': tok_.kind = Token::plus; ++i_; return;
      case '-': tok_.kind = Token::minus; ++i_; return;
      case '*': tok_.kind = Token::star; ++i_; return;
      case '^': tok_.kind = Token::caret; ++i_; return;
      case '(': tok_.kind = Token::lparen; ++i_; return;
      case ')': tok_.kind = Token::rparen; ++i_; return;
      case 'T': tok_.kind = Token::var_T; ++i_; return;
      case 'd': tok_.kind = Token::var_d; ++i_; return;
      default: break;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i_;
      while (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) ++j;
      // optional /denominator
      if (j < s_.size() && s_[j] == '/') {
        std::size_t k = j + 1;
        while (k < s_.size() && std::isdigit(static_cast<unsigned char>(s_[k]))) ++k;
        if (k == j + 1)
          throw input_error(code::parse_error, "missing denominator", 1,
                            static_cast<int>(j) + 2);
        tok_.value = parse_rational(s_.substr(i_, k - i_));
        i_ = k;
      } else {
        tok_.value = parse_rational(s_.substr(i_, j - i_));
        i_ = j;
      }
      tok_.kind = Token::number;
      return;
    }
    throw input_error(code::parse_error,
                      std::string("unexpected character '") + c + "' in expression", 1,
                      tok_.pos);
  }

  std::string s_;
  std::size_t i_ = 0;
  Token tok_;
};

class ExprParser {
 public:
  explicit ExprParser(const std::string& s) : lex_(s) {}

  DiffOperator parse() {
    DiffOperator r = expr();
    if (lex_.peek().kind != Token::end)
      throw input_error(code::parse_error, "trailing input in expression", 1,
                        lex_.peek().pos);
    return r;
  }

 private:
  long integer_exponent(bool allow_negative) {
    bool neg = false;
    if (lex_.peek().kind == Token::minus) {
      if (!allow_negative)
        throw input_error(code::parse_error, "negative power of d", 1, lex_.peek().pos);
      lex_.take();
      neg = true;
    }
    if (lex_.peek().kind != Token::number)
      throw input_error(code::parse_error, "expected integer exponent", 1,
                        lex_.peek().pos);
    Token t = lex_.take();
    if (t.value.get_den() != 1)
      throw input_error(code::parse_error, "exponent must be an integer", 1, t.pos);
    long e = static_cast<long>(t.value.get_num().get_si());
    return neg ? -e : e;
  }

  DiffOperator factor() {
    const Token& t = lex_.peek();
    switch (t.kind) {
      case Token::minus: {
        lex_.take();
        return factor().scaled(mpq_class(-1));
      }
      case Token::lparen: {
        lex_.take();
        DiffOperator inner = expr();
        if (lex_.peek().kind != Token::rparen)
          throw input_error(code::parse_error, "missing ')'", 1, lex_.peek().pos);
        lex_.take();
        return inner;
      }
      case Token::number: {
        Token num = lex_.take();
        return DiffOperator::from_series(GaussSeries(num.value));
      }
      case Token::var_T: {
        lex_.take();
        long e = 1;
        if (lex_.peek().kind == Token::caret) {
          lex_.take();
          e = integer_exponent(true);
        }
        return DiffOperator::from_series(GaussSeries::monomial(mpq_class(1), e));
      }
      case Token::var_d: {
        lex_.take();
        long e = 1;
        if (lex_.peek().kind == Token::caret) {
          lex_.take();
          e = integer_exponent(false);
        }
        DiffOperator r = DiffOperator::from_series(GaussSeries(mpq_class(1)));
        for (long i = 0; i < e; ++i) r = r * DiffOperator::derivation();
        return r;
      }
      default:
        throw input_error(code::parse_error, "expected a factor", 1, t.pos);
    }
  }

  DiffOperator term() {
    DiffOperator r = factor();
    while (lex_.peek().kind == Token::star) {
      lex_.take();
      r = r * factor();
    }
    return r;
  }

  DiffOperator expr() {
    bool neg = false;
    if (lex_.peek().kind == Token::plus) lex_.take();
    else if (lex_.peek().kind == Token::minus) {
      lex_.take();
      neg = true;
    }
    DiffOperator r = term();
    if (neg) r = r.scaled(mpq_class(-1));
    while (lex_.peek().kind == Token::plus || lex_.peek().kind == Token::minus) {
      bool sub = lex_.take().kind == Token::minus;
      DiffOperator t = term();
      r = sub ? r - t : r + t;
    }
    return r;
  }

  Lexer lex_;
};

}  // namespace

DiffOperator DiffOperator::parse(const std::string& text) {
  return ExprParser(text).parse();
}

GaussSeries GaussSeries::parse(const std::string& text) {
  DiffOperator op = DiffOperator::parse(text);
  if (op.order() > 0)
    throw input_error(code::parse_error, "series literal contains 'd'", 1, 1);
  return op.coefficient(0);
}

}  // namespace padiff
