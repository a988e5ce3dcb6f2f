#pragma once

#include <string>
#include <vector>

#include "padiff/gauss_series.hpp"

namespace padiff {

// Square matrix of Gauss series, row-major.  Used for first-order systems
// y' = G y and the fundamental-solution recursion.
struct SeriesMatrix {
  int n = 0;
  std::vector<GaussSeries> a;  // n*n entries

  SeriesMatrix() = default;
  explicit SeriesMatrix(int size) : n(size), a(static_cast<std::size_t>(size) * size) {}
  static SeriesMatrix identity(int size);

  GaussSeries& at(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
  const GaussSeries& at(int i, int j) const {
    return a[static_cast<std::size_t>(i) * n + j];
  }
  SeriesMatrix operator+(const SeriesMatrix& o) const;
  SeriesMatrix operator*(const SeriesMatrix& o) const;
  SeriesMatrix derivative() const;      // entrywise d/dT
  SeriesMatrix transpose() const;
  SeriesMatrix negated() const;
  bool is_zero() const;                 // every entry a zero series
};

// Linear differential operator sum_k f_k d^k, d = d/dT, with Gauss-series
// coefficients.  coefficient(k) beyond the order is the zero series.  The
// zero operator has order -1.
class DiffOperator {
 public:
  DiffOperator() = default;
  explicit DiffOperator(std::vector<GaussSeries> coeffs);
  static DiffOperator derivation();                   // d
  static DiffOperator from_series(GaussSeries f);     // order 0
  // Grammar (non-commutative product, so "d*T" = T*d + 1):
  //   expr   := ['+'|'-'] term (('+'|'-') term)*
  //   term   := factor ('*' factor)*
  //   factor := '(' expr ')' | rational | 'T' ['^' int] | 'd' ['^' uint]
  // Example: "d^2 - (1+T)*d + T^-1".
  static DiffOperator parse(const std::string& text);

  int order() const { return static_cast<int>(coeff_.size()) - 1; }
  bool is_zero() const { return coeff_.empty(); }
  const GaussSeries& coefficient(int k) const;
  const std::vector<GaussSeries>& coefficients() const { return coeff_; }
  bool monic() const;

  DiffOperator operator+(const DiffOperator& o) const;
  DiffOperator operator-(const DiffOperator& o) const;
  DiffOperator scaled(const mpq_class& c) const;
  // Weyl product: d a = a d + a'.
  DiffOperator operator*(const DiffOperator& o) const;

  bool operator==(const DiffOperator& o) const { return coeff_ == o.coeff_; }
  bool operator!=(const DiffOperator& o) const { return !(*this == o); }
  std::string str() const;

 private:
  std::vector<GaussSeries> coeff_;  // coeff_[k] multiplies d^k; top entry nonzero

  void normalize();
};

DiffOperator op_multiply(const DiffOperator& a, const DiffOperator& b);

// Formal adjoint sum_k (-d)^k f_k; an anti-homomorphism of the Weyl product.
DiffOperator adjoint(const DiffOperator& P);

// log of the operator norm on the scaled germ spaces at a point of
// log-radius u0: max_k [ log|k!| + log|f_k|_{u0} - k (u + u0) ] with
// u = log rho <= 0 the relative radius.  -inf for the zero operator.
LogValue operator_norm(const DiffOperator& P, const mpq_class& u0, const mpq_class& u,
                       const FieldSpec& field);

// First-order companion of P = sum f_k d^k after monic normalization: rows
// 0..n-2 carry the superdiagonal 1 (y_i' = y_{i+1}), the last row is
// (-f_0/f_n, ..., -f_{n-1}/f_n).  Non-monomial leading coefficients are
// inverted at the working point u0 (finite window recorded on the entries);
// guard_error(NON_INVERTIBLE_LEADING_COEFFICIENT) if f_n has no strictly
// dominant monomial there.
struct CompanionSystem {
  SeriesMatrix G;
  int rank = 0;
};
CompanionSystem companion(const DiffOperator& P, const FieldSpec& field,
                          const mpq_class& u0 = 0, int invert_order = 48);

// The system of the dual module: G |-> -G^t.  An involution.
CompanionSystem dual_system(const CompanionSystem& sys);

}  // namespace padiff
