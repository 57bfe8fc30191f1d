#include "fieldtn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include "fieldtn/errors.hpp"

namespace fieldtn {

Interval::Interval(double x_minus, double x_plus) : x_minus_(x_minus), x_plus_(x_plus) {
  if (!std::isfinite(x_minus) || !std::isfinite(x_plus) || !(x_minus < x_plus))
    throw DomainError("interval needs finite x_minus < x_plus, got [" + std::to_string(x_minus) +
                      ", " + std::to_string(x_plus) + "]");
}

bool Interval::contains(double x) const noexcept {
  const double slack = 1e-12 * length();
  return x >= x_minus_ - slack && x <= x_plus_ + slack;
}

double Interval::clamp_checked(double x) const {
  if (!contains(x))
    throw DomainError("point " + std::to_string(x) + " outside [" + std::to_string(x_minus_) +
                      ", " + std::to_string(x_plus_) + "]");
  return std::clamp(x, x_minus_, x_plus_);
}

Interval centered_interval(double length) { return Interval(-0.5 * length, 0.5 * length); }

ComplexMatrix identity_matrix(int dim) { return ComplexMatrix::Identity(dim, dim); }
ComplexMatrix zero_matrix(int dim) { return ComplexMatrix::Zero(dim, dim); }

void require_square(const ComplexMatrix& m, std::string_view what) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw DimensionError(std::string(what) + ": expected a non-empty square matrix, got " +
                         std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

void require_finite(const ComplexMatrix& m, std::string_view what) {
  if (!m.allFinite()) throw DomainError(std::string(what) + ": non-finite entries");
}

bool is_diagonal(const ComplexMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != Complex(0.0)) return false;
  return true;
}

ComplexMatrix mat_exp(const ComplexMatrix& m) {
  require_square(m, "mat_exp");
  if (is_diagonal(m)) {
    ComplexMatrix out = ComplexMatrix::Zero(m.rows(), m.cols());
    for (Eigen::Index i = 0; i < m.rows(); ++i) out(i, i) = std::exp(m(i, i));
    return out;
  }
  return m.exp();
}

ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

ComplexMatrix direct_sum(std::span<const ComplexMatrix> blocks) {
  Eigen::Index n = 0;
  for (const auto& b : blocks) {
    require_square(b, "direct_sum");
    n += b.rows();
  }
  ComplexMatrix out = ComplexMatrix::Zero(n, n);
  Eigen::Index off = 0;
  for (const auto& b : blocks) {
    out.block(off, off, b.rows(), b.cols()) = b;
    off += b.rows();
  }
  return out;
}

Su2Ladder su2_ladder(int D) {
  if (D < 2) throw DomainError("su2_ladder needs D >= 2");
  const double j = 0.5 * (D - 1);
  ComplexMatrix up = ComplexMatrix::Zero(D, D);
  // Index a holds m = a - j; J+ maps index a to a+1.
  for (int a = 0; a + 1 < D; ++a) {
    const double m = a - j;
    up(a + 1, a) = std::sqrt(j * (j + 1) - m * (m + 1));
  }
  return {up, up.adjoint()};
}

ComplexMatrix su2_jz(int D) {
  if (D < 2) throw DomainError("su2_jz needs D >= 2");
  const double j = 0.5 * (D - 1);
  ComplexMatrix z = ComplexMatrix::Zero(D, D);
  for (int a = 0; a < D; ++a) z(a, a) = a - j;
  return z;
}

ComplexMatrix unit_shift(int D) {
  ComplexMatrix s = ComplexMatrix::Zero(D, D);
  for (int a = 0; a + 1 < D; ++a) s(a + 1, a) = 1.0;
  return s;
}

}  // namespace fieldtn
