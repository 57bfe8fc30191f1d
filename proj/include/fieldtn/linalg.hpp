#pragma once

#include <complex>
#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace fieldtn {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;

inline constexpr Complex kI{0.0, 1.0};

/// Closed interval [x_minus, x_plus] with positive length.
class Interval {
 public:
  Interval(double x_minus, double x_plus);

  double x_minus() const noexcept { return x_minus_; }
  double x_plus() const noexcept { return x_plus_; }
  double length() const noexcept { return x_plus_ - x_minus_; }

  /// Membership with a relative slack of 1e-12 of the length.
  bool contains(double x) const noexcept;
  /// Clamps points within the slack onto the interval; throws DomainError otherwise.
  double clamp_checked(double x) const;

  friend bool operator==(const Interval&, const Interval&) = default;

 private:
  double x_minus_;
  double x_plus_;
};

/// Symmetric interval [-length/2, +length/2].
Interval centered_interval(double length);

ComplexMatrix identity_matrix(int dim);
ComplexMatrix zero_matrix(int dim);

void require_square(const ComplexMatrix& m, std::string_view what);
void require_finite(const ComplexMatrix& m, std::string_view what);

/// Matrix exponential by scaling and squaring (diagonal inputs are exponentiated entrywise).
ComplexMatrix mat_exp(const ComplexMatrix& m);

/// Kronecker product; the left factor is the slow index.
ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b);

/// Block-diagonal matrix from square blocks.
ComplexMatrix direct_sum(std::span<const ComplexMatrix> blocks);

struct Su2Ladder {
  ComplexMatrix raising;
  ComplexMatrix lowering;
};

/// Spin-j ladder pair with D = 2j+1, basis ordered m = -j, ..., +j.
Su2Ladder su2_ladder(int D);

/// Diagonal J_z of the same representation.
ComplexMatrix su2_jz(int D);

/// Unit-entry raising shift: |a) -> |a+1), same sparsity as the su(2) raising operator.
ComplexMatrix unit_shift(int D);

bool is_diagonal(const ComplexMatrix& m);

}  // namespace fieldtn
