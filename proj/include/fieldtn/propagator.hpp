#pragma once

#include <span>
#include <vector>

#include "fieldtn/linalg.hpp"
#include "fieldtn/matrix_function.hpp"

namespace fieldtn {

enum class StepMethod { kAdaptiveRk4, kFixedRk4 };

/// Which end of the path sits on the left of the product.
///
/// kLaterLeft solves dW/dy = G(y) W: V_a^c = V_b^c V_a^b.
/// kEarlierLeft solves dW/dy = W G(y): V_a^c = V_a^b V_b^c. Coefficient traces
/// Tr(B V_-^1 K_1 V_1^2 ...) use this one.
enum class Ordering { kLaterLeft, kEarlierLeft };

struct PropagatorConfig {
  double tol = 1e-10;      ///< target relative error
  int max_steps = 200000;  ///< RK4 steps (accepted and rejected) per call
  StepMethod method = StepMethod::kAdaptiveRk4;

  /// Throws DomainError unless tol in [1e-14, 1e-3] and max_steps >= 8.
  void validate() const;
};

/// Path-ordered exponential of G over [a, b]. a == b gives the identity
/// exactly; a > b is a domain error (use reverse_propagator). Constant
/// generators use mat_exp, piecewise-constant ones an exact product of
/// per-segment exponentials. Throws AccuracyError past max_steps.
ComplexMatrix path_ordered_exp(const MatrixFunction& G, double a, double b,
                               const PropagatorConfig& cfg = {},
                               Ordering ordering = Ordering::kLaterLeft);

/// V_b^a for a <= b: the inverse of the forward propagator over [a, b].
ComplexMatrix reverse_propagator(const MatrixFunction& G, double a, double b,
                                 const PropagatorConfig& cfg = {},
                                 Ordering ordering = Ordering::kLaterLeft);

/// Earlier-left propagators V(a, b) for many queries on one generator.
///
/// The domain is integrated once with the adaptive scheme; accepted step
/// matrices are kept in a segment tree so any query costs O(log n) products
/// plus two partial steps at its ends. Queries never invert matrices.
class PropagatorTable {
 public:
  explicit PropagatorTable(MatrixFunction G, const PropagatorConfig& cfg = {});

  /// V(a, b) for x_minus <= a <= b <= x_plus.
  ComplexMatrix operator()(double a, double b) const;

  const MatrixFunction& generator() const noexcept { return G_; }
  std::size_t step_count() const noexcept { return nodes_.empty() ? 0 : nodes_.size() - 1; }

 private:
  ComplexMatrix range(std::size_t i, std::size_t k) const;  // nodes i..k
  ComplexMatrix partial(double a, double b) const;          // inside one step
  ComplexMatrix constant_exp(double t) const;               // exp(t Q) for t in [0, length]

  MatrixFunction G_;
  PropagatorConfig cfg_;
  bool constant_ = false;
  bool piecewise_ = false;
  std::vector<double> nodes_;
  std::size_t leaves_ = 0;
  std::vector<ComplexMatrix> tree_;
  // Constant generators of larger dimension: exp(m h Q) on a uniform grid plus
  // Taylor terms Q^k / k! for the remainder.
  double const_step_ = 0.0;
  std::vector<ComplexMatrix> const_grid_;
  std::vector<ComplexMatrix> const_terms_;
};

/// Traces Tr(B V(x_-, x_1) K_{a_1}(x_1) V(x_1, x_2) ... K_{a_j}(x_j) V(x_j, x_+))
/// with earlier-left propagators of one generator and a fixed insertion alphabet.
class ChainEvaluator {
 public:
  ChainEvaluator(ComplexMatrix boundary, MatrixFunction generator,
                 std::vector<MatrixFunction> insertions, const PropagatorConfig& cfg = {});

  const Interval& interval() const noexcept { return table_.generator().domain(); }
  int dim() const noexcept { return table_.generator().dim(); }
  int alphabet() const noexcept { return static_cast<int>(insertions_.size()); }

  /// xs non-decreasing inside the interval; equal neighbours get V = I.
  Complex trace(std::span<const int> labels, std::span<const double> xs) const;

  /// All alphabet^j strings at once. Index is base-alphabet with the first
  /// label most significant.
  std::vector<Complex> trace_all(std::span<const double> xs) const;

  /// Same, with caller-provided segment propagators (j+1) and insertion values
  /// (per point, per label).
  std::vector<Complex> trace_all(std::span<const ComplexMatrix> segments,
                                 std::span<const std::vector<ComplexMatrix>> inserts) const;

  const PropagatorTable& table() const noexcept { return table_; }
  const ComplexMatrix& boundary() const noexcept { return boundary_; }
  const MatrixFunction& insertion(int label) const { return insertions_.at(label); }

 private:
  ComplexMatrix boundary_;
  // boundary = left_ * right_; a thin factorization when the boundary has low rank.
  ComplexMatrix left_;
  ComplexMatrix right_;
  std::vector<MatrixFunction> insertions_;
  PropagatorTable table_;
};

/// Throws DomainError unless xs is strictly increasing inside the interval.
void require_strictly_increasing(std::span<const double> xs, const Interval& interval);

}  // namespace fieldtn
