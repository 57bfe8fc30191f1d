#pragma once

#include <span>
#include <utility>
#include <vector>

#include "fieldtn/linalg.hpp"
#include "fieldtn/matrix_function.hpp"
#include "fieldtn/propagator.hpp"

namespace fieldtn {

/// Continuous matrix product state on an interval: boundary B and bond-space
/// functions Q(x), L(x). B is fixed at construction.
class Cmps {
 public:
  Cmps(Interval interval, ComplexMatrix B, MatrixFunction Q, MatrixFunction L);

  const Interval& interval() const noexcept { return interval_; }
  int D() const noexcept { return static_cast<int>(B_.rows()); }
  const ComplexMatrix& B() const noexcept { return B_; }
  const MatrixFunction& Q() const noexcept { return Q_; }
  const MatrixFunction& L() const noexcept { return L_; }

 private:
  Interval interval_;
  ComplexMatrix B_;
  MatrixFunction Q_;
  MatrixFunction L_;
};

/// Fock vacuum: D = 1, B = 1, Q = L = 0.
Cmps vacuum_cmps(Interval interval);

struct FockModeInfo {
  double mode_norm_squared = 1.0;  ///< quadrature value of the integral of |f|^2
  bool rescaled = false;           ///< f was divided by its norm
};

/// N particles in the mode f (a 1 x 1 function): Q = 0, L = f J^-, B = (N!)^{-3/2} (J^+)^N
/// with D = N + 1. f is rescaled to unit norm when its norm is off by more than 1e-8.
Cmps fock_cmps(int N, const MatrixFunction& mode, FockModeInfo* info = nullptr);

/// Integral of |f|^2 over the mode's interval (adaptive Gauss-Kronrod).
double mode_norm_squared(const MatrixFunction& mode);

/// Tr(B V_-^1 L(x_1) V_1^2 ... L(x_j) V_j^+); xs strictly increasing inside the interval.
Complex cmps_coefficient(const Cmps& psi, std::span<const double> xs,
                         const PropagatorConfig& cfg = {});

/// Batched coefficient evaluation (label 0 is L).
ChainEvaluator cmps_evaluator(const Cmps& psi, const PropagatorConfig& cfg = {});

/// <psi1|psi2> through the doubled generator conj(Q1) x I + I x Q2 + conj(L1) x L2.
Complex inner_product(const Cmps& psi1, const Cmps& psi2, const PropagatorConfig& cfg = {});
double norm_squared(const Cmps& psi, const PropagatorConfig& cfg = {});
/// Rescales B by 1/sqrt(norm).
Cmps normalize(const Cmps& psi, const PropagatorConfig& cfg = {});

/// sum_k w_k |psi_k> as a block direct sum with B = (+) w_k B_k.
Cmps superpose(std::span<const std::pair<Complex, Cmps>> terms);

}  // namespace fieldtn
