#pragma once

#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fieldtn/cmps.hpp"
#include "fieldtn/linalg.hpp"
#include "fieldtn/matrix_function.hpp"
#include "fieldtn/propagator.hpp"

namespace fieldtn {

/// Insertion channel of a coefficient string: L(x), R(x) or T(x).
enum class CoeffLabel : int { L = 0, R = 1, A = 2 };

/// Parses "LRA..." (case-insensitive); throws DomainError on other characters.
std::vector<CoeffLabel> parse_labels(std::string_view text);
std::string labels_to_string(std::span<const CoeffLabel> labels);
/// Exchanges L and R, keeps A.
std::vector<CoeffLabel> swap_left_right(std::span<const CoeffLabel> labels);

/// Continuous matrix product operator: boundary B and functions Q, L, R, T.
/// T = 0 is legal (projectors); nothing defaults to T = I.
class Cmpo {
 public:
  Cmpo(Interval interval, ComplexMatrix B, MatrixFunction Q, MatrixFunction L, MatrixFunction R,
       MatrixFunction T);

  const Interval& interval() const noexcept { return interval_; }
  int D() const noexcept { return static_cast<int>(B_.rows()); }
  const ComplexMatrix& B() const noexcept { return B_; }
  const MatrixFunction& Q() const noexcept { return Q_; }
  const MatrixFunction& L() const noexcept { return L_; }
  const MatrixFunction& R() const noexcept { return R_; }
  const MatrixFunction& T() const noexcept { return T_; }
  /// K^L, K^R or K^A.
  const MatrixFunction& insertion(CoeffLabel label) const noexcept;

 private:
  Interval interval_;
  ComplexMatrix B_;
  MatrixFunction Q_;
  MatrixFunction L_;
  MatrixFunction R_;
  MatrixFunction T_;
};

/// Tr(B V_-^1 K^{a_1}(x_1) V_1^2 ... K^{a_j}(x_j) V_j^+) for strictly increasing xs.
Complex cmpo_coefficient(const Cmpo& O, std::span<const CoeffLabel> labels,
                         std::span<const double> xs, const PropagatorConfig& cfg = {});

/// Batched evaluator over the alphabet (L, R, A) in that label order.
ChainEvaluator cmpo_evaluator(const Cmpo& O, const PropagatorConfig& cfg = {});

/// Product O1 O2 (O1 acts after O2), bond dimension D1 D2.
Cmpo compose(const Cmpo& O1, const Cmpo& O2);
/// Hermitian conjugate: B*, Q*, L <- R*, R <- L*, T*.
Cmpo adjoint(const Cmpo& O);
/// The state as an operator acting on the vacuum: R = 0, T = I.
Cmpo embed_cmps(const Cmps& psi);
/// O|psi> as a cMPS of bond dimension D_O D_psi.
Cmps apply(const Cmpo& O, const Cmps& psi);
/// |psi_i><psi_j| with bond dimension D_i D_j.
Cmpo projector_cmpo(const Cmps& ket, const Cmps& bra);
/// sum_k w_k O_k as a block direct sum with boundary (+) w_k B_k.
Cmpo lincomb(std::span<const std::pair<Complex, Cmpo>> terms);

/// Restricts an operator to its vacuum action: the state O|Omega>.
Cmps apply_to_vacuum(const Cmpo& O);

/// Gauge-equivalent tensors under g(x):
/// Q~ = g Q g^-1 - g' g^-1, K~ = g K g^-1, B~ = g(x+) B g(x-)^-1.
/// dg is checked against central differences of g at five points (1e-4).
Cmpo gauge_transform(const Cmpo& O, const MatrixFunction& g, const MatrixFunction& dg);
Cmps gauge_transform(const Cmps& psi, const MatrixFunction& g, const MatrixFunction& dg);

/// Opt-in central-difference derivative of g with step h (one-sided at the ends).
MatrixFunction finite_difference_derivative(const MatrixFunction& g, double h = 1e-5);

}  // namespace fieldtn
