#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fieldtn/cmpo.hpp"
#include "fieldtn/cmps.hpp"

namespace fieldtn {

struct IdentityParams {};

/// D = 1: B = T = 1, Q = -|alpha|^2 / 2, L = alpha, R = -conj(alpha).
struct DisplacementParams {
  MatrixFunction alpha;  // 1 x 1
};

/// Diagonal phase family: Q = i diag(q), T = diag(e^{i t}) P, B = V(x_+, x_-) |k)(+|.
struct PermutationPhaseParams {
  std::vector<MatrixFunction> q;  // real 1 x 1 functions
  std::vector<MatrixFunction> t;  // real 1 x 1 functions
  ComplexMatrix permutation;      // one unit-modulus entry per row and column
  int k = 0;
};

/// D = 2 member with Q = i (omega/2) Z, T = X, k = 0.
struct ParityPhaseParams {
  double omega = 1.0;
};

/// Total bond dimension D >= 3; phase e^{i theta} on the (D-2)-particle sector.
struct NumberControlledParams {
  int D = 3;
  double theta = 0.0;
};

/// 1 (+) blocks of sizes n_b (distinct, >= 2); phase e^{i theta_b} on sector n_b - 1.
struct MultiSectorParams {
  std::vector<int> block_dims;
  std::vector<double> thetas;
};

/// Displacement composed after a permutation-phase operator.
struct DisplacedPhaseParams {
  MatrixFunction alpha;
  PermutationPhaseParams phase;
};

/// 1 + sum_j (e^{i a_j} - 1) |psi_j><psi_j| for orthonormal psi_j.
struct SubspaceUnitaryParams {
  std::vector<Cmps> states;
  std::vector<double> phases;
};

/// 1 - 2 |-_f><-_f| with |-_f> = (|Omega> - |1_f>) / sqrt 2: swaps vacuum and one particle.
struct SwapVacuumParams {
  MatrixFunction mode;
};

using CmpuFamily =
    std::variant<IdentityParams, DisplacementParams, PermutationPhaseParams, ParityPhaseParams,
                 NumberControlledParams, MultiSectorParams, DisplacedPhaseParams,
                 SubspaceUnitaryParams, SwapVacuumParams>;

/// Tag used on the command line and in JSON ("identity", "displacement", ...).
std::string family_tag(const CmpuFamily& family);
std::vector<std::string> family_tags();

/// Builds the operator; throws ValidationError on incomplete or invalid parameters.
Cmpo build(const CmpuFamily& family, const Interval& interval);

Cmpo identity_cmpu(const Interval& interval);
Cmpo displacement_cmpu(const MatrixFunction& alpha);
Cmpo permutation_phase_cmpu(const PermutationPhaseParams& p, const Interval& interval);
Cmpo parity_phase_cmpu(double omega, const Interval& interval);
Cmpo number_controlled_phase_cmpu(int D, double theta, const Interval& interval);
Cmpo multi_sector_phase_cmpu(const MultiSectorParams& p, const Interval& interval);
Cmpo subspace_unitary_cmpu(const SubspaceUnitaryParams& p);
Cmpo swap_vacuum_one_particle_cmpu(const MatrixFunction& mode);

/// Parameters of the parity member as a permutation-phase record.
PermutationPhaseParams parity_params(double omega, const Interval& interval);

/// |-_f> = (|Omega> - |1_f>) / sqrt 2 (D = 3).
Cmps minus_state(const MatrixFunction& mode);

/// Closed-form all-A coefficient of the parity family:
/// exp(i omega theta_N), theta_N = -sum_j (-1)^{N-j} (x_j - origin), with origin = x_-.
Complex parity_phase_expected(std::span<const double> xs, double omega, double origin = 0.0);

/// Closed-form all-A coefficient of a permutation-phase operator, integrating q by quadrature.
Complex permutation_phase_expected(const PermutationPhaseParams& p, const Interval& interval,
                                   std::span<const double> xs);

/// All-A coefficient of multi-sector phases at sector j: e^{i theta_b} if j = n_b - 1, else 1.
Complex multi_sector_expected(const MultiSectorParams& p, int j);

}  // namespace fieldtn
