#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fieldtn/cmpo.hpp"
#include "fieldtn/cmps.hpp"

namespace fieldtn {

/// Discrete MPO (or MPS) on N sites of width epsilon with boson cutoff n_max.
/// Operator tensors A^{nm} at each site multiply (a^dagger)^n |0><0| a^m;
/// state tensors A^n multiply (a^dagger)^n |0>.
struct LatticeSystem {
  Interval interval;
  int N = 0;
  double epsilon = 0.0;
  int n_max = 1;
  bool is_state = false;
  ComplexMatrix B;
  std::vector<std::vector<ComplexMatrix>> tensors;  // [site][n * (n_max + 1) + m] or [site][n]

  int D() const noexcept { return static_cast<int>(B.rows()); }
  const ComplexMatrix& op(int site, int n, int m) const { return tensors[site][n * (n_max + 1) + m]; }
  const ComplexMatrix& state(int site, int n) const { return tensors[site][n]; }
  /// Site midpoint x_- + (k + 1/2) epsilon for 0-based k.
  double site_position(int k) const noexcept { return interval.x_minus() + (k + 0.5) * epsilon; }
  /// Site whose cell contains x.
  int site_of(double x) const;
};

/// A^00 = I + eps Q, A^10 = sqrt(eps) L, A^01 = sqrt(eps) R, A^11 = T at site
/// midpoints; higher A^{nm} sum the orderings of n - a L's, m - a R's and a T's
/// with weight eps^{(l+r)/2} / (l + r + a)!.
LatticeSystem discretize(const Cmpo& O, int N, int n_max = 1);
/// A^0 = I + eps Q, A^n = (sqrt(eps) L)^n / n!.
LatticeSystem discretize(const Cmps& psi, int N, int n_max = 1);

/// Site-wise product of two operator lattices: C^{nm} = sum_k k! A1^{nk} x A2^{km}.
LatticeSystem lattice_product(const LatticeSystem& outer, const LatticeSystem& inner);

/// <out| O |in> for occupation lists (one entry per site).
Complex lattice_matrix_element(const LatticeSystem& sys, std::span<const int> out,
                               std::span<const int> in);
/// <occ| psi> for a state lattice.
Complex lattice_amplitude(const LatticeSystem& sys, std::span<const int> occ);

/// Dense matrix (or column vector for states) in the occupation product basis,
/// site 0 most significant. Guard: 2^20 vector entries, dimension 2^10 for operators.
ComplexMatrix dense_assemble(const LatticeSystem& sys);

struct LatticeProbe {
  std::string id;
  std::vector<CoeffLabel> labels;
  std::vector<double> xs;
};

struct ConvergenceOptions {
  int n_max = 1;
  PropagatorConfig propagator{};
  /// Optional lattice for each N (defaults to discretize(O, N, n_max)); used to
  /// compare a composed operator against the product of discretized factors.
  std::function<LatticeSystem(int)> lattice;
  int threads = 0;
};

struct ConvergenceRow {
  std::string probe_id;
  int N = 0;
  double epsilon = 0.0;
  Complex lattice_value;    ///< element / eps^{(n_L + n_R)/2}
  Complex continuum_value;  ///< coefficient at the snapped points
  double abs_error = 0.0;
};

struct ProbeFit {
  std::string probe_id;
  double slope = 0.0;  ///< -d log(error) / d log(N)
  bool exact = false;  ///< every error vanished
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  std::vector<ProbeFit> fits;

  const ProbeFit& fit(const std::string& probe_id) const;
  /// probe_id, N, epsilon, lattice_value_re, lattice_value_im, continuum_re,
  /// continuum_im, abs_error, slope ("exact" when all errors vanish).
  std::string to_csv() const;
};

/// Lattice matrix elements against continuum coefficients for each N. Probe
/// points are snapped to site midpoints and must land on distinct sites.
ConvergenceTable convergence_study(const Cmpo& O, std::span<const LatticeProbe> probes,
                                   std::span<const int> Ns, const ConvergenceOptions& opt = {});

}  // namespace fieldtn
