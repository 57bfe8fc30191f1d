#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fieldtn/cmpo.hpp"

namespace fieldtn {

enum class UnitaritySides { kBoth, kLeftOnly, kRightOnly };  // left: O^dagger O, right: O O^dagger

struct UnitarityOptions {
  int j_max = 4;
  int samples_per_j = 200;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  UnitaritySides sides = UnitaritySides::kBoth;  ///< one-sided modes are diagnostics
  PropagatorConfig propagator{};
  int threads = 0;  ///< 0 = default_thread_count()
};

struct UnitarityReport {
  bool passed = false;
  double max_A_deviation = 0.0;  ///< max |c - 1| over all-A strings
  double max_offdiag = 0.0;      ///< max |c| over strings with an L or R
  std::vector<long long> probes;  ///< coefficient evaluations per sector j = 0..j_max
  int j_max = 0;
  double tol = 0.0;
  std::uint64_t seed = 0;
};

/// Sampled check of the identity conditions on O^dagger O and O O^dagger: every
/// all-A coefficient equals 1 and every other coefficient vanishes, for j <= j_max
/// at samples_per_j sorted-uniform point tuples per j (all 3^j strings at each).
/// A pass certifies only the sampled sectors and points.
UnitarityReport check_unitary(const Cmpo& O, const UnitarityOptions& options = {});
UnitarityReport check_unitary(const Cmpo& O, int j_max, int samples_per_j, double tol,
                              std::uint64_t seed);

/// The sorted point tuple probed for (seed, j, sample).
std::vector<double> unitarity_sample_points(const Interval& interval, std::uint64_t seed, int j,
                                            int sample);

/// Bulk-uniform operators rewritten with dressed insertions
/// K~(x) = V(x_-, x) K V(x, x_-) and boundary V(x_-, x_+) B, so that
/// coefficients are plain traces Tr(boundary K~(x_1) ... K~(x_j)).
struct InteractionPicture {
  ComplexMatrix boundary;
  MatrixFunction K_L;
  MatrixFunction K_R;
  MatrixFunction K_A;

  const MatrixFunction& dressed(CoeffLabel label) const noexcept;
  Complex trace(std::span<const CoeffLabel> labels, std::span<const double> xs) const;
};

/// Requires constant Q, L, R, T (structurally, or equal to 1e-12 at 8 sample points).
InteractionPicture interaction_picture(const Cmpo& O);

}  // namespace fieldtn
