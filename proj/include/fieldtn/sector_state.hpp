#pragma once

#include <functional>
#include <span>
#include <vector>

#include "fieldtn/cmpo.hpp"
#include "fieldtn/cmps.hpp"

namespace fieldtn {

/// Ranking of non-decreasing index tuples k_1 <= ... <= k_j over m nodes.
/// Tuples are ordered colexicographically (combinatorial number system on
/// c_i = k_i + i), so rank 0 is (0, ..., 0).
class MultisetIndex {
 public:
  static std::size_t count(int m, int j);
  static std::size_t rank(std::span<const int> tuple);
  static void unrank(std::size_t rank, int j, std::span<int> out);
};

/// Truncated Fock state: sector j = 0..j_max holds amplitudes at every
/// non-decreasing tuple of the m midpoint nodes u_k = x_- + (k + 1/2) h.
/// Norms use the symmetric midpoint rule, weight h^j / prod(multiplicity!).
class SectorState {
 public:
  SectorState(Interval interval, int j_max, int m);

  using Amplitude = std::function<Complex(std::span<const double>)>;
  static SectorState from_function(Interval interval, int j_max, int m, const Amplitude& amp);
  static SectorState from_cmps(const Cmps& psi, int j_max, int m, const PropagatorConfig& cfg = {});

  const Interval& interval() const noexcept { return interval_; }
  int j_max() const noexcept { return j_max_; }
  int m() const noexcept { return m_; }
  double h() const noexcept { return interval_.length() / m_; }
  double node(int k) const noexcept { return interval_.x_minus() + (k + 0.5) * h(); }

  std::size_t size(int j) const { return sectors_.at(static_cast<std::size_t>(j)).size(); }
  std::vector<Complex>& sector(int j) { return sectors_.at(static_cast<std::size_t>(j)); }
  const std::vector<Complex>& sector(int j) const { return sectors_.at(static_cast<std::size_t>(j)); }
  std::vector<int> tuple(int j, std::size_t rank) const;
  std::vector<double> points(int j, std::size_t rank) const;
  Complex amplitude(std::span<const int> tuple) const;
  /// h^j / prod over repeated indices of multiplicity!.
  double weight(std::span<const int> tuple) const;

  double sector_norm_squared(int j) const;
  double norm_squared() const;
  /// <this|other> on the shared grid.
  Complex inner(const SectorState& other) const;

  /// Squared norm of the first discarded sector (j_max + 1) when measured.
  double truncation_leakage = 0.0;

 private:
  Interval interval_;
  int j_max_;
  int m_;
  std::vector<std::vector<Complex>> sectors_;
};

struct TruncationOptions {
  bool measure_leakage = false;
  PropagatorConfig propagator{};
  int threads = 0;
};

/// O applied sector-wise through its coefficient kernels on the input grid.
/// Output sector j' at tuple y sums over A placements S within y and
/// annihilated node tuples w with input amplitude at sorted(S + w); A labels
/// pair points exactly. A w-point sharing a node with y-points sits before or
/// after them with equal weight.
SectorState truncated_apply(const Cmpo& O, const SectorState& s, const TruncationOptions& opt = {});

/// Multiplies sector N by exp(-i omega sum_j x_j (-1)^{N-j}) at the nodes.
SectorState string_phase_apply(const SectorState& s, double omega);

}  // namespace fieldtn
