#include "fieldtn/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fieldtn/errors.hpp"

namespace fieldtn {

using MF = MatrixFunction;

namespace {

void require_on(const MF& f, const Interval& interval, const char* what) {
  if (!(f.domain() == interval))
    throw ValidationError(std::string(what) + " is not defined on the requested interval");
}

void require_real_scalar(const MF& f, const char* what) {
  if (f.dim() != 1) throw ValidationError(std::string(what) + " must be a scalar function");
  const Interval& d = f.domain();
  for (int k = 0; k < 8; ++k) {
    const double x = d.x_minus() + d.length() * k / 7.0;
    if (std::abs(f(x)(0, 0).imag()) > 1e-12)
      throw ValidationError(std::string(what) + " must be real-valued");
  }
}

// Row index of the single nonzero entry in column c.
int permuted_row(const ComplexMatrix& P, int c) {
  for (int r = 0; r < P.rows(); ++r)
    if (P(r, c) != Complex(0.0)) return r;
  return -1;
}

void validate_permutation(const ComplexMatrix& P) {
  if (P.rows() != P.cols() || P.rows() == 0)
    throw ValidationError("permutation must be a non-empty square matrix");
  const auto n = P.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    int row_nz = 0;
    int col_nz = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
      row_nz += P(i, k) != Complex(0.0);
      col_nz += P(k, i) != Complex(0.0);
      if (P(i, k) != Complex(0.0) && std::abs(std::abs(P(i, k)) - 1.0) > 1e-12)
        throw ValidationError("generalized permutation entries must have unit modulus");
    }
    if (row_nz != 1 || col_nz != 1)
      throw ValidationError("matrix is not a generalized permutation");
  }
}

double integrate(const MF& q, double a, double b) {
  if (b <= a) return 0.0;
  auto f = [&](double x) { return q.node().eval(x)(0, 0).real(); };
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 15, 1e-14);
}

void validate_phase_params(const PermutationPhaseParams& p, const Interval& interval) {
  validate_permutation(p.permutation);
  const auto D = static_cast<std::size_t>(p.permutation.rows());
  if (p.q.size() != D || p.t.size() != D)
    throw ValidationError("permutation_phase needs one q and one t function per bond index");
  for (const auto& f : p.q) {
    require_on(f, interval, "q");
    require_real_scalar(f, "q");
  }
  for (const auto& f : p.t) {
    require_on(f, interval, "t");
    require_real_scalar(f, "t");
  }
  if (p.k < 0 || static_cast<std::size_t>(p.k) >= D)
    throw ValidationError("permutation_phase index k out of range");
}

}  // namespace

std::vector<std::string> family_tags() {
  return {"identity",
          "displacement",
          "permutation_phase",
          "parity_phase",
          "number_controlled_phase",
          "multi_sector_phase",
          "displaced_phase",
          "subspace_unitary",
          "swap_vacuum_one_particle"};
}

std::string family_tag(const CmpuFamily& family) { return family_tags()[family.index()]; }

Cmpo identity_cmpu(const Interval& interval) {
  return Cmpo(interval, identity_matrix(1), MF::zero(1, interval), MF::zero(1, interval),
              MF::zero(1, interval), MF::identity(1, interval));
}

Cmpo displacement_cmpu(const MF& alpha) {
  if (alpha.dim() != 1) throw ValidationError("displacement amplitude must be a scalar function");
  const Interval d = alpha.domain();
  const MF q = MF::scale(-0.5, alpha.conj() * alpha);
  return Cmpo(d, identity_matrix(1), q, alpha, MF::scale(-1.0, alpha.conj()), MF::identity(1, d));
}

Cmpo permutation_phase_cmpu(const PermutationPhaseParams& p, const Interval& interval) {
  validate_phase_params(p, interval);
  const int D = static_cast<int>(p.permutation.rows());
  std::vector<MF> qi;
  std::vector<MF> eit;
  for (int a = 0; a < D; ++a) {
    qi.push_back(MF::scale(kI, p.q[a]));
    eit.push_back(MF::scale(kI, p.t[a]));
  }
  const MF Q = MF::diag(qi);
  const MF T = MF::diag(eit).exp() * MF::constant(p.permutation, interval);
  ComplexMatrix kp = ComplexMatrix::Zero(D, D);
  kp.row(p.k).setOnes();
  const ComplexMatrix B =
      reverse_propagator(Q, interval.x_minus(), interval.x_plus(), {}, Ordering::kEarlierLeft) * kp;
  return Cmpo(interval, B, Q, MF::zero(D, interval), MF::zero(D, interval), T);
}

PermutationPhaseParams parity_params(double omega, const Interval& interval) {
  PermutationPhaseParams p;
  p.q = {MF::constant(ComplexMatrix::Constant(1, 1, 0.5 * omega), interval),
         MF::constant(ComplexMatrix::Constant(1, 1, -0.5 * omega), interval)};
  p.t = {MF::zero(1, interval), MF::zero(1, interval)};
  p.permutation = ComplexMatrix::Zero(2, 2);
  p.permutation(0, 1) = 1.0;
  p.permutation(1, 0) = 1.0;
  p.k = 0;
  return p;
}

Cmpo parity_phase_cmpu(double omega, const Interval& interval) {
  if (!std::isfinite(omega)) throw ValidationError("parity_phase needs a finite omega");
  return permutation_phase_cmpu(parity_params(omega, interval), interval);
}

Cmpo multi_sector_phase_cmpu(const MultiSectorParams& p, const Interval& interval) {
  if (p.block_dims.empty() || p.block_dims.size() != p.thetas.size())
    throw ValidationError("multi_sector_phase needs one theta per block");
  std::set<int> seen;
  std::vector<ComplexMatrix> bs{identity_matrix(1)};
  std::vector<ComplexMatrix> ts{identity_matrix(1)};
  for (std::size_t b = 0; b < p.block_dims.size(); ++b) {
    const int n = p.block_dims[b];
    if (n < 2) throw ValidationError("multi_sector_phase blocks need dimension >= 2");
    if (!seen.insert(n).second)
      throw ValidationError("multi_sector_phase block dimensions must be distinct");
    ComplexMatrix blk = ComplexMatrix::Zero(n, n);
    blk(0, n - 1) = std::exp(kI * p.thetas[b]) - 1.0;
    bs.push_back(blk);
    ts.push_back(unit_shift(n));
  }
  const ComplexMatrix B = direct_sum(bs);
  const int D = static_cast<int>(B.rows());
  return Cmpo(interval, B, MF::zero(D, interval), MF::zero(D, interval), MF::zero(D, interval),
              MF::constant(direct_sum(ts), interval));
}

Cmpo number_controlled_phase_cmpu(int D, double theta, const Interval& interval) {
  if (D < 3) throw ValidationError("number_controlled_phase needs D >= 3");
  return multi_sector_phase_cmpu(MultiSectorParams{{D - 1}, {theta}}, interval);
}

Cmpo subspace_unitary_cmpu(const SubspaceUnitaryParams& p) {
  if (p.states.empty()) throw ValidationError("subspace_unitary needs at least one state");
  if (p.states.size() != p.phases.size())
    throw ValidationError("subspace_unitary needs one phase per state");
  const Interval interval = p.states.front().interval();
  for (std::size_t i = 0; i < p.states.size(); ++i) {
    if (!(p.states[i].interval() == interval))
      throw ValidationError("subspace_unitary states must share an interval");
    for (std::size_t j = 0; j <= i; ++j) {
      const Complex ov = inner_product(p.states[j], p.states[i]);
      const double target = i == j ? 1.0 : 0.0;
      if (std::abs(ov - target) > 1e-8)
        throw ValidationError("subspace_unitary states are not orthonormal (overlap " +
                              std::to_string(std::abs(ov)) + ")");
    }
  }
  std::vector<std::pair<Complex, Cmpo>> terms{{1.0, identity_cmpu(interval)}};
  for (std::size_t i = 0; i < p.states.size(); ++i)
    terms.emplace_back(std::exp(kI * p.phases[i]) - 1.0, projector_cmpo(p.states[i], p.states[i]));
  return lincomb(terms);
}

Cmps minus_state(const MF& mode) {
  const Interval d = mode.domain();
  const double s = 1.0 / std::sqrt(2.0);
  const std::vector<std::pair<Complex, Cmps>> terms{{s, vacuum_cmps(d)}, {-s, fock_cmps(1, mode)}};
  return superpose(terms);
}

Cmpo swap_vacuum_one_particle_cmpu(const MF& mode) {
  const Cmps minus = minus_state(mode);
  const Interval d = mode.domain();
  const std::vector<std::pair<Complex, Cmpo>> terms{{1.0, identity_cmpu(d)},
                                                    {-2.0, projector_cmpo(minus, minus)}};
  return lincomb(terms);
}

Cmpo build(const CmpuFamily& family, const Interval& interval) {
  struct Visitor {
    const Interval& d;
    Cmpo operator()(const IdentityParams&) const { return identity_cmpu(d); }
    Cmpo operator()(const DisplacementParams& p) const {
      require_on(p.alpha, d, "alpha");
      return displacement_cmpu(p.alpha);
    }
    Cmpo operator()(const PermutationPhaseParams& p) const { return permutation_phase_cmpu(p, d); }
    Cmpo operator()(const ParityPhaseParams& p) const { return parity_phase_cmpu(p.omega, d); }
    Cmpo operator()(const NumberControlledParams& p) const {
      return number_controlled_phase_cmpu(p.D, p.theta, d);
    }
    Cmpo operator()(const MultiSectorParams& p) const { return multi_sector_phase_cmpu(p, d); }
    Cmpo operator()(const DisplacedPhaseParams& p) const {
      require_on(p.alpha, d, "alpha");
      return compose(displacement_cmpu(p.alpha), permutation_phase_cmpu(p.phase, d));
    }
    Cmpo operator()(const SubspaceUnitaryParams& p) const {
      for (const auto& s : p.states)
        if (!(s.interval() == d)) throw ValidationError("subspace state on a different interval");
      return subspace_unitary_cmpu(p);
    }
    Cmpo operator()(const SwapVacuumParams& p) const {
      require_on(p.mode, d, "mode");
      return swap_vacuum_one_particle_cmpu(p.mode);
    }
  };
  return std::visit(Visitor{interval}, family);
}

Complex parity_phase_expected(std::span<const double> xs, double omega, double origin) {
  const std::size_t N = xs.size();
  double theta = 0.0;
  for (std::size_t j = 0; j < N; ++j) {
    const double sign = ((N - 1 - j) % 2 == 0) ? 1.0 : -1.0;  // (-1)^{N-j}, 1-based j
    theta -= sign * (xs[j] - origin);
  }
  return std::exp(kI * (omega * theta));
}

Complex permutation_phase_expected(const PermutationPhaseParams& p, const Interval& interval,
                                   std::span<const double> xs) {
  validate_phase_params(p, interval);
  const double x0 = interval.x_minus();
  const auto cumulative = [&](int c, double x) { return integrate(p.q[c], x0, x); };
  int c = p.k;
  Complex amp = 1.0;
  if (xs.empty()) return amp;
  amp *= std::exp(-kI * cumulative(c, xs.back()));
  for (std::size_t i = xs.size(); i-- > 0;) {
    const double x = xs[i];
    const int r = permuted_row(p.permutation, c);
    amp *= p.permutation(r, c) * std::exp(kI * p.t[r](x)(0, 0).real());
    c = r;
    const double prev = i == 0 ? x0 : xs[i - 1];
    amp *= std::exp(kI * integrate(p.q[c], prev, x));
  }
  return amp;
}

Complex multi_sector_expected(const MultiSectorParams& p, int j) {
  Complex out = 1.0;
  for (std::size_t b = 0; b < p.block_dims.size(); ++b)
    if (j == p.block_dims[b] - 1) out += std::exp(kI * p.thetas[b]) - 1.0;
  return out;
}

}  // namespace fieldtn
