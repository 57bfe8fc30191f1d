#include "fieldtn/cmps.hpp"

#include <cmath>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fieldtn/errors.hpp"

namespace fieldtn {

Cmps::Cmps(Interval interval, ComplexMatrix B, MatrixFunction Q, MatrixFunction L)
    : interval_(interval), B_(std::move(B)), Q_(std::move(Q)), L_(std::move(L)) {
  require_square(B_, "cMPS boundary");
  require_finite(B_, "cMPS boundary");
  const int d = D();
  if (Q_.dim() != d || L_.dim() != d)
    throw DimensionError("cMPS: B is " + std::to_string(d) + "x" + std::to_string(d) +
                         " but Q/L have dimension " + std::to_string(Q_.dim()) + "/" +
                         std::to_string(L_.dim()));
  if (!(Q_.domain() == interval_) || !(L_.domain() == interval_))
    throw DomainError("cMPS: Q and L must be defined on the state's interval");
}

Cmps vacuum_cmps(Interval interval) {
  return Cmps(interval, identity_matrix(1), MatrixFunction::zero(1, interval),
              MatrixFunction::zero(1, interval));
}

double mode_norm_squared(const MatrixFunction& mode) {
  if (mode.dim() != 1) throw DimensionError("mode function must be 1x1");
  const Interval& d = mode.domain();
  auto f = [&](double x) { return std::norm(mode.node().eval(x)(0, 0)); };
  double total = 0.0;
  const auto bp = mode.breakpoints();
  double lo = d.x_minus();
  for (std::size_t i = 0; i <= bp.size(); ++i) {
    const double hi = i < bp.size() ? bp[i] : d.x_plus();
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lo, hi, 15, 1e-14);
    lo = hi;
  }
  return total;
}

Cmps fock_cmps(int N, const MatrixFunction& mode, FockModeInfo* info) {
  if (N < 0) throw DomainError("fock_cmps: N must be non-negative");
  const Interval interval = mode.domain();
  const double n2 = mode_norm_squared(mode);
  if (!(n2 > 0.0) || !std::isfinite(n2)) throw DomainError("fock_cmps: mode has zero norm");
  MatrixFunction f = mode;
  const bool rescale = std::abs(n2 - 1.0) > 1e-8;
  if (rescale) f = MatrixFunction::scale(1.0 / std::sqrt(n2), mode);
  if (info) *info = FockModeInfo{n2, rescale};
  if (N == 0) return vacuum_cmps(interval);

  const int D = N + 1;
  const auto ladder = su2_ladder(D);
  ComplexMatrix up_n = identity_matrix(D);
  double factorial = 1.0;
  for (int k = 1; k <= N; ++k) {
    up_n = up_n * ladder.raising;
    factorial *= k;
  }
  const ComplexMatrix B = std::pow(factorial, -1.5) * up_n;
  const MatrixFunction L =
      MatrixFunction::scalar_times(f, MatrixFunction::constant(ladder.lowering, interval));
  return Cmps(interval, B, MatrixFunction::zero(D, interval), L);
}

Complex cmps_coefficient(const Cmps& psi, std::span<const double> xs, const PropagatorConfig& cfg) {
  const Interval& d = psi.interval();
  require_strictly_increasing(xs, d);
  double prev = d.x_minus();
  ComplexMatrix m = identity_matrix(psi.D());
  for (double raw : xs) {
    const double x = d.clamp_checked(raw);
    m = m * path_ordered_exp(psi.Q(), prev, x, cfg, Ordering::kEarlierLeft) * psi.L()(x);
    prev = x;
  }
  m = m * path_ordered_exp(psi.Q(), prev, d.x_plus(), cfg, Ordering::kEarlierLeft);
  return (psi.B().transpose().cwiseProduct(m)).sum();
}

ChainEvaluator cmps_evaluator(const Cmps& psi, const PropagatorConfig& cfg) {
  return ChainEvaluator(psi.B(), psi.Q(), {psi.L()}, cfg);
}

Complex inner_product(const Cmps& psi1, const Cmps& psi2, const PropagatorConfig& cfg) {
  if (!(psi1.interval() == psi2.interval()))
    throw DomainError("inner_product: states live on different intervals");
  const Interval& d = psi1.interval();
  const auto i1 = MatrixFunction::identity(psi1.D(), d);
  const auto i2 = MatrixFunction::identity(psi2.D(), d);
  const MatrixFunction E = MatrixFunction::kron(psi1.Q().conj(), i2) +
                           MatrixFunction::kron(i1, psi2.Q()) +
                           MatrixFunction::kron(psi1.L().conj(), psi2.L());
  const ComplexMatrix B = kron(psi1.B().conjugate(), psi2.B());
  const ComplexMatrix V = path_ordered_exp(E, d.x_minus(), d.x_plus(), cfg, Ordering::kEarlierLeft);
  return (B.transpose().cwiseProduct(V)).sum();
}

double norm_squared(const Cmps& psi, const PropagatorConfig& cfg) {
  return inner_product(psi, psi, cfg).real();
}

Cmps normalize(const Cmps& psi, const PropagatorConfig& cfg) {
  const double n2 = norm_squared(psi, cfg);
  if (!(n2 > 0.0)) throw DomainError("normalize: state has zero norm");
  return Cmps(psi.interval(), psi.B() / std::sqrt(n2), psi.Q(), psi.L());
}

Cmps superpose(std::span<const std::pair<Complex, Cmps>> terms) {
  if (terms.empty()) throw DomainError("superpose: no terms");
  const Interval interval = terms.front().second.interval();
  std::vector<ComplexMatrix> bs;
  std::vector<MatrixFunction> qs;
  std::vector<MatrixFunction> ls;
  for (const auto& [w, psi] : terms) {
    if (!(psi.interval() == interval)) throw DomainError("superpose: mismatched intervals");
    bs.push_back(w * psi.B());
    qs.push_back(psi.Q());
    ls.push_back(psi.L());
  }
  return Cmps(interval, direct_sum(bs), MatrixFunction::direct_sum(qs),
              MatrixFunction::direct_sum(ls));
}

}  // namespace fieldtn
