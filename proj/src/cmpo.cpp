#include "fieldtn/cmpo.hpp"

#include <cctype>
#include <string>

#include "fieldtn/errors.hpp"

namespace fieldtn {

std::vector<CoeffLabel> parse_labels(std::string_view text) {
  std::vector<CoeffLabel> out;
  out.reserve(text.size());
  for (char c : text) {
    switch (std::toupper(static_cast<unsigned char>(c))) {
      case 'L': out.push_back(CoeffLabel::L); break;
      case 'R': out.push_back(CoeffLabel::R); break;
      case 'A': out.push_back(CoeffLabel::A); break;
      default: throw DomainError(std::string("unknown coefficient label '") + c + "'");
    }
  }
  return out;
}

std::string labels_to_string(std::span<const CoeffLabel> labels) {
  std::string s;
  for (auto l : labels) s.push_back(l == CoeffLabel::L ? 'L' : l == CoeffLabel::R ? 'R' : 'A');
  return s;
}

std::vector<CoeffLabel> swap_left_right(std::span<const CoeffLabel> labels) {
  std::vector<CoeffLabel> out;
  for (auto l : labels)
    out.push_back(l == CoeffLabel::L ? CoeffLabel::R : l == CoeffLabel::R ? CoeffLabel::L : l);
  return out;
}

Cmpo::Cmpo(Interval interval, ComplexMatrix B, MatrixFunction Q, MatrixFunction L,
           MatrixFunction R, MatrixFunction T)
    : interval_(interval), B_(std::move(B)), Q_(std::move(Q)), L_(std::move(L)),
      R_(std::move(R)), T_(std::move(T)) {
  require_square(B_, "cMPO boundary");
  require_finite(B_, "cMPO boundary");
  for (const MatrixFunction* f : {&Q_, &L_, &R_, &T_}) {
    if (f->dim() != D())
      throw DimensionError("cMPO: tensor of dimension " + std::to_string(f->dim()) +
                           " does not match B (" + std::to_string(D()) + ")");
    if (!(f->domain() == interval_)) throw DomainError("cMPO: tensors must share the interval");
  }
}

const MatrixFunction& Cmpo::insertion(CoeffLabel label) const noexcept {
  switch (label) {
    case CoeffLabel::L: return L_;
    case CoeffLabel::R: return R_;
    case CoeffLabel::A: return T_;
  }
  return T_;
}

Complex cmpo_coefficient(const Cmpo& O, std::span<const CoeffLabel> labels,
                         std::span<const double> xs, const PropagatorConfig& cfg) {
  if (labels.size() != xs.size()) throw DomainError("cmpo_coefficient: labels and points differ in length");
  const Interval& d = O.interval();
  require_strictly_increasing(xs, d);
  double prev = d.x_minus();
  ComplexMatrix m = identity_matrix(O.D());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = d.clamp_checked(xs[i]);
    m = m * path_ordered_exp(O.Q(), prev, x, cfg, Ordering::kEarlierLeft) * O.insertion(labels[i])(x);
    prev = x;
  }
  m = m * path_ordered_exp(O.Q(), prev, d.x_plus(), cfg, Ordering::kEarlierLeft);
  return (O.B().transpose().cwiseProduct(m)).sum();
}

ChainEvaluator cmpo_evaluator(const Cmpo& O, const PropagatorConfig& cfg) {
  return ChainEvaluator(O.B(), O.Q(), {O.L(), O.R(), O.T()}, cfg);
}

namespace {

void require_same_interval(const Interval& a, const Interval& b, const char* what) {
  if (!(a == b)) throw DomainError(std::string(what) + ": mismatched intervals");
}

using MF = MatrixFunction;

}  // namespace

Cmpo compose(const Cmpo& O1, const Cmpo& O2) {
  require_same_interval(O1.interval(), O2.interval(), "compose");
  const Interval& d = O1.interval();
  const MF i1 = MF::identity(O1.D(), d);
  const MF i2 = MF::identity(O2.D(), d);
  return Cmpo(d, kron(O1.B(), O2.B()),
              MF::kron(O1.Q(), i2) + MF::kron(i1, O2.Q()) + MF::kron(O1.R(), O2.L()),
              MF::kron(O1.L(), i2) + MF::kron(O1.T(), O2.L()),
              MF::kron(i1, O2.R()) + MF::kron(O1.R(), O2.T()), MF::kron(O1.T(), O2.T()));
}

Cmpo adjoint(const Cmpo& O) {
  return Cmpo(O.interval(), O.B().conjugate(), O.Q().conj(), O.R().conj(), O.L().conj(),
              O.T().conj());
}

Cmpo embed_cmps(const Cmps& psi) {
  const Interval& d = psi.interval();
  return Cmpo(d, psi.B(), psi.Q(), psi.L(), MF::zero(psi.D(), d), MF::identity(psi.D(), d));
}

Cmps apply(const Cmpo& O, const Cmps& psi) {
  require_same_interval(O.interval(), psi.interval(), "apply");
  const Interval& d = O.interval();
  const MF i1 = MF::identity(O.D(), d);
  const MF i2 = MF::identity(psi.D(), d);
  return Cmps(d, kron(O.B(), psi.B()),
              MF::kron(O.Q(), i2) + MF::kron(i1, psi.Q()) + MF::kron(O.R(), psi.L()),
              MF::kron(O.L(), i2) + MF::kron(O.T(), psi.L()));
}

Cmps apply_to_vacuum(const Cmpo& O) { return Cmps(O.interval(), O.B(), O.Q(), O.L()); }

Cmpo projector_cmpo(const Cmps& ket, const Cmps& bra) {
  require_same_interval(ket.interval(), bra.interval(), "projector_cmpo");
  const Interval& d = ket.interval();
  const MF ik = MF::identity(ket.D(), d);
  const MF ib = MF::identity(bra.D(), d);
  const int D = ket.D() * bra.D();
  return Cmpo(d, kron(ket.B(), bra.B().conjugate()),
              MF::kron(ket.Q(), ib) + MF::kron(ik, bra.Q().conj()), MF::kron(ket.L(), ib),
              MF::kron(ik, bra.L().conj()), MF::zero(D, d));
}

Cmpo lincomb(std::span<const std::pair<Complex, Cmpo>> terms) {
  if (terms.empty()) throw DomainError("lincomb: no terms");
  const Interval d = terms.front().second.interval();
  std::vector<ComplexMatrix> bs;
  std::vector<MF> q, l, r, t;
  for (const auto& [w, O] : terms) {
    require_same_interval(d, O.interval(), "lincomb");
    bs.push_back(w * O.B());
    q.push_back(O.Q());
    l.push_back(O.L());
    r.push_back(O.R());
    t.push_back(O.T());
  }
  return Cmpo(d, direct_sum(bs), MF::direct_sum(q), MF::direct_sum(l), MF::direct_sum(r),
              MF::direct_sum(t));
}

namespace {

struct GaugeParts {
  MF g;
  MF ginv;
  MF shift;  // dg g^-1
  ComplexMatrix g_plus;
  ComplexMatrix ginv_minus;
};

GaugeParts gauge_parts(const Interval& d, int D, const MF& g, const MF& dg) {
  if (g.dim() != D || dg.dim() != D) throw DimensionError("gauge_transform: g has the wrong size");
  if (!(g.domain() == d) || !(dg.domain() == d))
    throw DomainError("gauge_transform: g must live on the operator's interval");
  const double len = d.length();
  const double h = 1e-5 * len;
  for (int k = 0; k < 5; ++k) {
    const double x = d.x_minus() + (k + 0.5) * len / 5.0;
    const ComplexMatrix fd = (g(x + h) - g(x - h)) / (2.0 * h);
    const ComplexMatrix given = dg(x);
    if ((fd - given).norm() > 1e-4 * std::max(1.0, given.norm()))
      throw DomainError("gauge_transform: dg is not the derivative of g at x = " + std::to_string(x));
    Eigen::FullPivLU<ComplexMatrix> lu(g(x));
    if (!lu.isInvertible()) throw DomainError("gauge_transform: g is singular at x = " + std::to_string(x));
  }
  const MF ginv = g.inverse();
  const ComplexMatrix gm = g(d.x_minus());
  Eigen::FullPivLU<ComplexMatrix> lum(gm);
  Eigen::FullPivLU<ComplexMatrix> lup(g(d.x_plus()));
  if (!lum.isInvertible() || !lup.isInvertible())
    throw DomainError("gauge_transform: g is singular at an endpoint");
  return {g, ginv, dg * ginv, g(d.x_plus()), lum.inverse()};
}

MF conjugate_by(const GaugeParts& p, const MF& k) {
  if (k.is_zero()) return k;
  return p.g * k * p.ginv;
}

}  // namespace

Cmpo gauge_transform(const Cmpo& O, const MatrixFunction& g, const MatrixFunction& dg) {
  const auto p = gauge_parts(O.interval(), O.D(), g, dg);
  return Cmpo(O.interval(), p.g_plus * O.B() * p.ginv_minus, conjugate_by(p, O.Q()) - p.shift,
              conjugate_by(p, O.L()), conjugate_by(p, O.R()), conjugate_by(p, O.T()));
}

Cmps gauge_transform(const Cmps& psi, const MatrixFunction& g, const MatrixFunction& dg) {
  const auto p = gauge_parts(psi.interval(), psi.D(), g, dg);
  return Cmps(psi.interval(), p.g_plus * psi.B() * p.ginv_minus, conjugate_by(p, psi.Q()) - p.shift,
              conjugate_by(p, psi.L()));
}

MatrixFunction finite_difference_derivative(const MatrixFunction& g, double h) {
  const Interval d = g.domain();
  if (!(h > 0.0) || 2.0 * h >= d.length()) throw DomainError("finite_difference_derivative: bad step");
  return MF::callable(
      g.dim(),
      [g, h, d](double x) -> ComplexMatrix {
        const auto& n = g.node();
        if (x - h < d.x_minus())
          return (-3.0 * n.eval(x) + 4.0 * n.eval(x + h) - n.eval(x + 2.0 * h)) / (2.0 * h);
        if (x + h > d.x_plus())
          return (3.0 * n.eval(x) - 4.0 * n.eval(x - h) + n.eval(x - 2.0 * h)) / (2.0 * h);
        return (n.eval(x + h) - n.eval(x - h)) / (2.0 * h);
      },
      d);
}

}  // namespace fieldtn
