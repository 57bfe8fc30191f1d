#include "fieldtn/matrix_function.hpp"

#include <algorithm>
#include <string>

#include <Eigen/SparseLU>

#include "fieldtn/errors.hpp"

namespace fieldtn {

using detail::MfNode;
using Kind = MatrixFunction::Kind;

namespace {

MfNode blank(Kind kind, int dim, const Interval& domain) {
  return MfNode{kind, dim, domain, {}, {}, {}, 0, {}, {}, Complex(1.0, 0.0)};
}

void require_dims(const MatrixFunction& a, const MatrixFunction& b, const char* what) {
  if (a.dim() != b.dim())
    throw DimensionError(std::string(what) + ": dimension mismatch " + std::to_string(a.dim()) +
                         " vs " + std::to_string(b.dim()));
  require_same_domain(a, b);
}

MatrixFunction composite(Kind kind, int dim, std::vector<MatrixFunction> children,
                         Complex weight = 1.0) {
  MfNode n = blank(kind, dim, children.front().domain());
  n.children = std::move(children);
  n.weight = weight;
  return MatrixFunction::from_node(std::move(n));
}

bool is_affine_or_constant(const MatrixFunction& f) {
  return f.kind() == Kind::kConstant || f.kind() == Kind::kAffine;
}

// (A0, A1) of a constant or affine function.
std::pair<ComplexMatrix, ComplexMatrix> affine_parts(const MatrixFunction& f) {
  const auto& n = f.node();
  if (n.kind == Kind::kConstant) return {n.matrices[0], ComplexMatrix::Zero(n.dim, n.dim)};
  return {n.matrices[0], n.matrices[1]};
}

// Not-a-knot cubic spline second derivatives for all entries at once.
std::vector<ComplexMatrix> spline_second_derivatives(const std::vector<double>& x,
                                                     const std::vector<ComplexMatrix>& y) {
  const int n = static_cast<int>(x.size());
  const int dim = static_cast<int>(y.front().rows());
  const int entries = dim * dim;
  std::vector<double> h(n - 1);
  for (int i = 0; i + 1 < n; ++i) h[i] = x[i + 1] - x[i];

  std::vector<Eigen::Triplet<double>> trip;
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, 2 * entries);
  trip.emplace_back(0, 0, h[1]);
  trip.emplace_back(0, 1, -(h[0] + h[1]));
  trip.emplace_back(0, 2, h[0]);
  for (int i = 1; i + 1 < n; ++i) {
    trip.emplace_back(i, i - 1, h[i - 1]);
    trip.emplace_back(i, i, 2.0 * (h[i - 1] + h[i]));
    trip.emplace_back(i, i + 1, h[i]);
    const ComplexMatrix d = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    for (int e = 0; e < entries; ++e) {
      rhs(i, e) = d(e % dim, e / dim).real();
      rhs(i, entries + e) = d(e % dim, e / dim).imag();
    }
  }
  trip.emplace_back(n - 1, n - 3, h[n - 2]);
  trip.emplace_back(n - 1, n - 2, -(h[n - 3] + h[n - 2]));
  trip.emplace_back(n - 1, n - 1, h[n - 3]);

  Eigen::SparseMatrix<double> a(n, n);
  a.setFromTriplets(trip.begin(), trip.end());
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success) throw DomainError("grid: spline system is singular");
  const Eigen::MatrixXd m = lu.solve(rhs);

  std::vector<ComplexMatrix> out(n, ComplexMatrix::Zero(dim, dim));
  for (int i = 0; i < n; ++i)
    for (int e = 0; e < entries; ++e)
      out[i](e % dim, e / dim) = Complex(m(i, e), m(i, entries + e));
  return out;
}

ComplexMatrix eval_grid(const MfNode& n, double x) {
  const auto& p = n.points;
  const auto& v = n.matrices;
  const std::size_t count = p.size();
  if (count == 1 || x <= p.front()) return v.front();
  if (x >= p.back()) return v.back();
  // p[i] <= x < p[i+1]
  const std::size_t i =
      static_cast<std::size_t>(std::upper_bound(p.begin(), p.end(), x) - p.begin()) - 1;
  if (n.order == 0) return v[i];
  const double h = p[i + 1] - p[i];
  const double t1 = x - p[i];
  const double t0 = p[i + 1] - x;
  if (n.second_derivatives.empty()) return (v[i] * t0 + v[i + 1] * t1) / h;
  const auto& m = n.second_derivatives;
  return m[i] * (t0 * t0 * t0 / (6.0 * h)) + m[i + 1] * (t1 * t1 * t1 / (6.0 * h)) +
         (v[i] / h - m[i] * (h / 6.0)) * t0 + (v[i + 1] / h - m[i + 1] * (h / 6.0)) * t1;
}

void collect_breakpoints(const MfNode& n, std::vector<double>& out) {
  if (n.kind == Kind::kGrid) out.insert(out.end(), n.points.begin(), n.points.end());
  for (const auto& c : n.children) collect_breakpoints(c.node(), out);
}

}  // namespace

ComplexMatrix MfNode::eval(double x) const {
  switch (kind) {
    case Kind::kConstant:
      return matrices[0];
    case Kind::kAffine:
      return matrices[0] + x * matrices[1];
    case Kind::kGrid:
      return eval_grid(*this, x);
    case Kind::kCallable: {
      ComplexMatrix m = callback(x);
      if (m.rows() != dim || m.cols() != dim)
        throw DimensionError("callable returned a matrix of the wrong shape");
      return m;
    }
    case Kind::kSum: {
      ComplexMatrix acc = children[0].node().eval(x);
      for (std::size_t i = 1; i < children.size(); ++i) acc += children[i].node().eval(x);
      return acc;
    }
    case Kind::kProduct:
      return children[0].node().eval(x) * children[1].node().eval(x);
    case Kind::kKron:
      return fieldtn::kron(children[0].node().eval(x), children[1].node().eval(x));
    case Kind::kScale:
      return weight * children[0].node().eval(x);
    case Kind::kScalarTimes:
      return children[0].node().eval(x)(0, 0) * children[1].node().eval(x);
    case Kind::kDirectSum: {
      ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
      Eigen::Index off = 0;
      for (const auto& c : children) {
        out.block(off, off, c.dim(), c.dim()) = c.node().eval(x);
        off += c.dim();
      }
      return out;
    }
    case Kind::kConj:
      return children[0].node().eval(x).conjugate();
    case Kind::kAdjoint:
      return children[0].node().eval(x).adjoint();
    case Kind::kExp:
      return mat_exp(children[0].node().eval(x));
    case Kind::kInverse: {
      const ComplexMatrix m = children[0].node().eval(x);
      Eigen::FullPivLU<ComplexMatrix> lu(m);
      if (!lu.isInvertible()) throw DomainError("inverse: singular value at x = " + std::to_string(x));
      return lu.inverse();
    }
    case Kind::kDiag: {
      ComplexMatrix out = ComplexMatrix::Zero(dim, dim);
      for (int i = 0; i < dim; ++i) out(i, i) = children[i].node().eval(x)(0, 0);
      return out;
    }
  }
  throw DomainError("unknown matrix function kind");
}

MatrixFunction MatrixFunction::from_node(MfNode node) {
  return MatrixFunction(std::make_shared<const MfNode>(std::move(node)));
}

MatrixFunction MatrixFunction::constant(ComplexMatrix value, Interval domain) {
  require_square(value, "constant");
  require_finite(value, "constant");
  MfNode n = blank(Kind::kConstant, static_cast<int>(value.rows()), domain);
  n.matrices.push_back(std::move(value));
  return from_node(std::move(n));
}

MatrixFunction MatrixFunction::zero(int dim, Interval domain) {
  return constant(zero_matrix(dim), domain);
}

MatrixFunction MatrixFunction::identity(int dim, Interval domain) {
  return constant(identity_matrix(dim), domain);
}

MatrixFunction MatrixFunction::affine(ComplexMatrix a0, ComplexMatrix a1, Interval domain) {
  require_square(a0, "affine");
  require_square(a1, "affine");
  if (a0.rows() != a1.rows()) throw DimensionError("affine: A0 and A1 differ in size");
  require_finite(a0, "affine");
  require_finite(a1, "affine");
  if (a1.isZero(0.0)) return constant(std::move(a0), domain);
  MfNode n = blank(Kind::kAffine, static_cast<int>(a0.rows()), domain);
  n.matrices = {std::move(a0), std::move(a1)};
  return from_node(std::move(n));
}

MatrixFunction MatrixFunction::grid(std::vector<double> points, std::vector<ComplexMatrix> values,
                                    int order, Interval domain) {
  if (points.empty() || points.size() != values.size())
    throw DomainError("grid: need matching non-empty points and values");
  if (order != 0 && order != 1 && order != 3)
    throw DomainError("grid: interpolation order must be 0, 1 or 3");
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!domain.contains(points[i])) throw DomainError("grid: sample point outside domain");
    if (i > 0 && !(points[i] > points[i - 1]))
      throw DomainError("grid: sample points must be strictly increasing");
    require_square(values[i], "grid");
    require_finite(values[i], "grid");
    if (values[i].rows() != values[0].rows()) throw DimensionError("grid: samples differ in size");
  }
  MfNode n = blank(Kind::kGrid, static_cast<int>(values[0].rows()), domain);
  n.order = order;
  if (order == 3 && points.size() >= 4) n.second_derivatives = spline_second_derivatives(points, values);
  n.points = std::move(points);
  n.matrices = std::move(values);
  return from_node(std::move(n));
}

MatrixFunction MatrixFunction::callable(int dim, Callback fn, Interval domain) {
  if (dim < 1) throw DimensionError("callable: dimension must be positive");
  if (!fn) throw DomainError("callable: empty function");
  MfNode n = blank(Kind::kCallable, dim, domain);
  n.callback = std::move(fn);
  return from_node(std::move(n));
}

MatrixFunction MatrixFunction::scalar(std::function<Complex(double)> fn, Interval domain) {
  return callable(
      1,
      [fn = std::move(fn)](double x) {
        ComplexMatrix m(1, 1);
        m(0, 0) = fn(x);
        return m;
      },
      domain);
}

MatrixFunction MatrixFunction::sum(const std::vector<MatrixFunction>& terms) {
  if (terms.empty()) throw DomainError("sum: no terms");
  const int dim = terms[0].dim();
  ComplexMatrix a0 = ComplexMatrix::Zero(dim, dim);
  ComplexMatrix a1 = ComplexMatrix::Zero(dim, dim);
  std::vector<MatrixFunction> rest;
  for (const auto& t : terms) {
    require_dims(terms[0], t, "sum");
    const auto add = [&](const MatrixFunction& f) {
      if (is_affine_or_constant(f)) {
        auto [c0, c1] = affine_parts(f);
        a0 += c0;
        a1 += c1;
      } else {
        rest.push_back(f);
      }
    };
    if (t.kind() == Kind::kSum) {
      for (const auto& c : t.node().children) add(c);
    } else {
      add(t);
    }
  }
  MatrixFunction folded = affine(a0, a1, terms[0].domain());
  if (rest.empty()) return folded;
  if (!folded.is_zero()) rest.insert(rest.begin(), folded);
  if (rest.size() == 1) return rest[0];
  return composite(Kind::kSum, dim, std::move(rest));
}

MatrixFunction MatrixFunction::product(const MatrixFunction& a, const MatrixFunction& b) {
  require_dims(a, b, "product");
  const Interval& dom = a.domain();
  if (a.is_zero() || b.is_zero()) return zero(a.dim(), dom);
  const auto ca = a.constant_value();
  const auto cb = b.constant_value();
  if (ca && cb) return constant(*ca * *cb, dom);
  if (ca && ca->isIdentity(0.0)) return b;
  if (cb && cb->isIdentity(0.0)) return a;
  if (ca && b.kind() == Kind::kAffine) {
    auto [b0, b1] = affine_parts(b);
    return affine(*ca * b0, *ca * b1, dom);
  }
  if (cb && a.kind() == Kind::kAffine) {
    auto [a0, a1] = affine_parts(a);
    return affine(a0 * *cb, a1 * *cb, dom);
  }
  return composite(Kind::kProduct, a.dim(), {a, b});
}

MatrixFunction MatrixFunction::kron(const MatrixFunction& a, const MatrixFunction& b) {
  require_same_domain(a, b);
  const Interval& dom = a.domain();
  const int dim = a.dim() * b.dim();
  if (a.is_zero() || b.is_zero()) return zero(dim, dom);
  const auto ca = a.constant_value();
  const auto cb = b.constant_value();
  if (ca && cb) return constant(fieldtn::kron(*ca, *cb), dom);
  if (ca && b.kind() == Kind::kAffine) {
    auto [b0, b1] = affine_parts(b);
    return affine(fieldtn::kron(*ca, b0), fieldtn::kron(*ca, b1), dom);
  }
  if (cb && a.kind() == Kind::kAffine) {
    auto [a0, a1] = affine_parts(a);
    return affine(fieldtn::kron(a0, *cb), fieldtn::kron(a1, *cb), dom);
  }
  return composite(Kind::kKron, dim, {a, b});
}

MatrixFunction MatrixFunction::scale(Complex w, const MatrixFunction& f) {
  if (w == Complex(0.0)) return zero(f.dim(), f.domain());
  if (w == Complex(1.0) || f.is_zero()) return f;
  if (is_affine_or_constant(f)) {
    auto [a0, a1] = affine_parts(f);
    return affine(w * a0, w * a1, f.domain());
  }
  if (f.kind() == Kind::kScale) return scale(w * f.node().weight, f.node().children[0]);
  return composite(Kind::kScale, f.dim(), {f}, w);
}

MatrixFunction MatrixFunction::scalar_times(const MatrixFunction& s, const MatrixFunction& m) {
  if (s.dim() != 1) throw DimensionError("scalar_times: left factor must be 1x1");
  require_same_domain(s, m);
  if (s.is_zero() || m.is_zero()) return zero(m.dim(), m.domain());
  if (const auto c = s.constant_value()) return scale((*c)(0, 0), m);
  if (const auto c = m.constant_value(); c && m.dim() == 1) return scale((*c)(0, 0), s);
  return composite(Kind::kScalarTimes, m.dim(), {s, m});
}

MatrixFunction MatrixFunction::direct_sum(const std::vector<MatrixFunction>& blocks) {
  if (blocks.empty()) throw DomainError("direct_sum: no blocks");
  if (blocks.size() == 1) return blocks[0];
  int dim = 0;
  bool all_affine = true;
  for (const auto& b : blocks) {
    require_same_domain(blocks[0], b);
    dim += b.dim();
    all_affine = all_affine && is_affine_or_constant(b);
  }
  if (all_affine) {
    std::vector<ComplexMatrix> p0;
    std::vector<ComplexMatrix> p1;
    for (const auto& b : blocks) {
      auto [a0, a1] = affine_parts(b);
      p0.push_back(a0);
      p1.push_back(a1);
    }
    return affine(fieldtn::direct_sum(p0), fieldtn::direct_sum(p1), blocks[0].domain());
  }
  return composite(Kind::kDirectSum, dim, blocks);
}

MatrixFunction MatrixFunction::diag(const std::vector<MatrixFunction>& scalars) {
  if (scalars.empty()) throw DomainError("diag: no entries");
  bool all_const = true;
  for (const auto& s : scalars) {
    if (s.dim() != 1) throw DimensionError("diag: entries must be 1x1");
    require_same_domain(scalars[0], s);
    all_const = all_const && s.is_constant();
  }
  const int dim = static_cast<int>(scalars.size());
  if (all_const) {
    ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) m(i, i) = (*scalars[i].constant_value())(0, 0);
    return constant(m, scalars[0].domain());
  }
  return composite(Kind::kDiag, dim, scalars);
}

MatrixFunction MatrixFunction::conj() const {
  if (kind() == Kind::kConj) return node_->children[0];
  if (is_affine_or_constant(*this)) {
    auto [a0, a1] = affine_parts(*this);
    return affine(a0.conjugate(), a1.conjugate(), domain());
  }
  return composite(Kind::kConj, dim(), {*this});
}

MatrixFunction MatrixFunction::adjoint() const {
  if (kind() == Kind::kAdjoint) return node_->children[0];
  if (is_affine_or_constant(*this)) {
    auto [a0, a1] = affine_parts(*this);
    return affine(a0.adjoint(), a1.adjoint(), domain());
  }
  return composite(Kind::kAdjoint, dim(), {*this});
}

MatrixFunction MatrixFunction::exp() const {
  if (const auto c = constant_value()) return constant(mat_exp(*c), domain());
  return composite(Kind::kExp, dim(), {*this});
}

MatrixFunction MatrixFunction::inverse() const {
  if (const auto c = constant_value()) {
    Eigen::FullPivLU<ComplexMatrix> lu(*c);
    if (!lu.isInvertible()) throw DomainError("inverse: singular constant matrix");
    return constant(lu.inverse(), domain());
  }
  if (kind() == Kind::kInverse) return node_->children[0];
  return composite(Kind::kInverse, dim(), {*this});
}

int MatrixFunction::dim() const noexcept { return node_->dim; }
const Interval& MatrixFunction::domain() const noexcept { return node_->domain; }
MatrixFunction::Kind MatrixFunction::kind() const noexcept { return node_->kind; }

ComplexMatrix MatrixFunction::operator()(double x) const {
  return node_->eval(node_->domain.clamp_checked(x));
}

bool MatrixFunction::is_zero() const noexcept {
  return node_->kind == Kind::kConstant && node_->matrices[0].isZero(0.0);
}

bool MatrixFunction::is_constant() const noexcept { return node_->kind == Kind::kConstant; }

bool MatrixFunction::is_piecewise_constant() const {
  switch (node_->kind) {
    case Kind::kConstant:
      return true;
    case Kind::kGrid:
      return node_->order == 0;
    case Kind::kAffine:
    case Kind::kCallable:
      return false;
    default:
      return std::all_of(node_->children.begin(), node_->children.end(),
                         [](const MatrixFunction& c) { return c.is_piecewise_constant(); });
  }
}

std::optional<ComplexMatrix> MatrixFunction::constant_value() const {
  if (node_->kind != Kind::kConstant) return std::nullopt;
  return node_->matrices[0];
}

std::vector<double> MatrixFunction::breakpoints() const {
  std::vector<double> pts;
  collect_breakpoints(*node_, pts);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const Interval& d = domain();
  std::erase_if(pts, [&](double p) { return !(p > d.x_minus() && p < d.x_plus()); });
  return pts;
}

bool MatrixFunction::serializable() const {
  if (node_->kind == Kind::kCallable) return false;
  return std::all_of(node_->children.begin(), node_->children.end(),
                     [](const MatrixFunction& c) { return c.serializable(); });
}

void require_same_domain(const MatrixFunction& a, const MatrixFunction& b) {
  if (!(a.domain() == b.domain())) throw DomainError("matrix functions live on different intervals");
}

}  // namespace fieldtn
