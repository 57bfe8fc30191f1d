#include "fieldtn/propagator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "fieldtn/errors.hpp"

namespace fieldtn {

void PropagatorConfig::validate() const {
  if (!(tol >= 1e-14 && tol <= 1e-3)) throw DomainError("propagator tol must lie in [1e-14, 1e-3]");
  if (max_steps < 8) throw DomainError("propagator max_steps must be at least 8");
}

namespace {

// Step matrices always start from the identity; the ODE is linear, so the
// propagator over a union of steps is the ordered product of the step matrices.
class Stepper {
 public:
  Stepper(const MatrixFunction& g, bool later_left) : g_(g.node()), later_(later_left) {}

  ComplexMatrix mul(const ComplexMatrix& w, const ComplexMatrix& gv) const {
    return later_ ? ComplexMatrix(gv * w) : ComplexMatrix(w * gv);
  }
  ComplexMatrix chain(const ComplexMatrix& first, const ComplexMatrix& second) const {
    return later_ ? ComplexMatrix(second * first) : ComplexMatrix(first * second);
  }

  ComplexMatrix rk4(const ComplexMatrix& g0, const ComplexMatrix& gm, const ComplexMatrix& g1,
                    double h) const {
    const auto n = g0.rows();
    const ComplexMatrix id = ComplexMatrix::Identity(n, n);
    const ComplexMatrix k1 = g0;
    const ComplexMatrix k2 = mul(id + (0.5 * h) * k1, gm);
    const ComplexMatrix k3 = mul(id + (0.5 * h) * k2, gm);
    const ComplexMatrix k4 = mul(id + h * k3, g1);
    return id + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  struct Trial {
    ComplexMatrix step;
    double rel_err;
  };

  // Full step against two half steps; returns the Richardson-extrapolated step.
  Trial richardson(double t, double h) const {
    const ComplexMatrix g0 = g_.eval(t);
    const ComplexMatrix g1 = g_.eval(t + 0.25 * h);
    const ComplexMatrix g2 = g_.eval(t + 0.5 * h);
    const ComplexMatrix g3 = g_.eval(t + 0.75 * h);
    const ComplexMatrix g4 = g_.eval(t + h);
    const ComplexMatrix full = rk4(g0, g2, g4, h);
    const ComplexMatrix half = chain(rk4(g0, g1, g2, 0.5 * h), rk4(g2, g3, g4, 0.5 * h));
    const ComplexMatrix diff = half - full;
    const double scale = std::max(half.norm(), std::numeric_limits<double>::min());
    return {half + diff / 15.0, diff.norm() / (15.0 * scale)};
  }

  ComplexMatrix plain(double t, double h) const {
    return rk4(g_.eval(t), g_.eval(t + 0.5 * h), g_.eval(t + h), h);
  }

 private:
  const detail::MfNode& g_;
  bool later_;
};

// Segment boundaries of [a, b] split at the generator's breakpoints.
std::vector<double> segment_points(const MatrixFunction& G, double a, double b) {
  std::vector<double> pts{a};
  for (double p : G.breakpoints())
    if (p > a && p < b) pts.push_back(p);
  pts.push_back(b);
  return pts;
}

// Adaptive integration of one smooth segment; accepted steps go to `sink`.
template <class Sink>
void integrate_segment(const Stepper& st, double s, double e, double total, double tol,
                       int max_steps, int& steps, double& achieved, Sink&& sink) {
  const double eps = std::numeric_limits<double>::epsilon();
  double t = s;
  double h = (e - s) / 4.0;
  while (t < e) {
    if (t + h >= e || (e - (t + h)) < 1e-3 * h) h = e - t;
    if (++steps > max_steps)
      throw AccuracyError("path_ordered_exp: step budget of " + std::to_string(max_steps) +
                              " exhausted at tol " + std::to_string(tol),
                          achieved);
    const auto trial = st.richardson(t, h);
    const double allowed = tol * h / total;
    if (!std::isfinite(trial.rel_err))
      throw AccuracyError("path_ordered_exp: non-finite step", achieved);
    if (trial.rel_err <= std::max(allowed, 8.0 * eps)) {
      sink(t, t + h, trial.step);
      achieved += trial.rel_err;
      t += h;
      const double grow =
          trial.rel_err == 0.0 ? 4.0 : 0.9 * std::pow(allowed / trial.rel_err, 0.25);
      h *= std::clamp(grow, 0.2, 4.0);
    } else {
      h *= std::clamp(0.9 * std::pow(allowed / trial.rel_err, 0.25), 0.1, 0.9);
      if (h <= 64.0 * eps * std::max(std::abs(t), total))
        throw AccuracyError("path_ordered_exp: step size underflow", achieved);
    }
  }
}

ComplexMatrix checked_inverse(const ComplexMatrix& m) {
  Eigen::FullPivLU<ComplexMatrix> lu(m);
  if (!lu.isInvertible()) throw DomainError("propagator is numerically singular");
  return lu.inverse();
}

}  // namespace

ComplexMatrix path_ordered_exp(const MatrixFunction& G, double a, double b,
                               const PropagatorConfig& cfg, Ordering ordering) {
  cfg.validate();
  a = G.domain().clamp_checked(a);
  b = G.domain().clamp_checked(b);
  if (a > b) throw DomainError("path_ordered_exp: a > b; use reverse_propagator");
  const int n = G.dim();
  if (a == b) return identity_matrix(n);
  if (const auto c = G.constant_value()) return mat_exp((b - a) * *c);

  const Stepper st(G, ordering == Ordering::kLaterLeft);
  const auto pts = segment_points(G, a, b);
  ComplexMatrix w = identity_matrix(n);
  if (G.is_piecewise_constant()) {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double len = pts[i + 1] - pts[i];
      w = st.chain(w, mat_exp(len * G.node().eval(0.5 * (pts[i] + pts[i + 1]))));
    }
    return w;
  }
  const double total = b - a;
  if (cfg.method == StepMethod::kFixedRk4) {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const double len = pts[i + 1] - pts[i];
      const int steps = std::max(1, static_cast<int>(std::lround(cfg.max_steps * len / total)));
      const double h = len / steps;
      for (int k = 0; k < steps; ++k) w = st.chain(w, st.plain(pts[i] + k * h, h));
    }
    return w;
  }
  int steps = 0;
  double achieved = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i)
    integrate_segment(st, pts[i], pts[i + 1], total, cfg.tol, cfg.max_steps, steps, achieved,
                      [&](double, double, const ComplexMatrix& s) { w = st.chain(w, s); });
  return w;
}

ComplexMatrix reverse_propagator(const MatrixFunction& G, double a, double b,
                                 const PropagatorConfig& cfg, Ordering ordering) {
  return checked_inverse(path_ordered_exp(G, a, b, cfg, ordering));
}

PropagatorTable::PropagatorTable(MatrixFunction G, const PropagatorConfig& cfg)
    : G_(std::move(G)), cfg_(cfg) {
  cfg_.validate();
  constant_ = G_.is_constant();
  if (constant_) {
    // Small or very stiff generators go straight to mat_exp per query.
    const ComplexMatrix& Q = G_.node().matrices[0];
    const double len = G_.domain().length();
    const double norm1 = Q.cwiseAbs().colwise().sum().maxCoeff();
    const int cells = std::max(1, static_cast<int>(std::ceil(len * norm1 / 0.5)));
    if (Q.rows() < 8 || cells > 256) return;
    const_step_ = len / cells;
    const ComplexMatrix E = mat_exp(const_step_ * Q);
    const_grid_.push_back(identity_matrix(G_.dim()));
    for (int m = 1; m <= cells; ++m)
      const_grid_.push_back(m % 16 == 0 ? mat_exp((m * const_step_) * Q) : ComplexMatrix(const_grid_.back() * E));
    const_terms_.push_back(identity_matrix(G_.dim()));
    for (int k = 1; k <= 20; ++k) const_terms_.push_back(const_terms_.back() * Q / static_cast<double>(k));
    return;
  }
  piecewise_ = G_.is_piecewise_constant();
  const Interval& d = G_.domain();
  const auto pts = segment_points(G_, d.x_minus(), d.x_plus());
  const Stepper st(G_, false);
  std::vector<ComplexMatrix> steps;
  nodes_.push_back(pts.front());
  if (piecewise_) {
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      steps.push_back(mat_exp((pts[i + 1] - pts[i]) * G_.node().eval(0.5 * (pts[i] + pts[i + 1]))));
      nodes_.push_back(pts[i + 1]);
    }
  } else {
    int count = 0;
    double achieved = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      integrate_segment(st, pts[i], pts[i + 1], d.length(), cfg_.tol, cfg_.max_steps, count,
                        achieved, [&](double, double t1, const ComplexMatrix& s) {
                          steps.push_back(s);
                          nodes_.push_back(t1);
                        });
    nodes_.back() = pts.back();
  }
  leaves_ = 1;
  while (leaves_ < steps.size()) leaves_ <<= 1;
  const int n = G_.dim();
  tree_.assign(2 * leaves_, identity_matrix(n));
  for (std::size_t i = 0; i < steps.size(); ++i) tree_[leaves_ + i] = std::move(steps[i]);
  for (std::size_t i = leaves_ - 1; i >= 1; --i) tree_[i] = tree_[2 * i] * tree_[2 * i + 1];
}

ComplexMatrix PropagatorTable::range(std::size_t i, std::size_t k) const {
  // Product of steps i .. k-1 in order.
  const int n = G_.dim();
  ComplexMatrix left = identity_matrix(n);
  ComplexMatrix right = identity_matrix(n);
  std::size_t lo = i + leaves_;
  std::size_t hi = k + leaves_;
  while (lo < hi) {
    if (lo & 1) left = left * tree_[lo++];
    if (hi & 1) right = tree_[--hi] * right;
    lo >>= 1;
    hi >>= 1;
  }
  return left * right;
}

ComplexMatrix PropagatorTable::constant_exp(double t) const {
  if (const_grid_.empty()) return mat_exp(t * G_.node().matrices[0]);
  const std::size_t last = const_grid_.size() - 1;
  const std::size_t m = std::min(last, static_cast<std::size_t>(t / const_step_));
  const double r = t - static_cast<double>(m) * const_step_;
  if (r <= 0.0) return const_grid_[m];
  // |r| * |Q| <= 0.5, so twenty Taylor terms reach machine precision.
  ComplexMatrix tail = const_terms_.back();
  for (std::size_t k = const_terms_.size() - 1; k-- > 0;) tail = const_terms_[k] + r * tail;
  return m == 0 ? tail : ComplexMatrix(const_grid_[m] * tail);
}

ComplexMatrix PropagatorTable::partial(double a, double b) const {
  if (a >= b) return identity_matrix(G_.dim());
  if (piecewise_) return mat_exp((b - a) * G_.node().eval(0.5 * (a + b)));
  // A sub-step of an accepted step: the plain RK4 error is bounded by the
  // accepted step's estimate, so the cheaper single step suffices.
  return Stepper(G_, false).plain(a, b - a);
}

ComplexMatrix PropagatorTable::operator()(double a, double b) const {
  const Interval& d = G_.domain();
  a = d.clamp_checked(a);
  b = d.clamp_checked(b);
  if (a > b) throw DomainError("PropagatorTable: a > b");
  if (a == b) return identity_matrix(G_.dim());
  if (constant_) return constant_exp(b - a);
  const std::size_t i =
      static_cast<std::size_t>(std::lower_bound(nodes_.begin(), nodes_.end(), a) - nodes_.begin());
  const std::size_t k = static_cast<std::size_t>(
                            std::upper_bound(nodes_.begin(), nodes_.end(), b) - nodes_.begin()) - 1;
  if (i > k || i >= nodes_.size()) return partial(a, b);
  ComplexMatrix out = range(i, k);
  if (a < nodes_[i]) out = partial(a, nodes_[i]) * out;
  if (b > nodes_[k]) out = out * partial(nodes_[k], b);
  return out;
}

ChainEvaluator::ChainEvaluator(ComplexMatrix boundary, MatrixFunction generator,
                               std::vector<MatrixFunction> insertions, const PropagatorConfig& cfg)
    : boundary_(std::move(boundary)), insertions_(std::move(insertions)),
      table_(std::move(generator), cfg) {
  if (boundary_.rows() != dim() || boundary_.cols() != dim())
    throw DimensionError("ChainEvaluator: boundary does not match the generator");
  left_ = identity_matrix(dim());
  right_ = boundary_;
  if (dim() >= 8) {
    const Eigen::BDCSVD<ComplexMatrix> svd(boundary_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double cut = 1e-15 * dim() * (sv.size() ? sv(0) : 0.0);
    Eigen::Index rank = 0;
    while (rank < sv.size() && sv(rank) > cut) ++rank;
    if (2 * rank <= dim()) {
      left_ = svd.matrixU().leftCols(rank) * sv.head(rank).asDiagonal();
      right_ = svd.matrixV().leftCols(rank).adjoint();
    }
  }
  for (const auto& k : insertions_) {
    if (k.dim() != dim()) throw DimensionError("ChainEvaluator: insertion dimension mismatch");
    require_same_domain(k, table_.generator());
  }
}

Complex ChainEvaluator::trace(std::span<const int> labels, std::span<const double> xs) const {
  if (labels.size() != xs.size()) throw DomainError("trace: labels and points differ in length");
  const Interval& d = interval();
  double prev = d.x_minus();
  ComplexMatrix m = identity_matrix(dim());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = d.clamp_checked(xs[i]);
    if (x < prev) throw DomainError("trace: points must be non-decreasing");
    if (labels[i] < 0 || labels[i] >= alphabet()) throw DomainError("trace: label out of range");
    m = m * table_(prev, x) * insertions_[labels[i]].node().eval(x);
    prev = x;
  }
  m = m * table_(prev, d.x_plus());
  return (boundary_.transpose().cwiseProduct(m)).sum();
}

std::vector<Complex> ChainEvaluator::trace_all(std::span<const double> xs) const {
  const Interval& d = interval();
  std::vector<ComplexMatrix> segments;
  std::vector<std::vector<ComplexMatrix>> inserts;
  double prev = d.x_minus();
  for (double raw : xs) {
    const double x = d.clamp_checked(raw);
    if (x < prev) throw DomainError("trace_all: points must be non-decreasing");
    segments.push_back(table_(prev, x));
    std::vector<ComplexMatrix> vals;
    for (const auto& k : insertions_) vals.push_back(k.node().eval(x));
    inserts.push_back(std::move(vals));
    prev = x;
  }
  segments.push_back(table_(prev, d.x_plus()));
  return trace_all(segments, inserts);
}

std::vector<Complex> ChainEvaluator::trace_all(
    std::span<const ComplexMatrix> segments,
    std::span<const std::vector<ComplexMatrix>> inserts) const {
  const std::size_t j = inserts.size();
  if (segments.size() != j + 1) throw DimensionError("trace_all: need j+1 segments");
  const std::size_t A = insertions_.size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < j; ++i) total *= A;
  const Eigen::Index r = right_.rows();
  if (r == 0) return std::vector<Complex>(total, Complex(0.0));
  const Eigen::Index n = dim();
  const std::size_t h = j / 2;

  // Tr(B X) = Tr(right X left). Prefix strings are stacked as r-row blocks,
  // suffix strings as r-column blocks; block order is the string's base-A value.
  ComplexMatrix pre = right_ * segments[0];
  for (std::size_t i = 1; i <= h; ++i) {
    const Eigen::Index blocks = pre.rows() / r;
    ComplexMatrix next(blocks * static_cast<Eigen::Index>(A) * r, n);
    for (Eigen::Index p = 0; p < blocks; ++p)
      for (std::size_t a = 0; a < A; ++a)
        next.middleRows((p * static_cast<Eigen::Index>(A) + static_cast<Eigen::Index>(a)) * r, r).noalias() =
            pre.middleRows(p * r, r) * inserts[i - 1][a];
    pre.noalias() = next * segments[i];
  }
  ComplexMatrix suf = left_;
  for (std::size_t i = j; i > h; --i) {
    const ComplexMatrix moved = segments[i] * suf;
    const Eigen::Index cols = moved.cols();
    ComplexMatrix next(n, cols * static_cast<Eigen::Index>(A));
    for (std::size_t a = 0; a < A; ++a)
      next.middleCols(static_cast<Eigen::Index>(a) * cols, cols).noalias() = inserts[i - 1][a] * moved;
    suf = std::move(next);
  }
  const Eigen::Index np = pre.rows() / r, ns = suf.cols() / r;
  std::vector<Complex> out(static_cast<std::size_t>(np * ns));
  for (Eigen::Index p = 0; p < np; ++p) {
    const auto P = pre.middleRows(p * r, r);
    for (Eigen::Index q = 0; q < ns; ++q) {
      const auto S = suf.middleCols(q * r, r);
      out[static_cast<std::size_t>(p * ns + q)] = (P.transpose().cwiseProduct(S)).sum();
    }
  }
  return out;
}

void require_strictly_increasing(std::span<const double> xs, const Interval& interval) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i]) || !interval.contains(xs[i]))
      throw DomainError("point " + std::to_string(xs[i]) + " outside the interval");
    if (i > 0 && !(xs[i] > xs[i - 1]))
      throw DomainError("points must be strictly increasing");
  }
}

}  // namespace fieldtn
