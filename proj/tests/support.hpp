#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <functional>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "fieldtn/cmpo.hpp"
#include "fieldtn/cmps.hpp"
#include "fieldtn/random.hpp"

namespace fieldtn::testing {

inline double frob(const ComplexMatrix& m) { return m.norm(); }

inline double rel_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

// exp(M) by plain Taylor summation after halving M until it is small, then
// squaring back. Written independently of the library's mat_exp.
inline ComplexMatrix taylor_exp(const ComplexMatrix& m) {
  int halvings = 0;
  double n = m.cwiseAbs().rowwise().sum().maxCoeff();
  while (n > 0.25) {
    n /= 2.0;
    ++halvings;
  }
  const ComplexMatrix a = m / std::ldexp(1.0, halvings);
  ComplexMatrix term = ComplexMatrix::Identity(m.rows(), m.cols());
  ComplexMatrix sum = term;
  for (int k = 1; k < 60; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
    if (term.norm() < 1e-18 * sum.norm()) break;
  }
  for (int s = 0; s < halvings; ++s) sum = sum * sum;
  return sum;
}

// Later-left product of midpoint exponentials, refined twice and Richardson
// extrapolated (the midpoint product is second order).
inline ComplexMatrix midpoint_product(const std::function<ComplexMatrix(double)>& G, double a,
                                      double b, int steps) {
  const auto run = [&](int n) {
    const double h = (b - a) / n;
    ComplexMatrix W = ComplexMatrix::Identity(G(a).rows(), G(a).cols());
    for (int k = 0; k < n; ++k) W = taylor_exp(h * G(a + (k + 0.5) * h)) * W;
    return W;
  };
  const ComplexMatrix coarse = run(steps);
  const ComplexMatrix fine = run(2 * steps);
  return (4.0 * fine - coarse) / 3.0;
}

inline MatrixFunction random_affine(Rng& rng, int D, const Interval& d, double scale) {
  return MatrixFunction::affine(rng.matrix(D, D, scale), rng.matrix(D, D, scale), d);
}

inline MatrixFunction random_constant(Rng& rng, int D, const Interval& d, double scale) {
  return MatrixFunction::constant(rng.matrix(D, D, scale), d);
}

inline Cmpo random_cmpo(Rng& rng, int D, const Interval& d, double scale, bool uniform = false) {
  const auto f = [&]() { return uniform ? random_constant(rng, D, d, scale) : random_affine(rng, D, d, scale); };
  ComplexMatrix B = rng.matrix(D, D, 1.0);
  MatrixFunction Q = f(), L = f(), R = f(), T = f();
  return Cmpo(d, B, Q, L, R, T);
}

inline Cmps random_cmps(Rng& rng, int D, const Interval& d, double scale, bool uniform = false) {
  const auto f = [&]() { return uniform ? random_constant(rng, D, d, scale) : random_affine(rng, D, d, scale); };
  ComplexMatrix B = rng.matrix(D, D, 1.0);
  MatrixFunction Q = f(), L = f();
  return Cmps(d, B, Q, L);
}

inline std::vector<double> sorted_uniform(Rng& rng, const Interval& d, int j) {
  std::vector<double> xs(static_cast<std::size_t>(j));
  for (auto& x : xs) x = rng.uniform(d.x_minus(), d.x_plus());
  std::sort(xs.begin(), xs.end());
  return xs;
}

inline std::vector<CoeffLabel> random_labels(Rng& rng, int j) {
  std::vector<CoeffLabel> out(static_cast<std::size_t>(j));
  for (auto& l : out) l = static_cast<CoeffLabel>(rng.next() % 3);
  return out;
}

// Integral over the ordered simplex x_1 <= ... <= x_j by nested 15-point
// Gauss-Legendre rules (x_k runs over [x_{k-1}, x_+]).
inline Complex simplex_integral(const std::function<Complex(std::span<const double>)>& f,
                                const Interval& d, int j) {
  using Rule = boost::math::quadrature::gauss<double, 15>;
  std::vector<double> nodes, weights;
  for (std::size_t i = 0; i < Rule::abscissa().size(); ++i) {
    const double a = Rule::abscissa()[i], w = Rule::weights()[i];
    nodes.push_back(a);
    weights.push_back(w);
    if (a != 0.0) {
      nodes.push_back(-a);
      weights.push_back(w);
    }
  }
  std::vector<double> xs(static_cast<std::size_t>(j));
  std::function<Complex(int, double)> rec = [&](int k, double lo) -> Complex {
    if (k == j) return f(xs);
    const double half = 0.5 * (d.x_plus() - lo), mid = 0.5 * (d.x_plus() + lo);
    Complex s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      xs[static_cast<std::size_t>(k)] = mid + half * nodes[i];
      s += weights[i] * half * rec(k + 1, xs[static_cast<std::size_t>(k)]);
    }
    return s;
  };
  return rec(0, d.x_minus());
}

}  // namespace fieldtn::testing
