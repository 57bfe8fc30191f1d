#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "fieldtn/linalg.hpp"

namespace fieldtn {

class MatrixFunction;

namespace detail {
struct MfNode;
}

/// Matrix-valued function x -> D x D on a closed interval.
///
/// Values are immutable expression trees. Leaves are constant, affine,
/// sampled-grid and callable functions; composites (sums, products, Kronecker
/// products, direct sums, ...) are produced by the algebra below. The smart
/// constructors fold constant subtrees, so combinations of constant inputs stay
/// constant and propagate exactly.
class MatrixFunction {
 public:
  enum class Kind {
    kConstant,
    kAffine,
    kGrid,
    kCallable,
    kSum,
    kProduct,
    kKron,
    kScale,
    kScalarTimes,
    kDirectSum,
    kConj,
    kAdjoint,
    kExp,
    kInverse,
    kDiag,
  };

  using Callback = std::function<ComplexMatrix(double)>;

  static MatrixFunction constant(ComplexMatrix value, Interval domain);
  static MatrixFunction zero(int dim, Interval domain);
  static MatrixFunction identity(int dim, Interval domain);
  /// A0 + x A1.
  static MatrixFunction affine(ComplexMatrix a0, ComplexMatrix a1, Interval domain);
  /// Sampled function; order 0 holds the left-nearest sample, 1 is linear,
  /// 3 is a not-a-knot cubic spline (fewer than four samples fall back to linear).
  static MatrixFunction grid(std::vector<double> points, std::vector<ComplexMatrix> values,
                             int order, Interval domain);
  /// Arbitrary in-process function; never serializable.
  static MatrixFunction callable(int dim, Callback fn, Interval domain);
  /// 1 x 1 callable from a scalar function.
  static MatrixFunction scalar(std::function<Complex(double)> fn, Interval domain);

  static MatrixFunction sum(const std::vector<MatrixFunction>& terms);
  static MatrixFunction product(const MatrixFunction& a, const MatrixFunction& b);
  static MatrixFunction kron(const MatrixFunction& a, const MatrixFunction& b);
  static MatrixFunction scale(Complex w, const MatrixFunction& f);
  /// s(x) * M(x) for a 1 x 1 function s.
  static MatrixFunction scalar_times(const MatrixFunction& s, const MatrixFunction& m);
  static MatrixFunction direct_sum(const std::vector<MatrixFunction>& blocks);
  /// diag(s_0(x), ..., s_{n-1}(x)) from 1 x 1 functions.
  static MatrixFunction diag(const std::vector<MatrixFunction>& scalars);

  MatrixFunction conj() const;
  MatrixFunction adjoint() const;
  /// Pointwise matrix exponential.
  MatrixFunction exp() const;
  /// Pointwise inverse.
  MatrixFunction inverse() const;

  friend MatrixFunction operator+(const MatrixFunction& a, const MatrixFunction& b) {
    return sum({a, b});
  }
  friend MatrixFunction operator-(const MatrixFunction& a, const MatrixFunction& b) {
    return sum({a, scale(-1.0, b)});
  }
  friend MatrixFunction operator*(const MatrixFunction& a, const MatrixFunction& b) {
    return product(a, b);
  }
  friend MatrixFunction operator*(Complex w, const MatrixFunction& f) { return scale(w, f); }

  int dim() const noexcept;
  const Interval& domain() const noexcept;
  Kind kind() const noexcept;

  /// Throws DomainError when x lies outside the domain.
  ComplexMatrix operator()(double x) const;
  ComplexMatrix evaluate(double x) const { return (*this)(x); }

  /// Structural zero (a constant zero matrix); x-dependent zeros are not detected.
  bool is_zero() const noexcept;
  bool is_constant() const noexcept;
  /// True for trees made only of constants and order-0 grids.
  bool is_piecewise_constant() const;
  /// Value of a constant function.
  std::optional<ComplexMatrix> constant_value() const;
  /// Sorted interior grid points of every grid leaf in the tree.
  std::vector<double> breakpoints() const;
  /// True when no callable leaf is present.
  bool serializable() const;

  /// Expression-tree access for serialization and inspection.
  const detail::MfNode& node() const noexcept { return *node_; }
  static MatrixFunction from_node(detail::MfNode node);

 private:
  explicit MatrixFunction(std::shared_ptr<const detail::MfNode> node) : node_(std::move(node)) {}
  std::shared_ptr<const detail::MfNode> node_;
};

namespace detail {

struct MfNode {
  MatrixFunction::Kind kind;
  int dim;
  Interval domain;
  // Leaf payloads.
  std::vector<ComplexMatrix> matrices;  // constant: {M}; affine: {A0, A1}; grid: samples
  std::vector<double> points;           // grid sample points
  std::vector<ComplexMatrix> second_derivatives;  // cubic grid
  int order = 0;
  MatrixFunction::Callback callback;
  // Composite payloads.
  std::vector<MatrixFunction> children;
  Complex weight{1.0, 0.0};

  ComplexMatrix eval(double x) const;
};

}  // namespace detail

/// a and b must share a domain (DomainError otherwise).
void require_same_domain(const MatrixFunction& a, const MatrixFunction& b);

}  // namespace fieldtn
