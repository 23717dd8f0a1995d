#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "rkpca/kernel.hpp"
#include "rkpca/linalg.hpp"
#include "rkpca/types.hpp"

namespace rkpca {

/// Value of tr(K^{p/2}) + lambda ||E||_1 (+ an optional solver penalty).
template <class Scalar>
struct ObjectiveValue {
  Scalar trace_term = 0;    ///< tr(K^{p/2}) at X
  Scalar l1_term = 0;       ///< lambda * sum |E_ij|
  Scalar penalty_term = 0;  ///< 0 outside an augmented-Lagrangian context
  Scalar total = 0;
};

namespace detail {

// tr(K^{p/2}) from eigenvalues only; negative roundoff eigenvalues clamp to 0.
template <class Scalar>
Scalar kernel_trace_power(const Mat<Scalar>& x, const KernelSpec& spec) {
  const Mat<Scalar> k = kernel_matrix(x, spec);
  const Vec<Scalar> w = sym_eigenvalues(k);
  return w.cwiseMax(Scalar(0)).array().pow(Scalar(spec.schatten_p) / 2).sum();
}

}  // namespace detail

/// Evaluates the objective at (X, E). For the RBF kernel with p = 1 the
/// trace term must lie in [sqrt(n), n]; a violation beyond 1e-9 slack means
/// the eigensolve went wrong and is reported as such.
template <class Scalar>
ObjectiveValue<Scalar> eval_objective(const Mat<Scalar>& m, const Mat<Scalar>& x,
                                      const Mat<Scalar>& e, const KernelSpec& spec,
                                      Scalar lambda, Scalar penalty = Scalar(0)) {
  require(m.rows() == x.rows() && m.cols() == x.cols() && m.rows() == e.rows() &&
              m.cols() == e.cols(),
          "eval_objective: M, X, E shapes must agree");
  ObjectiveValue<Scalar> v;
  v.trace_term = detail::kernel_trace_power(x, spec);
  if (spec.family == KernelFamily::Rbf && spec.schatten_p == 1) {
    const Scalar n = Scalar(x.cols());
    if (v.trace_term < std::sqrt(n) - Scalar(1e-9) || v.trace_term > n + Scalar(1e-9))
      throw NumericalFailure("eval_objective: tr(K^{1/2}) outside [sqrt(n), n]");
  }
  v.l1_term = lambda * e.template lpNorm<1>();
  v.penalty_term = penalty;
  v.total = v.trace_term + v.l1_term + v.penalty_term;
  return v;
}

namespace detail {

// (2/sigma^2) (X H - X ∘ (B H)) given a prepared context; B H has every row
// equal to the column sums of H.
template <class Scalar>
Mat<Scalar> trace_grad_from_context(const Mat<Scalar>& x, const GradContext<Scalar>& ctx,
                                    Scalar sigma) {
  const RowVec<Scalar> colsum = ctx.grad_weight.colwise().sum();
  Mat<Scalar> g = x * ctx.grad_weight;
  g.array() -= x.array().rowwise() * colsum.array();
  return (Scalar(2) / (sigma * sigma)) * g;
}

}  // namespace detail

/// Gradient of tr(K^{p/2}) with respect to X for the RBF kernel:
/// (2/sigma^2) (X H - X ∘ (B H)).
template <class Scalar>
Mat<Scalar> grad_wrt_x(const Mat<Scalar>& x, const KernelSpec& spec,
                       Scalar floor_rel = Scalar(kEigenFloorRel)) {
  const GradContext<Scalar> ctx = grad_context(x, spec, floor_rel);
  return detail::trace_grad_from_context(x, ctx, Scalar(spec.sigma));
}

/// Gradient of tr(K^{p/2}) with respect to E where X = M - E; equals
/// -grad_wrt_x(M - E) by the chain rule.
template <class Scalar>
Mat<Scalar> grad_wrt_e(const Mat<Scalar>& m, const Mat<Scalar>& e, const KernelSpec& spec,
                       Scalar floor_rel = Scalar(kEigenFloorRel)) {
  require(m.rows() == e.rows() && m.cols() == e.cols(),
          "grad_wrt_e: M and E shapes must agree");
  return (-grad_wrt_x<Scalar>(m - e, spec, floor_rel)).eval();
}

/// Max relative disagreement between a reported gradient and central finite
/// differences of f at the given point. The error is measured against the
/// largest entry magnitude across both gradients; if both vanish the check
/// returns 0.
template <class Scalar, class F>
Scalar fd_check(F&& f, const Mat<Scalar>& grad, const Mat<Scalar>& point, Scalar h) {
  require(h > 0, "fd_check: step must be > 0");
  require(grad.rows() == point.rows() && grad.cols() == point.cols(),
          "fd_check: gradient and point shapes must agree");
  Mat<Scalar> fd(point.rows(), point.cols());
  Mat<Scalar> probe = point;
  for (Eigen::Index j = 0; j < point.cols(); ++j) {
    for (Eigen::Index i = 0; i < point.rows(); ++i) {
      const Scalar saved = probe(i, j);
      probe(i, j) = saved + h;
      const Scalar fp = f(probe);
      probe(i, j) = saved - h;
      const Scalar fm = f(probe);
      probe(i, j) = saved;
      fd(i, j) = (fp - fm) / (2 * h);
    }
  }
  const Scalar denom = std::max(grad.template lpNorm<Eigen::Infinity>(),
                                fd.template lpNorm<Eigen::Infinity>());
  if (denom == Scalar(0)) return Scalar(0);
  return (grad - fd).template lpNorm<Eigen::Infinity>() / denom;
}

}  // namespace rkpca
