#pragma once

#include <Eigen/Dense>

#include <cmath>

#include "rkpca/linalg.hpp"
#include "rkpca/types.hpp"

namespace rkpca {

enum class KernelFamily { Rbf, Linear };

/// Kernel choice plus the parameters shaping tr(K^{p/2}).
struct KernelSpec {
  KernelFamily family = KernelFamily::Rbf;
  double sigma = 0;       ///< RBF bandwidth; resolve via bandwidth_heuristic before use
  double beta = 1.0;      ///< factor for the mean-pairwise-distance bandwidth rule
  double schatten_p = 1;  ///< exponent p in tr(K^{p/2}), 0 < p <= 1
};

inline void validate(const KernelSpec& spec) {
  require(spec.schatten_p > 0 && spec.schatten_p <= 1,
          "KernelSpec: schatten_p must lie in (0, 1]");
  if (spec.family == KernelFamily::Rbf)
    require(spec.sigma > 0, "KernelSpec: RBF kernel needs sigma > 0 (resolve it first)");
}

namespace detail {

// Pairwise squared distances between columns, exact zero diagonal and
// bitwise symmetric.
template <class Scalar>
Mat<Scalar> squared_distances(const Mat<Scalar>& x) {
  const Eigen::Index n = x.cols();
  const Vec<Scalar> sq = x.colwise().squaredNorm();
  Mat<Scalar> d2 = Scalar(-2) * (x.transpose() * x);
  d2.colwise() += sq;
  d2.rowwise() += sq.transpose();
  d2 = (Scalar(0.5) * (d2 + d2.transpose())).cwiseMax(Scalar(0)).eval();
  d2.diagonal().setZero();
  return d2;
}

}  // namespace detail

/// Bandwidth rule sigma = (beta / n^2) * sum_{ij} ||x_i - x_j||, summed over
/// all n^2 ordered pairs including the zero diagonal.
template <class Scalar>
Scalar bandwidth_heuristic(const Mat<Scalar>& x, Scalar beta) {
  require_data_matrix(x, "bandwidth_heuristic");
  require(x.cols() >= 2, "bandwidth_heuristic: needs at least two samples");
  require(beta > 0, "bandwidth_heuristic: beta must be > 0");
  const Eigen::Index n = x.cols();
  const Scalar total = detail::squared_distances(x).array().sqrt().sum();
  const Scalar sigma = beta / Scalar(n * n) * total;
  if (sigma == Scalar(0))
    throw DegenerateData("bandwidth_heuristic: all samples identical, RBF undefined");
  return sigma;
}

/// Kernel matrix of the columns of x.
/// RBF: K_ij = exp(-||x_i - x_j||^2 / (2 sigma^2)), unit diagonal.
/// Linear: K = X^T X.
template <class Scalar>
Mat<Scalar> kernel_matrix(const Mat<Scalar>& x, const KernelSpec& spec) {
  require_data_matrix(x, "kernel_matrix");
  validate(spec);
  if (spec.family == KernelFamily::Linear) {
    Mat<Scalar> k = x.transpose() * x;
    return (Scalar(0.5) * (k + k.transpose())).eval();
  }
  const Scalar inv = Scalar(1) / (Scalar(2) * Scalar(spec.sigma) * Scalar(spec.sigma));
  return (-inv * detail::squared_distances(x).array()).exp().matrix();
}

/// Shared pieces of the trace-term gradient for the RBF kernel:
///   grad_weight     H = (p/2) K^{p/2 - 1} ∘ K
///   grad_weight_mean  mean of all entries of B H (B the d x n ones matrix),
///                     i.e. sum(H) / n
///   trace_p         tr(K^{p/2}), reused by solvers that already paid for
///                   the eigendecomposition
/// The inverse power is stabilized by flooring eigenvalues at
/// floor_rel * max eigenvalue.
template <class Scalar>
struct GradContext {
  Mat<Scalar> kernel;           ///< K
  Mat<Scalar> grad_weight;      ///< H
  Scalar grad_weight_mean = 0;  ///< sum(H) / n
  Scalar trace_p = 0;           ///< tr(K^{p/2})
};

inline constexpr double kEigenFloorRel = 1e-10;

template <class Scalar>
GradContext<Scalar> grad_context(const Mat<Scalar>& x, const KernelSpec& spec,
                                 Scalar floor_rel = Scalar(kEigenFloorRel)) {
  require(spec.family == KernelFamily::Rbf,
          "grad_context: gradient helpers are defined for the RBF kernel");
  require(floor_rel > 0, "grad_context: floor_rel must be > 0");
  GradContext<Scalar> ctx;
  ctx.kernel = kernel_matrix(x, spec);
  const SymEig<Scalar> eig = sym_eig(ctx.kernel);
  const Scalar p = Scalar(spec.schatten_p);
  const Scalar wmax = std::max(eig.eigenvalues(0), Scalar(0));
  const Vec<Scalar> floored = eig.eigenvalues.cwiseMax(floor_rel * wmax);
  const Vec<Scalar> dpow =
      (Scalar(p / 2) * floored.array().pow(p / 2 - 1)).matrix();
  Mat<Scalar> deriv = eig.eigenvectors * dpow.asDiagonal() * eig.eigenvectors.transpose();
  deriv = Scalar(0.5) * (deriv + deriv.transpose());
  ctx.grad_weight = deriv.cwiseProduct(ctx.kernel);
  ctx.grad_weight_mean = ctx.grad_weight.sum() / Scalar(x.cols());
  ctx.trace_p = eig.eigenvalues.cwiseMax(Scalar(0)).array().pow(p / 2).sum();
  return ctx;
}

}  // namespace rkpca
