#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "rkpca/types.hpp"

namespace rkpca {

/// Eigendecomposition of a real symmetric matrix, eigenvalues descending.
template <class Scalar>
struct SymEig {
  Vec<Scalar> eigenvalues;   ///< sorted descending
  Mat<Scalar> eigenvectors;  ///< orthonormal columns, paired with eigenvalues
};

namespace detail {

inline constexpr double kAsymmetryTol = 1e-10;  // relative, inf-norm
inline constexpr double kPsdTol = 1e-10;        // relative to largest eigenvalue

// ||A - A^T||_inf / ||A||_inf, defined as 0 for the zero matrix.
template <class Derived>
typename Derived::Scalar relative_asymmetry(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const Mat<Scalar> m = a.derived();
  const Scalar scale = m.template lpNorm<Eigen::Infinity>();
  if (scale == Scalar(0)) return Scalar(0);
  return (m - m.transpose()).template lpNorm<Eigen::Infinity>() / scale;
}

// Eigenvalues only (descending) of an already-symmetric matrix.
template <class Scalar>
Vec<Scalar> sym_eigenvalues(const Mat<Scalar>& sym) {
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw NumericalFailure("sym_eigenvalues: eigensolver did not converge");
  return es.eigenvalues().reverse();
}

// Spectral norm of a symmetric matrix: max |eigenvalue|. Cheaper than the
// SVD route and used inside solver loops.
template <class Scalar>
Scalar sym_spectral_norm(const Mat<Scalar>& sym) {
  const Vec<Scalar> w = sym_eigenvalues(sym);
  if (w.size() == 0) return Scalar(0);
  return std::max(std::abs(w(0)), std::abs(w(w.size() - 1)));
}

}  // namespace detail

/// Eigendecomposition of a symmetric matrix. The input is symmetrized as
/// (A + A^T)/2 first; relative asymmetry beyond 1e-10 is rejected rather
/// than silently repaired.
template <class Derived>
SymEig<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const Mat<Scalar> m = a.derived();
  require(m.rows() == m.cols(), "sym_eig: matrix must be square");
  require_finite(m, "sym_eig");
  if (detail::relative_asymmetry(m) > Scalar(detail::kAsymmetryTol))
    throw InvalidInput("sym_eig: relative asymmetry exceeds 1e-10");
  const Mat<Scalar> sym = Scalar(0.5) * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(sym);
  if (es.info() != Eigen::Success)
    throw NumericalFailure("sym_eig: eigensolver did not converge");
  SymEig<Scalar> out;
  out.eigenvalues = es.eigenvalues().reverse();
  out.eigenvectors = es.eigenvectors().rowwise().reverse();
  return out;
}

/// Spectral function A^q of a symmetric PSD matrix via its eigenbasis:
/// V diag(max(w, floor))^q V^T. Eigenvalues down to -1e-10 * w_max are
/// tolerated (roundoff) and clamped to the floor like any other small one.
template <class Derived, class Scalar = typename Derived::Scalar>
Mat<Scalar> psd_power(const Eigen::MatrixBase<Derived>& a, Scalar q, Scalar floor) {
  require(floor >= Scalar(0), "psd_power: floor must be >= 0");
  if (q < Scalar(0) && floor == Scalar(0))
    throw InvalidInput("psd_power: negative exponent requires a positive eigenvalue floor");
  const SymEig<Scalar> eig = sym_eig(a);
  const Eigen::Index n = eig.eigenvalues.size();
  const Scalar wmax = std::max(eig.eigenvalues(0), Scalar(0));
  if (eig.eigenvalues(n - 1) < -Scalar(detail::kPsdTol) * wmax)
    throw InvalidInput("psd_power: matrix is not PSD within tolerance");
  const Vec<Scalar> powered =
      eig.eigenvalues.cwiseMax(floor).array().pow(q).matrix();
  Mat<Scalar> r = eig.eigenvectors * powered.asDiagonal() * eig.eigenvectors.transpose();
  return Scalar(0.5) * (r + r.transpose());
}

/// Largest singular value.
template <class Derived>
typename Derived::Scalar spectral_norm(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const Mat<Scalar> m = a.derived();
  require_finite(m, "spectral_norm");
  if (m.size() == 0) return Scalar(0);
  Eigen::BDCSVD<Mat<Scalar>> svd(m);
  return svd.singularValues()(0);
}

/// Top-r eigenpairs of a symmetric matrix (full decomposition truncated;
/// the problem sizes here do not warrant an iterative method).
template <class Derived, class Scalar = typename Derived::Scalar>
SymEig<Scalar> truncated_eig(const Eigen::MatrixBase<Derived>& a, Eigen::Index r) {
  require(r >= 1 && r <= a.rows(), "truncated_eig: r must be in [1, n]");
  SymEig<Scalar> full = sym_eig(a);
  SymEig<Scalar> out;
  out.eigenvalues = full.eigenvalues.head(r);
  out.eigenvectors = full.eigenvectors.leftCols(r);
  return out;
}

}  // namespace rkpca
