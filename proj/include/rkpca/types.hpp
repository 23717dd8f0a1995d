#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace rkpca {

// Dense column-major matrices; data matrices are d x n with one sample per
// column.
template <class Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <class Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Matd = Mat<double>;
using Vecd = Vec<double>;

/// An argument violates a documented precondition.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine produced a non-finite or unusable result.
struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// The data admits no meaningful answer (e.g. all samples identical).
struct DegenerateData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Backtracking line search exhausted its step budget.
struct StepSearchFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed input file.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw InvalidInput(msg);
}

template <class Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const std::string& who) {
  if (!m.allFinite()) throw InvalidInput(who + ": non-finite entries");
}

template <class Derived>
void require_data_matrix(const Eigen::MatrixBase<Derived>& m, const std::string& who) {
  require(m.rows() >= 1 && m.cols() >= 1, who + ": empty matrix");
  require_finite(m, who);
}

}  // namespace rkpca
