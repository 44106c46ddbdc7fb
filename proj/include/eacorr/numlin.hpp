#pragma once

// Dense linear-algebra kernel: covariance helpers, symmetric eigen/SVD
// wrappers with a deterministic sign convention, inverse matrix square root
// and PCA. Everything is templated on the scalar type of the Eigen input.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "eacorr/error.hpp"

namespace eacorr {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Eigen::Index;

/// Rows of `x` minus the column means.
template <typename Derived>
Matrix<typename Derived::Scalar> centered(const Eigen::MatrixBase<Derived>& x) {
  return x.rowwise() - x.colwise().mean();
}

/// Sample covariance of the rows of `x` (divisor n-1).
template <typename Derived>
Matrix<typename Derived::Scalar> sample_covariance(
    const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.rows() < 2) throw DataError("sample_covariance: need at least 2 rows");
  const Matrix<Scalar> xc = centered(x);
  Matrix<Scalar> cov = Matrix<Scalar>::Zero(x.cols(), x.cols());
  cov.template selfadjointView<Eigen::Lower>().rankUpdate(xc.transpose());
  cov.template triangularView<Eigen::StrictlyUpper>() = cov.transpose();
  return cov / Scalar(x.rows() - 1);
}

/// Sample cross-covariance of paired rows (divisor n-1).
template <typename DX, typename DY>
Matrix<typename DX::Scalar> cross_covariance(const Eigen::MatrixBase<DX>& x,
                                             const Eigen::MatrixBase<DY>& y) {
  using Scalar = typename DX::Scalar;
  if (x.rows() != y.rows()) throw DataError("cross_covariance: row mismatch");
  if (x.rows() < 2) throw DataError("cross_covariance: need at least 2 rows");
  return centered(x).transpose() * centered(y) / Scalar(x.rows() - 1);
}

/// Flips each column so that its largest-magnitude entry is positive
/// (first such entry on ties). Returns the applied signs.
template <typename Derived>
Vector<typename Derived::Scalar> canonicalize_signs(
    Eigen::MatrixBase<Derived>& columns) {
  using Scalar = typename Derived::Scalar;
  Vector<Scalar> signs = Vector<Scalar>::Ones(columns.cols());
  for (Index j = 0; j < columns.cols(); ++j) {
    Index arg = 0;
    columns.col(j).cwiseAbs().maxCoeff(&arg);
    if (columns(arg, j) < Scalar(0)) {
      columns.col(j) = -columns.col(j);
      signs(j) = Scalar(-1);
    }
  }
  return signs;
}

template <typename Derived>
bool is_symmetric(const Eigen::MatrixBase<Derived>& s,
                  typename Derived::Scalar rel_tol = 1e-12) {
  using Scalar = typename Derived::Scalar;
  if (s.rows() != s.cols()) return false;
  const Scalar scale = std::max(Scalar(1), s.cwiseAbs().maxCoeff());
  return (s - s.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending.
template <typename Scalar>
struct SymEigen {
  Vector<Scalar> values;
  Matrix<Scalar> vectors;
};

template <typename Derived>
SymEigen<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& s) {
  using Scalar = typename Derived::Scalar;
  if (!is_symmetric(s)) throw DataError("sym_eig: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(s);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("sym_eig: eigendecomposition did not converge");
  }
  SymEigen<Scalar> out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  canonicalize_signs(out.vectors);
  return out;
}

/// Thin SVD a = u * diag(s) * v^T, singular values descending; each left
/// singular vector's largest-magnitude entry is positive.
template <typename Scalar>
struct Svd {
  Matrix<Scalar> u;
  Vector<Scalar> s;
  Matrix<Scalar> v;
};

template <typename Derived>
Svd<typename Derived::Scalar> svd(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  Eigen::BDCSVD<Matrix<Scalar>> solver(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  Svd<Scalar> out{solver.matrixU(), solver.singularValues(), solver.matrixV()};
  const Vector<Scalar> signs = canonicalize_signs(out.u);
  out.v = out.v * signs.asDiagonal();
  return out;
}

/// Relative floor applied to eigenvalues before taking inverse square roots.
inline constexpr double kEigenFloor = 1e-12;

/// Symmetric inverse square root R of (s + eps*I), so R (s + eps*I) R = I.
/// Eigenvalues below kEigenFloor * max are floored there (rank-deficient
/// covariances); clearly negative eigenvalues are an error.
template <typename Derived>
Matrix<typename Derived::Scalar> inv_sqrt_sym(const Eigen::MatrixBase<Derived>& s,
                                              typename Derived::Scalar eps) {
  using Scalar = typename Derived::Scalar;
  if (eps < Scalar(0)) throw ConfigError("inv_sqrt_sym: ridge must be nonnegative");
  if (!is_symmetric(s)) throw DataError("inv_sqrt_sym: matrix is not symmetric");
  Matrix<Scalar> reg = s;
  reg.diagonal().array() += eps;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(reg);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("inv_sqrt_sym: eigendecomposition did not converge");
  }
  Vector<Scalar> lambda = solver.eigenvalues();
  const Scalar top = lambda.maxCoeff();
  const Scalar slack = std::sqrt(std::numeric_limits<Scalar>::epsilon());
  if (!(top > Scalar(0)) || lambda.minCoeff() < -slack * top) {
    throw NumericalError("inv_sqrt_sym: matrix is not positive definite after ridge");
  }
  const Scalar floor = Scalar(kEigenFloor) * top;
  lambda = lambda.cwiseMax(floor);
  const Matrix<Scalar>& q = solver.eigenvectors();
  Matrix<Scalar> out = q * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * q.transpose();
  return (out + out.transpose()) / Scalar(2);
}

template <typename Scalar>
struct PcaModel {
  RowVector<Scalar> mean;       // 1 x d
  Matrix<Scalar> components;    // d x k, orthonormal columns
  Vector<Scalar> variances;     // k, descending

  Index input_dim() const { return components.rows(); }
  Index output_dim() const { return components.cols(); }
};

/// Fits the top-k principal axes of the rows of `x`. Uses the n x n Gram
/// matrix when n-1 < d and the spectrum is well separated from zero,
/// otherwise the d x d covariance.
template <typename Derived>
PcaModel<typename Derived::Scalar> pca_fit(const Eigen::MatrixBase<Derived>& x,
                                           Index k) {
  using Scalar = typename Derived::Scalar;
  const Index n = x.rows();
  const Index d = x.cols();
  if (n < 2) throw ConfigError("pca_fit: need at least 2 rows");
  if (k < 1 || k > std::min(n - 1, d)) {
    throw ConfigError("pca_fit: k=" + std::to_string(k) + " outside [1, " +
                      std::to_string(std::min(n - 1, d)) + "]");
  }
  if (!x.allFinite()) throw DataError("pca_fit: non-finite input");

  PcaModel<Scalar> model;
  model.mean = x.colwise().mean();
  const Matrix<Scalar> xc = x.rowwise() - model.mean;

  if (n - 1 < d) {
    Matrix<Scalar> gram = xc * xc.transpose() / Scalar(n - 1);
    gram = (gram + gram.transpose()) / Scalar(2);
    const SymEigen<Scalar> eig = sym_eig(gram);
    const Scalar top = eig.values(0);
    if (top > Scalar(0) && eig.values(k - 1) > Scalar(1e-8) * top) {
      model.variances = eig.values.head(k);
      model.components = xc.transpose() * eig.vectors.leftCols(k);
      for (Index j = 0; j < k; ++j) {
        model.components.col(j) /=
            std::sqrt(Scalar(n - 1) * model.variances(j));
      }
      canonicalize_signs(model.components);
      return model;
    }
  }

  const SymEigen<Scalar> eig = sym_eig(sample_covariance(x));
  model.variances = eig.values.head(k).cwiseMax(Scalar(0));
  model.components = eig.vectors.leftCols(k);
  return model;
}

template <typename Scalar, typename Derived>
Matrix<Scalar> pca_transform(const PcaModel<Scalar>& model,
                             const Eigen::MatrixBase<Derived>& x) {
  if (x.cols() != model.input_dim()) {
    throw DataError("pca_transform: expected " + std::to_string(model.input_dim()) +
                    " columns, got " + std::to_string(x.cols()));
  }
  return (x.rowwise() - model.mean) * model.components;
}

/// Maps projected rows back to input space.
template <typename Scalar, typename Derived>
Matrix<Scalar> pca_reconstruct(const PcaModel<Scalar>& model,
                               const Eigen::MatrixBase<Derived>& y) {
  if (y.cols() != model.output_dim()) {
    throw DataError("pca_reconstruct: dimension mismatch");
  }
  return (y * model.components.transpose()).rowwise() + model.mean;
}

}  // namespace eacorr
