#include "vtm/core/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "vtm/core/errors.hpp"

namespace vtm {
namespace {

double diagonal_scale(const Eigen::MatrixXd& a) {
  return a.rows() == 0 ? 0.0 : a.diagonal().cwiseAbs().maxCoeff();
}

double diagonal_scale(const SparseMatrix& a) {
  double scale = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    scale = std::max(scale, std::abs(a.coeff(i, i)));
  }
  return scale;
}

Definiteness classify_by_eigenvalues(const Eigen::MatrixXd& a, double tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a,
                                                     Eigen::EigenvaluesOnly);
  double lo = eig.eigenvalues().minCoeff();
  if (lo > tol) return Definiteness::kPositiveDefinite;
  if (lo >= -tol) return Definiteness::kPositiveSemidefinite;
  return Definiteness::kIndefinite;
}

// Cholesky probe used for large sparse matrices. Returns the smallest
// squared pivot, or a negative value when the factorization broke down.
double sparse_min_pivot(const SparseMatrix& a) {
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>
      llt(a);
  if (llt.info() != Eigen::Success) return -1.0;
  SparseMatrix l = llt.matrixL();
  double lo = l.diagonal().cwiseAbs2().minCoeff();
  return std::isfinite(lo) ? lo : -1.0;
}

}  // namespace

std::string_view to_string(Definiteness d) {
  switch (d) {
    case Definiteness::kPositiveDefinite:
      return "SPD";
    case Definiteness::kPositiveSemidefinite:
      return "SNND";
    case Definiteness::kIndefinite:
      return "indefinite";
  }
  return "unknown";
}

Definiteness classify(const Eigen::MatrixXd& a, double pivot_tol) {
  if (a.rows() == 0) return Definiteness::kPositiveDefinite;
  const double scale = diagonal_scale(a);
  if (scale == 0.0) {
    return a.isZero(0.0) ? Definiteness::kPositiveSemidefinite
                         : Definiteness::kIndefinite;
  }
  const double tol = pivot_tol * scale;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  const double reconstruction =
      ldlt.info() == Eigen::Success
          ? (ldlt.reconstructedMatrix() - a).norm() / a.norm()
          : INFINITY;
  // Diagonal pivoting alone can stall on zero-diagonal blocks; fall back to
  // the spectrum when the factorization does not reproduce the matrix.
  if (!(reconstruction <= 1e-8)) return classify_by_eigenvalues(a, tol);

  const double lo = ldlt.vectorD().minCoeff();
  if (lo > tol) return Definiteness::kPositiveDefinite;
  if (lo >= -tol) return Definiteness::kPositiveSemidefinite;
  return Definiteness::kIndefinite;
}

Definiteness classify(const SparseMatrix& a, double pivot_tol) {
  if (a.rows() <= kDenseLimit) return classify(Eigen::MatrixXd(a), pivot_tol);

  const double scale = diagonal_scale(a);
  if (scale == 0.0) {
    return a.nonZeros() == 0 ? Definiteness::kPositiveSemidefinite
                             : Definiteness::kIndefinite;
  }
  if (sparse_min_pivot(a) > pivot_tol * scale) {
    return Definiteness::kPositiveDefinite;
  }
  // Semidefinite probe: the matrix must become definite under a tiny shift.
  SparseMatrix shifted = a;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    shifted.coeffRef(i, i) += 1e-8 * scale;
  }
  return sparse_min_pivot(shifted) > 0.0 ? Definiteness::kPositiveSemidefinite
                                         : Definiteness::kIndefinite;
}

SpdFactorization::SpdFactorization(const SparseMatrix& a, double pivot_tol)
    : size_(a.rows()) {
  if (a.rows() != a.cols()) throw InputError("factorization of non-square matrix");
  if (size_ == 0) return;
  const double scale = diagonal_scale(a);
  const double tol = pivot_tol * scale;
  const double a_norm = a.norm();

  if (size_ <= kDenseLimit) {
    Eigen::MatrixXd dense(a);
    auto llt = std::make_shared<Eigen::LLT<Eigen::MatrixXd>>(dense);
    if (llt->info() != Eigen::Success || scale == 0.0) {
      throw NumericalError("matrix is not positive definite (Cholesky failed)");
    }
    Eigen::MatrixXd l = llt->matrixL();
    double lo = l.diagonal().cwiseAbs2().minCoeff();
    if (!(lo > tol)) {
      throw NumericalError("matrix is not positive definite (pivot " +
                           std::to_string(lo) + " below tolerance)");
    }
    residual_ = (l * l.transpose() - dense).norm() / a_norm;
    dense_ = std::move(llt);
    return;
  }

  auto llt = std::make_shared<SparseLlt>(a);
  if (llt->info() != Eigen::Success || scale == 0.0) {
    throw NumericalError("matrix is not positive definite (Cholesky failed)");
  }
  SparseMatrix l = llt->matrixL();
  double lo = l.diagonal().cwiseAbs2().minCoeff();
  if (!(lo > tol)) {
    throw NumericalError("matrix is not positive definite (pivot " +
                         std::to_string(lo) + " below tolerance)");
  }
  SparseMatrix permuted;
  permuted = a.twistedBy(llt->permutationP());
  SparseMatrix product = l * SparseMatrix(l.transpose());
  residual_ = (product - permuted).norm() / a_norm;
  sparse_ = std::move(llt);
}

Eigen::VectorXd SpdFactorization::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != size_) {
    throw InputError("solve: rhs length " + std::to_string(rhs.size()) +
                     " does not match factor size " + std::to_string(size_));
  }
  if (size_ == 0) return rhs;
  if (dense_) return dense_->solve(rhs);
  return sparse_->solve(rhs);
}

Eigen::MatrixXd SpdFactorization::solve(const Eigen::MatrixXd& rhs) const {
  if (rhs.rows() != size_) {
    throw InputError("solve: rhs rows do not match factor size");
  }
  if (size_ == 0) return rhs;
  if (dense_) return dense_->solve(rhs);
  return sparse_->solve(rhs);
}

}  // namespace vtm
