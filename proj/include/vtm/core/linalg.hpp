#pragma once

#include <memory>
#include <string_view>

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include "vtm/core/system.hpp"

namespace vtm {

/// Relative pivot tolerance for definiteness tests: a pivot d counts as
/// positive when d > kPivotTolerance * max|a_ii|.
inline constexpr double kPivotTolerance = 1e-12;

/// Systems above this dimension are factored in sparse storage.
inline constexpr Eigen::Index kDenseLimit = 500;

enum class Definiteness {
  kPositiveDefinite,
  kPositiveSemidefinite,
  kIndefinite,
};

std::string_view to_string(Definiteness d);

/// Classifies a symmetric matrix with a pivoted LDL^T factorization
/// (dense, dim <= kDenseLimit) or sparse Cholesky probes (larger systems).
Definiteness classify(const SparseMatrix& a, double pivot_tol = kPivotTolerance);
Definiteness classify(const Eigen::MatrixXd& a,
                      double pivot_tol = kPivotTolerance);

/// Cholesky factorization of an SPD matrix, dense or sparse by size.
/// Immutable after construction; cheap to copy (shares the factor).
class SpdFactorization {
 public:
  SpdFactorization() = default;

  /// Throws NumericalError when a pivot is not above pivot_tol * max|a_ii|.
  explicit SpdFactorization(const SparseMatrix& a,
                            double pivot_tol = kPivotTolerance);

  Eigen::Index size() const { return size_; }
  bool is_sparse() const { return sparse_ != nullptr; }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  Eigen::MatrixXd solve(const Eigen::MatrixXd& rhs) const;

  /// ||L L^T - A||_F / ||A||_F measured right after factoring.
  double reconstruction_residual() const { return residual_; }

 private:
  using SparseLlt = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower,
                                         Eigen::AMDOrdering<int>>;

  Eigen::Index size_ = 0;
  std::shared_ptr<const Eigen::LLT<Eigen::MatrixXd>> dense_;
  std::shared_ptr<const SparseLlt> sparse_;
  double residual_ = 0.0;
};

}  // namespace vtm
