#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace csmakit {

// Stationary distribution of a finite irreducible chain with row-stochastic
// transition matrix P: the unique pi >= 0 with pi P = pi, sum(pi) = 1.
// Dense direct solve (one balance equation replaced by normalization) up to
// a size threshold, power iteration beyond it. Throws std::invalid_argument
// for a non-stochastic matrix and std::runtime_error (with the residual in
// the message) when no solution meets the tolerance.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P, double tol = 1e-10);

Eigen::VectorXd stationary_distribution(const Eigen::SparseMatrix<double, Eigen::RowMajor>& P,
                                        double tol = 1e-10);

// max_i |(pi P - pi)_i|
double stationary_residual(const Eigen::MatrixXd& P, const Eigen::VectorXd& pi);
double stationary_residual(const Eigen::SparseMatrix<double, Eigen::RowMajor>& P,
                           const Eigen::VectorXd& pi);

// Throws std::invalid_argument unless every row sums to 1 within row_tol and
// entries are nonnegative (within -row_tol).
void require_row_stochastic(const Eigen::MatrixXd& P, double row_tol = 1e-9);
void require_row_stochastic(const Eigen::SparseMatrix<double, Eigen::RowMajor>& P,
                            double row_tol = 1e-9);

}  // namespace csmakit
