#include "csmakit/markov.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace csmakit {

namespace {

constexpr int kDenseLimit = 4096;

void check_rows(double row_sum, double min_entry, int row, double row_tol) {
    if (std::abs(row_sum - 1.0) > row_tol) {
        throw std::invalid_argument("row " + std::to_string(row) + " sums to " +
                                    std::to_string(row_sum) + ", not 1");
    }
    if (min_entry < -row_tol) {
        throw std::invalid_argument("row " + std::to_string(row) + " has negative entry " +
                                    std::to_string(min_entry));
    }
}

Eigen::VectorXd normalize_probability(Eigen::VectorXd pi) {
    for (Eigen::Index i = 0; i < pi.size(); ++i) {
        if (pi[i] < 0.0) {
            pi[i] = 0.0;
        }
    }
    double total = pi.sum();
    if (total <= 0.0) {
        throw std::runtime_error("stationary solve produced a zero vector");
    }
    return pi / total;
}

template <typename Matrix>
Eigen::VectorXd power_iteration(const Matrix& P, double tol, int max_iter) {
    const Eigen::Index n = P.rows();
    Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    Eigen::VectorXd next(n);
    for (int it = 0; it < max_iter; ++it) {
        next.noalias() = P.transpose() * pi;
        next /= next.sum();
        double delta = (next - pi).template lpNorm<Eigen::Infinity>();
        pi.swap(next);
        if (delta <= 0.1 * tol) {
            break;
        }
    }
    return pi;
}

}  // namespace

void require_row_stochastic(const Eigen::MatrixXd& P, double row_tol) {
    if (P.rows() != P.cols()) {
        throw std::invalid_argument("transition matrix must be square");
    }
    for (Eigen::Index r = 0; r < P.rows(); ++r) {
        check_rows(P.row(r).sum(), P.row(r).minCoeff(), static_cast<int>(r), row_tol);
    }
}

void require_row_stochastic(const Eigen::SparseMatrix<double, Eigen::RowMajor>& P,
                            double row_tol) {
    if (P.rows() != P.cols()) {
        throw std::invalid_argument("transition matrix must be square");
    }
    for (int r = 0; r < P.outerSize(); ++r) {
        double sum = 0.0;
        double min_entry = 0.0;
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(P, r); it; ++it) {
            sum += it.value();
            min_entry = std::min(min_entry, it.value());
        }
        check_rows(sum, min_entry, r, row_tol);
    }
}

double stationary_residual(const Eigen::MatrixXd& P, const Eigen::VectorXd& pi) {
    return (P.transpose() * pi - pi).lpNorm<Eigen::Infinity>();
}

double stationary_residual(const Eigen::SparseMatrix<double, Eigen::RowMajor>& P,
                           const Eigen::VectorXd& pi) {
    return (P.transpose() * pi - pi).lpNorm<Eigen::Infinity>();
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P, double tol) {
    require_row_stochastic(P);
    const Eigen::Index n = P.rows();
    Eigen::VectorXd pi;
    if (n <= kDenseLimit) {
        // Solve (P^T - I) pi = 0 with the last balance equation replaced by
        // the normalization sum(pi) = 1.
        Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(n, n);
        A.row(n - 1).setOnes();
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
        b[n - 1] = 1.0;
        pi = A.partialPivLu().solve(b);
        if (!pi.allFinite()) {
            pi = A.fullPivLu().solve(b);
        }
        pi = normalize_probability(std::move(pi));
        if (stationary_residual(P, pi) > tol) {
            pi = power_iteration(P, tol, 200000);
            pi = normalize_probability(std::move(pi));
        }
    } else {
        pi = normalize_probability(power_iteration(P, tol, 200000));
    }
    double residual = stationary_residual(P, pi);
    if (residual > tol) {
        throw std::runtime_error("stationary distribution did not converge; residual " +
                                 std::to_string(residual) + " (chain reducible or singular?)");
    }
    return pi;
}

Eigen::VectorXd stationary_distribution(const Eigen::SparseMatrix<double, Eigen::RowMajor>& P,
                                        double tol) {
    require_row_stochastic(P);
    Eigen::VectorXd pi = normalize_probability(power_iteration(P, tol, 500000));
    double residual = stationary_residual(P, pi);
    if (residual > tol) {
        throw std::runtime_error("stationary distribution did not converge; residual " +
                                 std::to_string(residual) + " (chain reducible or singular?)");
    }
    return pi;
}

}  // namespace csmakit
