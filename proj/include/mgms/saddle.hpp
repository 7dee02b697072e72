#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace mgms {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct SaddleSolution {
    Eigen::VectorXd u;
    Eigen::VectorXd p;
    double multiplier = 0.0;
    /// ||K x - b|| / ||b|| of the full bordered system (0 for b = 0).
    double relative_residual = 0.0;
};

/// Solves the symmetric indefinite system
///
///     [ M   B^T  0 ] [u]   [g]
///     [ B   0    c ] [p] = [f]
///     [ 0   c^T  0 ] [mu]  [0]
///
/// by sparse LU with one step of iterative refinement. The last row pins
/// c^T p = 0. Throws NumericalError when the factorization breaks down or
/// the relative residual stays above `tolerance`.
SaddleSolution solve_bordered_saddle(const SparseMatrix& mass, const SparseMatrix& div,
                                     const Eigen::VectorXd& constraint,
                                     const Eigen::VectorXd& flux_rhs,
                                     const Eigen::VectorXd& pressure_rhs,
                                     double tolerance = 1e-10);

} // namespace mgms
