#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mgms/fem_fine.hpp"
#include "mgms/msbasis.hpp"

namespace mgms {

/// Fine RT0 flux space paired with the multiscale pressure space. Coarse
/// pressure dof (b, k) is column b * n_basis + k of the prolongation.
struct CoarseSystem {
    MixedSystem fine;
    SparseMatrix prolongation;   ///< n^2 x (n_blocks * n_basis), block diagonal
    SparseMatrix div;            ///< B * prolongation, transposed to coarse rows
    Eigen::VectorXd load;        ///< prolongation^T F
    Eigen::VectorXd constraint;  ///< prolongation^T (cell measures)
};

struct CoarseSolution {
    Eigen::VectorXd u;       ///< normal flux per global fine edge
    Eigen::VectorXd coeffs;  ///< coarse pressure coefficients
    double relative_residual = 0.0;
};

/// Block-diagonal prolongation assembled from the stacked basis.
SparseMatrix prolongation(const BasisField& basis, const GridHierarchy& g);

CoarseSystem assemble_coarse(const PermeabilityField& field, const GridHierarchy& g,
                             const BasisField& basis, const SourceTerm& f);

CoarseSolution solve_coarse(const CoarseSystem& sys);

/// Fine-cell pressure prolongation * coeffs (n^2 values, global cell order).
Eigen::VectorXd downscale(const Eigen::VectorXd& coeffs, const BasisField& basis,
                          const GridHierarchy& g);

/// Coarse coefficients of a fine pressure: prolongation^T p.
Eigen::VectorXd restrict_pressure(const Eigen::VectorXd& p_fine, const BasisField& basis,
                                  const GridHierarchy& g);

/// Area-weighted relative L2 error; throws NumericalError on a zero reference.
double relative_error(const Eigen::VectorXd& p_approx, const Eigen::VectorXd& p_ref,
                      const GridHierarchy& g);

} // namespace mgms
