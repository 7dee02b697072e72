#pragma once

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "mgms/field.hpp"
#include "mgms/grid.hpp"
#include "mgms/saddle.hpp"

namespace mgms {

/// Cellwise source f.
struct SourceTerm {
    std::vector<double> values;
};

/// +1 on the first cell, -1 on the last, then shifted to exact zero mean.
SourceTerm corner_source(const GridHierarchy& g);
SourceTerm zero_source(const GridHierarchy& g);
/// Subtracts the area-weighted mean.
SourceTerm make_compatible(SourceTerm f, const GridHierarchy& g);
/// Throws InputError if f is mis-sized or |sum_t f_t |t|| > 1e-12.
void check_compatible(const SourceTerm& f, const GridHierarchy& g);

namespace rt0 {

// Lowest-order Raviart-Thomas on an h x h square with constant kappa. The
// two edges normal to each axis couple only with each other.
inline double mass_diagonal(double kappa, double h) { return h * h / (3.0 * kappa); }
inline double mass_coupling(double kappa, double h) { return h * h / (6.0 * kappa); }
/// -int_t div(phi_e) for the cell's left/bottom edge; right/top is the negative.
inline double div_entry(double h) { return h; }

} // namespace rt0

/// Fine mixed system on the interior (non-boundary) edges.
struct MixedSystem {
    int n = 0;
    SparseMatrix mass;             ///< interior dofs x interior dofs
    SparseMatrix div;              ///< cells x interior dofs
    Eigen::VectorXd load;          ///< F_t = -int_t f
    Eigen::VectorXd cell_measure;  ///< mean-zero constraint row
    std::vector<int> dof_edge;     ///< dof -> global edge
    std::vector<int> edge_dof;     ///< global edge -> dof, -1 on the boundary
};

struct MixedSolution {
    Eigen::VectorXd u;  ///< normal flux per global edge, zero on the boundary
    Eigen::VectorXd p;  ///< pressure per cell
    double relative_residual = 0.0;
};

MixedSystem assemble_fine(const PermeabilityField& field, const GridHierarchy& g,
                          const SourceTerm& f);

MixedSolution solve_saddle(const MixedSystem& sys);

/// Per-cell |(B u)_t - F_t| over all cells, u given per global edge.
Eigen::VectorXd mass_balance_residual(const MixedSystem& sys, const Eigen::VectorXd& edge_flux);

/// Convenience: assemble and solve.
MixedSolution solve_fine(const PermeabilityField& field, const GridHierarchy& g,
                         const SourceTerm& f);

} // namespace mgms
