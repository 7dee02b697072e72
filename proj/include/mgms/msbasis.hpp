#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgms/field.hpp"
#include "mgms/grid.hpp"

namespace mgms {

/// Stored as a u8 in basis files.
enum class SnapshotVariant : std::uint8_t { Fine = 0, Dirichlet = 1, Neumann = 2 };

std::string to_string(SnapshotVariant v);
/// Accepts "fine", "dirichlet", "neumann"; throws ConfigError otherwise.
SnapshotVariant parse_variant(const std::string& name);

/// Snapshot pressures on one coarse block. Rows follow the block's cell
/// list, columns are snapshots (m^2 for Fine, 4m for the local-problem
/// variants, one per boundary fine edge in boundary order).
struct SnapshotSpace {
    int block = 0;
    SnapshotVariant variant = SnapshotVariant::Fine;
    Eigen::MatrixXd psi;
    /// Global ids of the block's edges: interior edges, then the 4m boundary edges.
    std::vector<int> local_edges;
    /// Edge fluxes of each local solve (local_edges x snapshots); empty for Fine.
    Eigen::MatrixXd flux;

    int count() const noexcept { return static_cast<int>(psi.cols()); }
};

struct SpectralProblem {
    int block = 0;
    /// Cell-space coordinates of the reduced snapshot space (m^2 x r): the
    /// snapshots themselves when independent, otherwise an orthonormal basis
    /// of their span (for Neumann snapshots, the span plus the constant).
    Eigen::MatrixXd coords;
    Eigen::MatrixXd stiffness;  ///< coords^T A_fine coords
    Eigen::MatrixXd mass;       ///< coords^T S_fine coords
    Eigen::VectorXd eigenvalues;   ///< ascending
    Eigen::MatrixXd eigenvectors;  ///< columns S-orthonormal
};

struct BlockBasis {
    int block = 0;
    /// m^2 x l, orthonormal columns, first column the constant 1/m.
    Eigen::MatrixXd H;
    Eigen::VectorXd eigenvalues;
};

/// Offline bases for every block, stacked block-major (rows follow
/// GridHierarchy::block_cells of block 0, then block 1, ...).
struct BasisField {
    int n = 0;
    int m = 0;
    int n_basis = 0;
    SnapshotVariant variant = SnapshotVariant::Fine;
    Eigen::MatrixXd values;  ///< n^2 x n_basis

    int n_blocks() const noexcept { return (n / m) * (n / m); }
    Eigen::MatrixXd block(int b) const { return values.middleRows(b * m * m, m * m); }
};

SnapshotSpace snapshots(const PermeabilityField& field, const GridHierarchy& g, int block,
                        SnapshotVariant variant);

/// Fine-level jump form over the block's interior edges, weighted by the
/// harmonic mean of the two adjacent permeabilities (m^2 x m^2).
Eigen::MatrixXd fine_jump_matrix(const PermeabilityField& field, const GridHierarchy& g, int block);
/// diag(kappa_t * h^2) on the block's cells.
Eigen::MatrixXd fine_mass_matrix(const PermeabilityField& field, const GridHierarchy& g, int block);

SpectralProblem assemble_spectral(const PermeabilityField& field, const GridHierarchy& g,
                                  int block, const SnapshotSpace& snap);

BlockBasis offline_basis(const SpectralProblem& sp, const SnapshotSpace& snap, int l);

/// Snapshot, spectral and basis steps for one block.
BlockBasis block_basis(const PermeabilityField& field, const GridHierarchy& g, int block,
                       SnapshotVariant variant, int l);

/// All blocks, OpenMP over blocks.
BasisField build_basis_field(const PermeabilityField& field, const GridHierarchy& g,
                             SnapshotVariant variant, int l);
/// Single-threaded reference for build_basis_field.
BasisField build_basis_field_serial(const PermeabilityField& field, const GridHierarchy& g,
                                    SnapshotVariant variant, int l);

} // namespace mgms
