#include "mgms/coarse_solver.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "mgms/error.hpp"

namespace mgms {

namespace {

void check_shape(const BasisField& basis, const GridHierarchy& g) {
    if (basis.n != g.n() || basis.m != g.m() || basis.values.rows() != g.n_cells() ||
        basis.values.cols() != basis.n_basis || basis.n_basis < 1) {
        throw ConfigError("coarse: basis built for (n=" + std::to_string(basis.n) + ", m=" +
                          std::to_string(basis.m) + ") does not match grid (n=" +
                          std::to_string(g.n()) + ", m=" + std::to_string(g.m()) + ")");
    }
}

} // namespace

SparseMatrix prolongation(const BasisField& basis, const GridHierarchy& g) {
    check_shape(basis, g);
    const int l = basis.n_basis;
    const int cpb = g.cells_per_block();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(g.n_cells() * l));
    for (int b = 0; b < g.n_blocks(); ++b) {
        const auto cells = g.block_cells(b);
        for (int lc = 0; lc < cpb; ++lc) {
            for (int k = 0; k < l; ++k) {
                const double v = basis.values(b * cpb + lc, k);
                if (v != 0.0) trips.emplace_back(cells[static_cast<std::size_t>(lc)], b * l + k, v);
            }
        }
    }
    SparseMatrix phi(g.n_cells(), g.n_blocks() * l);
    phi.setFromTriplets(trips.begin(), trips.end());
    return phi;
}

CoarseSystem assemble_coarse(const PermeabilityField& field, const GridHierarchy& g,
                             const BasisField& basis, const SourceTerm& f) {
    check_shape(basis, g);
    CoarseSystem sys;
    sys.fine = assemble_fine(field, g, f);
    sys.prolongation = prolongation(basis, g);
    sys.div = SparseMatrix(sys.prolongation.transpose()) * sys.fine.div;
    sys.load = sys.prolongation.transpose() * sys.fine.load;
    sys.constraint = sys.prolongation.transpose() * sys.fine.cell_measure;
    return sys;
}

CoarseSolution solve_coarse(const CoarseSystem& sys) {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sys.fine.mass.rows());
    const SaddleSolution s = solve_bordered_saddle(sys.fine.mass, sys.div, sys.constraint, zero, sys.load);

    CoarseSolution out;
    out.u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.fine.edge_dof.size()));
    for (std::size_t d = 0; d < sys.fine.dof_edge.size(); ++d) {
        out.u(sys.fine.dof_edge[d]) = s.u(static_cast<Eigen::Index>(d));
    }
    out.coeffs = s.p;
    out.relative_residual = s.relative_residual;
    return out;
}

Eigen::VectorXd downscale(const Eigen::VectorXd& coeffs, const BasisField& basis,
                          const GridHierarchy& g) {
    check_shape(basis, g);
    if (coeffs.size() != g.n_blocks() * basis.n_basis) {
        throw InputError("coarse: " + std::to_string(coeffs.size()) + " coefficients for " +
                         std::to_string(g.n_blocks() * basis.n_basis) + " coarse dofs");
    }
    const int l = basis.n_basis;
    const int cpb = g.cells_per_block();
    Eigen::VectorXd p(g.n_cells());
    for (int b = 0; b < g.n_blocks(); ++b) {
        const Eigen::VectorXd local = basis.values.middleRows(b * cpb, cpb) * coeffs.segment(b * l, l);
        const auto cells = g.block_cells(b);
        for (int lc = 0; lc < cpb; ++lc) p(cells[static_cast<std::size_t>(lc)]) = local(lc);
    }
    return p;
}

Eigen::VectorXd restrict_pressure(const Eigen::VectorXd& p_fine, const BasisField& basis,
                                  const GridHierarchy& g) {
    check_shape(basis, g);
    if (p_fine.size() != g.n_cells()) throw InputError("coarse: pressure size does not match grid");
    const int l = basis.n_basis;
    const int cpb = g.cells_per_block();
    Eigen::VectorXd coeffs(g.n_blocks() * l);
    for (int b = 0; b < g.n_blocks(); ++b) {
        const auto cells = g.block_cells(b);
        Eigen::VectorXd local(cpb);
        for (int lc = 0; lc < cpb; ++lc) local(lc) = p_fine(cells[static_cast<std::size_t>(lc)]);
        coeffs.segment(b * l, l) = basis.values.middleRows(b * cpb, cpb).transpose() * local;
    }
    return coeffs;
}

double relative_error(const Eigen::VectorXd& p_approx, const Eigen::VectorXd& p_ref,
                      const GridHierarchy& g) {
    if (p_approx.size() != g.n_cells() || p_ref.size() != g.n_cells()) {
        throw InputError("relative_error: vectors must have one value per cell");
    }
    const double ref = std::sqrt(g.cell_area() * p_ref.squaredNorm());
    if (!(ref > 0.0)) throw NumericalError("relative_error: reference pressure has zero norm");
    return std::sqrt(g.cell_area() * (p_approx - p_ref).squaredNorm()) / ref;
}

} // namespace mgms
