#include "mgms/fem_fine.hpp"

#include <cmath>
#include <string>

#include "mgms/error.hpp"

namespace mgms {

SourceTerm corner_source(const GridHierarchy& g) {
    SourceTerm f = zero_source(g);
    f.values.front() = 1.0;
    f.values.back() = -1.0;
    return make_compatible(std::move(f), g);
}

SourceTerm zero_source(const GridHierarchy& g) {
    return {std::vector<double>(static_cast<std::size_t>(g.n_cells()), 0.0)};
}

SourceTerm make_compatible(SourceTerm f, const GridHierarchy& g) {
    if (f.values.size() != static_cast<std::size_t>(g.n_cells())) {
        throw InputError("source: size does not match grid");
    }
    double mean = 0.0;
    for (double v : f.values) mean += v;
    mean /= static_cast<double>(f.values.size());
    for (double& v : f.values) v -= mean;
    return f;
}

void check_compatible(const SourceTerm& f, const GridHierarchy& g) {
    if (f.values.size() != static_cast<std::size_t>(g.n_cells())) {
        throw InputError("source: " + std::to_string(f.values.size()) +
                         " values for " + std::to_string(g.n_cells()) + " cells");
    }
    double total = 0.0;
    for (double v : f.values) {
        if (!std::isfinite(v)) throw InputError("source: non-finite value");
        total += v * g.cell_area();
    }
    if (std::abs(total) > 1e-12) {
        throw InputError("source: integral " + std::to_string(total) +
                         " violates the compatibility condition");
    }
}

MixedSystem assemble_fine(const PermeabilityField& field, const GridHierarchy& g,
                          const SourceTerm& f) {
    validate_field(field, g);
    check_compatible(f, g);

    MixedSystem sys;
    sys.n = g.n();
    sys.edge_dof.assign(static_cast<std::size_t>(g.n_edges()), -1);
    for (int e = 0; e < g.n_edges(); ++e) {
        if (g.edge(e).on_boundary()) continue;
        sys.edge_dof[static_cast<std::size_t>(e)] = static_cast<int>(sys.dof_edge.size());
        sys.dof_edge.push_back(e);
    }
    const int ndof = static_cast<int>(sys.dof_edge.size());
    const int cells = g.n_cells();
    const double h = g.h();

    std::vector<Eigen::Triplet<double>> mass;
    std::vector<Eigen::Triplet<double>> div;
    mass.reserve(static_cast<std::size_t>(8 * cells));
    div.reserve(static_cast<std::size_t>(4 * cells));

    for (int c = 0; c < cells; ++c) {
        const double kappa = field.values[static_cast<std::size_t>(c)];
        const double diag = rt0::mass_diagonal(kappa, h);
        const double off = rt0::mass_coupling(kappa, h);
        const std::array<std::array<CellSide, 2>, 2> pairs{
            {{CellSide::Left, CellSide::Right}, {CellSide::Bottom, CellSide::Top}}};
        for (const auto& pair : pairs) {
            const int lo = sys.edge_dof[static_cast<std::size_t>(g.cell_edge(c, pair[0]))];
            const int hi = sys.edge_dof[static_cast<std::size_t>(g.cell_edge(c, pair[1]))];
            if (lo >= 0) {
                mass.emplace_back(lo, lo, diag);
                div.emplace_back(c, lo, rt0::div_entry(h));
            }
            if (hi >= 0) {
                mass.emplace_back(hi, hi, diag);
                div.emplace_back(c, hi, -rt0::div_entry(h));
            }
            if (lo >= 0 && hi >= 0) {
                mass.emplace_back(lo, hi, off);
                mass.emplace_back(hi, lo, off);
            }
        }
    }

    sys.mass.resize(ndof, ndof);
    sys.mass.setFromTriplets(mass.begin(), mass.end());
    sys.div.resize(cells, ndof);
    sys.div.setFromTriplets(div.begin(), div.end());

    sys.load.resize(cells);
    for (int c = 0; c < cells; ++c) sys.load(c) = -f.values[static_cast<std::size_t>(c)] * g.cell_area();
    sys.cell_measure = Eigen::VectorXd::Constant(cells, g.cell_area());
    return sys;
}

MixedSolution solve_saddle(const MixedSystem& sys) {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sys.mass.rows());
    const SaddleSolution s = solve_bordered_saddle(sys.mass, sys.div, sys.cell_measure, zero, sys.load);

    MixedSolution out;
    out.u = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.edge_dof.size()));
    for (std::size_t d = 0; d < sys.dof_edge.size(); ++d) {
        out.u(sys.dof_edge[d]) = s.u(static_cast<Eigen::Index>(d));
    }
    out.p = s.p;
    out.relative_residual = s.relative_residual;
    return out;
}

Eigen::VectorXd mass_balance_residual(const MixedSystem& sys, const Eigen::VectorXd& edge_flux) {
    Eigen::VectorXd dofs(static_cast<Eigen::Index>(sys.dof_edge.size()));
    for (std::size_t d = 0; d < sys.dof_edge.size(); ++d) {
        dofs(static_cast<Eigen::Index>(d)) = edge_flux(sys.dof_edge[d]);
    }
    return (sys.div * dofs - sys.load).cwiseAbs();
}

MixedSolution solve_fine(const PermeabilityField& field, const GridHierarchy& g,
                         const SourceTerm& f) {
    return solve_saddle(assemble_fine(field, g, f));
}

} // namespace mgms
