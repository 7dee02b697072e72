#include "mgms/msbasis.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "mgms/error.hpp"
#include "mgms/fem_fine.hpp"
#include "mgms/parallel.hpp"

namespace mgms {

std::string to_string(SnapshotVariant v) {
    switch (v) {
    case SnapshotVariant::Fine: return "fine";
    case SnapshotVariant::Dirichlet: return "dirichlet";
    case SnapshotVariant::Neumann: return "neumann";
    }
    return "unknown";
}

SnapshotVariant parse_variant(const std::string& name) {
    if (name == "fine") return SnapshotVariant::Fine;
    if (name == "dirichlet") return SnapshotVariant::Dirichlet;
    if (name == "neumann") return SnapshotVariant::Neumann;
    throw ConfigError("unknown snapshot variant '" + name + "' (expected fine, dirichlet or neumann)");
}

namespace {

constexpr double kSolveTolerance = 1e-10;
constexpr double kRankTolerance = 1e-10;

/// Dense RT0 operators restricted to one block: every edge touching the
/// block (interior first, then boundary in boundary order).
struct LocalMixed {
    std::vector<int> edges;
    int interior = 0;
    Eigen::MatrixXd mass;  // E x E
    Eigen::MatrixXd div;   // m^2 x E
    std::vector<double> outward;  // per boundary edge, +1 when the global orientation points out
};

LocalMixed assemble_local(const PermeabilityField& field, const GridHierarchy& g, int block) {
    LocalMixed lm;
    const auto interior = g.block_interior_edges(block);
    const auto boundary = g.block_boundary_edges(block);
    lm.edges.assign(interior.begin(), interior.end());
    lm.edges.insert(lm.edges.end(), boundary.begin(), boundary.end());
    lm.interior = static_cast<int>(interior.size());

    std::unordered_map<int, int> local;
    for (std::size_t k = 0; k < lm.edges.size(); ++k) local.emplace(lm.edges[k], static_cast<int>(k));

    const int m = g.m();
    lm.outward.resize(boundary.size());
    for (std::size_t k = 0; k < boundary.size(); ++k) {
        const auto side = static_cast<int>(k) / m;  // bottom, right, top, left
        lm.outward[k] = (side == 1 || side == 2) ? 1.0 : -1.0;
    }

    const int ne = static_cast<int>(lm.edges.size());
    const double h = g.h();
    lm.mass = Eigen::MatrixXd::Zero(ne, ne);
    lm.div = Eigen::MatrixXd::Zero(m * m, ne);
    const auto cells = g.block_cells(block);
    for (int lc = 0; lc < static_cast<int>(cells.size()); ++lc) {
        const int c = cells[static_cast<std::size_t>(lc)];
        const double kappa = field.values[static_cast<std::size_t>(c)];
        const std::array<std::array<CellSide, 2>, 2> pairs{
            {{CellSide::Left, CellSide::Right}, {CellSide::Bottom, CellSide::Top}}};
        for (const auto& pair : pairs) {
            const int lo = local.at(g.cell_edge(c, pair[0]));
            const int hi = local.at(g.cell_edge(c, pair[1]));
            lm.mass(lo, lo) += rt0::mass_diagonal(kappa, h);
            lm.mass(hi, hi) += rt0::mass_diagonal(kappa, h);
            lm.mass(lo, hi) += rt0::mass_coupling(kappa, h);
            lm.mass(hi, lo) += rt0::mass_coupling(kappa, h);
            lm.div(lc, lo) += rt0::div_entry(h);
            lm.div(lc, hi) -= rt0::div_entry(h);
        }
    }
    return lm;
}

void check_columns(const Eigen::MatrixXd& k, const Eigen::MatrixXd& x, const Eigen::MatrixXd& rhs,
                   int block, std::span<const int> boundary) {
    for (Eigen::Index j = 0; j < rhs.cols(); ++j) {
        const double bn = rhs.col(j).norm();
        const double rn = (k * x.col(j) - rhs.col(j)).norm();
        const double rel = bn > 0.0 ? rn / bn : rn;
        if (!x.col(j).allFinite() || rel > kSolveTolerance) {
            throw NumericalError("msbasis: singular local solve on block " + std::to_string(block) +
                                     ", boundary edge " + std::to_string(boundary[static_cast<std::size_t>(j)]),
                                 rel);
        }
    }
}

/// Unit pressure on one boundary edge at a time, div u = 0.
void dirichlet_snapshots(const LocalMixed& lm, const GridHierarchy& g, int block, SnapshotSpace& s) {
    const int ne = static_cast<int>(lm.edges.size());
    const int nc = g.cells_per_block();
    const int nb = ne - lm.interior;
    const int size = ne + nc;

    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(size, size);
    k.topLeftCorner(ne, ne) = lm.mass;
    k.block(0, ne, ne, nc) = lm.div.transpose();
    k.block(ne, 0, nc, ne) = lm.div;

    // Natural boundary term -int_e delta_j (v . n).
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(size, nb);
    for (int j = 0; j < nb; ++j) rhs(lm.interior + j, j) = -lm.outward[static_cast<std::size_t>(j)] * g.h();

    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
    Eigen::MatrixXd x = lu.solve(rhs);
    check_columns(k, x, rhs, block, g.block_boundary_edges(block));

    s.flux = x.topRows(ne);
    s.psi = x.bottomRows(nc);
}

/// Unit outward flux through one boundary edge, uniform compensating
/// divergence, mean-zero pressure.
void neumann_snapshots(const LocalMixed& lm, const GridHierarchy& g, int block, SnapshotSpace& s) {
    const int ne = static_cast<int>(lm.edges.size());
    const int ni = lm.interior;
    const int nb = ne - ni;
    const int nc = g.cells_per_block();
    const int size = ni + nc + 1;
    const double h = g.h();
    const double area = g.cell_area();
    const double block_area = area * nc;

    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(size, size);
    k.topLeftCorner(ni, ni) = lm.mass.topLeftCorner(ni, ni);
    k.block(0, ni, ni, nc) = lm.div.leftCols(ni).transpose();
    k.block(ni, 0, nc, ni) = lm.div.leftCols(ni);
    k.block(ni, ni + nc, nc, 1).setConstant(area);
    k.block(ni + nc, ni, 1, nc).setConstant(area);

    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(size, nb);
    Eigen::MatrixXd boundary_flux = Eigen::MatrixXd::Zero(nb, nb);
    const double alpha = h / block_area;
    for (int j = 0; j < nb; ++j) {
        Eigen::VectorXd ub = Eigen::VectorXd::Zero(nb);
        ub(j) = lm.outward[static_cast<std::size_t>(j)];
        boundary_flux.col(j) = ub;
        rhs.col(j).head(ni) = -lm.mass.topRightCorner(ni, nb) * ub;
        rhs.col(j).segment(ni, nc) =
            Eigen::VectorXd::Constant(nc, -alpha * area) - lm.div.rightCols(nb) * ub;
    }

    const Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
    Eigen::MatrixXd x = lu.solve(rhs);
    check_columns(k, x, rhs, block, g.block_boundary_edges(block));

    s.flux.resize(ne, nb);
    s.flux.topRows(ni) = x.topRows(ni);
    s.flux.bottomRows(nb) = boundary_flux;
    s.psi = x.middleRows(ni, nc);
}

Eigen::MatrixXd snapshot_coordinates(const SnapshotSpace& snap) {
    if (snap.variant == SnapshotVariant::Fine) return snap.psi;

    Eigen::MatrixXd cols = snap.psi;
    if (snap.variant == SnapshotVariant::Neumann) {
        // Mean-zero snapshots never contain the block constant; adjoin it.
        cols.conservativeResize(Eigen::NoChange, cols.cols() + 1);
        cols.col(cols.cols() - 1).setOnes();
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(cols, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    int rank = 0;
    while (rank < sv.size() && sv(rank) > kRankTolerance * sv(0)) ++rank;
    if (rank == cols.cols() && snap.variant != SnapshotVariant::Neumann) return cols;
    return svd.matrixU().leftCols(rank);
}

} // namespace

SnapshotSpace snapshots(const PermeabilityField& field, const GridHierarchy& g, int block,
                        SnapshotVariant variant) {
    g.block_cells(block);  // range check
    SnapshotSpace s;
    s.block = block;
    s.variant = variant;
    const int nc = g.cells_per_block();
    if (variant == SnapshotVariant::Fine) {
        s.psi = Eigen::MatrixXd::Identity(nc, nc);
        return s;
    }
    const LocalMixed lm = assemble_local(field, g, block);
    s.local_edges = lm.edges;
    if (variant == SnapshotVariant::Dirichlet) {
        dirichlet_snapshots(lm, g, block, s);
    } else {
        neumann_snapshots(lm, g, block, s);
    }
    return s;
}

Eigen::MatrixXd fine_jump_matrix(const PermeabilityField& field, const GridHierarchy& g, int block) {
    const int nc = g.cells_per_block();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(nc, nc);
    for (int e : g.block_interior_edges(block)) {
        const Edge& ed = g.edge(e);
        const double ka = field.values[static_cast<std::size_t>(ed.minus)];
        const double kb = field.values[static_cast<std::size_t>(ed.plus)];
        const double w = 2.0 * ka * kb / (ka + kb);
        const int la = g.local_index(ed.minus);
        const int lb = g.local_index(ed.plus);
        a(la, la) += w;
        a(lb, lb) += w;
        a(la, lb) -= w;
        a(lb, la) -= w;
    }
    return a;
}

Eigen::MatrixXd fine_mass_matrix(const PermeabilityField& field, const GridHierarchy& g, int block) {
    const auto cells = g.block_cells(block);
    Eigen::VectorXd d(static_cast<Eigen::Index>(cells.size()));
    for (std::size_t k = 0; k < cells.size(); ++k) {
        d(static_cast<Eigen::Index>(k)) = field.values[static_cast<std::size_t>(cells[k])] * g.cell_area();
    }
    return d.asDiagonal();
}

SpectralProblem assemble_spectral(const PermeabilityField& field, const GridHierarchy& g,
                                  int block, const SnapshotSpace& snap) {
    SpectralProblem sp;
    sp.block = block;
    sp.coords = snapshot_coordinates(snap);

    const Eigen::MatrixXd a = fine_jump_matrix(field, g, block);
    const Eigen::MatrixXd s = fine_mass_matrix(field, g, block);
    sp.stiffness = sp.coords.transpose() * a * sp.coords;
    sp.mass = sp.coords.transpose() * s * sp.coords;
    sp.stiffness = 0.5 * (sp.stiffness + sp.stiffness.transpose()).eval();
    sp.mass = 0.5 * (sp.mass + sp.mass.transpose()).eval();

    if (sp.mass.llt().info() != Eigen::Success) {
        throw NumericalError("msbasis: spectral mass matrix of block " + std::to_string(block) +
                             " is not positive definite (rank-deficient snapshots)");
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(sp.stiffness, sp.mass,
                                                                 Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (es.info() != Eigen::Success) {
        throw NumericalError("msbasis: generalized eigensolve failed on block " + std::to_string(block));
    }
    sp.eigenvalues = es.eigenvalues();
    sp.eigenvectors = es.eigenvectors();
    return sp;
}

BlockBasis offline_basis(const SpectralProblem& sp, const SnapshotSpace& snap, int l) {
    if (l < 1 || l > snap.count()) {
        throw ConfigError("msbasis: basis count " + std::to_string(l) + " must lie in [1, " +
                          std::to_string(snap.count()) + "]");
    }
    if (l > sp.coords.cols()) {
        throw ConfigError("msbasis: basis count " + std::to_string(l) +
                          " exceeds the snapshot rank " + std::to_string(sp.coords.cols()) +
                          " on block " + std::to_string(sp.block));
    }

    BlockBasis out;
    out.block = sp.block;
    out.eigenvalues = sp.eigenvalues.head(l);
    Eigen::MatrixXd h = sp.coords * sp.eigenvectors.leftCols(l);
    const Eigen::Index rows = h.rows();
    const double side = std::sqrt(static_cast<double>(rows));

    // Modified Gram-Schmidt in eigenvalue order, two sweeps.
    for (Eigen::Index k = 0; k < l; ++k) {
        for (int sweep = 0; sweep < 2; ++sweep) {
            for (Eigen::Index j = 0; j < k; ++j) h.col(k) -= h.col(j).dot(h.col(k)) * h.col(j);
        }
        const double norm = h.col(k).norm();
        if (!(norm > 1e-12)) {
            throw NumericalError("msbasis: offline basis column " + std::to_string(k) +
                                 " of block " + std::to_string(sp.block) + " is degenerate");
        }
        h.col(k) /= norm;

        Eigen::Index lead = 0;
        for (Eigen::Index i = 1; i < rows; ++i) {
            if (std::abs(h(i, k)) > std::abs(h(lead, k))) lead = i;
        }
        if (h(lead, k) < 0.0) h.col(k) = -h.col(k);

        if (k == 0) {
            // The zero-energy mode is the block constant; store it exactly.
            const double c = 1.0 / side;
            if ((h.col(0).array() - c).abs().maxCoeff() <= 1e-8) h.col(0).setConstant(c);
        }
    }
    out.H = std::move(h);
    return out;
}

BlockBasis block_basis(const PermeabilityField& field, const GridHierarchy& g, int block,
                       SnapshotVariant variant, int l) {
    const SnapshotSpace snap = snapshots(field, g, block, variant);
    const SpectralProblem sp = assemble_spectral(field, g, block, snap);
    return offline_basis(sp, snap, l);
}

namespace {

BasisField empty_basis_field(const GridHierarchy& g, SnapshotVariant variant, int l) {
    BasisField bf;
    bf.n = g.n();
    bf.m = g.m();
    bf.n_basis = l;
    bf.variant = variant;
    bf.values.resize(g.n_cells(), l);
    return bf;
}

void store_block(BasisField& bf, const BlockBasis& bb, const GridHierarchy& g) {
    bf.values.middleRows(bb.block * g.cells_per_block(), g.cells_per_block()) = bb.H;
}

} // namespace

BasisField build_basis_field(const PermeabilityField& field, const GridHierarchy& g,
                             SnapshotVariant variant, int l) {
    validate_field(field, g);
    BasisField bf = empty_basis_field(g, variant, l);
    parallel::for_each_index(g.n_blocks(), [&](std::ptrdiff_t b) {
        store_block(bf, block_basis(field, g, static_cast<int>(b), variant, l), g);
    });
    return bf;
}

BasisField build_basis_field_serial(const PermeabilityField& field, const GridHierarchy& g,
                                    SnapshotVariant variant, int l) {
    validate_field(field, g);
    BasisField bf = empty_basis_field(g, variant, l);
    for (int b = 0; b < g.n_blocks(); ++b) store_block(bf, block_basis(field, g, b, variant, l), g);
    return bf;
}

} // namespace mgms
