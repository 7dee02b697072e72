#include <doctest.h>

#include <cmath>

#include "mgms/coarse_solver.hpp"
#include "mgms/error.hpp"
#include "mgms/kle.hpp"

using namespace mgms;

namespace {

PermeabilityField kle_field(const GridHierarchy& g, std::uint64_t seed) {
    return sample_field(build_kle({0.2, 0.2, 1.0, 0.0}, g, 20), seed);
}

// ||u - v||_M over the interior dofs of the fine system.
double energy_distance(const MixedSystem& sys, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    Eigen::VectorXd d(static_cast<Eigen::Index>(sys.dof_edge.size()));
    for (std::size_t k = 0; k < sys.dof_edge.size(); ++k) {
        d(static_cast<Eigen::Index>(k)) = u(sys.dof_edge[k]) - v(sys.dof_edge[k]);
    }
    return std::sqrt(d.dot(sys.mass * d));
}

} // namespace

TEST_CASE("full fine basis reproduces the fine solve") {
    const GridHierarchy g(30, 3);
    const auto field = kle_field(g, 1);
    const SourceTerm f = corner_source(g);
    const MixedSolution fine = solve_fine(field, g, f);
    const BasisField basis = build_basis_field(field, g, SnapshotVariant::Fine, 9);
    const CoarseSolution coarse = solve_coarse(assemble_coarse(field, g, basis, f));
    const Eigen::VectorXd p = downscale(coarse.coeffs, basis, g);
    CHECK((p - fine.p).cwiseAbs().maxCoeff() <= 1e-8 * fine.p.cwiseAbs().maxCoeff());
    CHECK((coarse.u - fine.u).cwiseAbs().maxCoeff() <= 1e-8 * fine.u.cwiseAbs().maxCoeff());
    CHECK(relative_error(p, fine.p, g) <= 1e-8);
}

TEST_CASE("coarse system dimensions") {
    const GridHierarchy g(30, 3);
    const auto field = kle_field(g, 2);
    const BasisField basis = build_basis_field(field, g, SnapshotVariant::Dirichlet, 5);
    const CoarseSystem sys = assemble_coarse(field, g, basis, corner_source(g));
    CHECK(sys.prolongation.rows() == 900);
    CHECK(sys.prolongation.cols() == 500);
    CHECK(sys.div.rows() == 500);
    CHECK(sys.div.cols() == static_cast<Eigen::Index>(sys.fine.dof_edge.size()));
    CHECK(sys.load.size() == 500);
    CHECK(sys.constraint.size() == 500);
}

TEST_CASE("one basis function gives blockwise constant pressure") {
    const GridHierarchy g(12, 3);
    const auto field = kle_field(g, 3);
    const BasisField basis = build_basis_field(field, g, SnapshotVariant::Dirichlet, 1);
    const CoarseSolution sol = solve_coarse(assemble_coarse(field, g, basis, corner_source(g)));
    const Eigen::VectorXd p = downscale(sol.coeffs, basis, g);
    for (int b = 0; b < g.n_blocks(); ++b) {
        const auto cells = g.block_cells(b);
        for (int c : cells) CHECK(p(c) == doctest::Approx(p(cells[0])).epsilon(1e-12));
    }
}

TEST_CASE("zero source gives the zero solution") {
    const GridHierarchy g(12, 3);
    const auto field = kle_field(g, 4);
    const BasisField basis = build_basis_field(field, g, SnapshotVariant::Neumann, 3);
    const CoarseSolution sol = solve_coarse(assemble_coarse(field, g, basis, zero_source(g)));
    CHECK(sol.u.cwiseAbs().maxCoeff() == 0.0);
    CHECK(sol.coeffs.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coarse solution conserves mass per block") {
    const GridHierarchy g(30, 3);
    const auto field = kle_field(g, 5);
    const SourceTerm f = corner_source(g);
    for (SnapshotVariant v : {SnapshotVariant::Dirichlet, SnapshotVariant::Neumann}) {
        const BasisField basis = build_basis_field(field, g, v, 3);
        const CoarseSystem sys = assemble_coarse(field, g, basis, f);
        const CoarseSolution sol = solve_coarse(sys);
        CHECK(sol.relative_residual <= 1e-10);
        const Eigen::VectorXd cell_res = mass_balance_residual(sys.fine, sol.u);
        (void)cell_res;
        // Signed block sums of B u - F vanish because constants are in the pressure space.
        Eigen::VectorXd interior(static_cast<Eigen::Index>(sys.fine.dof_edge.size()));
        for (std::size_t k = 0; k < sys.fine.dof_edge.size(); ++k) {
            interior(static_cast<Eigen::Index>(k)) = sol.u(sys.fine.dof_edge[k]);
        }
        const Eigen::VectorXd r = sys.fine.div * interior - sys.fine.load;
        for (int b = 0; b < g.n_blocks(); ++b) {
            double s = 0.0;
            for (int c : g.block_cells(b)) s += r(c);
            CHECK(std::abs(s) <= 1e-10);
        }
    }
}

TEST_CASE("flux energy error is monotone in the number of basis functions") {
    const GridHierarchy g(30, 3);
    const SourceTerm f = corner_source(g);
    for (std::uint64_t seed : {6u, 7u}) {
        const auto field = kle_field(g, seed);
        const MixedSolution fine = solve_fine(field, g, f);
        double prev = INFINITY;
        double p_first = 0.0, p_last = 0.0;
        for (int l = 1; l <= 5; ++l) {
            const BasisField basis = build_basis_field(field, g, SnapshotVariant::Dirichlet, l);
            const CoarseSystem sys = assemble_coarse(field, g, basis, f);
            const CoarseSolution sol = solve_coarse(sys);
            const double e = energy_distance(sys.fine, sol.u, fine.u);
            CHECK(e <= prev * (1.0 + 1e-10));
            prev = e;
            const double pe = relative_error(downscale(sol.coeffs, basis, g), fine.p, g);
            if (l == 1) p_first = pe;
            p_last = pe;
        }
        CHECK(p_last < p_first);
    }
}

TEST_CASE("scaling the permeability scales the pressure inversely") {
    const GridHierarchy g(12, 3);
    const auto field = kle_field(g, 8);
    PermeabilityField scaled = field;
    for (double& v : scaled.values) v *= 37.0;
    const SourceTerm f = corner_source(g);
    const BasisField a = build_basis_field(field, g, SnapshotVariant::Dirichlet, 4);
    const BasisField b = build_basis_field(scaled, g, SnapshotVariant::Dirichlet, 4);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() <= 1e-8);
    const Eigen::VectorXd pa = downscale(solve_coarse(assemble_coarse(field, g, a, f)).coeffs, a, g);
    const Eigen::VectorXd pb = downscale(solve_coarse(assemble_coarse(scaled, g, b, f)).coeffs, b, g);
    CHECK((37.0 * pb - pa).cwiseAbs().maxCoeff() <= 1e-8 * pa.cwiseAbs().maxCoeff());
}

TEST_CASE("downscale and restrict") {
    const GridHierarchy g(6, 3);
    const auto field = kle_field(g, 9);
    const BasisField basis = build_basis_field(field, g, SnapshotVariant::Dirichlet, 3);
    Eigen::VectorXd c(12);
    for (int k = 0; k < 12; ++k) c(k) = 0.5 * k - 2.0;
    const Eigen::VectorXd p = downscale(c, basis, g);
    CHECK(p.size() == 36);
    CHECK((restrict_pressure(p, basis, g) - c).cwiseAbs().maxCoeff() <= 1e-12);
    // Block b, column k lands on block b's cells only.
    Eigen::VectorXd e = Eigen::VectorXd::Zero(12);
    e(3 * 2 + 1) = 1.0;
    const Eigen::VectorXd col = downscale(e, basis, g);
    for (int cell = 0; cell < 36; ++cell) {
        if (g.block_of_cell(cell) != 2) CHECK(col(cell) == 0.0);
    }
    CHECK_THROWS_AS(downscale(Eigen::VectorXd::Zero(5), basis, g), InputError);
    const GridHierarchy other(9, 3);
    CHECK_THROWS_AS(assemble_coarse(constant_field(other, 1.0), other, basis, corner_source(other)), ConfigError);
}

TEST_CASE("relative error") {
    const GridHierarchy g(3, 3);
    Eigen::VectorXd ref(9);
    ref << 1, -2, 3, 0.5, 0, -1, 2, 2, -5.5;
    CHECK(relative_error(ref, ref, g) == 0.0);
    CHECK(relative_error(2.0 * ref, ref, g) == doctest::Approx(1.0));
    CHECK(relative_error(Eigen::VectorXd::Zero(9), ref, g) == doctest::Approx(1.0));
    CHECK_THROWS_AS(relative_error(ref, Eigen::VectorXd::Zero(9), g), NumericalError);
    CHECK_THROWS_AS(relative_error(ref.head(4), ref, g), InputError);
}
