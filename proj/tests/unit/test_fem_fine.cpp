#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "mgms/coarse_solver.hpp"
#include "mgms/error.hpp"
#include "mgms/fem_fine.hpp"
#include "mgms/kle.hpp"

using namespace mgms;

namespace {

// Velocity of the RT0 shape function of global edge e at (x, y), written
// directly from the hat-function definition: unit normal component on its
// own edge, linear decay to zero across each adjacent cell.
std::array<double, 2> shape(const GridHierarchy& g, int e, double x, double y) {
    const double h = g.h();
    const int n = g.n();
    const Edge& ed = g.edge(e);
    if (ed.axis == EdgeAxis::Vertical) {
        const int i = e % (n + 1);
        const int j = e / (n + 1);
        if (y < j * h || y > (j + 1) * h) return {0.0, 0.0};
        const double xe = i * h;
        if (x >= xe - h && x <= xe) return {(x - (xe - h)) / h, 0.0};
        if (x >= xe && x <= xe + h) return {(xe + h - x) / h, 0.0};
        return {0.0, 0.0};
    }
    const int k = e - n * (n + 1);
    const int i = k % n;
    const int j = k / n;
    if (x < i * h || x > (i + 1) * h) return {0.0, 0.0};
    const double ye = j * h;
    if (y >= ye - h && y <= ye) return {0.0, (y - (ye - h)) / h};
    if (y >= ye && y <= ye + h) return {0.0, (ye + h - y) / h};
    return {0.0, 0.0};
}

// Dense M and B on interior edges by 2x2 Gauss quadrature per cell (exact
// for these bilinear integrands); divergence by the divergence theorem on
// each cell, evaluated from the shape values at edge midpoints.
void quadrature_oracle(const GridHierarchy& g, const std::vector<double>& kappa,
                       const std::vector<int>& dofs, Eigen::MatrixXd& mass, Eigen::MatrixXd& div) {
    const int nd = static_cast<int>(dofs.size());
    const double h = g.h();
    mass = Eigen::MatrixXd::Zero(nd, nd);
    div = Eigen::MatrixXd::Zero(g.n_cells(), nd);
    const double gp = 0.5 / std::sqrt(3.0);
    for (int c = 0; c < g.n_cells(); ++c) {
        const auto ctr = g.cell_center(c);
        for (double sx : {-gp, gp}) {
            for (double sy : {-gp, gp}) {
                const double x = ctr[0] + sx * h;
                const double y = ctr[1] + sy * h;
                for (int a = 0; a < nd; ++a) {
                    const auto pa = shape(g, dofs[static_cast<std::size_t>(a)], x, y);
                    for (int b = 0; b < nd; ++b) {
                        const auto pb = shape(g, dofs[static_cast<std::size_t>(b)], x, y);
                        mass(a, b) += (pa[0] * pb[0] + pa[1] * pb[1]) / kappa[static_cast<std::size_t>(c)] *
                                      0.25 * h * h;
                    }
                }
            }
        }
        const double eps = 1e-15 * h;
        for (int a = 0; a < nd; ++a) {
            const int e = dofs[static_cast<std::size_t>(a)];
            const double out_flux =
                (shape(g, e, ctr[0] + 0.5 * h - eps, ctr[1])[0] - shape(g, e, ctr[0] - 0.5 * h + eps, ctr[1])[0] +
                 shape(g, e, ctr[0], ctr[1] + 0.5 * h - eps)[1] - shape(g, e, ctr[0], ctr[1] - 0.5 * h + eps)[1]) *
                h;
            div(c, a) = -out_flux;
        }
    }
}

double cell_average_cos(const GridHierarchy& g, int c) {
    const double h = g.h();
    const double x0 = g.cell_col(c) * h;
    const double y0 = g.cell_row(c) * h;
    const double pi = std::numbers::pi;
    const double ix = (std::sin(pi * (x0 + h)) - std::sin(pi * x0)) / pi;
    const double iy = (std::sin(pi * (y0 + h)) - std::sin(pi * y0)) / pi;
    return ix * iy / (h * h);
}

double manufactured_error(int n) {
    const GridHierarchy g(n, 1);
    SourceTerm f;
    Eigen::VectorXd exact(g.n_cells());
    for (int c = 0; c < g.n_cells(); ++c) {
        exact(c) = cell_average_cos(g, c);
        f.values.push_back(2.0 * std::numbers::pi * std::numbers::pi * exact(c));
    }
    const MixedSolution s = solve_fine(constant_field(g, 1.0), g, f);
    return relative_error(s.p, exact, g);
}

} // namespace

TEST_CASE("RT0 mass matrix of the 2x2 unit mesh matches quadrature") {
    const GridHierarchy g(2, 1);
    const MixedSystem sys = assemble_fine(constant_field(g, 1.0), g, zero_source(g));
    REQUIRE(sys.dof_edge.size() == 4);
    Eigen::MatrixXd mass;
    Eigen::MatrixXd div;
    quadrature_oracle(g, std::vector<double>(4, 1.0), sys.dof_edge, mass, div);
    CHECK((Eigen::MatrixXd(sys.mass) - mass).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((Eigen::MatrixXd(sys.div) - div).cwiseAbs().maxCoeff() <= 1e-12);
    // Interior edges of a 2x2 mesh touch two cells each: 2 * h^2/3 with h = 1/2.
    CHECK(mass(0, 0) == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("heterogeneous assembly matches quadrature on 3x3") {
    const GridHierarchy g(3, 3);
    PermeabilityField field = constant_field(g, 1.0);
    for (int c = 0; c < 9; ++c) field.values[static_cast<std::size_t>(c)] = 0.5 + 1.7 * c;
    const MixedSystem sys = assemble_fine(field, g, zero_source(g));
    Eigen::MatrixXd mass;
    Eigen::MatrixXd div;
    quadrature_oracle(g, field.values, sys.dof_edge, mass, div);
    CHECK((Eigen::MatrixXd(sys.mass) - mass).cwiseAbs().maxCoeff() <= 1e-14);
    CHECK((Eigen::MatrixXd(sys.div) - div).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("system structure on a KLE field") {
    const GridHierarchy g(12, 3);
    const auto field = sample_field(build_kle({}, g, 20), 3);
    const MixedSystem sys = assemble_fine(field, g, corner_source(g));
    const Eigen::MatrixXd m = sys.mass;
    CHECK((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    const Eigen::MatrixXd b = sys.div;
    for (int r = 0; r < b.rows(); ++r) {
        int nz = 0;
        for (int c = 0; c < b.cols(); ++c) {
            if (b(r, c) != 0.0) {
                ++nz;
                CHECK(std::abs(b(r, c)) == doctest::Approx(g.h()));
            }
        }
        CHECK(nz <= 4);
    }
}

TEST_CASE("zero source: zero load and zero solution") {
    const GridHierarchy g(6, 3);
    const auto field = sample_field(build_kle({}, g, 10), 1);
    const MixedSystem sys = assemble_fine(field, g, zero_source(g));
    CHECK(sys.load.cwiseAbs().maxCoeff() == 0.0);
    const MixedSolution s = solve_saddle(sys);
    CHECK(s.u.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.p.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("input validation") {
    const GridHierarchy g(4, 2);
    SourceTerm bad = zero_source(g);
    bad.values[0] = 1.0;
    CHECK_THROWS_AS(assemble_fine(constant_field(g, 1.0), g, bad), InputError);
    PermeabilityField neg = constant_field(g, 1.0);
    neg.values[5] = -2.0;
    CHECK_THROWS_AS(assemble_fine(neg, g, zero_source(g)), InputError);
    neg.values[5] = 0.0;
    CHECK_THROWS_AS(assemble_fine(neg, g, zero_source(g)), InputError);
    CHECK_THROWS_AS(assemble_fine(constant_field(GridHierarchy(6, 2), 1.0), g, zero_source(g)), InputError);
}

TEST_CASE("manufactured cosine pressure converges under refinement") {
    const double e15 = manufactured_error(15);
    const double e30 = manufactured_error(30);
    MESSAGE("relative L2 error n=15: " << e15 << ", n=30: " << e30);
    CHECK(e30 < e15);
    CHECK(e30 / e15 <= 0.5);
}

TEST_CASE("checkerboard source: local conservation and mean-zero pressure") {
    const GridHierarchy g(10, 5);
    SourceTerm f;
    for (int c = 0; c < g.n_cells(); ++c) f.values.push_back(((g.cell_col(c) + g.cell_row(c)) % 2) ? -1.0 : 1.0);
    const auto field = sample_field(build_kle({0.2, 0.2, 2.0, 0.0}, g, 20), 11);
    const MixedSystem sys = assemble_fine(field, g, f);
    const MixedSolution s = solve_saddle(sys);
    CHECK(mass_balance_residual(sys, s.u).maxCoeff() <= 1e-10);
    CHECK(std::abs(s.p.sum() * g.cell_area()) <= 1e-10);
    CHECK(s.relative_residual <= 1e-10);
}

TEST_CASE("energy identity and permeability scaling") {
    const GridHierarchy g(12, 3);
    const auto model = build_kle({0.15, 0.25, 1.5, 0.0}, g, 20);
    const SourceTerm f = corner_source(g);
    for (std::uint64_t seed : {0ull, 7ull}) {
        PermeabilityField field = sample_field(model, seed);
        const MixedSystem sys = assemble_fine(field, g, f);
        const MixedSolution s = solve_saddle(sys);
        Eigen::VectorXd ud(static_cast<Eigen::Index>(sys.dof_edge.size()));
        for (std::size_t d = 0; d < sys.dof_edge.size(); ++d) ud(static_cast<Eigen::Index>(d)) = s.u(sys.dof_edge[d]);
        const double lhs = ud.dot(sys.mass * ud);
        const double rhs = -s.p.dot(sys.div * ud);
        CHECK(std::abs(lhs - rhs) <= 1e-8 * std::abs(lhs));

        const double c = 37.0;
        for (double& v : field.values) v *= c;
        const MixedSolution sc = solve_fine(field, g, f);
        // Flux is unchanged; pressure scales by 1/c.
        CHECK((sc.u - s.u).norm() <= 1e-8 * s.u.norm());
        CHECK((c * sc.p - s.p).norm() <= 1e-8 * s.p.norm());
    }
}

TEST_CASE("source helpers") {
    const GridHierarchy g(6, 3);
    const SourceTerm f = corner_source(g);
    CHECK_NOTHROW(check_compatible(f, g));
    CHECK(f.values.front() > 0.0);
    CHECK(f.values.back() < 0.0);
    SourceTerm raw{std::vector<double>(36, 2.0)};
    CHECK_THROWS_AS(check_compatible(raw, g), InputError);
    CHECK_NOTHROW(check_compatible(make_compatible(raw, g), g));
}
