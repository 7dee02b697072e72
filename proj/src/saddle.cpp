#include "mgms/saddle.hpp"

#include <string>
#include <vector>

#include <Eigen/SparseLU>

#include "mgms/error.hpp"

namespace mgms {

SaddleSolution solve_bordered_saddle(const SparseMatrix& mass, const SparseMatrix& div,
                                     const Eigen::VectorXd& constraint,
                                     const Eigen::VectorXd& flux_rhs,
                                     const Eigen::VectorXd& pressure_rhs, double tolerance) {
    const Eigen::Index nu = mass.rows();
    const Eigen::Index np = div.rows();
    if (mass.cols() != nu || div.cols() != nu || constraint.size() != np ||
        flux_rhs.size() != nu || pressure_rhs.size() != np) {
        throw InputError("saddle: inconsistent block sizes");
    }
    const Eigen::Index total = nu + np + 1;

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(mass.nonZeros() + 2 * div.nonZeros() + 2 * np));
    for (int k = 0; k < mass.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(mass, k); it; ++it) {
            trips.emplace_back(it.row(), it.col(), it.value());
        }
    }
    for (int k = 0; k < div.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(div, k); it; ++it) {
            trips.emplace_back(nu + it.row(), it.col(), it.value());
            trips.emplace_back(it.col(), nu + it.row(), it.value());
        }
    }
    for (Eigen::Index i = 0; i < np; ++i) {
        if (constraint(i) == 0.0) continue;
        trips.emplace_back(nu + i, nu + np, constraint(i));
        trips.emplace_back(nu + np, nu + i, constraint(i));
    }
    SparseMatrix k(total, total);
    k.setFromTriplets(trips.begin(), trips.end());
    k.makeCompressed();

    Eigen::VectorXd b = Eigen::VectorXd::Zero(total);
    b.head(nu) = flux_rhs;
    b.segment(nu, np) = pressure_rhs;

    SaddleSolution out;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        out.u = Eigen::VectorXd::Zero(nu);
        out.p = Eigen::VectorXd::Zero(np);
        return out;
    }

    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(k);
    if (lu.info() != Eigen::Success) {
        throw NumericalError("saddle: sparse LU factorization failed (" + lu.lastErrorMessage() + ")");
    }
    Eigen::VectorXd x = lu.solve(b);
    Eigen::VectorXd r = b - k * x;
    double rel = r.norm() / bnorm;
    if (rel > 0.01 * tolerance) {
        x += lu.solve(r);
        r = b - k * x;
        rel = r.norm() / bnorm;
    }
    if (!x.allFinite() || !(rel <= tolerance)) {
        throw NumericalError("saddle: solve did not converge, relative residual " + std::to_string(rel),
                             rel);
    }

    out.u = x.head(nu);
    out.p = x.segment(nu, np);
    out.multiplier = x(total - 1);
    out.relative_residual = rel;
    return out;
}

} // namespace mgms
