#include "mgms/kle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "mgms/error.hpp"
#include "mgms/hash.hpp"
#include "mgms/parallel.hpp"
#include "mgms/rng.hpp"

namespace mgms {

double CovarianceSpec::operator()(double x1, double x2, double y1, double y2) const noexcept {
    return variance * std::exp(-std::abs(x1 - y1) / lx - std::abs(x2 - y2) / ly);
}

void CovarianceSpec::validate() const {
    if (!(lx > 0.0) || !(ly > 0.0)) throw ConfigError("kle: correlation lengths must be > 0");
    if (!(variance >= 0.0)) throw ConfigError("kle: variance must be >= 0");
    if (!std::isfinite(mean)) throw ConfigError("kle: mean must be finite");
}

std::string CovarianceSpec::canonical() const {
    std::ostringstream os;
    os.precision(17);
    os << "sepexp;lx=" << lx << ";ly=" << ly << ";var=" << variance << ";mean=" << mean;
    return os.str();
}

void ThresholdSpec::validate() const {
    if (!(quantile > 0.0 && quantile < 1.0)) throw ConfigError("kle: threshold quantile must lie in (0, 1)");
    if (!(kappa_matrix > 0.0)) throw ConfigError("kle: matrix permeability must be > 0");
    if (!(kappa_fissure > kappa_matrix)) {
        throw ConfigError("kle: fissure permeability must exceed matrix permeability");
    }
}

int ThresholdSpec::fissure_count(int cells) const {
    // (1 - 0.9) * 900 evaluates to 90.00000000000001; absorb that rounding.
    const double raw = (1.0 - quantile) * cells;
    return std::clamp(static_cast<int>(std::ceil(raw - 1e-9 * std::max(1.0, raw))), 0, cells);
}

std::string KleModel::spec_hash() const {
    std::ostringstream os;
    os << spec.canonical() << ";n=" << n << ";K=" << modes();
    return sha256_hex(os.str()).substr(0, 16);
}

namespace {

void fill_covariance_row(const CovarianceSpec& spec, const GridHierarchy& g, Eigen::MatrixXd& c,
                         int i) {
    const double w = g.cell_area();
    const auto xi = g.cell_center(i);
    for (int j = 0; j < g.n_cells(); ++j) {
        const auto xj = g.cell_center(j);
        c(i, j) = spec(xi[0], xi[1], xj[0], xj[1]) * w;
    }
}

std::vector<double> draw_field(const KleModel& model, std::uint64_t seed,
                               const std::optional<ThresholdSpec>& threshold) {
    std::vector<double> z = sample_log_field(model, seed);
    if (!threshold) {
        for (double& v : z) v = std::exp(v);
        return z;
    }
    const int cells = static_cast<int>(z.size());
    const int fissures = threshold->fissure_count(cells);
    std::vector<int> order(static_cast<std::size_t>(cells));
    std::iota(order.begin(), order.end(), 0);
    // Largest Z first; equal values resolved by lower cell index.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return z[static_cast<std::size_t>(a)] > z[static_cast<std::size_t>(b)];
    });
    std::vector<double> kappa(z.size(), threshold->kappa_matrix);
    for (int k = 0; k < fissures; ++k) kappa[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = threshold->kappa_fissure;
    return kappa;
}

} // namespace

Eigen::MatrixXd assemble_covariance(const CovarianceSpec& spec, const GridHierarchy& g) {
    const int cells = g.n_cells();
    Eigen::MatrixXd c(cells, cells);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < cells; ++i) fill_covariance_row(spec, g, c, i);
    return c;
}

Eigen::MatrixXd assemble_covariance_serial(const CovarianceSpec& spec, const GridHierarchy& g) {
    const int cells = g.n_cells();
    Eigen::MatrixXd c(cells, cells);
    for (int i = 0; i < cells; ++i) fill_covariance_row(spec, g, c, i);
    return c;
}

KleModel build_kle(const CovarianceSpec& spec, const GridHierarchy& g, int modes) {
    spec.validate();
    const int cells = g.n_cells();
    if (modes < 1 || modes > cells) {
        throw ConfigError("kle: mode count " + std::to_string(modes) + " must lie in [1, " +
                          std::to_string(cells) + "]");
    }

    const Eigen::MatrixXd c = assemble_covariance(spec, g);
    const double asym = (c - c.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12) throw NumericalError("kle: covariance operator is not symmetric", asym);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    if (es.info() != Eigen::Success) throw NumericalError("kle: covariance eigensolve failed");

    KleModel model;
    model.spec = spec;
    model.n = g.n();
    model.eigenvalues.resize(static_cast<std::size_t>(modes));
    model.eigenfunctions.resize(cells, modes);
    // Eigen orders ascending; take from the top.
    const double inv_h = 1.0 / g.h();
    double kept = 0.0;
    for (int k = 0; k < modes; ++k) {
        const int src = cells - 1 - k;
        const double lambda = std::max(0.0, es.eigenvalues()(src));
        model.eigenvalues[static_cast<std::size_t>(k)] = lambda;
        model.eigenfunctions.col(k) = es.eigenvectors().col(src) * inv_h;
        kept += lambda;
    }
    const double trace = c.trace();
    model.energy_fraction = trace > 0.0 ? kept / trace : 1.0;
    return model;
}

std::vector<double> sample_log_field(const KleModel& model, std::uint64_t seed) {
    Eigen::VectorXd coeff(model.modes());
    for (int k = 0; k < model.modes(); ++k) {
        coeff(k) = std::sqrt(model.eigenvalues[static_cast<std::size_t>(k)]) *
                   rng::normal(seed, static_cast<std::uint64_t>(k));
    }
    Eigen::VectorXd z = model.eigenfunctions * coeff;
    z.array() += model.spec.mean;
    return {z.data(), z.data() + z.size()};
}

PermeabilityField sample_field(const KleModel& model, std::uint64_t seed,
                               const std::optional<ThresholdSpec>& threshold) {
    if (threshold) threshold->validate();
    PermeabilityField f;
    f.n = model.n;
    f.seed = seed;
    f.spec_hash = model.spec_hash();
    f.values = draw_field(model, seed, threshold);
    return f;
}

std::vector<PermeabilityField> sample_fields(const KleModel& model, std::uint64_t first_seed,
                                             int count,
                                             const std::optional<ThresholdSpec>& threshold) {
    if (threshold) threshold->validate();
    std::vector<PermeabilityField> out(static_cast<std::size_t>(std::max(count, 0)));
    parallel::for_each_index(count, [&](std::ptrdiff_t i) {
        out[static_cast<std::size_t>(i)] =
            sample_field(model, first_seed + static_cast<std::uint64_t>(i), threshold);
    });
    return out;
}

std::vector<PermeabilityField> sample_fields_serial(const KleModel& model,
                                                    std::uint64_t first_seed, int count,
                                                    const std::optional<ThresholdSpec>& threshold) {
    std::vector<PermeabilityField> out;
    out.reserve(static_cast<std::size_t>(std::max(count, 0)));
    for (int i = 0; i < count; ++i) {
        out.push_back(sample_field(model, first_seed + static_cast<std::uint64_t>(i), threshold));
    }
    return out;
}

} // namespace mgms
