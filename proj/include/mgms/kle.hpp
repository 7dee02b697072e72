#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgms/field.hpp"
#include "mgms/grid.hpp"

namespace mgms {

/// Separable exponential covariance of the log-permeability:
/// C(x, y) = variance * exp(-|x1 - y1| / lx - |x2 - y2| / ly).
struct CovarianceSpec {
    double lx = 0.2;
    double ly = 0.2;
    double variance = 1.0;
    double mean = 0.0;

    double operator()(double x1, double x2, double y1, double y2) const noexcept;
    /// Throws ConfigError on lx, ly <= 0 or variance < 0.
    void validate() const;
    /// Stable text form, hashed into field provenance.
    std::string canonical() const;
};

/// Binary fissure/matrix thresholding of the log field.
struct ThresholdSpec {
    double quantile = 0.85;
    double kappa_matrix = 1.0;
    double kappa_fissure = 1.0e3;

    void validate() const;
    /// Cells above the empirical quantile: ceil((1 - q) * cells).
    int fissure_count(int cells) const;
};

inline constexpr int kDefaultKleModes = 20;

struct KleModel {
    CovarianceSpec spec;
    int n = 0;
    /// Descending, clamped at zero.
    std::vector<double> eigenvalues;
    /// n^2 x K, discrete-L2 orthonormal: sum_c phi_i(c) phi_j(c) h^2 = delta_ij.
    Eigen::MatrixXd eigenfunctions;
    /// Retained share of trace(C).
    double energy_fraction = 1.0;

    int modes() const noexcept { return static_cast<int>(eigenvalues.size()); }
    std::string spec_hash() const;
};

/// Midpoint-quadrature covariance operator C_ij = C(x_i, x_j) h^2 (OpenMP over rows).
Eigen::MatrixXd assemble_covariance(const CovarianceSpec& spec, const GridHierarchy& g);
/// Single-threaded reference for assemble_covariance.
Eigen::MatrixXd assemble_covariance_serial(const CovarianceSpec& spec, const GridHierarchy& g);

KleModel build_kle(const CovarianceSpec& spec, const GridHierarchy& g, int modes = kDefaultKleModes);

/// Z = mean + sum_i sqrt(lambda_i) phi_i xi_i with xi drawn from the counter stream `seed`.
std::vector<double> sample_log_field(const KleModel& model, std::uint64_t seed);

PermeabilityField sample_field(const KleModel& model, std::uint64_t seed,
                               const std::optional<ThresholdSpec>& threshold = std::nullopt);

/// Fields for seeds first_seed .. first_seed + count - 1, OpenMP over samples.
std::vector<PermeabilityField> sample_fields(const KleModel& model, std::uint64_t first_seed,
                                             int count,
                                             const std::optional<ThresholdSpec>& threshold);
std::vector<PermeabilityField> sample_fields_serial(const KleModel& model,
                                                    std::uint64_t first_seed, int count,
                                                    const std::optional<ThresholdSpec>& threshold);

} // namespace mgms
