#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgms/fem_fine.hpp"
#include "mgms/grid.hpp"

namespace mgms {

struct BasisMetric {
    double mse = 0.0;
    /// NaN when the reference column has zero variance.
    double r2 = 0.0;
    bool r2_defined = true;
};

/// Column-wise MSE and R^2 (squared-residual numerator). Requires equal
/// shapes and at least two rows.
std::vector<BasisMetric> mse_r2(const Eigen::MatrixXd& y_ref, const Eigen::MatrixXd& y_pred);

/// Mean over blocks of ||H^T H - I||_F^2, where H is the block's rows of the
/// predicted targets with the constant column 1/m prepended.
double orth(const Eigen::MatrixXd& predicted_targets, const GridHierarchy& g);

struct DownstreamErrors {
    std::vector<std::uint64_t> ids;
    std::vector<double> reference;  ///< coarse solve with the stored basis vs fine solve
    std::vector<double> predicted;  ///< coarse solve with the predicted basis vs fine solve
};

struct MetricsReport {
    std::size_t count = 0;
    std::vector<BasisMetric> per_basis;
    double avg_mse = 0.0;
    double avg_r2 = 0.0;
    double orth = 0.0;
    std::optional<DownstreamErrors> downstream;
};

struct EvalOptions {
    bool downstream = false;
    /// Re-orthonormalize predicted columns before the downstream solve.
    bool reorthonormalize = false;
    /// Defaults to corner_source when unset.
    std::optional<SourceTerm> source;
};

MetricsReport evaluate_predictions(const std::filesystem::path& pred_file,
                                   const std::filesystem::path& corpus_dir,
                                   const EvalOptions& options);

/// JSON text with MSE / R2 rows per basis plus "avg", and Orth.
std::string report_to_json(const MetricsReport& report, int first_basis_index = 2);

} // namespace mgms
