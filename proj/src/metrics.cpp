#include "mgms/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <json.hpp>

#include "mgms/coarse_solver.hpp"
#include "mgms/dataset.hpp"
#include "mgms/error.hpp"
#include "mgms/io.hpp"
#include "mgms/parallel.hpp"

namespace mgms {

std::vector<BasisMetric> mse_r2(const Eigen::MatrixXd& y_ref, const Eigen::MatrixXd& y_pred) {
    if (y_ref.rows() != y_pred.rows() || y_ref.cols() != y_pred.cols()) {
        throw InputError("metrics: reference and prediction shapes differ");
    }
    if (y_ref.rows() < 2) throw InputError("metrics: need at least two rows");
    const auto rows = static_cast<double>(y_ref.rows());
    std::vector<BasisMetric> out(static_cast<std::size_t>(y_ref.cols()));
    for (Eigen::Index j = 0; j < y_ref.cols(); ++j) {
        const double sse = (y_ref.col(j) - y_pred.col(j)).squaredNorm();
        const double mean = y_ref.col(j).mean();
        const double sst = (y_ref.col(j).array() - mean).square().sum();
        BasisMetric& bm = out[static_cast<std::size_t>(j)];
        bm.mse = sse / rows;
        if (sst > 0.0) {
            bm.r2 = 1.0 - sse / sst;
        } else {
            bm.r2 = std::numeric_limits<double>::quiet_NaN();
            bm.r2_defined = false;
        }
    }
    return out;
}

double orth(const Eigen::MatrixXd& predicted_targets, const GridHierarchy& g) {
    if (predicted_targets.rows() != g.n_cells()) {
        throw InputError("orth: " + std::to_string(predicted_targets.rows()) + " rows for " +
                         std::to_string(g.n_cells()) + " cells");
    }
    const int cpb = g.cells_per_block();
    const Eigen::Index l = predicted_targets.cols() + 1;
    double total = 0.0;
    Eigen::MatrixXd h(cpb, l);
    for (int b = 0; b < g.n_blocks(); ++b) {
        h.col(0).setConstant(1.0 / g.m());
        h.rightCols(l - 1) = predicted_targets.middleRows(b * cpb, cpb);
        total += (h.transpose() * h - Eigen::MatrixXd::Identity(l, l)).squaredNorm();
    }
    return total / g.n_blocks();
}

namespace {

BasisField with_constant(const Eigen::MatrixXd& targets, const GridHierarchy& g, bool reorth) {
    BasisField bf;
    bf.n = g.n();
    bf.m = g.m();
    bf.n_basis = static_cast<int>(targets.cols()) + 1;
    bf.values.resize(g.n_cells(), bf.n_basis);
    bf.values.col(0).setConstant(1.0 / g.m());
    bf.values.rightCols(bf.n_basis - 1) = targets;
    if (!reorth) return bf;
    const int cpb = g.cells_per_block();
    for (int b = 0; b < g.n_blocks(); ++b) {
        auto block = bf.values.middleRows(b * cpb, cpb);
        for (Eigen::Index k = 1; k < block.cols(); ++k) {
            for (int sweep = 0; sweep < 2; ++sweep) {
                for (Eigen::Index j = 0; j < k; ++j) block.col(k) -= block.col(j).dot(block.col(k)) * block.col(j);
            }
            const double norm = block.col(k).norm();
            if (!(norm > 1e-12)) {
                throw NumericalError("eval: predicted basis column " + std::to_string(k) + " of block " +
                                     std::to_string(b) + " is degenerate");
            }
            block.col(k) /= norm;
        }
    }
    return bf;
}

} // namespace

MetricsReport evaluate_predictions(const std::filesystem::path& pred_file,
                                   const std::filesystem::path& corpus_dir,
                                   const EvalOptions& options) {
    const io::PredictionFile pred = io::read_predictions(pred_file);
    const CorpusManifest manifest = load_manifest(corpus_dir / "manifest.json");
    const CorpusConfig& cfg = manifest.config;
    if (pred.samples.empty()) throw InputError("eval: prediction set is empty");
    if (pred.n != cfg.n || pred.m != cfg.m || pred.n_targets != cfg.n_basis - 1) {
        throw InputError("eval: prediction shape (n=" + std::to_string(pred.n) + ", m=" +
                         std::to_string(pred.m) + ", targets=" + std::to_string(pred.n_targets) +
                         ") does not match the corpus");
    }

    const std::set<std::uint64_t> test(manifest.test.begin(), manifest.test.end());
    std::string missing;
    for (const auto& s : pred.samples) {
        if (!test.contains(s.id)) missing += (missing.empty() ? "" : ", ") + std::to_string(s.id);
    }
    if (!missing.empty()) throw InputError("eval: ids not in the corpus test split: " + missing);

    const GridHierarchy g(cfg.n, cfg.m);
    const std::size_t count = pred.samples.size();
    const Eigen::Index rows = g.n_cells();
    Eigen::MatrixXd y_ref(rows * static_cast<Eigen::Index>(count), pred.n_targets);
    Eigen::MatrixXd y_pred(y_ref.rows(), y_ref.cols());
    std::vector<DatasetSample> samples(count);
    for (std::size_t k = 0; k < count; ++k) {
        samples[k] = load_sample(manifest, corpus_dir, pred.samples[k].id);
        y_ref.middleRows(static_cast<Eigen::Index>(k) * rows, rows) = samples[k].target;
        y_pred.middleRows(static_cast<Eigen::Index>(k) * rows, rows) = pred.samples[k].values.cast<double>();
    }

    MetricsReport report;
    report.count = count;
    report.per_basis = mse_r2(y_ref, y_pred);
    int defined = 0;
    for (const auto& bm : report.per_basis) {
        report.avg_mse += bm.mse;
        if (bm.r2_defined) {
            report.avg_r2 += bm.r2;
            ++defined;
        }
    }
    report.avg_mse /= static_cast<double>(report.per_basis.size());
    report.avg_r2 = defined > 0 ? report.avg_r2 / defined : std::numeric_limits<double>::quiet_NaN();
    for (std::size_t k = 0; k < count; ++k) {
        report.orth += orth(y_pred.middleRows(static_cast<Eigen::Index>(k) * rows, rows), g);
    }
    report.orth /= static_cast<double>(count);

    if (options.downstream) {
        const SourceTerm f = options.source ? *options.source : corner_source(g);
        DownstreamErrors d;
        d.ids.resize(count);
        d.reference.resize(count);
        d.predicted.resize(count);
        parallel::for_each_index(static_cast<std::ptrdiff_t>(count), [&](std::ptrdiff_t kk) {
            const auto k = static_cast<std::size_t>(kk);
            PermeabilityField field;
            field.n = cfg.n;
            field.seed = samples[k].seed;
            field.values = inverse_reshape(samples[k].input, g);
            const MixedSolution fine = solve_fine(field, g, f);

            const BasisField ref = with_constant(samples[k].target, g, false);
            const BasisField prd = with_constant(y_pred.middleRows(kk * rows, rows), g,
                                                 options.reorthonormalize);
            const CoarseSolution cr = solve_coarse(assemble_coarse(field, g, ref, f));
            const CoarseSolution cp = solve_coarse(assemble_coarse(field, g, prd, f));
            d.ids[k] = samples[k].id;
            d.reference[k] = relative_error(downscale(cr.coeffs, ref, g), fine.p, g);
            d.predicted[k] = relative_error(downscale(cp.coeffs, prd, g), fine.p, g);
        });
        report.downstream = std::move(d);
    }
    return report;
}

std::string report_to_json(const MetricsReport& report, int first_basis_index) {
    using nlohmann::json;
    auto number = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
    json mse;
    json r2;
    for (std::size_t j = 0; j < report.per_basis.size(); ++j) {
        const std::string key = "basis_" + std::to_string(first_basis_index + static_cast<int>(j));
        mse[key] = report.per_basis[j].mse;
        r2[key] = number(report.per_basis[j].r2);
    }
    mse["avg"] = report.avg_mse;
    r2["avg"] = number(report.avg_r2);

    json j;
    j["count"] = report.count;
    j["metrics"] = {{"MSE", mse}, {"R2", r2}, {"Orth", report.orth}};
    if (report.downstream) {
        const auto& d = *report.downstream;
        auto mean = [](const std::vector<double>& v) {
            double s = 0.0;
            for (double x : v) s += x;
            return v.empty() ? 0.0 : s / static_cast<double>(v.size());
        };
        std::size_t within = 0;
        for (std::size_t k = 0; k < d.ids.size(); ++k) {
            if (d.predicted[k] <= 2.0 * d.reference[k]) ++within;
        }
        json per = json::array();
        for (std::size_t k = 0; k < d.ids.size(); ++k) {
            per.push_back({{"id", d.ids[k]}, {"reference_error", d.reference[k]},
                           {"predicted_error", d.predicted[k]}});
        }
        j["downstream"] = {{"mean_reference_error", mean(d.reference)},
                           {"mean_predicted_error", mean(d.predicted)},
                           {"fraction_within_2x", d.ids.empty() ? 0.0
                                                                : static_cast<double>(within) / d.ids.size()},
                           {"samples", per}};
    }
    return j.dump(2);
}

} // namespace mgms
