#include "mgms/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mgms/coarse_solver.hpp"
#include "mgms/dataset.hpp"
#include "mgms/error.hpp"
#include "mgms/fem_fine.hpp"
#include "mgms/hash.hpp"
#include "mgms/io.hpp"
#include "mgms/kle.hpp"
#include "mgms/metrics.hpp"
#include "mgms/msbasis.hpp"
#include "mgms/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mgms::cli {

namespace {

struct KleFlags {
    CovarianceSpec spec;
    int modes = kDefaultKleModes;
    bool threshold = false;
    ThresholdSpec threshold_spec;

    void add(CLI::App* app) {
        app->add_option("--lx", spec.lx, "Correlation length along x")->capture_default_str();
        app->add_option("--ly", spec.ly, "Correlation length along y")->capture_default_str();
        app->add_option("--variance", spec.variance, "Variance of log-permeability")->capture_default_str();
        app->add_option("--mean", spec.mean, "Mean of log-permeability")->capture_default_str();
        app->add_option("--modes", modes, "Retained KLE modes")->capture_default_str();
        app->add_flag("--threshold", threshold, "Binary fissure/matrix field");
        app->add_option("--quantile", threshold_spec.quantile, "Fissure quantile")->capture_default_str();
        app->add_option("--kappa-matrix", threshold_spec.kappa_matrix)->capture_default_str();
        app->add_option("--kappa-fissure", threshold_spec.kappa_fissure)->capture_default_str();
    }

    std::optional<ThresholdSpec> thresholding() const {
        return threshold ? std::optional(threshold_spec) : std::nullopt;
    }

    json to_json() const {
        json j = {{"kernel", "separable_exponential"}, {"lx", spec.lx},     {"ly", spec.ly},
                  {"variance", spec.variance},         {"mean", spec.mean}, {"modes", modes}};
        j["threshold"] = threshold ? json{{"quantile", threshold_spec.quantile},
                                          {"kappa_matrix", threshold_spec.kappa_matrix},
                                          {"kappa_fissure", threshold_spec.kappa_fissure}}
                                   : json(nullptr);
        return j;
    }
};

struct SourceFlags {
    std::string kind = "corner";
    std::string file;

    void add(CLI::App* app) {
        app->add_option("--source", kind, "Source term: corner or zero")
            ->check(CLI::IsMember({"corner", "zero"}))
            ->capture_default_str();
        app->add_option("--source-file", file, "Whitespace-separated per-cell source values");
    }

    SourceTerm build(const GridHierarchy& g) const {
        if (!file.empty()) {
            std::ifstream in(file);
            if (!in) throw InputError("cannot open " + file);
            SourceTerm f;
            double v = 0.0;
            while (in >> v) f.values.push_back(v);
            if (!in.eof()) throw InputError(file + ": malformed source value");
            check_compatible(f, g);
            return f;
        }
        return kind == "zero" ? zero_source(g) : corner_source(g);
    }
};

std::string utc_now() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw InputError("cannot write " + path.string());
}

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
        if (ec) throw InputError("cannot create " + path.parent_path().string() + ": " + ec.message());
    }
}

void warn_energy(const KleModel& model, std::ostream& err) {
    if (model.energy_fraction < 0.95) {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "warning: %d KLE modes retain %.1f%% of the covariance energy (< 95%%)",
                      model.modes(), 100.0 * model.energy_fraction);
        err << buf << '\n';
    }
}

PermeabilityField load_field(const std::string& path, int& m) {
    const io::FieldFile ff = io::read_field(path);
    m = ff.m;
    return io::to_field(ff);
}

} // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Mixed generalized multiscale Darcy toolkit"};
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);

    // gen
    auto* gen = app.add_subcommand("gen", "Sample KLE permeability fields (MGF1)");
    int gen_count = 1;
    std::uint64_t gen_seed = 0;
    int gen_n = 30;
    int gen_m = 3;
    std::string gen_out = "fields";
    KleFlags gen_kle;
    gen->add_option("--count", gen_count)->capture_default_str();
    gen->add_option("--seed", gen_seed)->capture_default_str();
    gen->add_option("--n", gen_n)->capture_default_str();
    gen->add_option("--m", gen_m)->capture_default_str();
    gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
    gen_kle.add(gen);

    // basis
    auto* basis = app.add_subcommand("basis", "Offline multiscale basis of one field (MGB1)");
    std::string basis_field;
    std::string basis_variant = "dirichlet";
    int basis_l = 5;
    std::string basis_out;
    basis->add_option("--field", basis_field)->required();
    basis->add_option("--variant", basis_variant)->capture_default_str();
    basis->add_option("--n-basis", basis_l)->capture_default_str();
    basis->add_option("--out", basis_out)->required();

    // solve-fine
    auto* fine = app.add_subcommand("solve-fine", "Fine RT0 reference solve (MGS1)");
    std::string fine_field;
    std::string fine_out;
    std::string fine_csv;
    SourceFlags fine_src;
    fine->add_option("--field", fine_field)->required();
    fine->add_option("--out", fine_out)->required();
    fine->add_option("--csv", fine_csv, "Also dump cell pressures as x,y,value");
    fine_src.add(fine);

    // solve-coarse
    auto* coarse = app.add_subcommand("solve-coarse", "Multiscale solve with a stored basis (MGS1)");
    std::string coarse_field;
    std::string coarse_basis;
    std::string coarse_out;
    std::string coarse_csv;
    bool coarse_compare = false;
    SourceFlags coarse_src;
    coarse->add_option("--field", coarse_field)->required();
    coarse->add_option("--basis", coarse_basis)->required();
    coarse->add_option("--out", coarse_out)->required();
    coarse->add_option("--csv", coarse_csv, "Also dump downscaled pressures as x,y,value");
    coarse->add_flag("--compare", coarse_compare, "Report the relative error against the fine solve");
    coarse_src.add(coarse);

    // corpus
    auto* corpus = app.add_subcommand("corpus", "Build an MGD1 training corpus");
    CorpusConfig cc;
    std::string corpus_variant = "dirichlet";
    std::string corpus_out = "corpus";
    int batch_size = 64;
    std::uint64_t batch_seed = 0;
    bool corpus_f32 = false;
    KleFlags corpus_kle;
    corpus->add_option("--count", cc.count)->capture_default_str();
    corpus->add_option("--seed", cc.base_seed)->capture_default_str();
    corpus->add_option("--n", cc.n)->capture_default_str();
    corpus->add_option("--m", cc.m)->capture_default_str();
    corpus->add_option("--n-basis", cc.n_basis)->capture_default_str();
    corpus->add_option("--variant", corpus_variant)->capture_default_str();
    corpus->add_option("--train", cc.split.train)->capture_default_str();
    corpus->add_option("--val", cc.split.val)->capture_default_str();
    corpus->add_option("--test", cc.split.test)->capture_default_str();
    corpus->add_option("--batch-size", batch_size)->capture_default_str();
    corpus->add_option("--batch-seed", batch_seed)->capture_default_str();
    corpus->add_flag("--f32", corpus_f32, "Also write single-precision split arrays");
    corpus->add_option("--out", corpus_out)->capture_default_str();
    corpus_kle.add(corpus);

    // eval
    auto* eval = app.add_subcommand("eval", "Score surrogate predictions (MGP1) against a corpus");
    std::string eval_pred;
    std::string eval_corpus;
    std::string eval_out;
    EvalOptions eval_opts;
    SourceFlags eval_src;
    eval->add_option("--pred", eval_pred)->required();
    eval->add_option("--corpus", eval_corpus)->required();
    eval->add_option("--out", eval_out, "Report path (default: stdout)");
    eval->add_flag("--downstream", eval_opts.downstream, "Also compare coarse solves");
    eval->add_flag("--reorth", eval_opts.reorthonormalize, "Re-orthonormalize predicted bases");
    eval_src.add(eval);

    // plot
    auto* plot = app.add_subcommand("plot", "CSV contour data from an MGS1, MGB1 or MGF1 file");
    std::string plot_in;
    std::string plot_out;
    int plot_col = 0;
    plot->add_option("--input", plot_in)->required();
    plot->add_option("--column", plot_col, "Basis column for MGB1 input")->capture_default_str();
    plot->add_option("--out", plot_out)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }

    try {
        if (threads > 0) parallel::set_threads(threads);

        if (gen->parsed()) {
            if (gen_count < 1) throw ConfigError("gen: --count must be >= 1");
            const GridHierarchy g(gen_n, gen_m);
            const KleModel model = build_kle(gen_kle.spec, g, gen_kle.modes);
            warn_energy(model, err);
            const auto fields = sample_fields(model, gen_seed, gen_count, gen_kle.thresholding());
            const fs::path dir(gen_out);
            ensure_parent(dir / "x");
            json files = json::array();
            for (const auto& f : fields) {
                char name[48];
                std::snprintf(name, sizeof name, "field_%06llu.mgf", static_cast<unsigned long long>(f.seed));
                io::write_field(dir / name, f, gen_m);
                files.push_back({{"file", name}, {"seed", f.seed},
                                 {"hash", sha256_hex(std::span<const double>(f.values))}});
            }
            write_json(dir / "manifest.json",
                       {{"format", "mgms-fields"},
                        {"format_version", 1},
                        {"config", {{"n", gen_n}, {"m", gen_m}, {"count", gen_count}, {"seed", gen_seed},
                                    {"kle", gen_kle.to_json()}}},
                        {"spec_hash", model.spec_hash()},
                        {"kle_energy_fraction", model.energy_fraction},
                        {"files", files},
                        {"run_info", {{"generated_at", utc_now()}}}});
            out << "wrote " << fields.size() << " field(s) to " << dir.string() << '\n';
        } else if (basis->parsed()) {
            int m = 0;
            const PermeabilityField field = load_field(basis_field, m);
            const GridHierarchy g(field.n, m);
            const BasisField bf = build_basis_field(field, g, parse_variant(basis_variant), basis_l);
            ensure_parent(basis_out);
            io::write_basis(basis_out, bf);
            out << "wrote " << g.n_cells() << "x" << basis_l << " basis to " << basis_out << '\n';
        } else if (fine->parsed()) {
            int m = 0;
            const PermeabilityField field = load_field(fine_field, m);
            const GridHierarchy g(field.n, m);
            const MixedSolution s = solve_fine(field, g, fine_src.build(g));
            ensure_parent(fine_out);
            io::write_solution(fine_out, g.n(), s.u, s.p);
            if (!fine_csv.empty()) io::write_cell_csv(fine_csv, g, std::span<const double>(s.p.data(), s.p.size()));
            out << "fine solve: relative residual " << s.relative_residual << '\n';
        } else if (coarse->parsed()) {
            int m = 0;
            const PermeabilityField field = load_field(coarse_field, m);
            const BasisField bf = io::read_basis(coarse_basis);
            const GridHierarchy g(field.n, m);
            const SourceTerm f = coarse_src.build(g);
            const CoarseSolution s = solve_coarse(assemble_coarse(field, g, bf, f));
            const Eigen::VectorXd p = downscale(s.coeffs, bf, g);
            ensure_parent(coarse_out);
            io::write_solution(coarse_out, g.n(), s.u, p);
            if (!coarse_csv.empty()) io::write_cell_csv(coarse_csv, g, std::span<const double>(p.data(), p.size()));
            out << "coarse solve: " << s.coeffs.size() << " pressure dofs, relative residual "
                << s.relative_residual << '\n';
            if (coarse_compare) {
                const MixedSolution ref = solve_fine(field, g, f);
                out << "relative L2 pressure error vs fine: " << relative_error(p, ref.p, g) << '\n';
            }
        } else if (corpus->parsed()) {
            cc.variant = parse_variant(corpus_variant);
            cc.kle = corpus_kle.spec;
            cc.modes = corpus_kle.modes;
            cc.threshold = corpus_kle.thresholding();
            cc.validate();
            const KleModel probe = build_kle(cc.kle, GridHierarchy(cc.n, cc.m), cc.modes);
            warn_energy(probe, err);
            const fs::path dir(corpus_out);
            const CorpusManifest manifest = build_corpus(cc, dir);
            if (!manifest.train.empty()) {
                save_batches(export_batches(manifest, batch_size, batch_seed), batch_size, batch_seed,
                             manifest, dir / "batches.json");
            }
            if (corpus_f32) export_f32(manifest, dir);
            out << "corpus: " << manifest.sample_count() << " samples, " << manifest.dedup_count()
                << " duplicates, splits " << manifest.train.size() << "/" << manifest.val.size() << "/"
                << manifest.test.size() << '\n';
        } else if (eval->parsed()) {
            if (!eval_src.file.empty() || eval_src.kind != "corner") {
                const CorpusManifest mf = load_manifest(fs::path(eval_corpus) / "manifest.json");
                eval_opts.source = eval_src.build(GridHierarchy(mf.config.n, mf.config.m));
            }
            const MetricsReport report = evaluate_predictions(eval_pred, eval_corpus, eval_opts);
            const std::string text = report_to_json(report);
            if (eval_out.empty()) {
                out << text << '\n';
            } else {
                ensure_parent(eval_out);
                std::ofstream f(eval_out, std::ios::trunc);
                f << text << '\n';
                if (!f) throw InputError("cannot write " + eval_out);
            }
        } else if (plot->parsed()) {
            std::ifstream probe(plot_in, std::ios::binary);
            if (!probe) throw InputError("cannot open " + plot_in);
            char tag[4] = {};
            probe.read(tag, 4);
            const std::string magic(tag, 4);
            std::vector<double> values;
            int n = 0;
            int m = 1;
            if (magic == "MGS1") {
                const io::SolutionFile s = io::read_solution(plot_in);
                n = s.n;
                values.assign(s.pressure.data(), s.pressure.data() + s.pressure.size());
            } else if (magic == "MGF1") {
                const io::FieldFile f = io::read_field(plot_in);
                n = f.n;
                values = f.values;
            } else if (magic == "MGB1") {
                const BasisField b = io::read_basis(plot_in);
                if (plot_col < 0 || plot_col >= b.n_basis) {
                    throw InputError("plot: column " + std::to_string(plot_col) + " out of range for " +
                                     std::to_string(b.n_basis) + " basis functions");
                }
                n = b.n;
                m = b.m;
                const GridHierarchy g(b.n, b.m);
                values.assign(static_cast<std::size_t>(g.n_cells()), 0.0);
                for (int blk = 0; blk < g.n_blocks(); ++blk) {
                    const auto cells = g.block_cells(blk);
                    for (std::size_t k = 0; k < cells.size(); ++k) {
                        values[static_cast<std::size_t>(cells[k])] =
                            b.values(blk * g.cells_per_block() + static_cast<int>(k), plot_col);
                    }
                }
            } else {
                throw InputError(plot_in + ": unrecognized file type");
            }
            ensure_parent(plot_out);
            io::write_cell_csv(plot_out, GridHierarchy(n, m), values);
            out << "wrote " << values.size() << " rows to " << plot_out << '\n';
        }
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

} // namespace mgms::cli
