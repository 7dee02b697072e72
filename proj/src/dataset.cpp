#include "mgms/dataset.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>

#include <json.hpp>

#include "mgms/error.hpp"
#include "mgms/hash.hpp"
#include "mgms/io.hpp"
#include "mgms/parallel.hpp"
#include "mgms/rng.hpp"

namespace mgms {

using nlohmann::json;

Eigen::MatrixXd reshape_field(const PermeabilityField& field, const GridHierarchy& g) {
    if (field.n != g.n() || field.values.size() != static_cast<std::size_t>(g.n_cells())) {
        throw ConfigError("reshape: field of side " + std::to_string(field.n) +
                          " does not match grid n=" + std::to_string(g.n()));
    }
    Eigen::MatrixXd out(g.n_blocks(), g.cells_per_block());
    for (int b = 0; b < g.n_blocks(); ++b) {
        const auto cells = g.block_cells(b);
        for (std::size_t k = 0; k < cells.size(); ++k) {
            out(b, static_cast<Eigen::Index>(k)) = field.values[static_cast<std::size_t>(cells[k])];
        }
    }
    return out;
}

std::vector<double> inverse_reshape(const Eigen::MatrixXd& input, const GridHierarchy& g) {
    if (input.rows() != g.n_blocks() || input.cols() != g.cells_per_block()) {
        throw ConfigError("inverse_reshape: input is " + std::to_string(input.rows()) + "x" +
                          std::to_string(input.cols()) + ", expected " +
                          std::to_string(g.n_blocks()) + "x" + std::to_string(g.cells_per_block()));
    }
    std::vector<double> values(static_cast<std::size_t>(g.n_cells()));
    for (int b = 0; b < g.n_blocks(); ++b) {
        const auto cells = g.block_cells(b);
        for (std::size_t k = 0; k < cells.size(); ++k) {
            values[static_cast<std::size_t>(cells[k])] = input(b, static_cast<Eigen::Index>(k));
        }
    }
    return values;
}

DatasetSample make_sample(std::uint64_t id, const PermeabilityField& field,
                          const BasisField& basis, const GridHierarchy& g) {
    if (basis.n != g.n() || basis.m != g.m() || basis.n_basis < 1) {
        throw ConfigError("dataset: basis does not match grid");
    }
    DatasetSample s;
    s.id = id;
    s.seed = field.seed;
    s.input = reshape_field(field, g);
    s.target = basis.values.rightCols(basis.n_basis - 1);
    return s;
}

Split assign_split(std::uint64_t id, const SplitFractions& fractions, std::uint64_t key) {
    const double total = fractions.train + fractions.val + fractions.test;
    const double u = rng::uniform(key ^ 0x5eed5117ULL, id) * total;
    if (u < fractions.train) return Split::Train;
    if (u < fractions.train + fractions.val) return Split::Val;
    return Split::Test;
}

void CorpusConfig::validate() const {
    GridHierarchy g(n, m);
    kle.validate();
    if (threshold) threshold->validate();
    if (count < 1) throw ConfigError("corpus: count must be >= 1");
    if (n_basis < 1 || n_basis > m * m) {
        throw ConfigError("corpus: n_basis must lie in [1, " + std::to_string(m * m) + "]");
    }
    if (modes < 1 || modes > n * n) throw ConfigError("corpus: KLE modes must lie in [1, n^2]");
    if (split.train < 0 || split.val < 0 || split.test < 0 ||
        !(split.train + split.val + split.test > 0)) {
        throw ConfigError("corpus: split fractions must be non-negative with a positive sum");
    }
}

const SampleRecord& CorpusManifest::record(std::uint64_t id) const {
    const auto it = std::lower_bound(samples.begin(), samples.end(), id,
                                     [](const SampleRecord& r, std::uint64_t v) { return r.id < v; });
    if (it == samples.end() || it->id != id) throw InputError("corpus: no sample with id " + std::to_string(id));
    return *it;
}

namespace {

std::string sample_name(std::uint64_t id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "sample_%06llu.mgd", static_cast<unsigned long long>(id));
    return buf;
}

json config_to_json(const CorpusConfig& c) {
    json j;
    j["n"] = c.n;
    j["m"] = c.m;
    j["n_basis"] = c.n_basis;
    j["variant"] = to_string(c.variant);
    j["kle"] = {{"kernel", "separable_exponential"}, {"lx", c.kle.lx},       {"ly", c.kle.ly},
                {"variance", c.kle.variance},        {"mean", c.kle.mean},   {"modes", c.modes}};
    if (c.threshold) {
        j["threshold"] = {{"quantile", c.threshold->quantile},
                          {"kappa_matrix", c.threshold->kappa_matrix},
                          {"kappa_fissure", c.threshold->kappa_fissure}};
    } else {
        j["threshold"] = nullptr;
    }
    j["base_seed"] = c.base_seed;
    j["count"] = c.count;
    j["split"] = {{"train", c.split.train}, {"val", c.split.val}, {"test", c.split.test}};
    return j;
}

CorpusConfig config_from_json(const json& j) {
    CorpusConfig c;
    c.n = j.at("n").get<int>();
    c.m = j.at("m").get<int>();
    c.n_basis = j.at("n_basis").get<int>();
    c.variant = parse_variant(j.at("variant").get<std::string>());
    const json& k = j.at("kle");
    c.kle.lx = k.at("lx").get<double>();
    c.kle.ly = k.at("ly").get<double>();
    c.kle.variance = k.at("variance").get<double>();
    c.kle.mean = k.at("mean").get<double>();
    c.modes = k.at("modes").get<int>();
    if (!j.at("threshold").is_null()) {
        const json& t = j.at("threshold");
        c.threshold = ThresholdSpec{t.at("quantile").get<double>(), t.at("kappa_matrix").get<double>(),
                                    t.at("kappa_fissure").get<double>()};
    }
    c.base_seed = j.at("base_seed").get<std::uint64_t>();
    c.count = j.at("count").get<int>();
    const json& s = j.at("split");
    c.split = {s.at("train").get<double>(), s.at("val").get<double>(), s.at("test").get<double>()};
    return c;
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

CorpusManifest run_corpus(const CorpusConfig& config, const std::filesystem::path& dir, bool threaded) {
    config.validate();
    const GridHierarchy g(config.n, config.m);
    const KleModel model = build_kle(config.kle, g, config.modes);

    const std::vector<PermeabilityField> fields =
        threaded ? sample_fields(model, config.base_seed, config.count, config.threshold)
                 : sample_fields_serial(model, config.base_seed, config.count, config.threshold);

    CorpusManifest manifest;
    manifest.config = config;
    manifest.spec_hash = model.spec_hash();
    manifest.kle_energy_fraction = model.energy_fraction;

    std::map<std::string, std::size_t> first_by_hash;
    std::vector<std::size_t> retained;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const std::string hash = sha256_hex(std::span<const double>(fields[i].values));
        const auto [it, inserted] = first_by_hash.emplace(hash, manifest.samples.size());
        if (inserted) {
            SampleRecord rec;
            rec.id = i;
            rec.seed = fields[i].seed;
            rec.file = "samples/" + sample_name(i);
            rec.field_hash = hash;
            manifest.samples.push_back(rec);
            retained.push_back(i);
        } else {
            SampleRecord& first = manifest.samples[it->second];
            ++first.multiplicity;
            manifest.duplicates.push_back({i, fields[i].seed, first.id});
        }
    }

    std::error_code ec;
    std::filesystem::create_directories(dir / "samples", ec);
    if (ec) throw InputError("cannot create " + (dir / "samples").string() + ": " + ec.message());

    auto emit = [&](std::size_t k) {
        const std::size_t i = retained[k];
        const BasisField basis = build_basis_field_serial(fields[i], g, config.variant, config.n_basis);
        const DatasetSample s = make_sample(i, fields[i], basis, g);
        io::SampleFile file{config.n, config.m, s.id, s.input, s.target};
        const auto bytes = io::encode_sample(file);
        const auto path = dir / manifest.samples[k].file;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw InputError("cannot write " + path.string());
        manifest.samples[k].file_hash = sha256_hex(std::span<const unsigned char>(bytes));
    };
    if (threaded) {
        parallel::for_each_index(static_cast<std::ptrdiff_t>(retained.size()),
                                 [&](std::ptrdiff_t k) { emit(static_cast<std::size_t>(k)); });
    } else {
        for (std::size_t k = 0; k < retained.size(); ++k) emit(k);
    }

    for (const auto& rec : manifest.samples) {
        switch (assign_split(rec.id, config.split, config.base_seed)) {
        case Split::Train: manifest.train.push_back(rec.id); break;
        case Split::Val: manifest.val.push_back(rec.id); break;
        case Split::Test: manifest.test.push_back(rec.id); break;
        }
    }

    save_manifest(manifest, dir / "manifest.json");
    return manifest;
}

} // namespace

CorpusManifest build_corpus(const CorpusConfig& config, const std::filesystem::path& dir) {
    return run_corpus(config, dir, true);
}

CorpusManifest build_corpus_serial(const CorpusConfig& config, const std::filesystem::path& dir) {
    return run_corpus(config, dir, false);
}

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path) {
    json j;
    j["format"] = "mgms-corpus";
    j["format_version"] = manifest.format_version;
    j["config"] = config_to_json(manifest.config);
    j["spec_hash"] = manifest.spec_hash;
    j["kle_energy_fraction"] = manifest.kle_energy_fraction;
    // None of these come from a published configuration; they are toolkit defaults.
    j["assumed_parameters"] = {"kle.kernel", "kle.lx", "kle.ly", "kle.variance", "kle.mean",
                               "threshold", "source_term"};
    j["sample_count"] = manifest.sample_count();
    j["dedup_count"] = manifest.dedup_count();
    json samples = json::array();
    for (const auto& r : manifest.samples) {
        samples.push_back({{"id", r.id},
                           {"seed", r.seed},
                           {"file", r.file},
                           {"field_hash", r.field_hash},
                           {"file_hash", r.file_hash},
                           {"multiplicity", r.multiplicity}});
    }
    j["samples"] = samples;
    json dups = json::array();
    for (const auto& d : manifest.duplicates) {
        dups.push_back({{"id", d.id}, {"seed", d.seed}, {"duplicate_of", d.duplicate_of}});
    }
    j["duplicates"] = dups;
    j["splits"] = {{"train", manifest.train}, {"val", manifest.val}, {"test", manifest.test}};
    j["run_info"] = {{"generated_at", utc_timestamp()}};

    std::ofstream out(path, std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw InputError("cannot write " + path.string());
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        const json j = json::parse(in);
        if (j.at("format").get<std::string>() != "mgms-corpus") {
            throw InputError(path.string() + ": not a corpus manifest");
        }
        CorpusManifest m;
        m.format_version = j.at("format_version").get<int>();
        if (m.format_version != 1) {
            throw InputError(path.string() + ": unsupported manifest version " +
                             std::to_string(m.format_version));
        }
        m.config = config_from_json(j.at("config"));
        m.spec_hash = j.at("spec_hash").get<std::string>();
        m.kle_energy_fraction = j.at("kle_energy_fraction").get<double>();
        for (const auto& s : j.at("samples")) {
            SampleRecord r;
            r.id = s.at("id").get<std::uint64_t>();
            r.seed = s.at("seed").get<std::uint64_t>();
            r.file = s.at("file").get<std::string>();
            r.field_hash = s.at("field_hash").get<std::string>();
            r.file_hash = s.at("file_hash").get<std::string>();
            r.multiplicity = s.at("multiplicity").get<int>();
            m.samples.push_back(r);
        }
        std::sort(m.samples.begin(), m.samples.end(),
                  [](const SampleRecord& a, const SampleRecord& b) { return a.id < b.id; });
        for (const auto& d : j.at("duplicates")) {
            m.duplicates.push_back({d.at("id").get<std::uint64_t>(), d.at("seed").get<std::uint64_t>(),
                                    d.at("duplicate_of").get<std::uint64_t>()});
        }
        const json& sp = j.at("splits");
        m.train = sp.at("train").get<std::vector<std::uint64_t>>();
        m.val = sp.at("val").get<std::vector<std::uint64_t>>();
        m.test = sp.at("test").get<std::vector<std::uint64_t>>();
        return m;
    } catch (const json::exception& e) {
        throw InputError(path.string() + ": malformed manifest (" + e.what() + ")");
    }
}

DatasetSample load_sample(const CorpusManifest& manifest, const std::filesystem::path& dir,
                          std::uint64_t id) {
    const SampleRecord& rec = manifest.record(id);
    const io::SampleFile f = io::read_sample(dir / rec.file);
    if (f.id != id || f.n != manifest.config.n || f.m != manifest.config.m) {
        throw InputError((dir / rec.file).string() + ": header does not match the manifest");
    }
    DatasetSample s;
    s.id = id;
    s.seed = rec.seed;
    s.input = f.input;
    s.target = f.target;
    return s;
}

std::vector<std::vector<std::uint64_t>> export_batches(const CorpusManifest& manifest,
                                                       int batch_size, std::uint64_t seed) {
    if (batch_size < 1) throw ConfigError("batches: batch size must be >= 1");
    if (manifest.train.empty()) throw ConfigError("batches: train split is empty");
    std::vector<std::uint64_t> order = manifest.train;
    std::sort(order.begin(), order.end());
    for (std::size_t k = order.size() - 1; k > 0; --k) {
        const std::size_t j = static_cast<std::size_t>(rng::at(seed, k) % (k + 1));
        std::swap(order[k], order[j]);
    }
    std::vector<std::vector<std::uint64_t>> batches;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
        const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

void save_batches(const std::vector<std::vector<std::uint64_t>>& batches, int batch_size,
                  std::uint64_t seed, const CorpusManifest& manifest,
                  const std::filesystem::path& path) {
    const int nb = (manifest.config.n / manifest.config.m) * (manifest.config.n / manifest.config.m);
    json j;
    j["batch_size"] = batch_size;
    j["seed"] = seed;
    j["split"] = "train";
    j["record_shape"] = {batch_size, 1, nb, manifest.config.m * manifest.config.m};
    j["batches"] = batches;
    std::ofstream out(path, std::ios::trunc);
    out << j.dump(2) << '\n';
    if (!out) throw InputError("cannot write " + path.string());
}

void export_f32(const CorpusManifest& manifest, const std::filesystem::path& dir) {
    const auto out_dir = dir / "f32";
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw InputError("cannot create " + out_dir.string() + ": " + ec.message());

    const int n = manifest.config.n;
    const int m = manifest.config.m;
    const int targets = manifest.config.n_basis - 1;
    json index;
    index["input_shape"] = {(n / m) * (n / m), m * m};
    index["target_shape"] = {n * n, targets};
    index["dtype"] = "float32-le";

    const std::pair<const char*, const std::vector<std::uint64_t>*> splits[] = {
        {"train", &manifest.train}, {"val", &manifest.val}, {"test", &manifest.test}};
    for (const auto& [name, ids] : splits) {
        io::ByteWriter inputs;
        io::ByteWriter outputs;
        for (std::uint64_t id : *ids) {
            const DatasetSample s = load_sample(manifest, dir, id);
            for (Eigen::Index i = 0; i < s.input.rows(); ++i) {
                for (Eigen::Index k = 0; k < s.input.cols(); ++k) inputs.f32(static_cast<float>(s.input(i, k)));
            }
            for (Eigen::Index i = 0; i < s.target.rows(); ++i) {
                for (Eigen::Index k = 0; k < s.target.cols(); ++k) outputs.f32(static_cast<float>(s.target(i, k)));
            }
        }
        inputs.save(out_dir / (std::string(name) + "_inputs.f32"));
        outputs.save(out_dir / (std::string(name) + "_targets.f32"));
        index[name] = *ids;
    }
    std::ofstream out(out_dir / "index.json", std::ios::trunc);
    out << index.dump(2) << '\n';
    if (!out) throw InputError("cannot write " + (out_dir / "index.json").string());
}

} // namespace mgms
