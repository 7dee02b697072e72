#include "mgms/io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>

#include "mgms/error.hpp"

namespace mgms::io {

void ByteWriter::magic(std::string_view tag) {
    for (char c : tag) buf_.push_back(static_cast<unsigned char>(c));
}

void ByteWriter::u8(std::uint8_t v) { buf_.push_back(v); }

void ByteWriter::u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf_.push_back(static_cast<unsigned char>(v >> (8 * k)));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) buf_.push_back(static_cast<unsigned char>(v >> (8 * k)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw InputError("cannot write " + path.string());
}

ByteReader::ByteReader(std::vector<unsigned char> bytes, std::string source)
    : buf_(std::move(bytes)), source_(std::move(source)) {}

ByteReader ByteReader::open(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ByteReader(std::move(bytes), path.string());
}

void ByteReader::fail(const std::string& what) const { throw InputError(source_ + ": " + what); }

void ByteReader::need(std::size_t k) const {
    if (buf_.size() - pos_ < k) fail("truncated file");
}

void ByteReader::expect_magic(std::string_view tag) {
    need(tag.size());
    for (char c : tag) {
        if (buf_[pos_++] != static_cast<unsigned char>(c)) {
            fail("bad magic, expected " + std::string(tag));
        }
    }
}

std::uint8_t ByteReader::u8() {
    need(1);
    return buf_[pos_++];
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(buf_[pos_++]) << (8 * k);
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(buf_[pos_++]) << (8 * k);
    return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

float ByteReader::f32() { return std::bit_cast<float>(u32()); }

void ByteReader::expect_end() const {
    if (pos_ != buf_.size()) fail("unexpected trailing bytes");
}

namespace {

int checked_dim(ByteReader& r, std::uint32_t v, const char* name) {
    if (v == 0 || v > 1u << 16) r.fail(std::string("implausible ") + name + " = " + std::to_string(v));
    return static_cast<int>(v);
}

void check_grid(ByteReader& r, int n, int m) {
    if (n % m != 0) r.fail("n=" + std::to_string(n) + " is not a multiple of m=" + std::to_string(m));
}

} // namespace

void write_field(const std::filesystem::path& path, const PermeabilityField& field, int m) {
    ByteWriter w;
    w.magic("MGF1");
    w.u32(kFieldVersion);
    w.u32(static_cast<std::uint32_t>(field.n));
    w.u32(static_cast<std::uint32_t>(m));
    w.u64(field.seed);
    for (double v : field.values) w.f64(v);
    w.save(path);
}

FieldFile read_field(const std::filesystem::path& path) {
    ByteReader r = ByteReader::open(path);
    r.expect_magic("MGF1");
    const std::uint32_t version = r.u32();
    if (version != kFieldVersion) r.fail("unsupported MGF1 version " + std::to_string(version));
    FieldFile f;
    f.n = checked_dim(r, r.u32(), "n");
    f.m = checked_dim(r, r.u32(), "m");
    check_grid(r, f.n, f.m);
    f.seed = r.u64();
    f.values.resize(static_cast<std::size_t>(f.n) * static_cast<std::size_t>(f.n));
    for (double& v : f.values) v = r.f64();
    r.expect_end();
    return f;
}

PermeabilityField to_field(const FieldFile& f) {
    PermeabilityField out;
    out.n = f.n;
    out.seed = f.seed;
    out.values = f.values;
    return out;
}

void write_basis(const std::filesystem::path& path, const BasisField& basis) {
    ByteWriter w;
    w.magic("MGB1");
    w.u32(static_cast<std::uint32_t>(basis.n));
    w.u32(static_cast<std::uint32_t>(basis.m));
    w.u32(static_cast<std::uint32_t>(basis.n_basis));
    w.u8(static_cast<std::uint8_t>(basis.variant));
    for (Eigen::Index i = 0; i < basis.values.rows(); ++i) {
        for (Eigen::Index k = 0; k < basis.values.cols(); ++k) w.f64(basis.values(i, k));
    }
    w.save(path);
}

BasisField read_basis(const std::filesystem::path& path) {
    ByteReader r = ByteReader::open(path);
    r.expect_magic("MGB1");
    BasisField b;
    b.n = checked_dim(r, r.u32(), "n");
    b.m = checked_dim(r, r.u32(), "m");
    check_grid(r, b.n, b.m);
    b.n_basis = checked_dim(r, r.u32(), "n_basis");
    const std::uint8_t variant = r.u8();
    if (variant > 2) r.fail("unknown snapshot variant " + std::to_string(variant));
    b.variant = static_cast<SnapshotVariant>(variant);
    b.values.resize(b.n * b.n, b.n_basis);
    for (Eigen::Index i = 0; i < b.values.rows(); ++i) {
        for (Eigen::Index k = 0; k < b.values.cols(); ++k) b.values(i, k) = r.f64();
    }
    r.expect_end();
    return b;
}

void write_solution(const std::filesystem::path& path, int n, const Eigen::VectorXd& flux,
                    const Eigen::VectorXd& pressure) {
    ByteWriter w;
    w.magic("MGS1");
    w.u32(static_cast<std::uint32_t>(n));
    w.u32(static_cast<std::uint32_t>(flux.size()));
    for (double v : flux) w.f64(v);
    for (double v : pressure) w.f64(v);
    w.save(path);
}

SolutionFile read_solution(const std::filesystem::path& path) {
    ByteReader r = ByteReader::open(path);
    r.expect_magic("MGS1");
    SolutionFile s;
    s.n = checked_dim(r, r.u32(), "n");
    const std::uint32_t edges = r.u32();
    if (edges != static_cast<std::uint32_t>(2 * s.n * (s.n + 1))) {
        r.fail("edge count " + std::to_string(edges) + " does not match n=" + std::to_string(s.n));
    }
    s.flux.resize(edges);
    for (double& v : s.flux) v = r.f64();
    s.pressure.resize(s.n * s.n);
    for (double& v : s.pressure) v = r.f64();
    r.expect_end();
    return s;
}

std::vector<unsigned char> encode_sample(const SampleFile& s) {
    ByteWriter w;
    w.magic("MGD1");
    w.u32(kSampleVersion);
    w.u32(static_cast<std::uint32_t>(s.n));
    w.u32(static_cast<std::uint32_t>(s.m));
    w.u32(static_cast<std::uint32_t>(s.target.cols()));
    w.u64(s.id);
    for (Eigen::Index i = 0; i < s.input.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.input.cols(); ++j) w.f64(s.input(i, j));
    }
    for (Eigen::Index i = 0; i < s.target.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.target.cols(); ++j) w.f64(s.target(i, j));
    }
    return w.bytes();
}

void write_sample(const std::filesystem::path& path, const SampleFile& s) {
    const auto bytes = encode_sample(s);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("cannot write " + path.string());
}

SampleFile read_sample(const std::filesystem::path& path) {
    ByteReader r = ByteReader::open(path);
    r.expect_magic("MGD1");
    const std::uint32_t version = r.u32();
    if (version != kSampleVersion) r.fail("unsupported MGD1 version " + std::to_string(version));
    SampleFile s;
    s.n = checked_dim(r, r.u32(), "n");
    s.m = checked_dim(r, r.u32(), "m");
    check_grid(r, s.n, s.m);
    const std::uint32_t targets = r.u32();
    if (targets > 1u << 16) r.fail("implausible n_targets");
    s.id = r.u64();
    const int nb = (s.n / s.m) * (s.n / s.m);
    s.input.resize(nb, s.m * s.m);
    for (Eigen::Index i = 0; i < s.input.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.input.cols(); ++j) s.input(i, j) = r.f64();
    }
    s.target.resize(s.n * s.n, targets);
    for (Eigen::Index i = 0; i < s.target.rows(); ++i) {
        for (Eigen::Index j = 0; j < s.target.cols(); ++j) s.target(i, j) = r.f64();
    }
    r.expect_end();
    return s;
}

void write_predictions(const std::filesystem::path& path, const PredictionFile& p) {
    ByteWriter w;
    w.magic("MGP1");
    w.u32(static_cast<std::uint32_t>(p.n));
    w.u32(static_cast<std::uint32_t>(p.m));
    w.u32(static_cast<std::uint32_t>(p.n_targets));
    w.u64(p.samples.size());
    for (const auto& s : p.samples) {
        if (s.values.rows() != p.n * p.n || s.values.cols() != p.n_targets) {
            throw InputError("predictions: sample " + std::to_string(s.id) + " has the wrong shape");
        }
        w.u64(s.id);
        for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
            for (Eigen::Index j = 0; j < s.values.cols(); ++j) w.f32(s.values(i, j));
        }
    }
    w.save(path);
}

PredictionFile read_predictions(const std::filesystem::path& path) {
    ByteReader r = ByteReader::open(path);
    r.expect_magic("MGP1");
    PredictionFile p;
    p.n = checked_dim(r, r.u32(), "n");
    p.m = checked_dim(r, r.u32(), "m");
    check_grid(r, p.n, p.m);
    p.n_targets = checked_dim(r, r.u32(), "n_targets");
    const std::uint64_t count = r.u64();
    const std::uint64_t per = 8 + 4ull * static_cast<std::uint64_t>(p.n) * p.n * p.n_targets;
    if (count > std::numeric_limits<std::uint64_t>::max() / per) r.fail("implausible sample count");
    p.samples.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(count, 1u << 20)));
    for (std::uint64_t k = 0; k < count; ++k) {
        Prediction s;
        s.id = r.u64();
        s.values.resize(p.n * p.n, p.n_targets);
        for (Eigen::Index i = 0; i < s.values.rows(); ++i) {
            for (Eigen::Index j = 0; j < s.values.cols(); ++j) s.values(i, j) = r.f32();
        }
        p.samples.push_back(std::move(s));
    }
    r.expect_end();
    return p;
}

void write_cell_csv(const std::filesystem::path& path, const GridHierarchy& g,
                    std::span<const double> cell_values) {
    if (cell_values.size() != static_cast<std::size_t>(g.n_cells())) {
        throw InputError("csv: " + std::to_string(cell_values.size()) + " values for " +
                         std::to_string(g.n_cells()) + " cells");
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw InputError("cannot write " + path.string());
    out << "x,y,value\n";
    char line[96];
    for (int c = 0; c < g.n_cells(); ++c) {
        const auto xy = g.cell_center(c);
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", xy[0], xy[1],
                      cell_values[static_cast<std::size_t>(c)]);
        out << line;
    }
    if (!out) throw InputError("cannot write " + path.string());
}

} // namespace mgms::io
