#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "mgms/field.hpp"
#include "mgms/grid.hpp"
#include "mgms/msbasis.hpp"

namespace mgms::io {

// All formats are little-endian with a four-byte ASCII magic. Matrices are
// written row-major. Readers throw InputError naming the file on any
// mismatch (magic, version, truncation, trailing bytes).

/// Append-only little-endian encoder.
class ByteWriter {
public:
    void magic(std::string_view tag);
    void u8(std::uint8_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void f32(float v);

    const std::vector<unsigned char>& bytes() const noexcept { return buf_; }
    void save(const std::filesystem::path& path) const;

private:
    std::vector<unsigned char> buf_;
};

/// Bounds-checked little-endian decoder over a whole file.
class ByteReader {
public:
    ByteReader(std::vector<unsigned char> bytes, std::string source);
    static ByteReader open(const std::filesystem::path& path);

    void expect_magic(std::string_view tag);
    std::uint8_t u8();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    float f32();
    /// Throws unless every byte was consumed.
    void expect_end() const;
    bool at_end() const noexcept { return pos_ == buf_.size(); }
    const std::string& source() const noexcept { return source_; }
    [[noreturn]] void fail(const std::string& what) const;

private:
    void need(std::size_t k) const;

    std::vector<unsigned char> buf_;
    std::size_t pos_ = 0;
    std::string source_;
};

inline constexpr std::uint32_t kFieldVersion = 1;
inline constexpr std::uint32_t kSampleVersion = 1;

struct FieldFile {
    int n = 0;
    int m = 0;
    std::uint64_t seed = 0;
    std::vector<double> values;
};

void write_field(const std::filesystem::path& path, const PermeabilityField& field, int m);
FieldFile read_field(const std::filesystem::path& path);
PermeabilityField to_field(const FieldFile& f);

void write_basis(const std::filesystem::path& path, const BasisField& basis);
BasisField read_basis(const std::filesystem::path& path);

struct SolutionFile {
    int n = 0;
    Eigen::VectorXd flux;      ///< per global fine edge
    Eigen::VectorXd pressure;  ///< per cell
};

void write_solution(const std::filesystem::path& path, int n, const Eigen::VectorXd& flux,
                    const Eigen::VectorXd& pressure);
SolutionFile read_solution(const std::filesystem::path& path);

struct SampleFile {
    int n = 0;
    int m = 0;
    std::uint64_t id = 0;
    Eigen::MatrixXd input;   ///< (n/m)^2 x m^2
    Eigen::MatrixXd target;  ///< n^2 x n_targets
};

std::vector<unsigned char> encode_sample(const SampleFile& s);
void write_sample(const std::filesystem::path& path, const SampleFile& s);
SampleFile read_sample(const std::filesystem::path& path);

struct Prediction {
    std::uint64_t id = 0;
    Eigen::MatrixXf values;  ///< n^2 x n_targets
};

struct PredictionFile {
    int n = 0;
    int m = 0;
    int n_targets = 0;
    std::vector<Prediction> samples;
};

void write_predictions(const std::filesystem::path& path, const PredictionFile& p);
PredictionFile read_predictions(const std::filesystem::path& path);

/// "x,y,value" rows at cell centers, one per cell in row-major order.
void write_cell_csv(const std::filesystem::path& path, const GridHierarchy& g,
                    std::span<const double> cell_values);

} // namespace mgms::io
