#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mgms/field.hpp"
#include "mgms/grid.hpp"
#include "mgms/kle.hpp"
#include "mgms/msbasis.hpp"

namespace mgms {

/// ((n/m)^2 x m^2): row b holds block b's cells in row-major order.
Eigen::MatrixXd reshape_field(const PermeabilityField& field, const GridHierarchy& g);
std::vector<double> inverse_reshape(const Eigen::MatrixXd& input, const GridHierarchy& g);

struct DatasetSample {
    std::uint64_t id = 0;
    std::uint64_t seed = 0;
    Eigen::MatrixXd input;   ///< reshaped permeability
    Eigen::MatrixXd target;  ///< stacked basis without the constant column
};

DatasetSample make_sample(std::uint64_t id, const PermeabilityField& field,
                          const BasisField& basis, const GridHierarchy& g);

/// Relative split weights; normalized before use.
struct SplitFractions {
    double train = 0.598;
    double val = 0.199;
    double test = 0.142;
};

enum class Split { Train, Val, Test };

/// Deterministic split of an id given the weights and a key.
Split assign_split(std::uint64_t id, const SplitFractions& fractions, std::uint64_t key);

struct CorpusConfig {
    int n = 30;
    int m = 3;
    int n_basis = 5;
    SnapshotVariant variant = SnapshotVariant::Dirichlet;
    CovarianceSpec kle;
    int modes = kDefaultKleModes;
    std::optional<ThresholdSpec> threshold;
    std::uint64_t base_seed = 0;
    int count = 1;
    SplitFractions split;

    void validate() const;
};

struct SampleRecord {
    std::uint64_t id = 0;
    std::uint64_t seed = 0;
    std::string file;        ///< relative to the corpus directory
    std::string field_hash;  ///< sha256 of the raw field values
    std::string file_hash;   ///< sha256 of the MGD1 bytes
    int multiplicity = 1;    ///< 1 + number of duplicates folded into this sample
};

struct DuplicateRecord {
    std::uint64_t id = 0;
    std::uint64_t seed = 0;
    std::uint64_t duplicate_of = 0;
};

struct CorpusManifest {
    int format_version = 1;
    CorpusConfig config;
    std::string spec_hash;
    double kle_energy_fraction = 1.0;
    std::vector<SampleRecord> samples;
    std::vector<DuplicateRecord> duplicates;
    std::vector<std::uint64_t> train;
    std::vector<std::uint64_t> val;
    std::vector<std::uint64_t> test;

    std::size_t sample_count() const noexcept { return samples.size(); }
    std::size_t dedup_count() const noexcept { return duplicates.size(); }
    const SampleRecord& record(std::uint64_t id) const;
};

/// Generates fields, removes duplicates (by raw-field hash), computes bases
/// and writes `dir/samples/*.mgd` plus `dir/manifest.json`. OpenMP over samples.
CorpusManifest build_corpus(const CorpusConfig& config, const std::filesystem::path& dir);
/// Single-threaded reference for build_corpus.
CorpusManifest build_corpus_serial(const CorpusConfig& config, const std::filesystem::path& dir);

void save_manifest(const CorpusManifest& manifest, const std::filesystem::path& path);
CorpusManifest load_manifest(const std::filesystem::path& path);

DatasetSample load_sample(const CorpusManifest& manifest, const std::filesystem::path& dir,
                          std::uint64_t id);

/// Seeded shuffle of the train split cut into batches; the last batch may be short.
std::vector<std::vector<std::uint64_t>> export_batches(const CorpusManifest& manifest,
                                                       int batch_size, std::uint64_t seed);
void save_batches(const std::vector<std::vector<std::uint64_t>>& batches, int batch_size,
                  std::uint64_t seed, const CorpusManifest& manifest,
                  const std::filesystem::path& path);

/// Single-precision copies per split: `dir/f32/{split}_inputs.f32`,
/// `{split}_targets.f32` (raw little-endian, samples in split order) and
/// `dir/f32/index.json` with shapes and ids.
void export_f32(const CorpusManifest& manifest, const std::filesystem::path& dir);

} // namespace mgms
