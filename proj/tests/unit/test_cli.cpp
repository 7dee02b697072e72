#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "mgms/cli.hpp"
#include "mgms/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::initializer_list<std::string> args) {
    std::vector<std::string> store{"mgms"};
    store.insert(store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : store) argv.push_back(a.c_str());
    std::ostringstream out;
    std::ostringstream err;
    const int code = mgms::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::vector<char> slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("mgms_cli_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("end-to-end pipeline through every subcommand") {
    TempDir d;
    auto r = run({"gen", "--count", "2", "--seed", "5", "--n", "12", "--m", "3", "--modes", "20",
                  "--out", d / "fields"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(fs::exists(d.path / "fields" / "field_000005.mgf"));
    CHECK(fs::exists(d.path / "fields" / "field_000006.mgf"));
    CHECK(fs::exists(d.path / "fields" / "manifest.json"));
    CHECK(r.err.find("energy") != std::string::npos);  // 20 modes at l = 0.2 keep < 95 %

    const std::string field = d / "fields/field_000005.mgf";
    r = run({"basis", "--field", field, "--variant", "neumann", "--n-basis", "4", "--out", d / "b.mgb"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(mgms::io::read_basis(d / "b.mgb").n_basis == 4);

    r = run({"solve-fine", "--field", field, "--out", d / "fine.mgs", "--csv", d / "fine.csv"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(mgms::io::read_solution(d / "fine.mgs").pressure.size() == 144);

    r = run({"solve-coarse", "--field", field, "--basis", d / "b.mgb", "--out", d / "coarse.mgs", "--compare"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.out.find("64 pressure dofs") != std::string::npos);
    CHECK(r.out.find("relative L2 pressure error") != std::string::npos);

    for (const char* input : {"fine.mgs", "b.mgb", "fields/field_000006.mgf"}) {
        r = run({"plot", "--input", d / input, "--column", "1", "--out", d / "plot.csv"});
        CHECK_MESSAGE(r.code == 0, r.err);
    }
    CHECK(run({"plot", "--input", d / "b.mgb", "--column", "4", "--out", d / "plot.csv"}).code == 1);

    r = run({"corpus", "--count", "4", "--n", "6", "--m", "3", "--n-basis", "3", "--modes", "10",
             "--train", "0.5", "--val", "0", "--test", "0.5", "--batch-size", "2", "--f32", "--out", d / "corpus"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(fs::exists(d.path / "corpus" / "manifest.json"));
    CHECK(fs::exists(d.path / "corpus" / "f32" / "index.json"));
}

TEST_CASE("eval scores predictions written in the surrogate format") {
    TempDir d;
    REQUIRE(run({"corpus", "--count", "3", "--n", "6", "--m", "3", "--n-basis", "3", "--modes", "10",
                 "--train", "0", "--val", "0", "--test", "1", "--out", d / "c"}).code == 0);
    mgms::io::PredictionFile p{6, 3, 2, {}};
    for (std::uint64_t id = 0; id < 3; ++id) {
        mgms::io::SampleFile s = mgms::io::read_sample(d.path / "c" / "samples" /
                                                       ("sample_00000" + std::to_string(id) + ".mgd"));
        p.samples.push_back({id, s.target.cast<float>()});
    }
    mgms::io::write_predictions(d / "p.mgp", p);
    auto r = run({"eval", "--pred", d / "p.mgp", "--corpus", d / "c", "--downstream"});
    REQUIRE_MESSAGE(r.code == 0, r.err);
    CHECK(r.out.find("\"MSE\"") != std::string::npos);
    CHECK(r.out.find("\"Orth\"") != std::string::npos);
    CHECK(r.out.find("fraction_within_2x") != std::string::npos);
}

TEST_CASE("exit codes") {
    TempDir d;
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    CHECK(run({"gen", "--bogus"}).code == 1);
    CHECK(run({"gen", "--n", "10", "--m", "3", "--out", d / "x"}).code == 1);
    auto r = run({"solve-fine", "--field", d / "missing.mgf", "--out", d / "o.mgs"});
    CHECK(r.code == 1);
    CHECK(r.err.find("missing.mgf") != std::string::npos);
    CHECK(run({"gen", "--threshold", "--quantile", "1.5", "--out", d / "x"}).code == 1);

    REQUIRE(run({"gen", "--n", "6", "--m", "3", "--modes", "10", "--out", d / "f"}).code == 0);
    const std::string field = d / "f/field_000000.mgf";
    CHECK(run({"basis", "--field", field, "--n-basis", "10", "--out", d / "b.mgb"}).code == 1);
    CHECK(run({"basis", "--field", field, "--variant", "robin", "--out", d / "b.mgb"}).code == 1);
    REQUIRE(run({"basis", "--field", field, "--out", d / "b.mgb"}).code == 0);

    {
        std::ofstream src(d / "src.txt");
        for (int c = 0; c < 36; ++c) src << 1.0 << ' ';
    }
    CHECK(run({"solve-fine", "--field", field, "--source-file", d / "src.txt", "--out", d / "o.mgs"}).code == 1);

    // Zero source: the fine reference is identically zero, so the comparison is undefined.
    r = run({"solve-coarse", "--field", field, "--basis", d / "b.mgb", "--source", "zero", "--compare",
             "--out", d / "o.mgs"});
    CHECK(r.code == 2);
    CHECK(r.err.find("numerical") != std::string::npos);
}

TEST_CASE("outputs are byte-identical across thread counts") {
    TempDir d;
    for (const char* t : {"1", "2", "4"}) {
        const std::string dir = d / (std::string("corpus") + t);
        REQUIRE(run({"--threads", t, "corpus", "--count", "6", "--seed", "9", "--n", "12", "--m", "3",
                     "--modes", "20", "--out", dir}).code == 0);
        REQUIRE(run({"--threads", t, "gen", "--count", "3", "--n", "12", "--m", "3", "--modes", "20",
                     "--out", d / (std::string("gen") + t)}).code == 0);
    }
    for (const auto& entry : fs::directory_iterator(d.path / "corpus1" / "samples")) {
        const auto name = entry.path().filename();
        CHECK(slurp(entry.path()) == slurp(d.path / "corpus2" / "samples" / name));
        CHECK(slurp(entry.path()) == slurp(d.path / "corpus4" / "samples" / name));
    }
    CHECK(slurp(d.path / "corpus1" / "batches.json") == slurp(d.path / "corpus4" / "batches.json"));
    for (const char* f : {"field_000000.mgf", "field_000001.mgf", "field_000002.mgf"}) {
        CHECK(slurp(d.path / "gen1" / f) == slurp(d.path / "gen4" / f));
    }
}
