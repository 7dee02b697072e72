// Serial reference vs OpenMP kernels. Run with --benchmark_filter to pick one.

#include <benchmark/benchmark.h>

#include "mgms/kle.hpp"
#include "mgms/msbasis.hpp"

using namespace mgms;

namespace {

const GridHierarchy& grid() {
    static const GridHierarchy g(30, 3);
    return g;
}

const KleModel& model() {
    static const KleModel k = build_kle({0.2, 0.2, 1.0, 0.0}, grid(), kDefaultKleModes);
    return k;
}

void BM_CovarianceSerial(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(assemble_covariance_serial(model().spec, grid()));
}

void BM_CovarianceParallel(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(assemble_covariance(model().spec, grid()));
}

void BM_SampleFieldsSerial(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(sample_fields_serial(model(), 0, 256, std::nullopt));
}

void BM_SampleFieldsParallel(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(sample_fields(model(), 0, 256, std::nullopt));
}

void BM_BasisFieldSerial(benchmark::State& state) {
    const PermeabilityField f = sample_field(model(), 1);
    for (auto _ : state) benchmark::DoNotOptimize(build_basis_field_serial(f, grid(), SnapshotVariant::Dirichlet, 5));
}

void BM_BasisFieldParallel(benchmark::State& state) {
    const PermeabilityField f = sample_field(model(), 1);
    for (auto _ : state) benchmark::DoNotOptimize(build_basis_field(f, grid(), SnapshotVariant::Dirichlet, 5));
}

} // namespace

BENCHMARK(BM_CovarianceSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CovarianceParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SampleFieldsSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleFieldsParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BasisFieldSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BasisFieldParallel)->Unit(benchmark::kMillisecond)->UseRealTime();

int main(int argc, char** argv) {
    model();  // keep the one-off eigensolve out of the timings
    benchmark::Initialize(&argc, argv);
    if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
