// Serial reference vs OpenMP kernel comparisons for the hot loops:
// resampling, dilation, probability fusion, surface distances, diameters.
#include <benchmark/benchmark.h>

#include <random>

#include "tseg/fusion.hpp"
#include "tseg/metrics.hpp"
#include "tseg/morphology.hpp"
#include "tseg/radiomics.hpp"
#include "tseg/resample.hpp"

using namespace tseg;

namespace {

Geometry make_geom(std::int64_t n, double spacing = 1.0) {
    Geometry g;
    g.dims = {n, n, n};
    g.spacing = {spacing, spacing, spacing};
    return g;
}

Volume random_volume(std::int64_t n, std::uint32_t seed) {
    Volume v(make_geom(n, 1.37), DType::Float32);
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> u(0.f, 100.f);
    for (auto& x : v.data) x = u(rng);
    return v;
}

Mask random_blob_mask(std::int64_t n, double density, std::uint32_t seed) {
    Mask m(make_geom(n));
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto& x : m.data) x = u(rng) < density;
    return m;
}

std::vector<ProbabilityStack> random_stacks(std::int64_t n, std::size_t channels,
                                            std::size_t models, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> u(0.f, 1.f);
    std::vector<ProbabilityStack> stacks(models);
    for (auto& s : stacks) {
        s.geom = make_geom(n);
        s.normalized = false;
        for (std::size_t c = 0; c < channels; ++c) {
            s.channel_names.push_back("ch" + std::to_string(c));
            s.channels.emplace_back(s.geom.voxel_count());
            for (auto& v : s.channels.back()) v = u(rng);
        }
    }
    return stacks;
}

std::vector<Vec3> random_points(std::size_t n, std::uint32_t seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-100, 100);
    std::vector<Vec3> pts(n);
    for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
    return pts;
}

void BM_resample_serial(benchmark::State& state) {
    Volume v = random_volume(state.range(0), 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(detail::resample_isotropic_serial(v, 1.0, Interp::Trilinear));
}

void BM_resample_parallel(benchmark::State& state) {
    Volume v = random_volume(state.range(0), 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(resample_isotropic(v, 1.0, Interp::Trilinear));
}

void BM_dilate_serial(benchmark::State& state) {
    Mask m = random_blob_mask(state.range(0), 0.02, 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(detail::binary_dilate_serial(m, 2, Connectivity::Corners26));
}

void BM_dilate_parallel(benchmark::State& state) {
    Mask m = random_blob_mask(state.range(0), 0.02, 2);
    for (auto _ : state)
        benchmark::DoNotOptimize(binary_dilate(m, 2, Connectivity::Corners26));
}

void BM_fuse_serial(benchmark::State& state) {
    auto stacks = random_stacks(state.range(0), 5, 3, 3);
    EnsembleWeights w({{"a", 0.33}, {"b", 0.34}, {"c", 0.33}});
    for (auto _ : state) benchmark::DoNotOptimize(detail::fuse_serial(stacks, w));
}

void BM_fuse_parallel(benchmark::State& state) {
    auto stacks = random_stacks(state.range(0), 5, 3, 3);
    EnsembleWeights w({{"a", 0.33}, {"b", 0.34}, {"c", 0.33}});
    for (auto _ : state) benchmark::DoNotOptimize(fuse(stacks, w));
}

void BM_surface_distances_serial(benchmark::State& state) {
    Mask a = random_blob_mask(state.range(0), 0.15, 4);
    Mask b = random_blob_mask(state.range(0), 0.15, 5);
    for (auto _ : state) benchmark::DoNotOptimize(detail::surface_distances_serial(a, b));
}

void BM_surface_distances_parallel(benchmark::State& state) {
    Mask a = random_blob_mask(state.range(0), 0.15, 4);
    Mask b = random_blob_mask(state.range(0), 0.15, 5);
    for (auto _ : state) benchmark::DoNotOptimize(detail::surface_distances(a, b));
}

void BM_diameters_serial(benchmark::State& state) {
    auto pts = random_points(state.range(0), 6);
    for (auto _ : state) benchmark::DoNotOptimize(detail::max_pairwise_diameters_serial(pts));
}

void BM_diameters_parallel(benchmark::State& state) {
    auto pts = random_points(state.range(0), 6);
    for (auto _ : state) benchmark::DoNotOptimize(detail::max_pairwise_diameters(pts));
}

BENCHMARK(BM_resample_serial)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_resample_parallel)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dilate_serial)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_dilate_parallel)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_fuse_serial)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_fuse_parallel)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_surface_distances_serial)->Arg(48)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_surface_distances_parallel)->Arg(48)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_diameters_serial)->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_diameters_parallel)->Arg(5000)->Arg(20000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
