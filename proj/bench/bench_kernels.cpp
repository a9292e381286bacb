// Parallel kernels against their serial references on synthetic wedges.

#include "vgonio/goniometer.hpp"
#include "vgonio/mesh.hpp"
#include "vgonio/reference.hpp"
#include "vgonio/synthetic.hpp"

#include <benchmark/benchmark.h>

#include <map>

using namespace vgonio;

namespace {

const TriangleMesh& wedge(int per_side)
{
    static std::map<int, TriangleMesh> cache;
    auto it = cache.find(per_side);
    if (it == cache.end()) {
        WedgeSpec spec;
        spec.angle_deg = 100.0;
        spec.vertices_per_side = static_cast<std::size_t>(per_side);
        spec.noise_sigma = 0.002;
        it = cache.emplace(per_side, make_wedge(spec).mesh).first;
    }
    return it->second;
}

std::vector<MeasurementRequest> requests(std::size_t count)
{
    std::vector<MeasurementRequest> out(count);
    for (std::size_t i = 0; i < count; ++i) {
        out[i].point = Vec3{-0.8 + 1.6 * static_cast<double>(i) / static_cast<double>(count), 0.0, 0.0};
        out[i].params = {2.0, DistanceMetric::Geodesic, 0.3};
    }
    return out;
}

void BM_KNearest(benchmark::State& state)
{
    const TriangleMesh& m = wedge(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(k_nearest(m.vertices, kDefaultKnn));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.vertex_count()));
}

void BM_KNearestReference(benchmark::State& state)
{
    const TriangleMesh& m = wedge(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(reference::k_nearest(m.vertices, kDefaultKnn));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(m.vertex_count()));
}

void BM_NormalSums(benchmark::State& state)
{
    const TriangleMesh& m = wedge(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(area_weighted_normal_sums(m));
}

void BM_NormalSumsReference(benchmark::State& state)
{
    const TriangleMesh& m = wedge(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(reference::area_weighted_normal_sums(m));
}

void BM_MeasureBatch(benchmark::State& state)
{
    static const MeshContext ctx = MeshContext::build(wedge(20000));
    const auto reqs = requests(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(measure_batch(ctx, reqs));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MeasureBatchReference(benchmark::State& state)
{
    static const MeshContext ctx = MeshContext::build(wedge(20000));
    const auto reqs = requests(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(reference::measure_batch(ctx, reqs));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

} // namespace

BENCHMARK(BM_KNearest)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KNearestReference)->Arg(2000)->Arg(20000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NormalSums)->Arg(20000)->Arg(200000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_NormalSumsReference)->Arg(20000)->Arg(200000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MeasureBatch)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MeasureBatchReference)->Arg(8)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
