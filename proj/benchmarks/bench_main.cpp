#include <benchmark/benchmark.h>

#include <random>

#include "pedcloud/classifier.hpp"
#include "pedcloud/detection_eval.hpp"
#include "pedcloud/npbb.hpp"
#include "pedcloud/projection.hpp"
#include "pedcloud/sampling.hpp"

using namespace pedcloud;

namespace {

std::vector<Point3> cloud(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<Point3> pts(n);
    for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
    return pts;
}

void BM_Fps(benchmark::State& state) {
    const auto pts = cloud(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(fps(pts, 1024));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Fps)->Arg(2048)->Arg(8192)->Unit(benchmark::kMillisecond);

void BM_VoxelGrid(benchmark::State& state) {
    const auto pts = cloud(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) benchmark::DoNotOptimize(voxel_grid_filter(pts, 0.05));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_VoxelGrid)->Arg(8192)->Arg(65536)->Unit(benchmark::kMillisecond);

void BM_BallQuery(benchmark::State& state) {
    const auto pts = cloud(1024, 3);
    std::size_t c = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(ball_query(pts, c, 0.2, 32));
        c = (c + 97) % pts.size();
    }
}
BENCHMARK(BM_BallQuery);

void BM_Forward(benchmark::State& state) {
    const auto spec = state.range(0) == 0 ? reduced_ssg_spec() : default_ssg_spec();
    const auto params = init_params(spec, 1);
    const auto pts = normalize(cloud(spec.input_points, 4));
    std::mt19937_64 rng(0);
    for (auto _ : state) benchmark::DoNotOptimize(forward(spec, params, pts, false, rng));
}
BENCHMARK(BM_Forward)->Arg(0)->Arg(1)->ArgNames({"full"})->Unit(benchmark::kMillisecond);

void BM_LossAndGrad(benchmark::State& state) {
    const auto spec = reduced_ssg_spec();
    const auto params = init_params(spec, 1);
    std::vector<Sample> batch;
    for (int i = 0; i < 32; ++i) batch.push_back({normalize(cloud(spec.input_points, 10 + i)), i % 2});
    std::mt19937_64 rng(0);
    for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad<double>(spec, params, batch, {}, true, rng));
}
BENCHMARK(BM_LossAndGrad)->Unit(benchmark::kMillisecond);

void BM_GenerateNpbb(benchmark::State& state) {
    GenConfig cfg;
    cfg.target = kReferencePedestrianStats;
    cfg.count = static_cast<std::size_t>(state.range(0));
    cfg.max_pairwise_iou = 0.2;
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_npbb_set(cfg, {}, 1224, 1024));
        ++cfg.rng_seed;
    }
}
BENCHMARK(BM_GenerateNpbb)->Arg(10)->Arg(50);

void BM_TransferLabels(benchmark::State& state) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-10, 10), d(2, 40);
    PointCloud pc;
    pc.points.resize(120000);
    for (auto& p : pc.points) p = {u(rng), u(rng) * 0.3, d(rng)};
    CameraProjection cam;
    cam.p = {600, 0, 612, 0, 0, 600, 512, 0, 0, 0, 1, 0};
    std::vector<Box2D> pbb, npbb;
    for (int i = 0; i < 10; ++i) {
        pbb.push_back({"pedestrian", 100.0 * i, 300, 100.0 * i + 90, 600, std::nullopt});
        npbb.push_back({"non_pedestrian", 100.0 * i + 40, 200, 100.0 * i + 130, 500, std::nullopt});
    }
    for (auto _ : state) benchmark::DoNotOptimize(transfer_labels(pc, pbb, npbb, cam, 0));
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(pc.points.size()));
}
BENCHMARK(BM_TransferLabels)->Unit(benchmark::kMillisecond);

void BM_Nms(benchmark::State& state) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0, 1100), s(0, 1);
    std::vector<Box2D> boxes;
    for (int i = 0; i < state.range(0); ++i) {
        const double x = u(rng), y = u(rng) * 0.8;
        boxes.push_back({"pedestrian", x, y, x + 60, y + 150, s(rng)});
    }
    for (auto _ : state) benchmark::DoNotOptimize(filter_detections(boxes, 0.0, 0.3));
}
BENCHMARK(BM_Nms)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
