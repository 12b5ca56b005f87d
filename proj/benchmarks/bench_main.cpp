#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "pcsel/degrade.hpp"
#include "pcsel/iou.hpp"
#include "pcsel/point_cloud.hpp"
#include "pcsel/rng.hpp"
#include "pcsel/wire.hpp"

namespace {

using namespace pcsel;

PointCloud scatter_cloud(std::size_t n, std::uint64_t seed) {
  PointCloud cloud;
  cloud.frame_id = "bench";
  cloud.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto coord = [&](std::uint64_t axis) {
      return static_cast<float>(
          (rng::uniform53(seed, 4 * i + axis) * 2.0 - 1.0) * 40.0);
    };
    cloud.points.push_back(
        Point{coord(0), coord(1), coord(2),
              static_cast<float>(rng::uniform53(seed, 4 * i + 3))});
  }
  return cloud;
}

const PointCloud& bench_cloud() {
  static const PointCloud cloud = scatter_cloud(100000, 42);
  return cloud;
}

void bm_voxel_grid_filter(benchmark::State& state) {
  const double edge = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(voxel_grid_filter(bench_cloud(), edge));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(bench_cloud().points.size()));
}
BENCHMARK(bm_voxel_grid_filter)->Arg(10)->Arg(20)->Arg(40);

void bm_uniform_sample(benchmark::State& state) {
  const double edge = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(uniform_sample(bench_cloud(), edge));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(bench_cloud().points.size()));
}
BENCHMARK(bm_uniform_sample)->Arg(10)->Arg(20)->Arg(40);

void bm_random_sample(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(random_sample(bench_cloud(), 0.25, 7));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(bench_cloud().points.size()));
}
BENCHMARK(bm_random_sample);

void bm_add_gaussian_noise(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(add_gaussian_noise(bench_cloud(), 0.08, 7));
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                          static_cast<std::int64_t>(bench_cloud().points.size()));
}
BENCHMARK(bm_add_gaussian_noise);

void bm_rotated_iou_3d(benchmark::State& state) {
  const std::uint64_t seed = 0xB;
  std::uint64_t counter = 0;
  auto u = [&] { return rng::uniform53(seed, counter++); };
  std::vector<std::pair<OrientedBox3D, OrientedBox3D>> pairs;
  for (int i = 0; i < 512; ++i) {
    auto box = [&] {
      return OrientedBox3D::make(u() * 4 - 2, u() * 4 - 2, u() * 2 - 1,
                                 0.5 + u() * 5.5, 0.5 + u() * 5.5,
                                 0.5 + u() * 5.5, u() * 6.28 - 3.14);
    };
    pairs.emplace_back(box(), box());
  }
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[i++ % pairs.size()];
    benchmark::DoNotOptimize(rotated_iou_3d(a, b));
  }
}
BENCHMARK(bm_rotated_iou_3d);

void bm_wire_round_trip(benchmark::State& state) {
  wire::SelectionRequest request;
  request.target_classes = {"Car", "Pedestrian", "Cyclist"};
  request.latency_budget_s = 0.1;
  request.declared_noise_sigma = 0.04;
  request.sample_frames.assign(2, std::vector<std::uint8_t>(16 * 1024, 0xAB));
  const wire::WireMessage message(request);
  for (auto _ : state) {
    benchmark::DoNotOptimize(wire::decode(wire::encode(message)));
  }
}
BENCHMARK(bm_wire_round_trip);

}  // namespace

BENCHMARK_MAIN();
