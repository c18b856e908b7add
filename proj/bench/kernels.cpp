// Lidar ray casting and batched always-move trials, parallel vs serial.

#include <benchmark/benchmark.h>

#include <random>

#include "plantbot/drive.hpp"
#include "plantbot/world.hpp"

using namespace plantbot;

namespace {

world::WorldState cluttered_room(int obstacles) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1);
  world::WorldState w;
  w.bounds = Bounds{-10, -10, 10, 10};
  for (int i = 0; i < obstacles; ++i) {
    Circle c{{-9 + 18 * u(rng), -9 + 18 * u(rng)}, 0.1 + 0.3 * u(rng)};
    if (std::hypot(c.center.x, c.center.y) > c.radius + 0.5) w.obstacles.push_back(c);
  }
  return w;
}

void lidar_args(benchmark::internal::Benchmark* b) {
  for (int rays : {72, 720, 7200}) b->Args({rays, 50});
  b->Args({720, 500});
}

void BM_LidarParallel(benchmark::State& state) {
  const auto w = cluttered_room(static_cast<int>(state.range(1)));
  world::LidarParams p;
  p.rays = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(world::lidar_scan(w, p));
  state.SetItemsProcessed(state.iterations() * p.rays);
}

void BM_LidarSerial(benchmark::State& state) {
  const auto w = cluttered_room(static_cast<int>(state.range(1)));
  world::LidarParams p;
  p.rays = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(world::lidar_scan_serial(w, p));
  state.SetItemsProcessed(state.iterations() * p.rays);
}

std::vector<world::WorldState> rooms(std::int64_t n) {
  std::vector<world::WorldState> out;
  for (std::int64_t s = 0; s < n; ++s) out.push_back(drive::random_room(static_cast<std::uint64_t>(s)));
  return out;
}

void BM_TrialsParallel(benchmark::State& state) {
  const auto worlds = rooms(state.range(0));
  drive::TrialConfig cfg;
  cfg.seconds = 10;
  for (auto _ : state) benchmark::DoNotOptimize(drive::run_batch(worlds, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_TrialsSerial(benchmark::State& state) {
  const auto worlds = rooms(state.range(0));
  drive::TrialConfig cfg;
  cfg.seconds = 10;
  for (auto _ : state) benchmark::DoNotOptimize(drive::run_batch_serial(worlds, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_LidarParallel)->Apply(lidar_args);
BENCHMARK(BM_LidarSerial)->Apply(lidar_args);
BENCHMARK(BM_TrialsParallel)->Arg(16)->Arg(100)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TrialsSerial)->Arg(16)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
