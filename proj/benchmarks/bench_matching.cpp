// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include <random>

#include "odf/geometry.hpp"
#include "odf/matching.hpp"
#include "odf/sparse_labels.hpp"

namespace {

const odf::GridSpec kKitti{1248.0, 384.0, 78, 24, {{36, 37}, {366, 174}, {115, 59}, {162, 87}, {38, 90},
                                                  {258, 173}, {224, 108}, {78, 170}, {72, 43}}};

struct Fixture {
  std::vector<odf::Box> anchors = odf::build_anchor_grid(kKitti);
  std::vector<odf::LabelRecord> records;
  odf::SparseLabelBatch sparse;
  std::vector<std::vector<odf::Box>> boxes;

  explicit Fixture(std::size_t batch) {
    records = odf::gen_synthetic(7, batch, 16, 1248, 384, 3);
    sparse = odf::encode_batch(records);
    boxes = odf::boxes_per_image(sparse);
  }
};

void BM_Iou(benchmark::State& state) {
  const odf::Box a{100, 100, 50, 40}, b{120, 90, 60, 30};
  for (auto _ : state) benchmark::DoNotOptimize(odf::iou(a, b));
}
BENCHMARK(BM_Iou);

void BM_Nms(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> pos(0, 500), ext(10, 80), score(0, 1);
  std::vector<odf::ScoredBox> cands;
  for (int i = 0; i < state.range(0); ++i) {
    cands.push_back({{pos(rng), pos(rng), ext(rng), ext(rng)}, score(rng), static_cast<std::uint32_t>(i % 3)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(odf::nms(cands, 0.487));
}
BENCHMARK(BM_Nms)->Arg(100)->Arg(1000);

void BM_MatchSerial(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(odf::match_serial(f.anchors, f.boxes));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MatchSerial)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_MatchParallel(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    const auto ranking = odf::build_rankings(f.anchors, f.sparse);
    benchmark::DoNotOptimize(odf::match_parallel(ranking, f.sparse));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MatchParallel)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_MatchGreedy(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  const auto costs = odf::iou_cost_matrices(f.anchors, f.boxes);
  for (auto _ : state) benchmark::DoNotOptimize(odf::match_greedy_bipartite(costs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MatchGreedy)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_MatchExact(benchmark::State& state) {
  const Fixture f(static_cast<std::size_t>(state.range(0)));
  const auto costs = odf::iou_cost_matrices(f.anchors, f.boxes);
  for (auto _ : state) benchmark::DoNotOptimize(odf::match_exact(costs));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_MatchExact)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
