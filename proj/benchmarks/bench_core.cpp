// SPDX-License-Identifier: Apache-2.0
// Hot paths of one self-training round: per-frame NMS, tracking, event
// binning, forging a whole sequence and the masked loss.
#include <benchmark/benchmark.h>

#include <vector>

#include "leod/assign.hpp"
#include "leod/evrep.hpp"
#include "leod/geometry.hpp"
#include "leod/pipeline.hpp"
#include "leod/rng.hpp"
#include "leod/synth.hpp"
#include "leod/tracker.hpp"
#include "leod/tta.hpp"

namespace {

using namespace leod;

std::vector<DetBox> random_frame(Rng& rng, std::size_t n, int t) {
  std::vector<DetBox> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    DetBox b;
    b.w = rng.uniform(8, 60);
    b.h = rng.uniform(8, 60);
    b.x = rng.uniform(0, 304 - b.w);
    b.y = rng.uniform(0, 240 - b.h);
    b.class_id = static_cast<int>(rng.below(2));
    b.t_step = t;
    b.p_obj = rng.uniform();
    b.p_iou = {0.0, 0.0};
    b.p_iou[static_cast<std::size_t>(b.class_id)] = rng.uniform();
    out.push_back(b);
  }
  return out;
}

void BM_Nms(benchmark::State& state) {
  Rng rng(1);
  const auto boxes = random_frame(rng, static_cast<std::size_t>(state.range(0)), 0);
  for (auto _ : state) benchmark::DoNotOptimize(nms_indices(boxes));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Nms)->RangeMultiplier(4)->Range(16, 1024);

void BM_GreedyMatch(benchmark::State& state) {
  Rng rng(2);
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto tracks = random_frame(rng, n, 0);
  const auto boxes = random_frame(rng, n, 0);
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<int>(i);
  for (auto _ : state) benchmark::DoNotOptimize(greedy_match(tracks, ids, boxes, 0.3));
}
BENCHMARK(BM_GreedyMatch)->RangeMultiplier(4)->Range(8, 512);

void BM_TrackSequence(benchmark::State& state) {
  const auto gen = generate(find_scenario("urban-01", 7));
  for (auto _ : state) benchmark::DoNotOptimize(track_sequence(gen.detections));
}
BENCHMARK(BM_TrackSequence);

void BM_BuildHistograms(benchmark::State& state) {
  const auto gen = generate(find_scenario("urban-01", 7));
  const auto& s = gen.events;
  for (auto _ : state) benchmark::DoNotOptimize(build_histograms(s, kDefaultWindowUs, kDefaultBins, 0));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.events.size()));
}
BENCHMARK(BM_BuildHistograms);

void BM_TimeFlipStream(benchmark::State& state) {
  const auto gen = generate(find_scenario("urban-01", 7));
  for (auto _ : state) benchmark::DoNotOptimize(time_flip_stream(gen.events));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(gen.events.events.size()));
}
BENCHMARK(BM_TimeFlipStream);

void BM_TtaMergeAndForge(benchmark::State& state) {
  const Scenario sc = find_scenario("urban-01", 7);
  std::vector<VariantOutput> outputs;
  for (const TtaVariant& v : standard_variants(sc.duration_steps, sc.width, true)) {
    outputs.push_back({v, {}});
    for (const auto& frame : generate_variant_detections(sc, v)) {
      outputs.back().second.insert(outputs.back().second.end(), frame.begin(), frame.end());
    }
  }
  const auto cfg = derive_thresholds(0.6, std::vector<std::string>{"car", "pedestrian"});
  for (auto _ : state) benchmark::DoNotOptimize(forge(tta_merge(outputs), cfg));
}
BENCHMARK(BM_TtaMergeAndForge);

void BM_AssignAndLoss(benchmark::State& state) {
  const std::vector<int> strides{8, 16, 32};
  const AnchorGrid grid = make_grid(strides, 240, 304);
  Rng rng(3);
  const auto keep = random_frame(rng, 12, 0);
  const auto ignore = random_frame(rng, 6, 0);
  AnchorPrediction pred;
  pred.num_classes = 2;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    pred.p_obj.push_back(rng.uniform(0.01, 0.99));
    pred.p_iou.push_back(rng.uniform(0.01, 0.99));
    pred.p_iou.push_back(rng.uniform(0.01, 0.99));
    pred.delta.push_back({rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(0, 2), rng.uniform(0, 2)});
  }
  for (auto _ : state) {
    const auto asg = assign_anchors(grid, keep, ignore, &pred);
    benchmark::DoNotOptimize(detection_loss(pred, asg));
    benchmark::DoNotOptimize(loss_gradient(pred, asg));
  }
}
BENCHMARK(BM_AssignAndLoss);

}  // namespace

BENCHMARK_MAIN();
