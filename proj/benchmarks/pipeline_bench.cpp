#include <benchmark/benchmark.h>

#include <random>

#include "ivise/color.hpp"
#include "ivise/geometry.hpp"
#include "ivise/query.hpp"
#include "ivise/regions.hpp"
#include "ivise/sim.hpp"
#include "ivise/wire.hpp"

namespace {

using namespace ivise;

const sim::RenderedScene& scene_1080p() {
  static const auto scene = [] {
    auto spec = sim::random_scene(7, 1, 1920, 1080, 6);
    return sim::render_scene(spec, "cam1", 0);
  }();
  return scene;
}

void BM_Preprocess1080p(benchmark::State& state) {
  const auto& frame = scene_1080p().frame;
  for (auto _ : state) benchmark::DoNotOptimize(regions::preprocess(frame));
}
BENCHMARK(BM_Preprocess1080p)->Unit(benchmark::kMillisecond);

void BM_ExtractAll1080p(benchmark::State& state) {
  const auto& s = scene_1080p();
  for (auto _ : state) benchmark::DoNotOptimize(regions::extract_all(s.truth, s.frame));
}
BENCHMARK(BM_ExtractAll1080p)->Unit(benchmark::kMillisecond);

void BM_EncodeFeatures(benchmark::State& state) {
  const auto& s = scene_1080p();
  const auto sets = regions::extract_all(s.truth, s.frame);
  const auto msg = wire::make_features(s.frame, s.truth, sets);
  for (auto _ : state) benchmark::DoNotOptimize(wire::encode(1, msg));
  state.counters["bytes"] = double(wire::byte_size(msg));
}
BENCHMARK(BM_EncodeFeatures)->Unit(benchmark::kMicrosecond);

void BM_ClusterPixels(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const int k = static_cast<int>(state.range(1));
  std::mt19937_64 rng(3);
  const Rgb anchors[] = {{200, 20, 20}, {20, 20, 200}, {230, 230, 230}};
  std::vector<Rgb> px(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto a = anchors[i % 3];
    auto j = [&](std::uint8_t v) { return std::uint8_t(std::clamp(int(v) + int(rng() % 21) - 10, 0, 255)); };
    px[i] = {j(a.r), j(a.g), j(a.b)};
  }
  for (auto _ : state) benchmark::DoNotOptimize(color::cluster_pixels(px, Section::Torso, k, 11));
}
BENCHMARK(BM_ClusterPixels)->Args({1000, 1})->Args({10000, 1})->Args({10000, 3})->Unit(benchmark::kMillisecond);

void BM_GroupKeypoints(benchmark::State& state) {
  const auto persons = static_cast<int>(state.range(0));
  auto spec = sim::random_scene(5, persons, 160 * persons, 160);
  std::vector<Skeleton> truth;
  for (auto p : spec.persons) {
    p.scale = 0.3;
    truth.push_back(sim::standing_skeleton(p, int(truth.size())));
  }
  const auto catalog = geometry::default_limb_catalog();
  const auto fields = geometry::synthesize_fields(truth, catalog, 160 * persons, 160);
  std::vector<CandidateKeypoint> candidates;
  for (const auto& sk : truth) {
    for (const auto& [part, kp] : sk.keypoints) candidates.push_back(kp);
  }
  for (auto _ : state) benchmark::DoNotOptimize(geometry::group_keypoints(candidates, fields, catalog));
}
BENCHMARK(BM_GroupKeypoints)->Arg(1)->Arg(3)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
