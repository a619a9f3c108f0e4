#include <random>

#include <benchmark/benchmark.h>

#include "support.hpp"
#include "vecsynth/abstraction.hpp"
#include "vecsynth/encoder.hpp"
#include "vecsynth/init.hpp"
#include "vecsynth/layout.hpp"
#include "vecsynth/raster.hpp"

using namespace vecsynth;

namespace {

Canvas bench_canvas(int size, int strokes) {
  std::mt19937_64 rng(7);
  return testing::random_canvas(rng, size, size, strokes);
}

void BM_RenderForward(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const Canvas c = bench_canvas(size, static_cast<int>(state.range(1)));
  SoftRasterizer r(RenderOptions{1.0, 1, 16});
  for (auto _ : state) benchmark::DoNotOptimize(r.forward(c));
  state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_RenderForward)->Args({128, 64})->Args({128, 256})->Args({256, 256});

void BM_RenderBackward(benchmark::State& state) {
  const int size = static_cast<int>(state.range(0));
  const Canvas c = bench_canvas(size, static_cast<int>(state.range(1)));
  std::mt19937_64 rng(3);
  const auto loss = testing::random_linear_loss(rng, size, size);
  SoftRasterizer r(RenderOptions{1.0, 1, 16});
  r.forward(c);
  for (auto _ : state) benchmark::DoNotOptimize(r.backward(loss.weights));
}
BENCHMARK(BM_RenderBackward)->Args({128, 64})->Args({128, 256});

void BM_ReconstructionError(benchmark::State& state) {
  const std::string a = "a red apple on a wooden table next to a blue ceramic cup";
  const std::string b = "a blue cup and a red apple placed on a table";
  for (auto _ : state) benchmark::DoNotOptimize(reconstruction_error(a, b));
}
BENCHMARK(BM_ReconstructionError);

void BM_Levenshtein(benchmark::State& state) {
  const std::string a(static_cast<std::size_t>(state.range(0)), 'a');
  std::string b = a;
  for (std::size_t i = 0; i < b.size(); i += 3) b[i] = 'b';
  for (auto _ : state) benchmark::DoNotOptimize(levenshtein(a, b));
}
BENCHMARK(BM_Levenshtein)->Arg(64)->Arg(512);

void BM_EncoderEncode(benchmark::State& state) {
  const RasterImage img = render(bench_canvas(static_cast<int>(state.range(0)), 32));
  const PyramidEncoder enc;
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(img));
}
BENCHMARK(BM_EncoderEncode)->Arg(128)->Arg(512);

void BM_EncoderBackward(benchmark::State& state) {
  const RasterImage img = render(bench_canvas(static_cast<int>(state.range(0)), 32));
  const PyramidEncoder enc;
  const Embedding up(enc.dimension(), 1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(enc.backward(img, up));
}
BENCHMARK(BM_EncoderBackward)->Arg(128)->Arg(512);

void BM_SelectKeypoints(benchmark::State& state) {
  const int size = 256;
  AttentionMap a(size, size);
  std::mt19937_64 rng(5);
  for (auto& v : a.values) v = testing::uniform(rng, 0.0, 1.0);
  const Mask m = mask_from_box({32, 32, 192, 192}, size, size);
  for (auto _ : state) benchmark::DoNotOptimize(select_keypoints(a, m, static_cast<std::size_t>(state.range(0)), 1));
}
BENCHMARK(BM_SelectKeypoints)->Arg(256)->Arg(1024);

void BM_MlpForwardBackward(benchmark::State& state) {
  const std::size_t d = static_cast<std::size_t>(state.range(0));
  const MlpSpec spec{d, MlpSpec::default_widths(), d, MlpHead::linear};
  const MlpParams p = init_mlp(spec, 1);
  const Embedding x(d, 0.1), up(d, 1e-3);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mlp_forward(spec, p, x));
    benchmark::DoNotOptimize(mlp_backward(spec, p, x, up));
  }
}
BENCHMARK(BM_MlpForwardBackward)->Arg(2)->Arg(512)->Arg(6720)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
