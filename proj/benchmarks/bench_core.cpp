#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "skssl/deform.hpp"
#include "skssl/eval.hpp"
#include "skssl/extractors.hpp"
#include "skssl/layers.hpp"
#include "skssl/raster.hpp"
#include "skssl/rng.hpp"
#include "skssl/stroke.hpp"
#include "skssl/synth.hpp"

using namespace skssl;

namespace {

Tensor<float> rand_tensor(const std::vector<std::size_t>& shape, Rng& rng) {
  Tensor<float> t(shape);
  std::uniform_real_distribution<float> uni(-1.0f, 1.0f);
  for (auto& v : t.data) v = uni(rng);
  return t;
}

PointSeq bench_sketch() {
  Rng rng = make_rng(3, "bench/sketch");
  return normalize(synth_sketch("spiral", rng));
}

}  // namespace

static void BM_Conv2dForward(benchmark::State& state) {
  const std::size_t side = static_cast<std::size_t>(state.range(0));
  Rng rng = make_rng(1, "bench/conv2d");
  Conv2d<float> conv(3, 8, 3, 3, 1, 1);
  conv.init_params(rng);
  const Tensor<float> x = rand_tensor({8, 3, side, side}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv.forward(x, false));
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_Conv2dForward)->Arg(32)->Arg(64);

static void BM_Conv1dForward(benchmark::State& state) {
  const std::size_t k = static_cast<std::size_t>(state.range(0));
  Rng rng = make_rng(2, "bench/conv1d");
  Conv1d<float> conv(1, 16, k);
  conv.init_params(rng);
  const Tensor<float> x = rand_tensor({8, 1, 320}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv.forward(x, false));
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_Conv1dForward)->Arg(2)->Arg(10)->Arg(20);

static void BM_ApplyDeform(benchmark::State& state) {
  const PointSeq seq = bench_sketch();
  const DeformSpec spec = preset_spec({PresetKind::CC, kDefaultIntensity});
  for (auto _ : state) {
    benchmark::DoNotOptimize(apply_deform(spec, seq));
  }
  state.SetItemsProcessed(state.iterations() * seq.size());
}
BENCHMARK(BM_ApplyDeform);

static void BM_Render(benchmark::State& state) {
  const PointSeq seq = bench_sketch();
  RenderConfig cfg;
  cfg.side = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(render(seq, cfg));
  }
}
BENCHMARK(BM_Render)->Arg(32)->Arg(224);

static void BM_TcnForward(benchmark::State& state) {
  TcnConfig cfg;
  cfg.width_multiplier = 0.25;
  NetGraph<float> net = build_tcn(cfg, 4);
  net.init_params(4);
  net.set_mode(NetMode::Eval);
  Rng rng = make_rng(5, "bench/tcn");
  const Tensor<float> x = rand_tensor({8, 1, 100, 4}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward(x));
  }
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_TcnForward);

static void BM_RankGallery(benchmark::State& state) {
  const std::size_t G = static_cast<std::size_t>(state.range(0));
  Rng rng = make_rng(6, "bench/rank");
  const Tensor<float> gallery = rand_tensor({G, 256}, rng);
  const Tensor<float> query = rand_tensor({1, 256}, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rank_gallery(query.data.data(), gallery));
  }
  state.SetItemsProcessed(state.iterations() * G);
}
BENCHMARK(BM_RankGallery)->Arg(1000)->Arg(5000);

BENCHMARK_MAIN();
