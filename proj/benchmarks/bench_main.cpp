#include <benchmark/benchmark.h>

#include "dualloop/analysis.hpp"
#include "dualloop/language_loop.hpp"
#include "dualloop/lm_backend.hpp"
#include "dualloop/memory_pool.hpp"
#include "dualloop/render.hpp"
#include "dualloop/rng.hpp"
#include "dualloop/simulation.hpp"

using namespace dualloop;

namespace {

Vector gaussian(Rng& rng, std::size_t dim) {
  Vector v(dim);
  for (double& x : v) x = rng.normal();
  return v;
}

void BM_HashEmbed(benchmark::State& state) {
  const std::string text =
      "Rational reflection at step 12: moving right led to a plain move while my advice was adopted.";
  for (auto _ : state) benchmark::DoNotOptimize(hash_embed(text, kDefaultLatentDim));
}
BENCHMARK(BM_HashEmbed);

void BM_LatentUpdate(benchmark::State& state) {
  Rng rng(1);
  LatentVector z{gaussian(rng, kDefaultLatentDim), 0};
  const Vector e = normalized(gaussian(rng, kDefaultLatentDim));
  for (auto _ : state) {
    z = latent_update(z, e, 0.5, 0.1);
    benchmark::DoNotOptimize(z.values.data());
  }
}
BENCHMARK(BM_LatentUpdate);

void BM_Retrieve(benchmark::State& state) {
  Rng rng(2);
  MemoryPool pool;
  for (std::size_t i = 0; i < static_cast<std::size_t>(state.range(0)); ++i) {
    pool.append({i + 1, gaussian(rng, kDefaultLatentDim), 0.0, 1});
  }
  const Vector q = gaussian(rng, kDefaultLatentDim);
  for (auto _ : state) benchmark::DoNotOptimize(pool.retrieve(q, 3));
}
BENCHMARK(BM_Retrieve)->Arg(6)->Arg(100);

void BM_Pca2d(benchmark::State& state) {
  Rng rng(3);
  std::vector<Vector> pts;
  for (std::int64_t i = 0; i < state.range(0); ++i) pts.push_back(gaussian(rng, kDefaultLatentDim));
  for (auto _ : state) benchmark::DoNotOptimize(pca2d(pts));
}
BENCHMARK(BM_Pca2d)->Arg(50)->Arg(450)->Unit(benchmark::kMillisecond);

void BM_RenderMap(benchmark::State& state) {
  const GridMap map = generate_map(4);
  const EntityState e = fresh_entity(map, 3);
  for (auto _ : state) benchmark::DoNotOptimize(render_map(map, e));
}
BENCHMARK(BM_RenderMap)->Unit(benchmark::kMicrosecond);

void BM_FullStubRun(benchmark::State& state) {
  RunConfig c;
  c.seed = 5;
  for (auto _ : state) benchmark::DoNotOptimize(run(c));
}
BENCHMARK(BM_FullStubRun)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
