#include <benchmark/benchmark.h>

#include "nlsobs/observability.hpp"

using namespace nlsobs;

namespace {

SpectralField smooth_field(const GeometryPtr& g) {
  CVector c = CVector::Zero(g->total());
  for (int r = 0; r < std::min(16, g->total()); ++r) c[g->flat_at_rank(r)] = cplx(1.0 / (1 + r), 0.5 / (2 + r));
  return SpectralField(g, c);
}

void BM_RoundTrip(benchmark::State& state) {
  auto g = TorusGeometry::circle(static_cast<int>(state.range(0)));
  const SpectralField u = smooth_field(g);
  for (auto _ : state) benchmark::DoNotOptimize(to_spectral(to_physical(u), g));
}
BENCHMARK(BM_RoundTrip)->Arg(64)->Arg(256)->Arg(1024);

void BM_CubicNonlinearity(benchmark::State& state) {
  auto g = TorusGeometry::circle(static_cast<int>(state.range(0)));
  const SpectralField u = smooth_field(g);
  const auto nl = NonlinearitySpec::cubic();
  for (auto _ : state) benchmark::DoNotOptimize(eval_f(u, nl));
}
BENCHMARK(BM_CubicNonlinearity)->Arg(64)->Arg(256);

void BM_NlsStep(benchmark::State& state) {
  auto g = TorusGeometry::circle(64);
  const SpectralField u = smooth_field(g);
  const auto nl = NonlinearitySpec::cubic();
  for (auto _ : state) benchmark::DoNotOptimize(evolve_nls(u, nl, 0.1, 1e-3));
  state.SetItemsProcessed(state.iterations() * 100);
}
BENCHMARK(BM_NlsStep);

void BM_LinearizedAdvance(benchmark::State& state) {
  auto g = TorusGeometry::circle(64);
  const PotentialPath v = PotentialPath::constant(smooth_field(g), 0.0, 1e-3, 10);
  LinearizedPropagator prop(FrequencySplit(8), v, NonlinearitySpec::cubic());
  const int cols = static_cast<int>(state.range(0));
  CMatrix w = CMatrix::Zero(g->total(), cols);
  for (int c = 0; c < cols; ++c) w(g->flat_at_rank(8 + c), c) = 1.0;
  for (auto _ : state) {
    prop.advance(0, w);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * cols);
}
BENCHMARK(BM_LinearizedAdvance)->Arg(1)->Arg(32);

void BM_StreamingGramian(benchmark::State& state) {
  auto g = TorusGeometry::circle(64);
  const PotentialPath v = PotentialPath::constant(smooth_field(g), 0.0, 1e-3, static_cast<int>(state.range(0)));
  ObservationProblem problem{FrequencySplit(8), v, ObservationWindow::slab(g, 1.0, 2.0), SobolevScale(1.0),
                             NonlinearitySpec::cubic()};
  GramianOptions opts;
  opts.use_cache = false;
  for (auto _ : state) benchmark::DoNotOptimize(assemble_gramian(problem, opts));
}
BENCHMARK(BM_StreamingGramian)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
