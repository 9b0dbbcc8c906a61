#include <benchmark/benchmark.h>

#include "vrgrad/data.hpp"
#include "vrgrad/rates.hpp"
#include "vrgrad/solver.hpp"

using namespace vrgrad;

namespace {

void bm_alias_draw(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<double> w(n);
  Rng wrng(1);
  for (double& v : w) v = 0.1 + wrng.next_double();
  const auto dist = PrimalDistribution::custom(w);
  Rng rng(2);
  for (auto _ : state) benchmark::DoNotOptimize(dist.draw(rng));
}
BENCHMARK(bm_alias_draw)->Arg(100)->Arg(10000)->Arg(1000000);

void bm_saga_step(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto problem = generate_1d_least_squares(n, 1);
  const auto plan = saga_improved(problem.lipschitz(), problem.mu());
  RunConfig cfg;
  cfg.problem = &problem;
  cfg.sampling = plan.distribution;
  cfg.strategy = DualStrategy::saga();
  cfg.lambda = plan.lambda;
  cfg.seed = 1;
  SolverState st(cfg);
  for (auto _ : state) pvrsg_step(st, cfg);
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(bm_saga_step)->Arg(100)->Arg(10000);

void bm_optimal_rate(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(3);
  std::vector<double> L(n);
  for (double& v : L) v = 0.01 + 2.0 * rng.next_double();
  double lbar = 0.0;
  for (double v : L) lbar += v;
  lbar /= n;

  RateInputs in;
  in.L = L;
  in.mu = lbar / 10.0;
  in.p = PrimalDistribution::lipschitz(L).probs();
  in.eta.assign(n, 0.01);
  in.coherent = false;
  for (auto _ : state) benchmark::DoNotOptimize(solve_optimal_rate(in).rho);
}
BENCHMARK(bm_optimal_rate)->Arg(100)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
