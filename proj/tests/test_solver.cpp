#include <cmath>

#include "doctest.h"
#include "support.hpp"
#include "vrgrad/data.hpp"
#include "vrgrad/rates.hpp"
#include "vrgrad/solver.hpp"

using vrgrad::DualLayout;
using vrgrad::DualStrategy;
using vrgrad::PrimalDistribution;
using vrgrad::RunConfig;
using vrgrad::SolverState;
using vrgrad::Vector;

namespace {

RunConfig base_config(const vrgrad::FiniteSumProblem& p, double lambda) {
  RunConfig cfg;
  cfg.problem = &p;
  cfg.sampling = PrimalDistribution::uniform(p.num_components());
  cfg.strategy = DualStrategy::saga();
  cfg.lambda = lambda;
  cfg.seed = 1;
  return cfg;
}

}  // namespace

TEST_CASE("the solution is a fixed point of the stochastic step") {
  vrgrad::Rng rng(41);
  const auto p = testsupport::random_instance(rng, 4, 2, 0.05);
  RunConfig cfg = base_config(p, 0.3 / p.lipschitz_mean());
  cfg.x0 = *p.solution();  // dual table initializes coherently at x*
  SolverState st(cfg);
  for (int t = 0; t < 25; ++t) pvrsg_step(st, cfg);
  CHECK((st.x() - *p.solution()).norm() <= 1e-10 * std::max(1.0, p.solution()->norm()));
}

TEST_CASE("single-component saga is the deterministic proximal gradient iteration") {
  vrgrad::Rng rng(43);
  const auto p = testsupport::random_instance(rng, 1, 1, 0.1);
  const double lambda = 0.4 / p.lipschitz_mean();
  RunConfig cfg = base_config(p, lambda);
  SolverState st(cfg);
  Vector x = Vector::Zero(1);
  for (int t = 0; t < 10; ++t) {
    pvrsg_step(st, cfg);
    x = p.prox().apply(lambda, x - lambda * p.component_gradient(0, x));
    CHECK((st.x() - x).norm() <= 1e-13);
  }
}

TEST_CASE("scalar data with smoothness-proportional sampling makes the estimator exact") {
  const auto p = vrgrad::generate_1d_least_squares(60, 9);
  RunConfig cfg = base_config(p, 1.0 / p.mu());
  cfg.sampling = PrimalDistribution::lipschitz(p.lipschitz());
  cfg.strategy = DualStrategy::lsvrg(0.2);
  Vector x0(1);
  x0 << 2.5;
  cfg.x0 = x0;
  SolverState st(cfg);

  // Bracketed estimator equals the full gradient for every drawn index.
  const Vector full = p.full_gradient(st.x());
  Vector grad(1), yi(1);
  for (int i = 0; i < p.num_components(); ++i) {
    p.component_gradient(i, st.x(), grad);
    st.dual().read(p, i, yi);
    const Vector est =
        (grad - yi) / (p.num_components() * cfg.sampling.prob(i)) + st.dual().sum() / p.num_components();
    CHECK((est - full).norm() <= 1e-12 * std::max(1.0, full.norm()));
  }
  CHECK(estimator_variance_probe(st, cfg, 500) <= 1e-24);

  // One step at 1/mu lands on the minimizer.
  pvrsg_step(st, cfg);
  CHECK((st.x() - *p.solution()).norm() <= 1e-10);
}

TEST_CASE("probe is zero when the table holds the current gradients") {
  vrgrad::Rng rng(47);
  const auto p = testsupport::random_instance(rng, 5, 2, 0.0);
  RunConfig cfg = base_config(p, 0.05);
  cfg.x0 = Vector::Constant(2, 0.7);  // table initialized at x0 = current point
  SolverState st(cfg);
  CHECK(estimator_variance_probe(st, cfg, 300) <= 1e-24);
}

TEST_CASE("estimator is unbiased at any state") {
  vrgrad::Rng rng(53);
  const auto p = testsupport::random_instance(rng, 4, 3, 0.0);
  RunConfig cfg = base_config(p, 0.05);
  cfg.sampling = PrimalDistribution::custom({0.1, 0.2, 0.3, 0.4});
  SolverState st(cfg);
  for (int t = 0; t < 7; ++t) pvrsg_step(st, cfg);

  Vector grad(3), yi(3);
  Vector mean = Vector::Zero(3);
  for (int i = 0; i < 4; ++i) {
    p.component_gradient(i, st.x(), grad);
    st.dual().read(p, i, yi);
    mean += cfg.sampling.prob(i) *
            ((grad - yi) / (4 * cfg.sampling.prob(i)) + st.dual().sum() / 4);
  }
  const Vector full = p.full_gradient(st.x());
  CHECK((mean - full).norm() <= 1e-12 * std::max(1.0, full.norm()));
}

TEST_CASE("gradient evaluation accounting") {
  vrgrad::Rng rng(59);
  const auto p = testsupport::random_instance(rng, 6, 2, 0.0);

  SUBCASE("saga costs one fresh evaluation per step after the n-cost init") {
    RunConfig cfg = base_config(p, 0.02);
    SolverState st(cfg);
    CHECK(st.grad_evals() == 6);
    for (int k = 1; k <= 100; ++k) {
      pvrsg_step(st, cfg);
      CHECK(st.grad_evals() == 6 + k);
    }
  }

  SUBCASE("anchor layout costs 2 + n per refresh step on average") {
    RunConfig cfg = base_config(p, 0.02);
    const double q = 0.2;
    cfg.strategy = DualStrategy::lsvrg(q);
    cfg.layout = DualLayout::anchor;
    SolverState st(cfg);
    const long iters = 20000;
    const long start = st.grad_evals();
    for (long k = 0; k < iters; ++k) pvrsg_step(st, cfg);
    const double per_step = static_cast<double>(st.grad_evals() - start) / iters;
    const double expected = 2.0 + 6.0 * q;
    const double sigma = 6.0 * std::sqrt(q * (1 - q) / iters);
    CHECK(std::abs(per_step - expected) <= 3.0 * sigma);
  }

  SUBCASE("full-table refresh reuses the primal gradient") {
    RunConfig cfg = base_config(p, 0.02);
    const double q = 0.25;
    cfg.strategy = DualStrategy::lsvrg(q);
    SolverState st(cfg);
    const long iters = 20000;
    const long start = st.grad_evals();
    for (long k = 0; k < iters; ++k) pvrsg_step(st, cfg);
    const double per_step = static_cast<double>(st.grad_evals() - start) / iters;
    const double expected = 1.0 + 5.0 * q;  // refresh steps cost n total
    const double sigma = 5.0 * std::sqrt(q * (1 - q) / iters);
    CHECK(std::abs(per_step - expected) <= 3.0 * sigma);
  }
}

TEST_CASE("run recording and determinism") {
  vrgrad::Rng rng(61);
  const auto p = testsupport::random_instance(rng, 4, 2, 0.0);

  SUBCASE("zero iterations produce the single initial row") {
    RunConfig cfg = base_config(p, 0.01);
    const auto trace = vrgrad::run(cfg);
    REQUIRE(trace.rows.size() == 1);
    CHECK(trace.rows[0].k == 0);
    CHECK(trace.rows[0].grad_evals == 4);
    CHECK(trace.rows[0].dist2.has_value());
  }

  SUBCASE("same seed gives identical traces") {
    RunConfig cfg = base_config(p, 0.02);
    cfg.iterations = 200;
    cfg.strategy = DualStrategy::ilsvrg(0.3);
    const auto a = vrgrad::run(cfg);
    const auto b = vrgrad::run(cfg);
    REQUIRE(a.rows.size() == b.rows.size());
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
      CHECK(a.rows[r].k == b.rows[r].k);
      CHECK(a.rows[r].grad_evals == b.rows[r].grad_evals);
      CHECK(*a.rows[r].dist2 == *b.rows[r].dist2);
      CHECK(a.rows[r].objective == b.rows[r].objective);
    }
  }

  SUBCASE("record_every subsamples but keeps the final row") {
    RunConfig cfg = base_config(p, 0.02);
    cfg.iterations = 103;
    cfg.record_every = 10;
    const auto trace = vrgrad::run(cfg);
    CHECK(trace.rows.front().k == 0);
    CHECK(trace.rows.back().k == 103);
  }

  SUBCASE("seed fan-out is ordered and thread count does not matter") {
    RunConfig cfg = base_config(p, 0.02);
    cfg.iterations = 50;
    const auto one = vrgrad::run_seeds(cfg, 8, 1);
    const auto four = vrgrad::run_seeds(cfg, 8, 4);
    REQUIRE(one.size() == four.size());
    for (std::size_t s = 0; s < one.size(); ++s)
      CHECK(*one[s].rows.back().dist2 == *four[s].rows.back().dist2);
  }
}

TEST_CASE("mean squared distance decays monotonically for saga at the tuned step") {
  vrgrad::Rng rng(67);
  const auto p = testsupport::random_instance(rng, 8, 2, 0.0);
  const auto plan = vrgrad::saga_improved(p.lipschitz(), p.mu());

  RunConfig cfg = base_config(p, plan.lambda);
  cfg.sampling = plan.distribution;
  cfg.iterations = 400;
  cfg.record_every = 1;
  const auto traces = vrgrad::run_seeds(cfg, 100, 4);
  const auto summary = vrgrad::summarize(traces);

  // Windowed means over 50-iteration blocks, skipping the initial block.
  std::vector<double> blocks;
  for (std::size_t start = 50; start + 50 <= summary.dist2_mean.size(); start += 50) {
    double m = 0.0;
    for (std::size_t r = start; r < start + 50; ++r) m += summary.dist2_mean[r];
    blocks.push_back(m / 50.0);
  }
  for (std::size_t i = 1; i < blocks.size(); ++i) CHECK(blocks[i] < blocks[i - 1]);
}

TEST_CASE("oversized steps are reported as divergence with the iteration index") {
  vrgrad::Rng rng(71);
  const auto p = testsupport::random_instance(rng, 4, 2, 0.0);
  RunConfig cfg = base_config(p, 50.0 / p.mu());
  cfg.iterations = 100000;
  cfg.x0 = Vector::Constant(2, 1.0);
  CHECK_THROWS_AS(vrgrad::run(cfg), vrgrad::NonFiniteError);
}
