#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "vrgrad/dual.hpp"
#include "vrgrad/problems.hpp"
#include "vrgrad/rng.hpp"
#include "vrgrad/sampling.hpp"

namespace vrgrad {

// Weighted distance used for convergence traces:
//   ||x - x*||^2 + sum_i gamma_hat_i ||y_i - grad f_i(x*)||^2
struct LyapunovSpec {
  Vector x_star;
  std::vector<double> gamma_hat;
};

struct RunConfig {
  const FiniteSumProblem* problem = nullptr;
  PrimalDistribution sampling;
  DualStrategy strategy;
  DualLayout layout = DualLayout::full_table;
  double lambda = 0.0;
  long iterations = 0;
  std::uint64_t seed = 0;
  long record_every = 1;
  std::optional<Vector> x0;  // defaults to the zero vector
  std::optional<LyapunovSpec> lyapunov;
};

struct TraceRow {
  long k = 0;
  long grad_evals = 0;
  std::optional<double> dist2;     // ||x - x*||^2 when a solution is known
  std::optional<double> lyapunov;  // when configured
  double objective = 0.0;
};

struct Trace {
  std::vector<TraceRow> rows;
  long grad_evals = 0;  // total at the end of the run
};

// Mutable per-run state. One run is strictly sequential; independent runs
// (different seeds) can execute concurrently since the problem is immutable.
class SolverState {
 public:
  explicit SolverState(const RunConfig& cfg);

  const Vector& x() const { return x_; }
  long iteration() const { return k_; }
  long grad_evals() const { return grad_evals_; }
  const DualStorage& dual() const { return *dual_; }
  DualStorage& dual() { return *dual_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }

 private:
  friend void pvrsg_step(SolverState&, const RunConfig&);

  Vector x_;
  std::unique_ptr<DualStorage> dual_;
  long k_ = 0;
  long grad_evals_ = 0;
  Rng rng_;
  // step scratch
  Vector grad_;
  Vector y_read_;
  Vector z_;
  Vector x_next_;
  std::vector<int> update_set_;
};

// One primal-dual iteration:
//   draw I with P(I = i) = p_i
//   z    = x - (lambda/n) * ((grad f_I(x) - y_I) / p_I + sum_j y_j)
//   x+   = prox_{lambda g}(z)
//   refresh y_i <- grad f_i(x) for i in the drawn update set
// The component gradient at x is computed once and reused when I lands in the
// update set, which is what makes the saga variant cost one evaluation per
// iteration. Throws NonFiniteError when the iterate diverges.
void pvrsg_step(SolverState& state, const RunConfig& cfg);

// The primal half of the update for a forced index, given an explicit stored
// gradient and table sum. Deterministic; used by exhaustive expectation
// checks.
Vector pvrsg_primal_iterate(const FiniteSumProblem& problem, const PrimalDistribution& sampling,
                            double lambda, const Vector& x, int index, const Vector& y_index,
                            const Vector& y_sum);

// Runs cfg.iterations steps from x0 (zero vector by default), recording every
// record_every iterations plus the final one. Deterministic in (cfg, seed).
Trace run(const RunConfig& cfg);

// Empirical variance of the gradient estimator at the current state over
// fresh draws of the component index. Does not advance the run state.
double estimator_variance_probe(const SolverState& state, const RunConfig& cfg, int samples);

// Independent runs for seeds cfg.seed, cfg.seed + 1, ..., fanned out over
// worker threads. Results are ordered by seed offset regardless of the
// thread count.
std::vector<Trace> run_seeds(const RunConfig& cfg, int seed_count, int threads);

// Per-row aggregation across seeds: means for every column, percentiles for
// the traced distance (Lyapunov when present, squared distance otherwise).
struct TraceSummary {
  std::vector<long> k;
  std::vector<double> grad_evals_mean;
  std::vector<double> objective_mean;
  std::vector<double> dist2_mean;     // empty when unavailable
  std::vector<double> lyapunov_mean;  // empty when unavailable
  std::vector<double> band_p05;
  std::vector<double> band_p95;
  bool band_is_lyapunov = false;
};

TraceSummary summarize(const std::vector<Trace>& traces);

// q-th quantile (0..1) with linear interpolation between order statistics.
double percentile(std::vector<double> values, double q);

// Deterministic proximal gradient iteration to a fixed-point tolerance.
// Unregularized least squares instances short-circuit to the normal
// equations. Used to attach reference solutions to test problems.
Vector proximal_gradient_solve(const FiniteSumProblem& problem, double tol = 1e-13,
                               long max_iterations = 50'000'000);

}  // namespace vrgrad
