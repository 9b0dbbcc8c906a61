#include "vrgrad/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace vrgrad {

namespace {

void validate(const RunConfig& cfg) {
  if (cfg.problem == nullptr) throw ConfigError("run config has no problem");
  if (!(cfg.lambda > 0.0)) throw ConfigError("step size must be positive");
  if (cfg.iterations < 0) throw ConfigError("iteration count must be nonnegative");
  if (cfg.record_every < 1) throw ConfigError("record_every must be at least 1");
  if (cfg.sampling.size() != cfg.problem->num_components())
    throw ConfigError("sampling distribution size does not match the problem");
  if (cfg.layout == DualLayout::anchor && !cfg.strategy.coherent())
    throw IncoherentUpdateError();
}

}  // namespace

SolverState::SolverState(const RunConfig& cfg) : rng_(cfg.seed) {
  validate(cfg);
  const auto& problem = *cfg.problem;
  x_ = cfg.x0 ? *cfg.x0 : Vector::Zero(problem.dim());
  if (x_.size() != problem.dim()) throw ConfigError("x0 dimension does not match the problem");
  dual_ = std::make_unique<DualStorage>(cfg.layout, problem, x_);
  grad_evals_ = problem.num_components();  // coherent initialization of the table
  grad_.resize(problem.dim());
  y_read_.resize(problem.dim());
  z_.resize(problem.dim());
  x_next_.resize(problem.dim());
}

void pvrsg_step(SolverState& st, const RunConfig& cfg) {
  const auto& problem = *cfg.problem;
  const int n = problem.num_components();

  const int index = cfg.sampling.draw(st.rng_);
  problem.component_gradient(index, st.x_, st.grad_);
  long evals = 1;
  st.dual_->read(problem, index, st.y_read_);
  evals += st.dual_->read_cost();

  const double inv_p = 1.0 / cfg.sampling.prob(index);
  st.z_ = st.x_ - (cfg.lambda / n) * (inv_p * (st.grad_ - st.y_read_) + st.dual_->sum());
  problem.prox().apply(cfg.lambda, st.z_, st.x_next_);
  if (!st.x_next_.allFinite()) throw NonFiniteError(st.k_);

  cfg.strategy.draw_update_set(n, index, st.rng_, st.update_set_);
  evals += st.dual_->apply_update(st.update_set_, problem, st.x_, index, &st.grad_);

  st.x_.swap(st.x_next_);
  ++st.k_;
  st.grad_evals_ += evals;
}

Vector pvrsg_primal_iterate(const FiniteSumProblem& problem, const PrimalDistribution& sampling,
                            double lambda, const Vector& x, int index, const Vector& y_index,
                            const Vector& y_sum) {
  const int n = problem.num_components();
  const Vector grad = problem.component_gradient(index, x);
  const Vector z =
      x - (lambda / n) * ((grad - y_index) / sampling.prob(index) + y_sum);
  return problem.prox().apply(lambda, z);
}

namespace {

struct LyapunovRecorder {
  const FiniteSumProblem& problem;
  std::optional<Vector> x_star;
  std::vector<double> gamma_hat;
  std::vector<Vector> y_star;
  bool lyapunov_enabled = false;
  Vector scratch;

  LyapunovRecorder(const RunConfig& cfg) : problem(*cfg.problem) {
    if (cfg.lyapunov) {
      x_star = cfg.lyapunov->x_star;
      gamma_hat = cfg.lyapunov->gamma_hat;
      if (static_cast<int>(gamma_hat.size()) != problem.num_components())
        throw ConfigError("one Lyapunov weight per component required");
      lyapunov_enabled = true;
    } else if (problem.solution()) {
      x_star = *problem.solution();
    }
    if (x_star && x_star->size() != problem.dim())
      throw ConfigError("x_star dimension does not match the problem");
    if (lyapunov_enabled) {
      y_star.resize(problem.num_components());
      for (int i = 0; i < problem.num_components(); ++i)
        y_star[i] = problem.component_gradient(i, *x_star);
    }
    scratch.resize(problem.dim());
  }

  TraceRow row(const SolverState& st) {
    TraceRow r;
    r.k = st.iteration();
    r.grad_evals = st.grad_evals();
    r.objective = problem.objective(st.x());
    if (x_star) {
      r.dist2 = (st.x() - *x_star).squaredNorm();
      if (lyapunov_enabled) {
        double lyap = *r.dist2;
        for (int i = 0; i < problem.num_components(); ++i) {
          if (gamma_hat[i] == 0.0) continue;
          st.dual().read(problem, i, scratch);
          lyap += gamma_hat[i] * (scratch - y_star[i]).squaredNorm();
        }
        r.lyapunov = lyap;
      }
    }
    return r;
  }
};

}  // namespace

Trace run(const RunConfig& cfg) {
  validate(cfg);
  SolverState st(cfg);
  LyapunovRecorder recorder(cfg);

  Trace trace;
  trace.rows.reserve(static_cast<std::size_t>(cfg.iterations / cfg.record_every) + 2);
  trace.rows.push_back(recorder.row(st));
  for (long k = 0; k < cfg.iterations; ++k) {
    pvrsg_step(st, cfg);
    if (st.iteration() % cfg.record_every == 0 || st.iteration() == cfg.iterations)
      trace.rows.push_back(recorder.row(st));
  }
  trace.grad_evals = st.grad_evals();
  return trace;
}

double estimator_variance_probe(const SolverState& state, const RunConfig& cfg, int samples) {
  if (samples < 1) throw ConfigError("need at least one probe sample");
  const auto& problem = *cfg.problem;
  const int n = problem.num_components();
  Rng rng = state.rng();  // private copy, the run stream is untouched

  std::vector<Vector> draws;
  draws.reserve(samples);
  Vector grad(problem.dim());
  Vector y(problem.dim());
  Vector mean = Vector::Zero(problem.dim());
  for (int s = 0; s < samples; ++s) {
    const int index = cfg.sampling.draw(rng);
    problem.component_gradient(index, state.x(), grad);
    state.dual().read(problem, index, y);
    Vector est = (grad - y) / (n * cfg.sampling.prob(index)) + state.dual().sum() / n;
    mean += est;
    draws.push_back(std::move(est));
  }
  mean /= static_cast<double>(samples);
  double var = 0.0;
  for (const Vector& est : draws) var += (est - mean).squaredNorm();
  return var / static_cast<double>(samples);
}

std::vector<Trace> run_seeds(const RunConfig& cfg, int seed_count, int threads) {
  if (seed_count < 1) throw ConfigError("need at least one seed");
  threads = std::max(1, std::min(threads, seed_count));
  std::vector<Trace> traces(seed_count);

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&]() {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= seed_count || failed.load()) return;
      try {
        RunConfig local = cfg;
        local.seed = cfg.seed + static_cast<std::uint64_t>(t);
        traces[t] = run(local);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
        return;
      }
    }
  };

  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);
  return traces;
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const double rank = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(rank);
  if (lo + 1 >= values.size()) return values.back();
  const double w = rank - static_cast<double>(lo);
  return values[lo] + w * (values[lo + 1] - values[lo]);
}

TraceSummary summarize(const std::vector<Trace>& traces) {
  TraceSummary s;
  if (traces.empty()) return s;
  const std::size_t rows = traces.front().rows.size();
  for (const Trace& t : traces)
    if (t.rows.size() != rows) throw ConfigError("traces do not share a record grid");

  const bool has_dist = traces.front().rows.front().dist2.has_value();
  const bool has_lyap = traces.front().rows.front().lyapunov.has_value();
  s.band_is_lyapunov = has_lyap;

  std::vector<double> band(traces.size());
  for (std::size_t r = 0; r < rows; ++r) {
    s.k.push_back(traces.front().rows[r].k);
    double evals = 0.0, obj = 0.0, dist = 0.0, lyap = 0.0;
    for (std::size_t t = 0; t < traces.size(); ++t) {
      const TraceRow& row = traces[t].rows[r];
      evals += static_cast<double>(row.grad_evals);
      obj += row.objective;
      if (has_dist) dist += *row.dist2;
      if (has_lyap) lyap += *row.lyapunov;
      band[t] = has_lyap ? *row.lyapunov : (has_dist ? *row.dist2 : row.objective);
    }
    const double m = static_cast<double>(traces.size());
    s.grad_evals_mean.push_back(evals / m);
    s.objective_mean.push_back(obj / m);
    if (has_dist) s.dist2_mean.push_back(dist / m);
    if (has_lyap) s.lyapunov_mean.push_back(lyap / m);
    s.band_p05.push_back(percentile(band, 0.05));
    s.band_p95.push_back(percentile(band, 0.95));
  }
  return s;
}

Vector proximal_gradient_solve(const FiniteSumProblem& problem, double tol, long max_iterations) {
  // Unregularized least squares: normal equations, no iteration needed.
  if (problem.prox().kind() == ProxOperator::Kind::zero) {
    if (const auto* ls = dynamic_cast<const LeastSquaresProblem*>(&problem);
        ls != nullptr && problem.dim() <= 2048) {
      Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(problem.dim(), problem.dim());
      Vector rhs = Vector::Zero(problem.dim());
      for (int i = 0; i < problem.num_components(); ++i) {
        const SparseRow& row = ls->rows()[i];
        for (std::size_t a = 0; a < row.indices.size(); ++a) {
          rhs[row.indices[a]] += row.values[a] * ls->targets()[i];
          for (std::size_t c = 0; c < row.indices.size(); ++c)
            gram(row.indices[a], row.indices[c]) += row.values[a] * row.values[c];
        }
      }
      return gram.ldlt().solve(rhs);
    }
  }

  const double lambda = 1.0 / problem.lipschitz_mean();
  Vector x = Vector::Zero(problem.dim());
  Vector grad(problem.dim());
  Vector x_next(problem.dim());
  for (long it = 0; it < max_iterations; ++it) {
    problem.full_gradient(x, grad);
    problem.prox().apply(lambda, x - lambda * grad, x_next);
    const double step = (x_next - x).norm();
    x.swap(x_next);
    if (step <= tol * std::max(1.0, x.norm())) return x;
  }
  throw UnattainableError("proximal gradient reference solve did not reach tolerance");
}

}  // namespace vrgrad
