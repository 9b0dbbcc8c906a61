#include "vrgrad/rates.hpp"

#include "vrgrad/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace vrgrad {

namespace {

// Relative tolerance deciding whether max_i L_i/(n p_i) equals mu. At
// equality the gradient estimator is exact and the analysis switches branch.
constexpr double kDegenerateTol = 1e-9;
constexpr double kDeltaLo = 1e-8;
constexpr double kDeltaHi = 1e8;
// Rates are certified on an open interval in the exactly well-conditioned
// incoherent branch; report strictly inside it.
constexpr double kOpenIntervalShrink = 1e-12;

struct Derived {
  std::vector<double> b;  // L_i / (n p_i)
  double max_b = 0.0;
  double min_eta = 0.0;
  bool degenerate = false;
};

Derived derive(const RateInputs& in) {
  const int n = in.n();
  if (n < 1) throw NonPositiveConstantError("rate inputs need at least one component");
  if (static_cast<int>(in.p.size()) != n || static_cast<int>(in.eta.size()) != n)
    throw NonPositiveConstantError("rate input lengths are inconsistent");
  if (!(in.mu > 0.0)) throw NonPositiveConstantError("strong convexity constant must be positive");

  Derived d;
  d.b.resize(n);
  d.min_eta = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    if (!(in.L[i] > 0.0) || !(in.p[i] > 0.0) || !(in.eta[i] > 0.0))
      throw NonPositiveConstantError("rate inputs must be positive");
    d.b[i] = in.L[i] / (n * in.p[i]);
    d.max_b = std::max(d.max_b, d.b[i]);
    d.min_eta = std::min(d.min_eta, in.eta[i]);
  }
  // Any valid sampling satisfies max_i L_i/(n p_i) >= mu; anything below
  // means the inputs are inconsistent.
  if (d.max_b < in.mu * (1.0 - kDegenerateTol))
    throw NonPositiveConstantError("max_i L_i/(n p_i) is below mu, inputs are inconsistent");
  d.degenerate = d.max_b <= in.mu * (1.0 + kDegenerateTol);
  return d;
}

double uniform_eta(const RateInputs& in) {
  const double eta = in.eta.front();
  for (double e : in.eta)
    if (std::abs(e - eta) > 1e-12 * std::max(1.0, eta))
      throw NonPositiveConstantError("coherent analysis requires a uniform update frequency");
  return eta;
}

// One term of the inner maximization: h_i(delta) =
//   (a_i + b_i) + a_i/delta + delta*(b_i - mu).
double h_term(double a, double b, double mu, double delta) {
  return a + b + a / delta + delta * (b - mu);
}

int argmax_h(const std::vector<double>& a, const std::vector<double>& b, double mu,
             double delta) {
  int best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double v = h_term(a[i], b[i], mu, delta);
    if (v > best_value) {
      best_value = v;
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace

RateInputs RateInputs::from(const FiniteSumProblem& problem, const PrimalDistribution& sampling,
                            const DualStrategy& strategy, std::optional<double> lambda) {
  RateInputs in;
  in.L = problem.lipschitz();
  in.mu = problem.mu();
  in.p = sampling.probs();
  in.eta = strategy.expected_update_frequency(problem.num_components(), &sampling);
  in.coherent = strategy.coherent();
  in.lambda = lambda;
  return in;
}

std::string to_string(LimitingSide side) {
  switch (side) {
    case LimitingSide::primal:
      return "primal";
    case LimitingSide::dual:
      return "dual";
    case LimitingSide::balanced:
      return "balanced";
  }
  return "balanced";
}

NuResult nu_incoherent(const RateInputs& in, double rho) {
  const Derived d = derive(in);
  if (rho < 0.0 || rho >= d.min_eta) throw RhoTooLargeError(rho, d.min_eta);

  if (d.degenerate) {
    double worst = 0.0;
    for (double e : in.eta) worst = std::max(worst, e / (e - rho));
    return {in.mu + in.mu * worst, std::nullopt};
  }

  const int n = in.n();
  std::vector<double> a(n);
  for (int i = 0; i < n; ++i) a[i] = d.b[i] * (in.eta[i] / (in.eta[i] - rho));

  // When one index dominates at both bracket ends it dominates on the whole
  // bracket (pairwise h differences are monotone in delta), and the inner
  // minimization has a closed form.
  const int lo_index = argmax_h(a, d.b, in.mu, kDeltaLo);
  const int hi_index = argmax_h(a, d.b, in.mu, kDeltaHi);
  if (lo_index == hi_index && d.b[lo_index] > in.mu) {
    const double ai = a[lo_index];
    const double bi = d.b[lo_index];
    const double delta = std::sqrt(ai / (bi - in.mu));
    if (delta >= kDeltaLo && delta <= kDeltaHi)
      return {ai + bi + 2.0 * std::sqrt(ai * (bi - in.mu)), delta};
  }

  // Golden section on log(delta). The maximum over i is convex in delta,
  // hence unimodal under the monotone reparameterization.
  auto phi = [&](double t) {
    const double delta = std::exp(t);
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) worst = std::max(worst, h_term(a[i], d.b[i], in.mu, delta));
    return worst;
  };
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = std::log(kDeltaLo), hi = std::log(kDeltaHi);
  double m1 = hi - inv_phi * (hi - lo);
  double m2 = lo + inv_phi * (hi - lo);
  double f1 = phi(m1), f2 = phi(m2);
  for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
    if (f1 <= f2) {
      hi = m2;
      m2 = m1;
      f2 = f1;
      m1 = hi - inv_phi * (hi - lo);
      f1 = phi(m1);
    } else {
      lo = m1;
      m1 = m2;
      f1 = f2;
      m2 = lo + inv_phi * (hi - lo);
      f2 = phi(m2);
    }
  }
  const double t = 0.5 * (lo + hi);
  return {phi(t), std::exp(t)};
}

double nu_coherent(const RateInputs& in, double rho) {
  const Derived d = derive(in);
  if (d.degenerate) return in.mu;
  const double eta = uniform_eta(in);
  if (rho < 0.0 || rho >= eta) throw RhoTooLargeError(rho, eta);
  const double root = 1.0 + std::sqrt(eta / (eta - rho));
  return in.mu + (d.max_b - in.mu) * root * root;
}

std::vector<double> lyapunov_weights_incoherent(const RateInputs& in, double rho,
                                                std::optional<double> delta) {
  const Derived d = derive(in);
  if (rho < 0.0 || rho >= d.min_eta) throw RhoTooLargeError(rho, d.min_eta);
  if (!in.lambda) throw NonPositiveConstantError("weights need a step size");
  const int n = in.n();
  const double lambda2 = *in.lambda * *in.lambda;
  const double factor = delta ? 1.0 + 1.0 / *delta : 1.0;
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = lambda2 / (static_cast<double>(n) * n * in.p[i]) * factor / (in.eta[i] - rho);
  return w;
}

std::vector<double> lyapunov_weights_coherent(const RateInputs& in, double rho) {
  const Derived d = derive(in);
  if (!in.lambda) throw NonPositiveConstantError("weights need a step size");
  const int n = in.n();
  if (d.degenerate) return std::vector<double>(n, 0.0);
  const double eta = uniform_eta(in);
  if (rho < 0.0 || rho >= eta) throw RhoTooLargeError(rho, eta);
  const double lambda2 = *in.lambda * *in.lambda;
  const double tail = 1.0 + std::sqrt((eta - rho) / eta);
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) {
    const double slack = std::max(0.0, 1.0 - n * in.p[i] * in.mu / in.L[i]);
    w[i] = lambda2 / (static_cast<double>(n) * n * in.p[i]) / (eta - rho) * slack * tail;
  }
  return w;
}

namespace {

NuResult nu_dispatch(const RateInputs& in, double rho) {
  if (in.coherent) return {nu_coherent(in, rho), std::nullopt};
  return nu_incoherent(in, rho);
}

RateCertificate finish_certificate(const RateInputs& in, const Derived& d, double rho, double nu,
                                   std::optional<double> delta_star, double lambda) {
  RateCertificate cert;
  cert.rho = rho;
  cert.lambda = lambda;
  cert.nu = nu;
  cert.delta_star = delta_star;
  cert.degenerate = d.degenerate;

  RateInputs with_lambda = in;
  with_lambda.lambda = lambda;
  if (in.coherent) {
    cert.gamma_hat = lyapunov_weights_coherent(with_lambda, rho);
  } else {
    cert.gamma_hat = lyapunov_weights_incoherent(with_lambda, rho, delta_star);
  }

  cert.rho_primal = in.mu * lambda * (2.0 - nu * lambda);

  // Dual contraction at the meta-parameters behind the weights; coincides
  // with rho at the fixed point.
  if (in.coherent && d.degenerate) {
    cert.rho_dual = 1.0;
  } else if (in.coherent) {
    const double eta = uniform_eta(in);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < in.n(); ++i) {
      const double slack = 1.0 - in.n() * in.p[i] * in.mu / in.L[i];
      const double gamma = std::max(0.0, slack) / (eta - rho);
      worst = std::min(worst, gamma > 0.0 ? eta - slack / gamma : 1.0);
    }
    cert.rho_dual = worst;
  } else {
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < in.n(); ++i) worst = std::min(worst, in.eta[i] - (in.eta[i] - rho));
    cert.rho_dual = worst;
  }

  const bool eta_capped = !(in.coherent && d.degenerate);
  const double primal_bound = in.mu * lambda * (2.0 - d.max_b * lambda);
  if (eta_capped && rho >= 0.95 * d.min_eta) {
    cert.limiting_side = LimitingSide::dual;
  } else if (rho >= 0.95 * primal_bound) {
    cert.limiting_side = LimitingSide::primal;
  } else {
    cert.limiting_side = LimitingSide::balanced;
  }
  return cert;
}

// Increasing function bisection on [0, hi] given f(0) < 0 < f(hi).
template <typename F>
double bisect_increasing(F&& f, double hi, double residual_tol) {
  double lo = 0.0;
  double mid = 0.5 * hi;
  for (int it = 0; it < 300; ++it) {
    mid = 0.5 * (lo + hi);
    const double r = f(mid);
    if (std::abs(r) < residual_tol || hi - lo <= 1e-18 * std::max(1.0, hi)) return mid;
    (r < 0.0 ? lo : hi) = mid;
  }
  return mid;
}

}  // namespace

double lambda_max(const RateInputs& in) {
  return 2.0 / nu_dispatch(in, 0.0).nu;
}

RateCertificate solve_rate_fixed_lambda(const RateInputs& in) {
  if (!in.lambda) throw NonPositiveConstantError("fixed-step solve needs a step size");
  const double lambda = *in.lambda;
  if (!(lambda > 0.0)) throw NonPositiveConstantError("step size must be positive");
  const Derived d = derive(in);

  if (in.coherent && d.degenerate) {
    // nu == mu independent of rho; the rate is closed form and may reach 1.
    if (lambda >= 2.0 / in.mu) throw NoConvergentRateError(lambda, 2.0 / in.mu);
    const double rho = in.mu * lambda * (2.0 - in.mu * lambda);
    return finish_certificate(in, d, rho, in.mu, std::nullopt, lambda);
  }

  const double lam_max = lambda_max(in);
  if (lambda >= lam_max) throw NoConvergentRateError(lambda, lam_max);

  const double rho_hi = d.min_eta * (1.0 - 1e-12);
  std::optional<double> last_delta;
  auto residual = [&](double rho) {
    const NuResult nu = nu_dispatch(in, rho);
    last_delta = nu.delta_star;
    return rho - in.mu * lambda * (2.0 - nu.nu * lambda);
  };
  double rho = bisect_increasing(residual, rho_hi, 1e-13);
  const NuResult nu = nu_dispatch(in, rho);
  if (!in.coherent && d.degenerate) rho *= 1.0 - kOpenIntervalShrink;
  return finish_certificate(in, d, rho, nu.nu, nu.delta_star, lambda);
}

RateCertificate solve_optimal_rate(const RateInputs& in) {
  const Derived d = derive(in);

  if (in.coherent && d.degenerate) {
    // Exact estimator: one proximal gradient step at 1/mu solves the problem.
    return finish_certificate(in, d, 1.0, in.mu, std::nullopt, 1.0 / in.mu);
  }

  const double rho_hi = d.min_eta * (1.0 - 1e-12);
  auto residual = [&](double rho) { return rho - in.mu / nu_dispatch(in, rho).nu; };
  double rho = bisect_increasing(residual, rho_hi, 1e-13);
  const NuResult nu = nu_dispatch(in, rho);
  const double lambda = 1.0 / nu.nu;
  if (!in.coherent && d.degenerate) rho *= 1.0 - kOpenIntervalShrink;
  return finish_certificate(in, d, rho, nu.nu, nu.delta_star, lambda);
}

namespace {

double lmax_of(const std::vector<double>& L) {
  double m = 0.0;
  for (double v : L) m = std::max(m, v);
  return m;
}

double lmean_of(const std::vector<double>& L) {
  double s = 0.0;
  for (double v : L) s += v;
  return s / static_cast<double>(L.size());
}

StepSizeBounds bounds_from(double smooth_term, double dual_term, double mu) {
  StepSizeBounds out;
  out.lambda_max = 2.0 / smooth_term;
  out.lambda_star = 2.0 / (smooth_term + dual_term + std::hypot(smooth_term, dual_term));
  out.rho_star = mu * out.lambda_star;
  return out;
}

}  // namespace

StepSizeBounds saga_bounds(const std::vector<double>& L, double mu, SamplingRule rule) {
  const double n = static_cast<double>(L.size());
  if (rule == SamplingRule::uniform) {
    const double lmax = lmax_of(L);
    const double cu = 2.0 + 2.0 * std::sqrt(std::max(0.0, 1.0 - mu / lmax));
    return bounds_from(cu * lmax, n * mu, mu);
  }
  const double lbar = lmean_of(L);
  double lmin = L.front();
  for (double v : L) lmin = std::min(lmin, v);
  const double cl = 2.0 + 2.0 * std::sqrt(std::max(0.0, 1.0 - mu / lbar));
  const double p_min = lmin / (n * lbar);
  return bounds_from(cl * lbar, mu / p_min, mu);
}

ImprovedSagaPlan saga_improved(const std::vector<double>& L, double mu) {
  ImprovedSagaPlan plan;
  plan.distribution = PrimalDistribution::improved_saga(L, mu);
  plan.mean_weight = improved_saga_mean_weight(L, mu);
  plan.lambda = 2.0 / plan.mean_weight;
  plan.rho = mu * plan.lambda;
  plan.complexity = 1.0 / (plan.lambda * mu);
  return plan;
}

StepSizeBounds lsvrg_bounds(const std::vector<double>& L, double mu, double eta_value,
                            SamplingRule rule) {
  if (!(eta_value > 0.0) || eta_value > 1.0)
    throw NonPositiveConstantError("update frequency must lie in (0, 1]");
  const double smooth = rule == SamplingRule::uniform ? lmax_of(L) : lmean_of(L);
  const double dfac = 4.0 - 3.0 * mu / smooth;
  return bounds_from(dfac * smooth, mu / eta_value, mu);
}

StepSizeBounds qsaga_bounds(const std::vector<double>& L, double mu, double eta_value,
                            SamplingRule rule) {
  if (!(eta_value > 0.0) || eta_value > 1.0)
    throw NonPositiveConstantError("update frequency must lie in (0, 1]");
  const double smooth = rule == SamplingRule::uniform ? lmax_of(L) : lmean_of(L);
  const double cfac = 2.0 + 2.0 * std::sqrt(std::max(0.0, 1.0 - mu / smooth));
  return bounds_from(cfac * smooth, mu / eta_value, mu);
}

namespace {

ComplexityReport eta_star_report(const std::string& method, double cond_term, double cost_base,
                                 double n) {
  // Minimizes (cost_base + n*eta) * (cond_term + 1/eta) over eta in (0, 1].
  ComplexityReport report;
  report.method = method;
  report.eta_star = std::min(1.0, std::sqrt(cost_base / (n * cond_term)));
  report.cost_factor = cost_base + n * report.eta_star;
  report.total_complexity = report.cost_factor * (cond_term + 1.0 / report.eta_star);
  return report;
}

}  // namespace

ComplexityReport lsvrg_eta_star(const std::vector<double>& L, double mu, DualLayout layout) {
  const double lbar = lmean_of(L);
  const double cond = (4.0 - 3.0 * mu / lbar) * lbar / mu;
  const double base = layout == DualLayout::anchor ? 2.0 : 1.0;
  const std::string method =
      layout == DualLayout::anchor ? "lsvrg_anchor" : "lsvrg_full_table";
  return eta_star_report(method, cond, base, static_cast<double>(L.size()));
}

ComplexityReport qsaga_eta_star(const std::vector<double>& L, double mu) {
  const double lbar = lmean_of(L);
  const double cond = (2.0 + 2.0 * std::sqrt(std::max(0.0, 1.0 - mu / lbar))) * lbar / mu;
  return eta_star_report("qsaga", cond, 1.0, static_cast<double>(L.size()));
}

int qsaga_choose_q(double eta_value, int n) {
  const long q = std::lround(eta_value * n);
  return static_cast<int>(std::clamp(q, 1L, static_cast<long>(n)));
}

double theorem_complexity(const std::vector<double>& L, double mu, double eta_value, bool coherent,
                          double cost_base) {
  RateInputs in;
  in.L = L;
  in.mu = mu;
  in.p = PrimalDistribution::lipschitz(L).probs();
  in.eta.assign(L.size(), eta_value);
  in.coherent = coherent;
  const RateCertificate cert = solve_optimal_rate(in);
  return (cost_base + static_cast<double>(L.size()) * eta_value) / cert.rho;
}

double lyapunov_eval(const Vector& x, const std::vector<Vector>& y, const Vector& x_star,
                     const std::vector<Vector>& y_star, const std::vector<double>& gamma_hat) {
  double value = (x - x_star).squaredNorm();
  for (std::size_t i = 0; i < y.size(); ++i)
    value += gamma_hat[i] * (y[i] - y_star[i]).squaredNorm();
  return value;
}

namespace {

struct DualOutcome {
  double prob;
  std::vector<int> set;
};

std::vector<DualOutcome> enumerate_dual_outcomes(const DualStrategy& strategy, int n) {
  std::vector<DualOutcome> outcomes;
  switch (strategy.kind()) {
    case DualStrategy::Kind::saga:
      break;  // handled jointly with the primal index
    case DualStrategy::Kind::lsvrg: {
      const double q = strategy.q_prob();
      if (1.0 - q > 0.0) outcomes.push_back({1.0 - q, {}});
      std::vector<int> full(n);
      for (int i = 0; i < n; ++i) full[i] = i;
      outcomes.push_back({q, std::move(full)});
      break;
    }
    case DualStrategy::Kind::ilsvrg: {
      const double q = strategy.q_prob();
      if (n > 30) throw TooManyOutcomesError(std::ldexp(1.0, n));
      for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        DualOutcome o;
        o.prob = 1.0;
        for (int i = 0; i < n; ++i) {
          if (mask & (1u << i)) {
            o.prob *= q;
            o.set.push_back(i);
          } else {
            o.prob *= 1.0 - q;
          }
        }
        if (o.prob > 0.0) outcomes.push_back(std::move(o));
      }
      break;
    }
    case DualStrategy::Kind::qsaga: {
      const int q = strategy.q_count();
      if (strategy.with_replacement()) {
        const double total = std::pow(static_cast<double>(n), q);
        if (total > 1e6) throw TooManyOutcomesError(total);
        std::vector<int> seq(q, 0);
        const double prob = 1.0 / total;
        for (;;) {
          DualOutcome o;
          o.prob = prob;
          o.set = seq;
          std::sort(o.set.begin(), o.set.end());
          o.set.erase(std::unique(o.set.begin(), o.set.end()), o.set.end());
          outcomes.push_back(std::move(o));
          int digit = q - 1;
          while (digit >= 0 && ++seq[digit] == n) seq[digit--] = 0;
          if (digit < 0) break;
        }
      } else {
        double total = 1.0;
        for (int j = 0; j < q; ++j) total = total * (n - j) / (j + 1);
        if (total > 1e6) throw TooManyOutcomesError(total);
        const double prob = 1.0 / total;
        std::vector<int> comb(q);
        for (int j = 0; j < q; ++j) comb[j] = j;
        for (;;) {
          outcomes.push_back({prob, comb});
          int j = q - 1;
          while (j >= 0 && comb[j] == n - q + j) --j;
          if (j < 0) break;
          ++comb[j];
          for (int t = j + 1; t < q; ++t) comb[t] = comb[t - 1] + 1;
        }
      }
      break;
    }
  }
  return outcomes;
}

}  // namespace

ContractionCheck one_step_contraction_oracle(const FiniteSumProblem& problem,
                                             const PrimalDistribution& sampling,
                                             const DualStrategy& strategy, double lambda,
                                             const Vector& x, const std::vector<Vector>& y,
                                             const RateCertificate& cert) {
  const int n = problem.num_components();
  if (!problem.solution()) throw ConfigError("the contraction oracle needs a known solution");
  const Vector& x_star = *problem.solution();

  std::vector<Vector> y_star(n), grad(n);
  std::vector<double> dist_kept(n), dist_refreshed(n);
  Vector y_sum = Vector::Zero(problem.dim());
  for (int i = 0; i < n; ++i) {
    y_star[i] = problem.component_gradient(i, x_star);
    grad[i] = problem.component_gradient(i, x);
    dist_kept[i] = (y[i] - y_star[i]).squaredNorm();
    dist_refreshed[i] = (grad[i] - y_star[i]).squaredNorm();
    y_sum += y[i];
  }

  std::vector<double> primal_next(n);
  for (int i = 0; i < n; ++i) {
    const Vector xn = pvrsg_primal_iterate(problem, sampling, lambda, x, i, y[i], y_sum);
    primal_next[i] = (xn - x_star).squaredNorm();
  }

  const auto& gamma_hat = cert.gamma_hat;
  double lhs = 0.0;
  if (strategy.kind() == DualStrategy::Kind::saga) {
    for (int i = 0; i < n; ++i) {
      double dual = 0.0;
      for (int j = 0; j < n; ++j)
        dual += gamma_hat[j] * (j == i ? dist_refreshed[j] : dist_kept[j]);
      lhs += sampling.prob(i) * (primal_next[i] + dual);
    }
  } else {
    const std::vector<DualOutcome> outcomes = enumerate_dual_outcomes(strategy, n);
    const double total =
        static_cast<double>(outcomes.size()) * static_cast<double>(n);
    if (total > 1e6) throw TooManyOutcomesError(total);
    double expected_primal = 0.0;
    for (int i = 0; i < n; ++i) expected_primal += sampling.prob(i) * primal_next[i];
    double expected_dual = 0.0;
    std::vector<char> member(n);
    for (const DualOutcome& o : outcomes) {
      std::fill(member.begin(), member.end(), 0);
      for (int i : o.set) member[i] = 1;
      double dual = 0.0;
      for (int j = 0; j < n; ++j)
        dual += gamma_hat[j] * (member[j] ? dist_refreshed[j] : dist_kept[j]);
      expected_dual += o.prob * dual;
    }
    lhs = expected_primal + expected_dual;
  }

  ContractionCheck check;
  check.lhs = lhs;
  check.rhs = (1.0 - cert.rho) * lyapunov_eval(x, y, x_star, y_star, gamma_hat);
  return check;
}

PDVTerms lyapunov_terms(const FiniteSumProblem& problem, const PrimalDistribution& sampling,
                        const std::vector<double>& eta, const std::vector<double>& gamma,
                        double delta, double lambda, const Vector& x,
                        const std::vector<Vector>& y) {
  if (!(delta > 0.0)) throw NonPositiveConstantError("delta must be positive");
  if (!problem.solution()) throw ConfigError("term evaluation needs a known solution");
  const int n = problem.num_components();
  const Vector& x_star = *problem.solution();
  const Vector grad_full = problem.full_gradient(x);
  const Vector grad_full_star = problem.full_gradient(x_star);
  const Vector diff_full = grad_full - grad_full_star;

  const double lambda2 = lambda * lambda;
  const double one_over_delta = 1.0 / delta;

  PDVTerms terms;
  Vector mean_dual_diff = Vector::Zero(problem.dim());
  Vector gi(problem.dim()), gi_star(problem.dim());
  for (int i = 0; i < n; ++i) {
    const double np = static_cast<double>(n) * n * sampling.prob(i);
    problem.component_gradient(i, x, gi);
    problem.component_gradient(i, x_star, gi_star);
    terms.V += (1.0 + delta) * (eta[i] * gamma[i] / delta + 1.0) / np *
               (gi - gi_star).squaredNorm();
    // gamma_hat_i = gamma_i (1 + 1/delta) lambda^2 / (n^2 p_i); the 1/gamma
    // part of the dual coefficient is fixed by the gamma/gamma := 1 rule.
    const double gamma_hat = gamma[i] * (1.0 + one_over_delta) * lambda2 / np;
    const double coeff = (1.0 - eta[i]) * gamma_hat + (1.0 + one_over_delta) * lambda2 / np;
    terms.D += coeff * (y[i] - gi_star).squaredNorm();
    mean_dual_diff += y[i] - gi_star;
  }
  mean_dual_diff /= static_cast<double>(n);
  terms.V -= delta * diff_full.squaredNorm();
  terms.D -= (1.0 + one_over_delta) * lambda2 * mean_dual_diff.squaredNorm();
  terms.P = (x - x_star).squaredNorm() - 2.0 * lambda * diff_full.dot(x - x_star) +
            lambda2 * terms.V;
  return terms;
}

}  // namespace vrgrad
