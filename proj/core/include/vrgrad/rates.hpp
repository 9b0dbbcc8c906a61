#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vrgrad/dual.hpp"
#include "vrgrad/problems.hpp"
#include "vrgrad/sampling.hpp"

namespace vrgrad {

// Inputs to the convergence-rate engine: per-component smoothness constants,
// strong convexity of the average, primal sampling probabilities, expected
// dual update frequencies, and whether the dual table is refreshed
// all-at-once from a common point (coherent).
struct RateInputs {
  std::vector<double> L;
  double mu = 0.0;
  std::vector<double> p;
  std::vector<double> eta;
  bool coherent = false;
  std::optional<double> lambda;

  int n() const { return static_cast<int>(L.size()); }

  static RateInputs from(const FiniteSumProblem& problem, const PrimalDistribution& sampling,
                         const DualStrategy& strategy, std::optional<double> lambda = {});
};

enum class LimitingSide { primal, dual, balanced };
std::string to_string(LimitingSide side);

// Certified linear rate: the weighted distance
//   ||x^k - x*||^2 + sum_i gamma_hat_i ||y_i^k - y_i*||^2
// contracts in expectation by (1 - rho) per iteration.
struct RateCertificate {
  double rho = 0.0;
  double lambda = 0.0;
  double nu = 0.0;
  std::optional<double> delta_star;  // absent in the exactly well-conditioned case
  std::vector<double> gamma_hat;
  double rho_primal = 0.0;
  double rho_dual = 0.0;
  LimitingSide limiting_side = LimitingSide::balanced;
  bool degenerate = false;  // max_i L_i/(n p_i) == mu
};

// nu(rho) for independent per-index dual updates. Single dominating index
// cases (uniform or smoothness-proportional sampling) use the closed form;
// otherwise the inner minimization over delta runs golden section on
// log(delta), which is valid because the maximum of convex functions is
// unimodal. Throws RhoTooLargeError when rho is not below min_i eta_i.
struct NuResult {
  double nu;
  std::optional<double> delta_star;
};
NuResult nu_incoherent(const RateInputs& in, double rho);

// nu(rho) under coherent all-at-once dual updates (uniform eta required).
double nu_coherent(const RateInputs& in, double rho);

// Weights of the dual distance terms at a given rate. `delta` absent means
// the limiting weight (1 + 1/delta) -> 1.
std::vector<double> lyapunov_weights_incoherent(const RateInputs& in, double rho,
                                                std::optional<double> delta);
std::vector<double> lyapunov_weights_coherent(const RateInputs& in, double rho);

// Largest step size with a positive certified rate, 2 / nu(0).
double lambda_max(const RateInputs& in);

// Certified rate at the step size stored in the inputs: bisection on
// rho - mu*lambda*(2 - nu(rho)*lambda), which is increasing in rho. Throws
// NoConvergentRateError when lambda >= lambda_max.
RateCertificate solve_rate_fixed_lambda(const RateInputs& in);

// Best certified rate over step sizes: the optimum is lambda = 1/nu, so the
// rate is the root of rho - mu/nu(rho).
RateCertificate solve_optimal_rate(const RateInputs& in);

// Closed-form step-size recommendations per method. rho_star = mu * lambda_star.
struct StepSizeBounds {
  double lambda_max = 0.0;
  double lambda_star = 0.0;
  double rho_star = 0.0;
};
enum class SamplingRule { uniform, lipschitz };

StepSizeBounds saga_bounds(const std::vector<double>& L, double mu, SamplingRule rule);

struct ImprovedSagaPlan {
  PrimalDistribution distribution;
  double lambda = 0.0;
  double rho = 0.0;
  double mean_weight = 0.0;  // S; lambda = 2/S
  double complexity = 0.0;   // iteration count constant, 1/(lambda*mu)
};
ImprovedSagaPlan saga_improved(const std::vector<double>& L, double mu);

StepSizeBounds lsvrg_bounds(const std::vector<double>& L, double mu, double eta_value,
                            SamplingRule rule);
StepSizeBounds qsaga_bounds(const std::vector<double>& L, double mu, double eta_value,
                            SamplingRule rule);

// Update-frequency recommendation minimizing expected total gradient
// evaluations (cost factor times iteration count, up to the log(1/eps)
// factor).
struct ComplexityReport {
  std::string method;
  double eta_star = 0.0;
  double total_complexity = 0.0;
  double cost_factor = 0.0;  // per-iteration evaluations at eta_star
};
ComplexityReport lsvrg_eta_star(const std::vector<double>& L, double mu, DualLayout layout);
ComplexityReport qsaga_eta_star(const std::vector<double>& L, double mu);

// Nearest nonzero integer to eta*n, capped at n.
int qsaga_choose_q(double eta_value, int n);

// Expected total gradient evaluations implied by the rate engine itself at a
// given uniform update frequency, smoothness-proportional sampling and the
// optimal step size: (cost_base + n*eta) / rho.
double theorem_complexity(const std::vector<double>& L, double mu, double eta_value, bool coherent,
                          double cost_base);

// sum of gamma_hat-weighted squared dual distances plus the primal one.
double lyapunov_eval(const Vector& x, const std::vector<Vector>& y, const Vector& x_star,
                     const std::vector<Vector>& y_star, const std::vector<double>& gamma_hat);

// Exhaustive one-step expectation check. Enumerates every joint outcome of
// the primal draw and the dual update set, applies the deterministic update
// per outcome, and returns
//   lhs = E[ next weighted distance | current state ]
//   rhs = (1 - rho) * current weighted distance
// with (rho, gamma_hat) taken from the certificate. Throws
// TooManyOutcomesError when the joint support exceeds 10^6 outcomes.
struct ContractionCheck {
  double lhs = 0.0;
  double rhs = 0.0;
};
ContractionCheck one_step_contraction_oracle(const FiniteSumProblem& problem,
                                             const PrimalDistribution& sampling,
                                             const DualStrategy& strategy, double lambda,
                                             const Vector& x, const std::vector<Vector>& y,
                                             const RateCertificate& cert);

// The three meta-parameterized quantities the contraction bounds are built
// from, evaluated directly from their definitions. gamma_i = 0 uses the
// gamma/gamma := 1 convention.
struct PDVTerms {
  double P = 0.0;
  double D = 0.0;
  double V = 0.0;
};
PDVTerms lyapunov_terms(const FiniteSumProblem& problem, const PrimalDistribution& sampling,
                        const std::vector<double>& eta, const std::vector<double>& gamma,
                        double delta, double lambda, const Vector& x,
                        const std::vector<Vector>& y);

}  // namespace vrgrad
