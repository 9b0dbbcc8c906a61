#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "vrgrad/data.hpp"
#include "vrgrad/problems.hpp"
#include "vrgrad/rng.hpp"
#include "vrgrad/solver.hpp"

namespace testsupport {

using vrgrad::Vector;

// Random dense least-squares instance with n >= dim so the Gram matrix stays
// positive definite. Retries until the conditioning is sane.
inline vrgrad::LeastSquaresProblem random_instance(vrgrad::Rng& rng, int n, int dim, double xi,
                                                   double max_condition = 1e3) {
  for (;;) {
    Eigen::MatrixXd A(n, dim);
    Vector b(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < dim; ++j) A(i, j) = rng.next_normal();
      b[i] = rng.next_normal();
    }
    try {
      vrgrad::LeastSquaresProblem problem = vrgrad::build_least_squares(A, b, xi);
      if (problem.lipschitz_mean() / problem.mu() > max_condition) continue;
      problem.set_solution(vrgrad::proximal_gradient_solve(problem, 1e-14));
      return problem;
    } catch (const vrgrad::NotStronglyConvexError&) {
      continue;
    }
  }
}

// Chi-square upper quantile via the Wilson-Hilferty cube approximation; good
// to a few percent for the degrees of freedom used in these tests.
inline double chi_square_quantile(int dof, double z_upper) {
  const double k = static_cast<double>(dof);
  const double t = 1.0 - 2.0 / (9.0 * k) + z_upper * std::sqrt(2.0 / (9.0 * k));
  return k * t * t * t;
}

// Least-squares slope of log(values) against k, restricted to rows where the
// value lies within [lo, hi] relative to the first row.
inline std::optional<double> fit_log_slope(const std::vector<long>& k,
                                           const std::vector<double>& values, double rel_lo,
                                           double rel_hi) {
  const double scale = values.front();
  double sk = 0, sv = 0, skk = 0, skv = 0;
  long count = 0;
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (values[r] <= 0.0) continue;
    const double rel = values[r] / scale;
    if (rel < rel_lo || rel > rel_hi) continue;
    const double x = static_cast<double>(k[r]);
    const double y = std::log(values[r]);
    sk += x;
    sv += y;
    skk += x * x;
    skv += x * y;
    ++count;
  }
  if (count < 2) return std::nullopt;
  const double denom = count * skk - sk * sk;
  if (denom == 0.0) return std::nullopt;
  return (count * skv - sk * sv) / denom;
}

}  // namespace testsupport
