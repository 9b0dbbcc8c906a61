#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "vrgrad/errors.hpp"

namespace vrgrad {

using Vector = Eigen::VectorXd;

// Proximal operator of a convex regularizer g. Built-in kinds cover g = 0 and
// g = xi * ||x||_1; anything else can be plugged in through `custom`.
class ProxOperator {
 public:
  enum class Kind { zero, l1, custom };

  using ApplyFn = std::function<void(double lambda, const Vector& z, Vector& out)>;
  using ValueFn = std::function<double(const Vector& x)>;

  ProxOperator() : kind_(Kind::zero) {}

  static ProxOperator zero() { return ProxOperator(); }

  static ProxOperator l1(double xi) {
    if (xi < 0.0) throw NonPositiveConstantError("l1 weight must be nonnegative");
    ProxOperator op;
    op.kind_ = xi == 0.0 ? Kind::zero : Kind::l1;
    op.xi_ = xi;
    return op;
  }

  static ProxOperator custom(ApplyFn apply, ValueFn value) {
    ProxOperator op;
    op.kind_ = Kind::custom;
    op.apply_ = std::move(apply);
    op.value_ = std::move(value);
    return op;
  }

  // out = prox_{lambda * g}(z); lambda > 0.
  void apply(double lambda, const Vector& z, Vector& out) const;
  Vector apply(double lambda, const Vector& z) const {
    Vector out(z.size());
    apply(lambda, z, out);
    return out;
  }

  double value(const Vector& x) const;  // g(x)

  Kind kind() const { return kind_; }
  double xi() const { return xi_; }

 private:
  Kind kind_;
  double xi_ = 0.0;
  ApplyFn apply_;
  ValueFn value_;
};

// One sparse data row a_i, 0-based strictly increasing indices.
struct SparseRow {
  std::vector<int> indices;
  std::vector<double> values;

  double squared_norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s;
  }

  double dot(const Vector& x) const {
    double s = 0.0;
    for (std::size_t k = 0; k < indices.size(); ++k) s += values[k] * x[indices[k]];
    return s;
  }

  // out += c * a_i
  void axpy(double c, Vector& out) const {
    for (std::size_t k = 0; k < indices.size(); ++k) out[indices[k]] += c * values[k];
  }
};

// Finite-sum composite objective g(x) + F(x) with F = (1/n) sum_i f_i.
// Carries per-component smoothness constants L_i, the strong convexity
// constant mu of F, the proximal operator of g, and optionally a known
// minimizer. Immutable after construction, safe to share between threads.
class FiniteSumProblem {
 public:
  virtual ~FiniteSumProblem() = default;

  int num_components() const { return n_; }
  int dim() const { return dim_; }

  // grad f_i(x), bounds-checked.
  void component_gradient(int i, const Vector& x, Vector& out) const {
    check_index(i);
    component_gradient_impl(i, x, out);
  }
  Vector component_gradient(int i, const Vector& x) const {
    Vector out(dim_);
    component_gradient(i, x, out);
    return out;
  }

  // grad F(x) = mean of the component gradients.
  virtual void full_gradient(const Vector& x, Vector& out) const;
  Vector full_gradient(const Vector& x) const {
    Vector out(dim_);
    full_gradient(x, out);
    return out;
  }

  virtual double component_value(int i, const Vector& x) const = 0;
  double smooth_value(const Vector& x) const;    // F(x)
  double objective(const Vector& x) const {      // F(x) + g(x)
    return smooth_value(x) + prox_.value(x);
  }

  const std::vector<double>& lipschitz() const { return lipschitz_; }
  double lipschitz_mean() const { return lipschitz_mean_; }
  double lipschitz_max() const { return lipschitz_max_; }
  double mu() const { return mu_; }
  const ProxOperator& prox() const { return prox_; }

  const std::optional<Vector>& solution() const { return x_star_; }
  void set_solution(Vector x_star) { x_star_ = std::move(x_star); }

 protected:
  FiniteSumProblem(int n, int dim, std::vector<double> lipschitz, double mu, ProxOperator prox);

  virtual void component_gradient_impl(int i, const Vector& x, Vector& out) const = 0;

  void check_index(int i) const {
    if (i < 0 || i >= n_) throw IndexOutOfRangeError(i, n_);
  }

  int n_;
  int dim_;
  std::vector<double> lipschitz_;
  double lipschitz_mean_;
  double lipschitz_max_;
  double mu_;
  ProxOperator prox_;
  std::optional<Vector> x_star_;
};

// Least squares / lasso instance with f_i(x) = (a_i' x - b_i)^2, so
// L_i = 2 ||a_i||^2 and F(x) = (1/n) ||Ax - b||^2. The 1/n lives in F, not in
// the components; that keeps the L_i / mu ratios of the data matrix intact.
class LeastSquaresProblem final : public FiniteSumProblem {
 public:
  const std::vector<SparseRow>& rows() const { return rows_; }
  const Vector& targets() const { return b_; }
  double xi() const { return prox_.xi(); }

  using FiniteSumProblem::full_gradient;
  void full_gradient(const Vector& x, Vector& out) const override;
  double component_value(int i, const Vector& x) const override;

  // Same data, different l1 weight. The curvature constants are unchanged.
  LeastSquaresProblem with_l1(double xi) const;

 private:
  friend LeastSquaresProblem build_least_squares(std::vector<SparseRow> rows, Vector targets,
                                                 int dim, double xi);
  LeastSquaresProblem(std::vector<SparseRow> rows, Vector b, int dim,
                      std::vector<double> lipschitz, double mu, ProxOperator prox);

  void component_gradient_impl(int i, const Vector& x, Vector& out) const override;

  std::vector<SparseRow> rows_;
  Vector b_;
};

// Builds the least squares / lasso objective from sparse rows. Throws
// ZeroRowError when a row has zero norm and NotStronglyConvexError when the
// smallest Gram eigenvalue is negligible relative to the mean curvature.
LeastSquaresProblem build_least_squares(std::vector<SparseRow> rows, Vector targets, int dim,
                                        double xi);
LeastSquaresProblem build_least_squares(const Eigen::MatrixXd& A, const Vector& b, double xi);

// Smallest eigenvalue of (1/n) A'A. Dense solve for moderate dimensions,
// shifted power iteration beyond that.
double smallest_gram_eigenvalue(const std::vector<SparseRow>& rows, int dim);

}  // namespace vrgrad
