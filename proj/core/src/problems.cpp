#include "vrgrad/problems.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

namespace vrgrad {

void ProxOperator::apply(double lambda, const Vector& z, Vector& out) const {
  if (lambda <= 0.0) throw NonPositiveConstantError("prox step size must be positive");
  switch (kind_) {
    case Kind::zero:
      out = z;
      return;
    case Kind::l1: {
      const double t = lambda * xi_;
      out.resize(z.size());
      for (Eigen::Index j = 0; j < z.size(); ++j) {
        const double a = std::abs(z[j]) - t;
        out[j] = a > 0.0 ? (z[j] > 0.0 ? a : -a) : 0.0;
      }
      return;
    }
    case Kind::custom:
      apply_(lambda, z, out);
      return;
  }
}

double ProxOperator::value(const Vector& x) const {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::l1:
      return xi_ * x.lpNorm<1>();
    case Kind::custom:
      return value_(x);
  }
  return 0.0;
}

FiniteSumProblem::FiniteSumProblem(int n, int dim, std::vector<double> lipschitz, double mu,
                                   ProxOperator prox)
    : n_(n), dim_(dim), lipschitz_(std::move(lipschitz)), mu_(mu), prox_(std::move(prox)) {
  if (n_ < 1) throw NonPositiveConstantError("need at least one component");
  if (dim_ < 1) throw NonPositiveConstantError("dimension must be positive");
  if (static_cast<int>(lipschitz_.size()) != n_)
    throw NonPositiveConstantError("one smoothness constant per component required");
  double sum = 0.0, max = 0.0;
  for (double L : lipschitz_) {
    if (!(L > 0.0)) throw NonPositiveConstantError("smoothness constants must be positive");
    sum += L;
    max = std::max(max, L);
  }
  lipschitz_mean_ = sum / n_;
  lipschitz_max_ = max;
  if (!(mu_ > 0.0)) throw NonPositiveConstantError("strong convexity constant must be positive");
  if (mu_ > lipschitz_mean_ * (1.0 + 1e-12))
    throw NonPositiveConstantError("mu cannot exceed the mean smoothness constant");
}

void FiniteSumProblem::full_gradient(const Vector& x, Vector& out) const {
  out.setZero(dim_);
  Vector g(dim_);
  for (int i = 0; i < n_; ++i) {
    component_gradient_impl(i, x, g);
    out += g;
  }
  out /= static_cast<double>(n_);
}

double FiniteSumProblem::smooth_value(const Vector& x) const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += component_value(i, x);
  return s / n_;
}

LeastSquaresProblem::LeastSquaresProblem(std::vector<SparseRow> rows, Vector b, int dim,
                                         std::vector<double> lipschitz, double mu,
                                         ProxOperator prox)
    : FiniteSumProblem(static_cast<int>(rows.size()), dim, std::move(lipschitz), mu,
                       std::move(prox)),
      rows_(std::move(rows)),
      b_(std::move(b)) {}

void LeastSquaresProblem::component_gradient_impl(int i, const Vector& x, Vector& out) const {
  out.setZero(dim_);
  const double scale = 2.0 * (rows_[i].dot(x) - b_[i]);
  rows_[i].axpy(scale, out);
}

void LeastSquaresProblem::full_gradient(const Vector& x, Vector& out) const {
  out.setZero(dim_);
  for (int i = 0; i < n_; ++i) {
    const double scale = 2.0 * (rows_[i].dot(x) - b_[i]);
    rows_[i].axpy(scale, out);
  }
  out /= static_cast<double>(n_);
}

double LeastSquaresProblem::component_value(int i, const Vector& x) const {
  check_index(i);
  const double r = rows_[i].dot(x) - b_[i];
  return r * r;
}

LeastSquaresProblem LeastSquaresProblem::with_l1(double xi) const {
  LeastSquaresProblem copy = *this;
  copy.prox_ = ProxOperator::l1(xi);
  copy.x_star_.reset();
  return copy;
}

namespace {

// Dense Gram matrices stay affordable up to a couple thousand features.
constexpr int kDenseEigenLimit = 2048;

double smallest_gram_eigenvalue_dense(const std::vector<SparseRow>& rows, int dim) {
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
  for (const SparseRow& row : rows) {
    for (std::size_t a = 0; a < row.indices.size(); ++a) {
      for (std::size_t c = 0; c < row.indices.size(); ++c) {
        gram(row.indices[a], row.indices[c]) += row.values[a] * row.values[c];
      }
    }
  }
  gram /= static_cast<double>(rows.size());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

// Power iteration on (sigma I - G) where sigma bounds the spectrum from
// above; recovers the smallest eigenvalue without materializing G.
double smallest_gram_eigenvalue_iterative(const std::vector<SparseRow>& rows, int dim) {
  const double n = static_cast<double>(rows.size());
  auto gram_mul = [&](const Vector& v, Vector& out) {
    out.setZero(dim);
    for (const SparseRow& row : rows) row.axpy(row.dot(v), out);
    out /= n;
  };

  Vector v = Vector::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
  for (int j = 0; j < dim; ++j) v[j] += 1e-3 * std::cos(0.7 * (j + 1));
  v.normalize();
  Vector w(dim);

  double sigma = 0.0;
  for (int it = 0; it < 1000; ++it) {
    gram_mul(v, w);
    const double theta = v.dot(w);
    const double resid = (w - theta * v).norm();
    sigma = theta;
    if (w.norm() == 0.0) break;
    v = w / w.norm();
    if (resid <= 1e-12 * std::max(1.0, theta)) break;
  }
  sigma *= 1.0 + 1e-6;

  v = Vector::Constant(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
  for (int j = 0; j < dim; ++j) v[j] += 1e-3 * std::sin(0.3 * (j + 1));
  v.normalize();
  double theta = 0.0;
  for (long it = 0; it < 200000; ++it) {
    gram_mul(v, w);
    w = sigma * v - w;
    theta = v.dot(w);
    const double resid = (w - theta * v).norm();
    if (w.norm() == 0.0) break;
    v = w / w.norm();
    if (resid <= 1e-10 * std::max(sigma, 1.0)) break;
  }
  return sigma - theta;
}

}  // namespace

double smallest_gram_eigenvalue(const std::vector<SparseRow>& rows, int dim) {
  if (dim == 1) {
    double s = 0.0;
    for (const SparseRow& row : rows) s += row.squared_norm();
    return s / static_cast<double>(rows.size());
  }
  if (dim <= kDenseEigenLimit) return smallest_gram_eigenvalue_dense(rows, dim);
  return smallest_gram_eigenvalue_iterative(rows, dim);
}

LeastSquaresProblem build_least_squares(std::vector<SparseRow> rows, Vector targets, int dim,
                                        double xi) {
  const int n = static_cast<int>(rows.size());
  if (n < 1) throw NonPositiveConstantError("need at least one row");
  if (targets.size() != n) throw NonPositiveConstantError("one target per row required");
  std::vector<double> lipschitz(n);
  for (int i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < rows[i].indices.size(); ++k) {
      if (rows[i].indices[k] < 0 || rows[i].indices[k] >= dim)
        throw IndexOutOfRangeError(rows[i].indices[k], dim);
      if (k > 0 && rows[i].indices[k] <= rows[i].indices[k - 1])
        throw NonPositiveConstantError("row indices must be strictly increasing");
    }
    lipschitz[i] = 2.0 * rows[i].squared_norm();
    if (lipschitz[i] == 0.0) throw ZeroRowError(i);
  }

  double mu;
  if (dim == 1) {
    // Dimension one: the Gram "matrix" is the mean squared entry, which makes
    // mu identical (bit for bit) to the mean smoothness constant.
    double sum = 0.0;
    for (double L : lipschitz) sum += L;
    mu = sum / static_cast<double>(n);
  } else {
    mu = 2.0 * smallest_gram_eigenvalue(rows, dim);
  }

  double lbar = 0.0;
  for (double L : lipschitz) lbar += L;
  lbar /= n;
  if (!(mu > 1e-12 * lbar)) throw NotStronglyConvexError(mu);
  mu = std::min(mu, lbar);

  return LeastSquaresProblem(std::move(rows), std::move(targets), dim, std::move(lipschitz), mu,
                             ProxOperator::l1(xi));
}

LeastSquaresProblem build_least_squares(const Eigen::MatrixXd& A, const Vector& b, double xi) {
  std::vector<SparseRow> rows(A.rows());
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    for (Eigen::Index j = 0; j < A.cols(); ++j) {
      if (A(i, j) != 0.0) {
        rows[i].indices.push_back(static_cast<int>(j));
        rows[i].values.push_back(A(i, j));
      }
    }
  }
  return build_least_squares(std::move(rows), b, static_cast<int>(A.cols()), xi);
}

}  // namespace vrgrad
