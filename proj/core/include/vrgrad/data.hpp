#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "vrgrad/problems.hpp"

namespace vrgrad {

// Sparse labeled examples in the LibSVM text convention:
// "label index:value index:value ..." with 1-based strictly increasing
// indices, '#' starting a comment.
struct Dataset {
  struct Row {
    std::vector<int> indices;  // 1-based
    std::vector<double> values;
  };
  std::vector<Row> rows;
  std::vector<double> labels;
  int n_features = 0;
};

Dataset parse_libsvm(std::istream& input);
Dataset parse_libsvm(const std::string& text);
void serialize_libsvm(const Dataset& data, std::ostream& out);
std::string serialize_libsvm(const Dataset& data);

// Debug CSV dump, one row per example.
void export_csv(const Dataset& data, std::ostream& out);

// Removes feature columns that never carry a nonzero value and re-indexes
// the remaining ones densely. Keeping such columns makes the Gram matrix
// singular, so this runs before building regression problems.
struct DropResult {
  Dataset dataset;
  std::vector<int> dropped_columns;  // 1-based original indices
};
DropResult drop_zero_columns(const Dataset& data);

// Least squares / lasso instance with the labels as regression targets.
LeastSquaresProblem to_least_squares(const Dataset& data, double xi);

// n scalar examples with a_i, b_i drawn i.i.d. standard normal
// (interleaved per example) from the seeded generator documented in
// rng.hpp. The closed-form minimizer is attached.
LeastSquaresProblem generate_1d_least_squares(int n, std::uint64_t seed);

// Fraction of coordinates considered zero, at a relative threshold of 1e-8
// against the largest magnitude. An all-zero vector counts as fully sparse.
double solution_sparsity(const Vector& x);

// Bisects the l1 weight until the minimizer's sparsity lands in
// [target_lo, target_hi]; reference solves run deterministic proximal
// gradient to 1e-10. Throws UnattainableError after 60 steps.
double tune_l1_for_sparsity(const Dataset& data, double target_lo, double target_hi);

}  // namespace vrgrad
