#pragma once

#include <string>
#include <vector>

#include "vrgrad/problems.hpp"
#include "vrgrad/rng.hpp"
#include "vrgrad/sampling.hpp"

namespace vrgrad {

class PrimalDistribution;

// Rule deciding which stored gradients get refreshed each iteration.
//
//   saga    - refresh exactly the drawn component
//   lsvrg   - refresh everything on a coin flip with probability q
//   ilsvrg  - refresh each component independently with probability q
//   qsaga   - refresh q uniformly drawn components (with or without
//             replacement; the without-replacement inclusion probability is
//             exactly q/n, with replacement it is 1 - (1 - 1/n)^q)
//
// Only lsvrg keeps all stored gradients evaluated at a single common point,
// which is what the coherent analysis and the anchor storage layout rely on.
class DualStrategy {
 public:
  enum class Kind { saga, lsvrg, ilsvrg, qsaga };

  static DualStrategy saga();
  static DualStrategy lsvrg(double q);
  static DualStrategy ilsvrg(double q);
  static DualStrategy qsaga(int q, bool with_replacement = false);

  Kind kind() const { return kind_; }
  double q_prob() const { return q_prob_; }
  int q_count() const { return q_count_; }
  bool with_replacement() const { return with_replacement_; }
  bool coherent() const { return kind_ == Kind::lsvrg; }

  // Per-index probability that the stored gradient is refreshed in one
  // iteration. saga needs the primal distribution, the others only n.
  std::vector<double> expected_update_frequency(int n, const PrimalDistribution* primal) const;

  // Fills `set` with the indices refreshed this iteration (sorted, unique).
  // Draws are independent of the primal index except for saga.
  void draw_update_set(int n, int primal_index, Rng& rng, std::vector<int>& set) const;

 private:
  Kind kind_ = Kind::saga;
  double q_prob_ = 0.0;
  int q_count_ = 0;
  bool with_replacement_ = false;
};

std::string to_string(DualStrategy::Kind kind);

enum class DualLayout { full_table, anchor };

std::string to_string(DualLayout layout);

// Stored gradients plus their running sum.
//
//   full_table - every y_i kept as a vector, sum maintained incrementally and
//                rebuilt from scratch every 10^4 updates to bound drift
//   anchor     - only the anchor point and the sum are kept; the implied
//                table is y_i = grad f_i(anchor), so reads cost one gradient
//                evaluation and only all-or-nothing refreshes are legal
//
// Single-owner mutable state: one solver run owns one storage.
class DualStorage {
 public:
  // Coherent initialization y_i = grad f_i(x0) for both layouts. Costs n
  // gradient evaluations, which the caller accounts for.
  DualStorage(DualLayout layout, const FiniteSumProblem& problem, const Vector& x0);

  DualLayout layout() const { return layout_; }
  const Vector& sum() const { return sum_; }

  // y_i. Costs one gradient evaluation for the anchor layout, zero otherwise.
  void read(const FiniteSumProblem& problem, int i, Vector& out) const;
  int read_cost() const { return layout_ == DualLayout::anchor ? 1 : 0; }

  // Applies y_i <- grad f_i(x) for i in `set` and returns the number of fresh
  // gradient evaluations consumed. When `reuse_index` is in the set and the
  // layout stores the full table, `reuse_gradient` is taken as grad
  // f_{reuse_index}(x) and costs nothing. Anchor refreshes always cost n.
  int apply_update(const std::vector<int>& set, const FiniteSumProblem& problem, const Vector& x,
                   int reuse_index = -1, const Vector* reuse_gradient = nullptr);

  // Rebuilds the running sum from the stored table (full_table only).
  void recompute_sum(const FiniteSumProblem& problem);

  const Vector& table_entry(int i) const;  // full_table only
  const Vector& anchor_point() const;      // anchor only

 private:
  DualLayout layout_;
  std::vector<Vector> table_;
  Vector anchor_;
  Vector sum_;
  Vector scratch_;
  long updates_since_rebuild_ = 0;
};

}  // namespace vrgrad
