#include "vrgrad/dual.hpp"

#include <algorithm>
#include <cmath>

namespace vrgrad {

DualStrategy DualStrategy::saga() { return DualStrategy(); }

DualStrategy DualStrategy::lsvrg(double q) {
  if (!(q > 0.0) || q > 1.0) throw NonPositiveConstantError("lsvrg needs q in (0, 1]");
  DualStrategy s;
  s.kind_ = Kind::lsvrg;
  s.q_prob_ = q;
  return s;
}

DualStrategy DualStrategy::ilsvrg(double q) {
  if (!(q > 0.0) || q > 1.0) throw NonPositiveConstantError("ilsvrg needs q in (0, 1]");
  DualStrategy s;
  s.kind_ = Kind::ilsvrg;
  s.q_prob_ = q;
  return s;
}

DualStrategy DualStrategy::qsaga(int q, bool with_replacement) {
  if (q < 1) throw NonPositiveConstantError("qsaga needs q >= 1");
  DualStrategy s;
  s.kind_ = Kind::qsaga;
  s.q_count_ = q;
  s.with_replacement_ = with_replacement;
  return s;
}

std::vector<double> DualStrategy::expected_update_frequency(
    int n, const PrimalDistribution* primal) const {
  switch (kind_) {
    case Kind::saga:
      if (primal == nullptr || primal->size() != n)
        throw NonPositiveConstantError("saga update frequency needs the primal distribution");
      return primal->probs();
    case Kind::lsvrg:
    case Kind::ilsvrg:
      return std::vector<double>(n, q_prob_);
    case Kind::qsaga: {
      if (q_count_ > n) throw NonPositiveConstantError("qsaga q cannot exceed n");
      double eta;
      if (with_replacement_) {
        // Inclusion probability of one index across q independent draws.
        eta = -std::expm1(q_count_ * std::log1p(-1.0 / n));
      } else {
        eta = static_cast<double>(q_count_) / n;
      }
      return std::vector<double>(n, eta);
    }
  }
  return {};
}

void DualStrategy::draw_update_set(int n, int primal_index, Rng& rng,
                                   std::vector<int>& set) const {
  set.clear();
  switch (kind_) {
    case Kind::saga:
      set.push_back(primal_index);
      return;
    case Kind::lsvrg:
      if (rng.next_double() < q_prob_) {
        set.resize(n);
        for (int i = 0; i < n; ++i) set[i] = i;
      }
      return;
    case Kind::ilsvrg:
      for (int i = 0; i < n; ++i)
        if (rng.next_double() < q_prob_) set.push_back(i);
      return;
    case Kind::qsaga:
      if (with_replacement_) {
        for (int d = 0; d < q_count_; ++d)
          set.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n))));
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
      } else {
        // Floyd's algorithm: q distinct indices, each draw O(1) expected.
        for (int j = n - q_count_; j < n; ++j) {
          const int t = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(j) + 1));
          if (std::find(set.begin(), set.end(), t) != set.end())
            set.push_back(j);
          else
            set.push_back(t);
        }
        std::sort(set.begin(), set.end());
      }
      return;
  }
}

std::string to_string(DualStrategy::Kind kind) {
  switch (kind) {
    case DualStrategy::Kind::saga:
      return "saga";
    case DualStrategy::Kind::lsvrg:
      return "lsvrg";
    case DualStrategy::Kind::ilsvrg:
      return "ilsvrg";
    case DualStrategy::Kind::qsaga:
      return "qsaga";
  }
  return "saga";
}

std::string to_string(DualLayout layout) {
  return layout == DualLayout::full_table ? "full_table" : "anchor";
}

DualStorage::DualStorage(DualLayout layout, const FiniteSumProblem& problem, const Vector& x0)
    : layout_(layout) {
  const int n = problem.num_components();
  sum_.setZero(problem.dim());
  scratch_.resize(problem.dim());
  if (layout_ == DualLayout::full_table) {
    table_.resize(n);
    for (int i = 0; i < n; ++i) {
      table_[i] = problem.component_gradient(i, x0);
      sum_ += table_[i];
    }
  } else {
    anchor_ = x0;
    for (int i = 0; i < n; ++i) {
      problem.component_gradient(i, x0, scratch_);
      sum_ += scratch_;
    }
  }
}

void DualStorage::read(const FiniteSumProblem& problem, int i, Vector& out) const {
  if (layout_ == DualLayout::full_table) {
    out = table_[i];
  } else {
    problem.component_gradient(i, anchor_, out);
  }
}

int DualStorage::apply_update(const std::vector<int>& set, const FiniteSumProblem& problem,
                              const Vector& x, int reuse_index, const Vector* reuse_gradient) {
  if (set.empty()) return 0;
  const int n = problem.num_components();

  if (layout_ == DualLayout::anchor) {
    if (static_cast<int>(set.size()) != n) throw IncoherentUpdateError();
    anchor_ = x;
    sum_.setZero();
    for (int i = 0; i < n; ++i) {
      problem.component_gradient(i, x, scratch_);
      sum_ += scratch_;
    }
    return n;
  }

  int fresh = 0;
  for (int i : set) {
    if (i == reuse_index && reuse_gradient != nullptr) {
      scratch_ = *reuse_gradient;
    } else {
      problem.component_gradient(i, x, scratch_);
      ++fresh;
    }
    sum_ += scratch_ - table_[i];
    table_[i] = scratch_;
  }
  if (++updates_since_rebuild_ >= 10000) recompute_sum(problem);
  return fresh;
}

void DualStorage::recompute_sum(const FiniteSumProblem&) {
  if (layout_ != DualLayout::full_table) return;
  sum_.setZero();
  for (const Vector& y : table_) sum_ += y;
  updates_since_rebuild_ = 0;
}

const Vector& DualStorage::table_entry(int i) const { return table_[i]; }

const Vector& DualStorage::anchor_point() const { return anchor_; }

}  // namespace vrgrad
