#pragma once

#include <string>
#include <vector>

#include "vrgrad/errors.hpp"
#include "vrgrad/rng.hpp"

namespace vrgrad {

// Categorical distribution over component indices with O(1) draws through an
// alias table (Vose construction, O(n) setup). Immutable once built; each run
// owns its own Rng.
class PrimalDistribution {
 public:
  enum class Label { uniform, lipschitz, improved_saga, custom };

  PrimalDistribution() = default;  // empty; assign before use

  static PrimalDistribution uniform(int n);
  // p_i proportional to the component smoothness constants.
  static PrimalDistribution lipschitz(const std::vector<double>& L);
  // p_i proportional to 4 L_i + n mu + sqrt((4 L_i)^2 + (n mu)^2). Balances
  // per-component conditioning against the implied dual refresh frequency.
  static PrimalDistribution improved_saga(const std::vector<double>& L, double mu);
  static PrimalDistribution custom(std::vector<double> p);

  int size() const { return static_cast<int>(probs_.size()); }
  double prob(int i) const { return probs_[i]; }
  const std::vector<double>& probs() const { return probs_; }
  Label label() const { return label_; }

  int draw(Rng& rng) const;

 private:
  PrimalDistribution(std::vector<double> p, Label label);
  void build_alias_table();

  std::vector<double> probs_;
  std::vector<double> alias_threshold_;
  std::vector<int> alias_index_;
  Label label_ = Label::custom;
};

// Mean of the improved-saga weights, S = (1/n) sum_i w_i. The recommended
// step size for that sampling is 2 / S.
double improved_saga_mean_weight(const std::vector<double>& L, double mu);

std::string to_string(PrimalDistribution::Label label);

}  // namespace vrgrad
