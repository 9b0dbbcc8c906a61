#include "vrgrad/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace vrgrad {

PrimalDistribution::PrimalDistribution(std::vector<double> p, Label label)
    : probs_(std::move(p)), label_(label) {
  if (probs_.empty()) throw NonPositiveConstantError("distribution needs at least one entry");
  double sum = 0.0;
  for (double v : probs_) {
    if (!(v > 0.0)) throw NonPositiveConstantError("all sampling probabilities must be positive");
    sum += v;
  }
  for (double& v : probs_) v /= sum;
  build_alias_table();
}

PrimalDistribution PrimalDistribution::uniform(int n) {
  if (n < 1) throw NonPositiveConstantError("need at least one component");
  return PrimalDistribution(std::vector<double>(n, 1.0 / n), Label::uniform);
}

PrimalDistribution PrimalDistribution::lipschitz(const std::vector<double>& L) {
  for (double v : L)
    if (!(v > 0.0)) throw NonPositiveConstantError("smoothness constants must be positive");
  return PrimalDistribution(L, Label::lipschitz);
}

PrimalDistribution PrimalDistribution::improved_saga(const std::vector<double>& L, double mu) {
  if (!(mu > 0.0)) throw NonPositiveConstantError("strong convexity constant must be positive");
  const double n = static_cast<double>(L.size());
  double wmax = 0.0;
  std::vector<double> w(L.size());
  for (std::size_t i = 0; i < L.size(); ++i) {
    if (!(L[i] > 0.0)) throw NonPositiveConstantError("smoothness constants must be positive");
    w[i] = 4.0 * L[i] + n * mu + std::hypot(4.0 * L[i], n * mu);
    wmax = std::max(wmax, w[i]);
  }
  // Factor out the largest weight; n*mu and L_i can be many orders apart.
  for (double& v : w) v /= wmax;
  return PrimalDistribution(std::move(w), Label::improved_saga);
}

PrimalDistribution PrimalDistribution::custom(std::vector<double> p) {
  return PrimalDistribution(std::move(p), Label::custom);
}

double improved_saga_mean_weight(const std::vector<double>& L, double mu) {
  if (!(mu > 0.0)) throw NonPositiveConstantError("strong convexity constant must be positive");
  const double n = static_cast<double>(L.size());
  double sum = 0.0;
  for (double Li : L) {
    if (!(Li > 0.0)) throw NonPositiveConstantError("smoothness constants must be positive");
    sum += 4.0 * Li + n * mu + std::hypot(4.0 * Li, n * mu);
  }
  return sum / n;
}

void PrimalDistribution::build_alias_table() {
  const int n = size();
  alias_threshold_.assign(n, 1.0);
  alias_index_.assign(n, 0);
  for (int i = 0; i < n; ++i) alias_index_[i] = i;

  std::vector<double> scaled(n);
  std::vector<int> small, large;
  small.reserve(n);
  large.reserve(n);
  for (int i = 0; i < n; ++i) {
    scaled[i] = probs_[i] * n;
    (scaled[i] < 1.0 ? small : large).push_back(i);
  }
  while (!small.empty() && !large.empty()) {
    const int s = small.back();
    const int g = large.back();
    small.pop_back();
    large.pop_back();
    alias_threshold_[s] = scaled[s];
    alias_index_[s] = g;
    scaled[g] = (scaled[g] + scaled[s]) - 1.0;
    (scaled[g] < 1.0 ? small : large).push_back(g);
  }
  // Leftover buckets carry probability one up to rounding.
  for (int i : small) alias_threshold_[i] = 1.0;
  for (int i : large) alias_threshold_[i] = 1.0;
}

int PrimalDistribution::draw(Rng& rng) const {
  const int bucket = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(size())));
  const double u = rng.next_double();
  return u < alias_threshold_[bucket] ? bucket : alias_index_[bucket];
}

std::string to_string(PrimalDistribution::Label label) {
  switch (label) {
    case PrimalDistribution::Label::uniform:
      return "uniform";
    case PrimalDistribution::Label::lipschitz:
      return "lipschitz";
    case PrimalDistribution::Label::improved_saga:
      return "improved_saga";
    case PrimalDistribution::Label::custom:
      return "custom";
  }
  return "custom";
}

}  // namespace vrgrad
