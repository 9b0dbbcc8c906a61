#include <cmath>
#include <vector>

#include "doctest.h"
#include "support.hpp"
#include "vrgrad/sampling.hpp"

using vrgrad::PrimalDistribution;
using vrgrad::Rng;

TEST_CASE("uniform probabilities") {
  const auto d4 = PrimalDistribution::uniform(4);
  for (int i = 0; i < 4; ++i) CHECK(d4.prob(i) == 0.25);
  const auto d1 = PrimalDistribution::uniform(1);
  CHECK(d1.prob(0) == 1.0);
  const auto d17 = PrimalDistribution::uniform(17);
  double sum = 0.0;
  for (double p : d17.probs()) sum += p;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("smoothness-proportional probabilities") {
  const auto d = PrimalDistribution::lipschitz({1.0, 3.0});
  CHECK(d.prob(0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(d.prob(1) == doctest::Approx(0.75).epsilon(1e-15));

  const auto equal = PrimalDistribution::lipschitz({2.0, 2.0, 2.0});
  for (int i = 0; i < 3; ++i) CHECK(equal.prob(i) == doctest::Approx(1.0 / 3).epsilon(1e-15));

  const auto d3 = PrimalDistribution::lipschitz({2.0, 2.0, 4.0});
  CHECK(d3.prob(0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(d3.prob(2) == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(PrimalDistribution::lipschitz({1.0, 0.0}), vrgrad::NonPositiveConstantError);
}

TEST_CASE("balanced sampling weights") {
  SUBCASE("equal constants collapse to uniform, exactly") {
    const auto d = PrimalDistribution::improved_saga({3.0, 3.0, 3.0, 3.0}, 0.7);
    for (int i = 0; i < 4; ++i) CHECK(d.prob(i) == 0.25);
  }
  SUBCASE("two components, hand-evaluated weight") {
    // n=2, L=(1,1), mu=1: each weight is 4 + 2 + sqrt(16 + 4).
    const double w = 6.0 + std::sqrt(20.0);
    const auto d = PrimalDistribution::improved_saga({1.0, 1.0}, 1.0);
    CHECK(d.prob(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(vrgrad::improved_saga_mean_weight({1.0, 1.0}, 1.0) ==
          doctest::Approx(w).epsilon(1e-15));
  }
  SUBCASE("vanishing n*mu approaches smoothness-proportional sampling") {
    const std::vector<double> L = {0.5, 1.5, 2.0};
    const auto balanced = PrimalDistribution::improved_saga(L, 1e-13);
    const auto lipschitz = PrimalDistribution::lipschitz(L);
    for (int i = 0; i < 3; ++i)
      CHECK(balanced.prob(i) == doctest::Approx(lipschitz.prob(i)).epsilon(1e-10));
  }
  SUBCASE("extreme scale separation stays finite and normalized") {
    const auto d = PrimalDistribution::improved_saga({1e-8, 1e4}, 1e-6);
    double sum = 0.0;
    for (double p : d.probs()) {
      CHECK(std::isfinite(p));
      CHECK(p > 0.0);
      sum += p;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("draws") {
  SUBCASE("single entry always wins") {
    Rng rng(1);
    const auto d = PrimalDistribution::uniform(1);
    for (int t = 0; t < 100; ++t) CHECK(d.draw(rng) == 0);
  }
  SUBCASE("uniform two-way frequency, three sigma") {
    Rng rng(2);
    const auto d = PrimalDistribution::uniform(2);
    const int m = 1'000'000;
    int count = 0;
    for (int t = 0; t < m; ++t) count += d.draw(rng) == 0 ? 1 : 0;
    const double freq = static_cast<double>(count) / m;
    CHECK(std::abs(freq - 0.5) <= 3.0 * std::sqrt(0.25 / m));
  }
  SUBCASE("skewed frequencies, three sigma") {
    Rng rng(3);
    const auto d = PrimalDistribution::custom({0.25, 0.75});
    const int m = 1'000'000;
    int count = 0;
    for (int t = 0; t < m; ++t) count += d.draw(rng) == 0 ? 1 : 0;
    const double freq = static_cast<double>(count) / m;
    CHECK(std::abs(freq - 0.25) <= 3.0 * std::sqrt(0.25 * 0.75 / m));
  }
}

TEST_CASE("alias table passes a chi-square goodness of fit at 1e-3") {
  Rng rng(29);
  const std::vector<double> p = {0.05, 0.1, 0.15, 0.2, 0.5};
  const auto d = PrimalDistribution::custom(std::vector<double>(p));
  const int m = 1'000'000;
  std::vector<long> counts(p.size(), 0);
  for (int t = 0; t < m; ++t) ++counts[d.draw(rng)];
  double stat = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double expected = p[i] * m;
    stat += (counts[i] - expected) * (counts[i] - expected) / expected;
  }
  // 4 degrees of freedom, upper z for significance 1e-3 is 3.0902.
  CHECK(stat <= testsupport::chi_square_quantile(4, 3.0902));
}
