#include <cmath>
#include <sstream>

#include "doctest.h"
#include "support.hpp"
#include "vrgrad/data.hpp"
#include "vrgrad/solver.hpp"

using vrgrad::Dataset;

TEST_CASE("parsing the sparse text format") {
  SUBCASE("single labeled row") {
    const auto d = vrgrad::parse_libsvm(std::string("1 1:0.5 3:2\n"));
    REQUIRE(d.rows.size() == 1);
    CHECK(d.labels[0] == 1.0);
    CHECK(d.rows[0].indices == std::vector<int>{1, 3});
    CHECK(d.rows[0].values == std::vector<double>{0.5, 2.0});
    CHECK(d.n_features == 3);
  }
  SUBCASE("label-only row has an empty feature set") {
    const auto d = vrgrad::parse_libsvm(std::string("-1\n"));
    REQUIRE(d.rows.size() == 1);
    CHECK(d.labels[0] == -1.0);
    CHECK(d.rows[0].indices.empty());
  }
  SUBCASE("comments and trailing whitespace are tolerated") {
    const auto d = vrgrad::parse_libsvm(std::string("2 1:1 # trailing comment\n\n 3 2:4 \t\n"));
    REQUIRE(d.rows.size() == 2);
    CHECK(d.labels[1] == 3.0);
    CHECK(d.rows[1].indices == std::vector<int>{2});
  }
  SUBCASE("malformed rows carry their line numbers") {
    CHECK_THROWS_AS(vrgrad::parse_libsvm(std::string("1 x:2\n")), vrgrad::MalformedLineError);
    CHECK_THROWS_AS(vrgrad::parse_libsvm(std::string("abc 1:2\n")), vrgrad::MalformedLineError);
    CHECK_THROWS_AS(vrgrad::parse_libsvm(std::string("1 2:1 2:3\n")), vrgrad::MalformedLineError);
    CHECK_THROWS_AS(vrgrad::parse_libsvm(std::string("1 3:1 2:3\n")), vrgrad::MalformedLineError);
    try {
      vrgrad::parse_libsvm(std::string("1 1:1\n1 0:2\n"));
      FAIL("expected a parse error");
    } catch (const vrgrad::MalformedLineError& e) {
      CHECK(e.line_no == 2);
    }
  }
}

TEST_CASE("serialization round trip") {
  Dataset d;
  d.rows.resize(3);
  d.labels = {1.0, -1.0, 2.5};
  d.rows[0].indices = {1, 3};
  d.rows[0].values = {0.5, 2.0};
  d.rows[2].indices = {2};
  d.rows[2].values = {-0.125};
  d.n_features = 3;

  const std::string text = vrgrad::serialize_libsvm(d);
  const Dataset reparsed = vrgrad::parse_libsvm(text);
  CHECK(vrgrad::serialize_libsvm(reparsed) == text);  // closure, byte for byte
  REQUIRE(reparsed.rows.size() == 3);
  CHECK(reparsed.labels == d.labels);
  CHECK(reparsed.rows[0].indices == d.rows[0].indices);
  CHECK(reparsed.rows[0].values == d.rows[0].values);
}

TEST_CASE("csv debug export") {
  Dataset d;
  d.rows.resize(1);
  d.labels = {1.0};
  d.rows[0].indices = {1, 3};
  d.rows[0].values = {0.5, 2.0};
  d.n_features = 3;
  std::ostringstream out;
  vrgrad::export_csv(d, out);
  CHECK(out.str() == "label,idx:val;idx:val\n1,1:0.5;3:2\n");
}

TEST_CASE("dropping columns that never carry a nonzero value") {
  SUBCASE("identity when every column is populated") {
    const auto d = vrgrad::parse_libsvm(std::string("1 1:1 2:2\n-1 1:3\n"));
    const auto r = vrgrad::drop_zero_columns(d);
    CHECK(r.dropped_columns.empty());
    CHECK(r.dataset.n_features == 2);
    CHECK(vrgrad::serialize_libsvm(r.dataset) == vrgrad::serialize_libsvm(d));
  }
  SUBCASE("absent middle column is removed and the rest re-indexed") {
    const auto d = vrgrad::parse_libsvm(std::string("1 1:1 3:3\n-1 1:2 3:1\n"));
    const auto r = vrgrad::drop_zero_columns(d);
    CHECK(r.dropped_columns == std::vector<int>{2});
    CHECK(r.dataset.n_features == 2);
    CHECK(r.dataset.rows[0].indices == std::vector<int>{1, 2});
  }
  SUBCASE("explicitly stored zeros do not keep a column alive") {
    const auto d = vrgrad::parse_libsvm(std::string("1 1:1 2:0\n-1 1:2\n"));
    const auto r = vrgrad::drop_zero_columns(d);
    CHECK(r.dropped_columns == std::vector<int>{2});
  }
  SUBCASE("restores strong convexity on a crafted instance") {
    // Column 2 is all zeros, so the raw Gram matrix is singular.
    const auto d = vrgrad::parse_libsvm(std::string("1 1:1 3:1\n-1 1:1 3:-1\n0.5 1:2 3:1\n"));
    Dataset padded = d;
    padded.n_features = 3;
    CHECK_THROWS_AS(vrgrad::to_least_squares(padded, 0.0), vrgrad::NotStronglyConvexError);
    const auto r = vrgrad::drop_zero_columns(padded);
    const auto p = vrgrad::to_least_squares(r.dataset, 0.0);
    CHECK(p.mu() > 0.0);
    CHECK(p.mu() == doctest::Approx(2.0 * vrgrad::smallest_gram_eigenvalue(p.rows(), p.dim()))
                        .epsilon(1e-12));
    for (const auto& row : r.dataset.rows)
      for (int idx : row.indices) CHECK(idx <= r.dataset.n_features);
  }
}

TEST_CASE("scalar synthetic generator") {
  SUBCASE("deterministic across calls") {
    const auto a = vrgrad::generate_1d_least_squares(50, 123);
    const auto b = vrgrad::generate_1d_least_squares(50, 123);
    for (int i = 0; i < 50; ++i) {
      CHECK(a.rows()[i].values[0] == b.rows()[i].values[0]);
      CHECK(a.targets()[i] == b.targets()[i]);
    }
    CHECK((*a.solution() - *b.solution()).norm() == 0.0);
  }
  SUBCASE("attached solution zeroes the gradient") {
    const auto p = vrgrad::generate_1d_least_squares(100, 5);
    CHECK(p.full_gradient(*p.solution()).norm() <= 1e-12);
  }
  SUBCASE("sample moments match a unit normal at three sigma") {
    const int n = 100000;
    const auto p = vrgrad::generate_1d_least_squares(n, 99);
    double mean = 0.0, second = 0.0;
    for (const auto& row : p.rows()) {
      mean += row.values[0];
      second += row.values[0] * row.values[0];
    }
    mean /= n;
    second /= n;
    CHECK(std::abs(mean) <= 3.0 / std::sqrt(static_cast<double>(n)));
    // Var of a^2 for a unit normal is 2.
    CHECK(std::abs(second - 1.0) <= 3.0 * std::sqrt(2.0 / n));
  }
}

TEST_CASE("l1 weight tuning for target sparsity") {
  vrgrad::Rng rng(301);
  Dataset d;
  const int n = 50, dim = 10;
  d.n_features = dim;
  d.rows.resize(n);
  d.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 1; j <= dim; ++j) {
      d.rows[i].indices.push_back(j);
      d.rows[i].values.push_back(rng.next_normal());
    }
    d.labels[i] = rng.next_normal();
  }

  SUBCASE("large weights kill every coordinate") {
    const auto p = vrgrad::to_least_squares(d, 0.0);
    const auto grad0 = p.full_gradient(vrgrad::Vector::Zero(dim));
    const auto strong = p.with_l1(2.0 * grad0.cwiseAbs().maxCoeff());
    CHECK(vrgrad::solution_sparsity(vrgrad::proximal_gradient_solve(strong, 1e-10)) == 1.0);
  }
  SUBCASE("no weight means a dense solution here") {
    const auto p = vrgrad::to_least_squares(d, 0.0);
    CHECK(vrgrad::solution_sparsity(vrgrad::proximal_gradient_solve(p, 1e-10)) == 0.0);
  }
  SUBCASE("bisection lands inside the requested band") {
    const double hi = 0.20 + 1.0 / dim;  // one-coordinate granularity
    const double xi = vrgrad::tune_l1_for_sparsity(d, 0.15, hi);
    const auto tuned = vrgrad::to_least_squares(d, xi);
    const double sparsity =
        vrgrad::solution_sparsity(vrgrad::proximal_gradient_solve(tuned, 1e-10));
    CHECK(sparsity >= 0.15);
    CHECK(sparsity <= hi);
  }
}
