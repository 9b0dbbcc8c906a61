#pragma once

#include <stdexcept>
#include <string>

namespace vrgrad {

// A data row with zero norm has no valid smoothness constant.
struct ZeroRowError : std::runtime_error {
  explicit ZeroRowError(int row_index)
      : std::runtime_error("row " + std::to_string(row_index) +
                           " has zero norm, component smoothness constant would be 0"),
        row(row_index) {}
  int row;
};

struct NotStronglyConvexError : std::runtime_error {
  explicit NotStronglyConvexError(double mu_value)
      : std::runtime_error("smallest Gram eigenvalue gives mu = " + std::to_string(mu_value) +
                           ", objective is not usably strongly convex"),
        mu(mu_value) {}
  double mu;
};

struct IndexOutOfRangeError : std::out_of_range {
  IndexOutOfRangeError(int index, int count)
      : std::out_of_range("component index " + std::to_string(index) + " outside [0, " +
                          std::to_string(count) + ")") {}
};

struct NonPositiveConstantError : std::invalid_argument {
  explicit NonPositiveConstantError(const std::string& what_happened)
      : std::invalid_argument(what_happened) {}
};

// Anchor dual storage only supports all-or-nothing refreshes.
struct IncoherentUpdateError : std::logic_error {
  IncoherentUpdateError()
      : std::logic_error("anchor dual storage received a proper nonempty update set") {}
};

struct NonFiniteError : std::runtime_error {
  explicit NonFiniteError(long at_iteration)
      : std::runtime_error("iterate became non-finite at iteration " +
                           std::to_string(at_iteration) + " (step size too large?)"),
        iteration(at_iteration) {}
  long iteration;
};

struct RhoTooLargeError : std::domain_error {
  RhoTooLargeError(double rho, double bound)
      : std::domain_error("rate " + std::to_string(rho) + " is not below the update-frequency bound " +
                          std::to_string(bound)) {}
};

struct NoConvergentRateError : std::runtime_error {
  NoConvergentRateError(double lambda, double lambda_max_value)
      : std::runtime_error("no certified rate exists for step size " + std::to_string(lambda) +
                           "; the maximal step size is " + std::to_string(lambda_max_value)),
        lambda_max(lambda_max_value) {}
  double lambda_max;
};

struct TooManyOutcomesError : std::runtime_error {
  explicit TooManyOutcomesError(double count)
      : std::runtime_error("joint sampling enumeration would need " + std::to_string(count) +
                           " outcomes") {}
};

struct MalformedLineError : std::runtime_error {
  MalformedLineError(long line, const std::string& why)
      : std::runtime_error("line " + std::to_string(line) + ": " + why), line_no(line) {}
  long line_no;
};

struct UnattainableError : std::runtime_error {
  explicit UnattainableError(const std::string& what_happened)
      : std::runtime_error(what_happened) {}
};

struct MissingDatasetError : std::runtime_error {
  explicit MissingDatasetError(const std::string& path)
      : std::runtime_error("dataset file not available: " + path) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what_happened) : std::runtime_error(what_happened) {}
};

}  // namespace vrgrad
