#pragma once

#include <memory>
#include <string>
#include <vector>

#include "config.hpp"
#include "vrgrad/data.hpp"
#include "vrgrad/rates.hpp"
#include "vrgrad/solver.hpp"

namespace vrgrad::cli {

// A fully resolved run: problem, sampling, dual strategy, step size.
struct Experiment {
  std::shared_ptr<LeastSquaresProblem> problem;
  PrimalDistribution sampling;
  DualStrategy strategy;
  DualLayout layout = DualLayout::full_table;
  std::string method;         // saga | lsvrg | ilsvrg | qsaga
  std::string sampling_name;  // uniform | lipschitz | improved
  double eta = 0.0;           // uniform update frequency (saga: min p_i)
  double lambda = 0.0;
  std::string lambda_spec;

  RateInputs rate_inputs() const {
    return RateInputs::from(*problem, sampling, strategy, lambda);
  }
};

// Assembles problem + method + step size from a flat config. Keys:
//   problem = synthetic1d | libsvm        n, data_seed | data, xi, ...
//   method  = saga | lsvrg | ilsvrg | qsaga
//   sampling = uniform | lipschitz | improved
//   eta = <number> | star                 q = <int>, with_replacement = bool
//   layout = full_table | anchor
//   lambda = <number> | star | max | <c>*max | <c>*star | cor_star
Experiment build_experiment(const KeyValueConfig& cfg);

// Corollary-to-theorem tightness grid: relative gap of the closed-form rates
// against the fixed-point engine at the same sampling and step size.
struct TightnessRow {
  int n = 0;
  double kappa = 0.0;
  std::string method;    // saga | lsvrg
  std::string sampling;  // uniform | lipschitz | improved
  double rho_corollary = 0.0;
  double rho_theorem = 0.0;
  double rel_gap = 0.0;
};
std::vector<TightnessRow> tightness_rows(std::uint64_t seed);

// Total-cost curves over a log grid of update frequencies, with the
// closed-form optimum marked, for two synthetic conditioning regimes.
struct ComplexityCurve {
  std::string method;  // lsvrg_full_table | lsvrg_anchor | qsaga_ilsvrg
  double cost_base = 1.0;
  bool coherent = false;
  std::vector<double> eta;
  std::vector<double> complexity;       // theorem-implied, (base + n eta)/rho
  double eta_star = 0.0;                // closed-form recommendation
  double complexity_at_eta_star = 0.0;  // theorem-implied cost at eta_star
};
struct ComplexitySetting {
  int n = 0;
  double kappa = 0.0;
  std::vector<double> L;
  double mu = 0.0;
  std::vector<ComplexityCurve> curves;
  double saga_complexity = 0.0;  // balanced-sampling saga reference point
};
std::vector<ComplexitySetting> complexity_settings(std::uint64_t seed, int grid_points = 50);

// Rate-reproduction runs on the scalar synthetic problem (n = 100).
enum class TightRunPanel { saga, lsvrg, qsaga, ilsvrg };
struct TightRunResult {
  TraceSummary summary;
  RateCertificate certificate;
  std::string method;
  double lambda = 0.0;
  double initial_band_mean = 0.0;
};
TightRunResult tight_run(TightRunPanel panel, int seeds, long iterations, int threads,
                         std::uint64_t data_seed, std::uint64_t run_seed,
                         long record_every = 1);

// Least-squares slope of log(values) vs k over rows with values in
// [rel_lo, rel_hi] relative to the first row; empty when fewer than two rows
// qualify.
std::optional<double> fit_log_slope(const std::vector<long>& k, const std::vector<double>& values,
                                    double rel_lo, double rel_hi);

}  // namespace vrgrad::cli
