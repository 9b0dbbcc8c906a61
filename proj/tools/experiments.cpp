#include "experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>

namespace vrgrad::cli {

namespace {

std::shared_ptr<LeastSquaresProblem> build_problem(const KeyValueConfig& cfg) {
  const std::string source = cfg.get_string("problem", "synthetic1d");
  if (source == "synthetic1d") {
    const long n = cfg.get_long("n", 100);
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_long("data_seed", 1));
    return std::make_shared<LeastSquaresProblem>(
        generate_1d_least_squares(static_cast<int>(n), seed));
  }
  if (source == "libsvm") {
    const std::string path = cfg.get_string("data", "");
    if (path.empty() || !std::filesystem::exists(path)) throw MissingDatasetError(path);
    std::ifstream in(path);
    Dataset dataset = parse_libsvm(in);
    if (cfg.get_bool("drop_zero_columns", true)) {
      dataset = drop_zero_columns(dataset).dataset;
    }
    double xi;
    if (cfg.get_string("xi", "0") == "auto") {
      const double lo = cfg.get_double("sparsity_lo", 0.15);
      const double hi =
          cfg.has("sparsity_hi") ? cfg.get_double("sparsity_hi")
                                 : 0.20 + 1.0 / std::max(1, dataset.n_features);
      xi = tune_l1_for_sparsity(dataset, lo, hi);
    } else {
      xi = cfg.get_double("xi", 0.0);
    }
    auto problem = std::make_shared<LeastSquaresProblem>(to_least_squares(dataset, xi));
    problem->set_solution(proximal_gradient_solve(*problem, 1e-12));
    return problem;
  }
  throw ConfigError("unknown problem source: " + source);
}

double resolve_lambda(const std::string& spec, const Experiment& partial) {
  RateInputs in = RateInputs::from(*partial.problem, partial.sampling, partial.strategy);
  auto parse_number = [](const std::string& text, double& out) {
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size();
  };

  if (spec == "star") return solve_optimal_rate(in).lambda;
  if (spec == "max") return lambda_max(in);
  if (spec == "cor_star") {
    const auto& L = partial.problem->lipschitz();
    const double mu = partial.problem->mu();
    if (partial.method == "saga") {
      if (partial.sampling_name == "improved") return saga_improved(L, mu).lambda;
      return saga_bounds(L, mu,
                         partial.sampling_name == "uniform" ? SamplingRule::uniform
                                                            : SamplingRule::lipschitz)
          .lambda_star;
    }
    const SamplingRule rule = partial.sampling_name == "uniform" ? SamplingRule::uniform
                                                                 : SamplingRule::lipschitz;
    if (partial.method == "lsvrg") return lsvrg_bounds(L, mu, partial.eta, rule).lambda_star;
    return qsaga_bounds(L, mu, partial.eta, rule).lambda_star;
  }
  if (const auto star = spec.find("*star"); star != std::string::npos && star + 5 == spec.size()) {
    double factor;
    if (!parse_number(spec.substr(0, star), factor))
      throw ConfigError("bad lambda spec: " + spec);
    return factor * solve_optimal_rate(in).lambda;
  }
  if (const auto star = spec.find("*max"); star != std::string::npos && star + 4 == spec.size()) {
    double factor;
    if (!parse_number(spec.substr(0, star), factor))
      throw ConfigError("bad lambda spec: " + spec);
    return factor * lambda_max(in);
  }
  double value;
  if (!parse_number(spec, value) || !(value > 0.0))
    throw ConfigError("bad lambda spec: " + spec);
  return value;
}

}  // namespace

Experiment build_experiment(const KeyValueConfig& cfg) {
  Experiment e;
  e.problem = build_problem(cfg);
  const int n = e.problem->num_components();

  e.method = cfg.get_string("method", "saga");
  e.sampling_name = cfg.get_string("sampling", "uniform");
  if (e.sampling_name == "uniform") {
    e.sampling = PrimalDistribution::uniform(n);
  } else if (e.sampling_name == "lipschitz") {
    e.sampling = PrimalDistribution::lipschitz(e.problem->lipschitz());
  } else if (e.sampling_name == "improved") {
    e.sampling = PrimalDistribution::improved_saga(e.problem->lipschitz(), e.problem->mu());
  } else {
    throw ConfigError("unknown sampling: " + e.sampling_name);
  }

  const std::string layout = cfg.get_string("layout", "full_table");
  if (layout == "full_table") {
    e.layout = DualLayout::full_table;
  } else if (layout == "anchor") {
    e.layout = DualLayout::anchor;
  } else {
    throw ConfigError("unknown dual layout: " + layout);
  }

  const auto& L = e.problem->lipschitz();
  const double mu = e.problem->mu();
  const std::string eta_spec = cfg.get_string("eta", "star");
  auto resolve_eta = [&](DualLayout for_layout, bool coherent) {
    if (eta_spec != "star") return cfg.get_double("eta");
    if (coherent) return lsvrg_eta_star(L, mu, for_layout).eta_star;
    return qsaga_eta_star(L, mu).eta_star;
  };

  if (e.method == "saga") {
    e.strategy = DualStrategy::saga();
    e.eta = *std::min_element(e.sampling.probs().begin(), e.sampling.probs().end());
  } else if (e.method == "lsvrg") {
    e.eta = resolve_eta(e.layout, true);
    e.strategy = DualStrategy::lsvrg(e.eta);
  } else if (e.method == "ilsvrg") {
    e.eta = resolve_eta(e.layout, false);
    e.strategy = DualStrategy::ilsvrg(e.eta);
  } else if (e.method == "qsaga") {
    const bool with_replacement = cfg.get_bool("with_replacement", false);
    int q;
    if (cfg.has("q")) {
      q = static_cast<int>(cfg.get_long("q"));
    } else {
      q = qsaga_choose_q(resolve_eta(e.layout, false), n);
    }
    e.strategy = DualStrategy::qsaga(q, with_replacement);
    e.eta = e.strategy.expected_update_frequency(n, &e.sampling).front();
  } else {
    throw ConfigError("unknown method: " + e.method);
  }

  if (e.layout == DualLayout::anchor && !e.strategy.coherent())
    throw ConfigError("anchor layout requires coherent dual updates (lsvrg)");

  e.lambda_spec = cfg.get_string("lambda", "star");
  e.lambda = resolve_lambda(e.lambda_spec, e);
  return e;
}

namespace {

std::vector<double> uniform_lipschitz_constants(int n, Rng& rng) {
  std::vector<double> L(n);
  for (double& v : L) {
    do {
      v = 2.0 * rng.next_double();
    } while (v <= 1e-6);  // keep the smoothness constants bounded away from 0
  }
  return L;
}

TightnessRow make_row(int n, double kappa, const std::string& method,
                      const std::string& sampling, double rho_cor, const RateInputs& in) {
  TightnessRow row;
  row.n = n;
  row.kappa = kappa;
  row.method = method;
  row.sampling = sampling;
  row.rho_corollary = rho_cor;
  row.rho_theorem = solve_rate_fixed_lambda(in).rho;
  row.rel_gap = (row.rho_theorem - row.rho_corollary) / row.rho_theorem;
  return row;
}

RateInputs raw_inputs(const std::vector<double>& L, double mu, std::vector<double> p,
                      std::vector<double> eta, bool coherent, double lambda) {
  RateInputs in;
  in.L = L;
  in.mu = mu;
  in.p = std::move(p);
  in.eta = std::move(eta);
  in.coherent = coherent;
  in.lambda = lambda;
  return in;
}

}  // namespace

std::vector<TightnessRow> tightness_rows(std::uint64_t seed) {
  const double kappas[] = {2.0, 5.0, 10.0, 30.0, 100.0};
  const int sizes[] = {50, 1000};
  std::vector<TightnessRow> rows;
  int cell = 0;
  for (int n : sizes) {
    for (double kappa : kappas) {
      Rng rng(seed + 1000 * cell++);
      const std::vector<double> L = uniform_lipschitz_constants(n, rng);
      double lbar = 0.0;
      for (double v : L) lbar += v;
      lbar /= n;
      const double mu = lbar / kappa;

      const auto pu = PrimalDistribution::uniform(n).probs();
      const auto pl = PrimalDistribution::lipschitz(L).probs();

      const auto saga_u = saga_bounds(L, mu, SamplingRule::uniform);
      rows.push_back(make_row(n, kappa, "saga", "uniform", saga_u.rho_star,
                              raw_inputs(L, mu, pu, pu, false, saga_u.lambda_star)));

      const auto saga_l = saga_bounds(L, mu, SamplingRule::lipschitz);
      rows.push_back(make_row(n, kappa, "saga", "lipschitz", saga_l.rho_star,
                              raw_inputs(L, mu, pl, pl, false, saga_l.lambda_star)));

      const auto plan = saga_improved(L, mu);
      rows.push_back(make_row(n, kappa, "saga", "improved", plan.rho,
                              raw_inputs(L, mu, plan.distribution.probs(),
                                         plan.distribution.probs(), false, plan.lambda)));

      const double eta = 1.0 / n;
      const std::vector<double> eta_vec(n, eta);
      const auto lsvrg_u = lsvrg_bounds(L, mu, eta, SamplingRule::uniform);
      rows.push_back(make_row(n, kappa, "lsvrg", "uniform", lsvrg_u.rho_star,
                              raw_inputs(L, mu, pu, eta_vec, true, lsvrg_u.lambda_star)));

      const auto lsvrg_l = lsvrg_bounds(L, mu, eta, SamplingRule::lipschitz);
      rows.push_back(make_row(n, kappa, "lsvrg", "lipschitz", lsvrg_l.rho_star,
                              raw_inputs(L, mu, pl, eta_vec, true, lsvrg_l.lambda_star)));
    }
  }
  return rows;
}

std::vector<ComplexitySetting> complexity_settings(std::uint64_t seed, int grid_points) {
  std::vector<ComplexitySetting> settings;
  const std::pair<int, double> regimes[] = {{10000, 2.0}, {50, 100.0}};
  int cell = 0;
  for (const auto& [n, kappa] : regimes) {
    Rng rng(seed + 7700 * cell++);
    ComplexitySetting s;
    s.n = n;
    s.kappa = kappa;
    s.L = uniform_lipschitz_constants(n, rng);
    double lbar = 0.0;
    for (double v : s.L) lbar += v;
    lbar /= n;
    s.mu = lbar / kappa;
    s.saga_complexity = saga_improved(s.L, s.mu).complexity;

    struct Spec {
      const char* name;
      double base;
      bool coherent;
    };
    const Spec specs[] = {{"lsvrg_full_table", 1.0, true},
                          {"lsvrg_anchor", 2.0, true},
                          {"qsaga_ilsvrg", 1.0, false}};
    for (const Spec& spec : specs) {
      ComplexityCurve curve;
      curve.method = spec.name;
      curve.cost_base = spec.base;
      curve.coherent = spec.coherent;
      for (int g = 0; g < grid_points; ++g) {
        const double t = -4.0 + 4.0 * static_cast<double>(g) / (grid_points - 1);
        const double eta = std::pow(10.0, t);
        curve.eta.push_back(eta);
        curve.complexity.push_back(theorem_complexity(s.L, s.mu, eta, spec.coherent, spec.base));
      }
      if (spec.coherent) {
        curve.eta_star = lsvrg_eta_star(s.L, s.mu,
                                        spec.base > 1.5 ? DualLayout::anchor
                                                        : DualLayout::full_table)
                             .eta_star;
      } else {
        curve.eta_star = qsaga_eta_star(s.L, s.mu).eta_star;
      }
      curve.complexity_at_eta_star =
          theorem_complexity(s.L, s.mu, curve.eta_star, spec.coherent, spec.base);
      s.curves.push_back(std::move(curve));
    }
    settings.push_back(std::move(s));
  }
  return settings;
}

TightRunResult tight_run(TightRunPanel panel, int seeds, long iterations, int threads,
                         std::uint64_t data_seed, std::uint64_t run_seed, long record_every) {
  const int n = 100;
  auto problem = std::make_shared<LeastSquaresProblem>(generate_1d_least_squares(n, data_seed));
  const auto& L = problem->lipschitz();
  const double mu = problem->mu();

  TightRunResult result;
  RunConfig cfg;
  cfg.problem = problem.get();
  cfg.iterations = iterations;
  cfg.seed = run_seed;
  cfg.record_every = record_every;

  switch (panel) {
    case TightRunPanel::saga: {
      const auto plan = saga_improved(L, mu);
      cfg.sampling = plan.distribution;
      cfg.strategy = DualStrategy::saga();
      cfg.lambda = plan.lambda;
      result.method = "saga";
      break;
    }
    case TightRunPanel::lsvrg:
      cfg.sampling = PrimalDistribution::lipschitz(L);
      cfg.strategy = DualStrategy::lsvrg(1.0 / n);
      cfg.lambda = 1.0 / mu;  // optimal step in the exact-estimator case
      result.method = "lsvrg";
      break;
    case TightRunPanel::qsaga: {
      cfg.sampling = PrimalDistribution::lipschitz(L);
      cfg.strategy = DualStrategy::qsaga(1, false);
      RateInputs in = RateInputs::from(*problem, cfg.sampling, cfg.strategy);
      cfg.lambda = solve_optimal_rate(in).lambda;
      result.method = "qsaga";
      break;
    }
    case TightRunPanel::ilsvrg: {
      cfg.sampling = PrimalDistribution::lipschitz(L);
      cfg.strategy = DualStrategy::ilsvrg(1.0 / n);
      RateInputs in = RateInputs::from(*problem, cfg.sampling, cfg.strategy);
      cfg.lambda = solve_optimal_rate(in).lambda;
      result.method = "ilsvrg";
      break;
    }
  }
  result.lambda = cfg.lambda;

  RateInputs in = RateInputs::from(*problem, cfg.sampling, cfg.strategy, cfg.lambda);
  result.certificate = solve_rate_fixed_lambda(in);

  LyapunovSpec lyap;
  lyap.x_star = *problem->solution();
  lyap.gamma_hat = result.certificate.gamma_hat;
  cfg.lyapunov = lyap;

  const auto traces = run_seeds(cfg, seeds, threads);
  result.summary = summarize(traces);
  result.initial_band_mean = result.summary.lyapunov_mean.front();
  return result;
}

std::optional<double> fit_log_slope(const std::vector<long>& k, const std::vector<double>& values,
                                    double rel_lo, double rel_hi) {
  if (values.empty()) return std::nullopt;
  const double scale = values.front();
  double sk = 0, sv = 0, skk = 0, skv = 0;
  long count = 0;
  for (std::size_t r = 0; r < values.size(); ++r) {
    if (!(values[r] > 0.0)) continue;
    const double rel = values[r] / scale;
    if (rel < rel_lo || rel > rel_hi) continue;
    const double x = static_cast<double>(k[r]);
    const double y = std::log(values[r]);
    sk += x;
    sv += y;
    skk += x * x;
    skv += x * y;
    ++count;
  }
  if (count < 2) return std::nullopt;
  const double denom = count * skk - sk * sk;
  if (denom == 0.0) return std::nullopt;
  return (count * skv - sk * sv) / denom;
}

}  // namespace vrgrad::cli
