#include "commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "json.hpp"

namespace vrgrad::cli {

using json = nlohmann::ordered_json;

namespace {

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write: " + path);
  out << content;
}

json bounds_json(const StepSizeBounds& b) {
  return json{{"lambda_max", b.lambda_max}, {"lambda_star", b.lambda_star},
              {"rho_star", b.rho_star}};
}

json certificate_json(const RateCertificate& cert, int n) {
  json j;
  j["rho"] = cert.rho;
  j["lambda"] = cert.lambda;
  j["nu"] = cert.nu;
  if (cert.delta_star) {
    j["delta_star"] = *cert.delta_star;
  } else {
    j["delta_star"] = nullptr;
  }
  j["rho_primal"] = cert.rho_primal;
  j["rho_dual"] = cert.rho_dual;
  j["limiting_side"] = to_string(cert.limiting_side);
  j["degenerate"] = cert.degenerate;
  double gmin = std::numeric_limits<double>::infinity(), gmax = 0.0;
  for (double g : cert.gamma_hat) {
    gmin = std::min(gmin, g);
    gmax = std::max(gmax, g);
  }
  j["gamma_hat_min"] = gmin;
  j["gamma_hat_max"] = gmax;
  if (n <= 200) j["gamma_hat"] = cert.gamma_hat;
  return j;
}

double lmax_of(const std::vector<double>& L) {
  double m = 0.0;
  for (double v : L) m = std::max(m, v);
  return m;
}

// Reference step sizes from earlier analyses, printed for comparison only.
json literature_json(const std::string& method, const std::vector<double>& L, double mu,
                     double eta) {
  const double lmax = lmax_of(L);
  double lbar = 0.0, lmin = L.front();
  for (double v : L) {
    lbar += v;
    lmin = std::min(lmin, v);
  }
  lbar /= static_cast<double>(L.size());
  const double n = static_cast<double>(L.size());

  json rows = json::array();
  if (method == "saga") {
    rows.push_back({{"source", "hofmann_uniform"},
                    {"lambda_max", 1.0 / (4.0 * lmax)},
                    {"lambda_star",
                     2.0 / (4.0 * lmax + n * mu + std::hypot(4.0 * lmax, n * mu))}});
    rows.push_back({{"source", "gower_lipschitz"},
                    {"lambda_star", 1.0 / (4.0 * lbar + (n * lbar / lmin) * mu)}});
    rows.push_back(
        {{"source", "gower_mixed"}, {"lambda_star", 1.0 / (4.0 * lbar + n * mu)}});
  } else if (method == "lsvrg") {
    rows.push_back({{"source", "hofmann_uniform"},
                    {"lambda_max", 1.0 / (4.0 * lmax)},
                    {"lambda_star",
                     2.0 / (4.0 * lmax + mu / eta + std::hypot(4.0 * lmax, mu / eta))}});
  }
  return rows;
}

json corollary_json(const Experiment& e) {
  const auto& L = e.problem->lipschitz();
  const double mu = e.problem->mu();
  json j;
  if (e.method == "saga") {
    if (e.sampling_name == "improved") {
      const auto plan = saga_improved(L, mu);
      j["name"] = "saga_improved_sampling";
      j["lambda_star"] = plan.lambda;
      j["rho_star"] = plan.rho;
      j["mean_weight"] = plan.mean_weight;
      j["complexity"] = plan.complexity;
    } else {
      const auto rule =
          e.sampling_name == "uniform" ? SamplingRule::uniform : SamplingRule::lipschitz;
      j["name"] = "saga_conservative";
      j.update(bounds_json(saga_bounds(L, mu, rule)));
    }
  } else {
    const auto rule =
        e.sampling_name == "uniform" ? SamplingRule::uniform : SamplingRule::lipschitz;
    if (e.method == "lsvrg") {
      j["name"] = "lsvrg_conservative";
      j.update(bounds_json(lsvrg_bounds(L, mu, e.eta, rule)));
    } else {
      j["name"] = "qsaga_ilsvrg_conservative";
      j.update(bounds_json(qsaga_bounds(L, mu, e.eta, rule)));
    }
  }
  return j;
}

json problem_json(const Experiment& e) {
  return json{{"n", e.problem->num_components()},
              {"dim", e.problem->dim()},
              {"mu", e.problem->mu()},
              {"lipschitz_mean", e.problem->lipschitz_mean()},
              {"lipschitz_max", e.problem->lipschitz_max()},
              {"kappa", e.problem->lipschitz_mean() / e.problem->mu()},
              {"xi", e.problem->xi()}};
}

std::string band_name(const TraceSummary& s) {
  if (s.band_is_lyapunov) return "lyapunov";
  return s.dist2_mean.empty() ? "objective" : "dist2";
}

std::string summary_csv(const TraceSummary& s, const std::vector<double>* predicted) {
  std::string csv = "k,grad_evals_mean";
  if (!s.dist2_mean.empty()) csv += ",dist2_mean";
  if (!s.lyapunov_mean.empty()) csv += ",lyapunov_mean";
  const std::string band = band_name(s);
  csv += "," + band + "_p05," + band + "_p95,objective_mean";
  if (predicted != nullptr) csv += ",predicted";
  csv += '\n';
  for (std::size_t r = 0; r < s.k.size(); ++r) {
    csv += std::to_string(s.k[r]);
    csv += ',';
    csv += format_double(s.grad_evals_mean[r]);
    if (!s.dist2_mean.empty()) {
      csv += ',';
      csv += format_double(s.dist2_mean[r]);
    }
    if (!s.lyapunov_mean.empty()) {
      csv += ',';
      csv += format_double(s.lyapunov_mean[r]);
    }
    csv += ',';
    csv += format_double(s.band_p05[r]);
    csv += ',';
    csv += format_double(s.band_p95[r]);
    csv += ',';
    csv += format_double(s.objective_mean[r]);
    if (predicted != nullptr) {
      csv += ',';
      csv += format_double((*predicted)[r]);
    }
    csv += '\n';
  }
  return csv;
}

std::string trace_csv(const Trace& trace) {
  std::string csv = "k,grad_evals,dist2,lyapunov,objective\n";
  for (const TraceRow& row : trace.rows) {
    csv += std::to_string(row.k);
    csv += ',';
    csv += std::to_string(row.grad_evals);
    csv += ',';
    if (row.dist2) csv += format_double(*row.dist2);
    csv += ',';
    if (row.lyapunov) csv += format_double(*row.lyapunov);
    csv += ',';
    csv += format_double(row.objective);
    csv += '\n';
  }
  return csv;
}

}  // namespace

int thread_count(const KeyValueConfig& cfg) {
  if (cfg.has("threads")) return static_cast<int>(cfg.get_long("threads"));
  if (const char* env = std::getenv("VRGRAD_THREADS"); env != nullptr && *env != '\0')
    return std::max(1, std::atoi(env));
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string cmd_rate(const KeyValueConfig& cfg) {
  const Experiment e = build_experiment(cfg);
  const RateCertificate cert = solve_rate_fixed_lambda(e.rate_inputs());

  json out;
  out["problem"] = problem_json(e);
  out["method"] = e.method;
  out["sampling"] = e.sampling_name;
  out["eta"] = e.eta;
  out["lambda_spec"] = e.lambda_spec;
  out["lambda"] = e.lambda;
  out["lambda_max"] = lambda_max(e.rate_inputs());
  out["certificate"] = certificate_json(cert, e.problem->num_components());
  out["corollary"] = corollary_json(e);
  out["literature"] = literature_json(e.method, e.problem->lipschitz(), e.problem->mu(), e.eta);
  return out.dump(2) + "\n";
}

TuneOutput cmd_tune(const KeyValueConfig& cfg) {
  const auto problem = build_experiment(cfg).problem;
  const auto& L = problem->lipschitz();
  const double mu = problem->mu();
  const int n = problem->num_components();

  json out;
  out["problem"] = json{{"n", n},
                        {"dim", problem->dim()},
                        {"mu", mu},
                        {"lipschitz_mean", problem->lipschitz_mean()},
                        {"kappa", problem->lipschitz_mean() / mu}};

  json saga;
  saga["uniform"] = bounds_json(saga_bounds(L, mu, SamplingRule::uniform));
  saga["lipschitz"] = bounds_json(saga_bounds(L, mu, SamplingRule::lipschitz));
  const auto plan = saga_improved(L, mu);
  saga["improved"] = json{{"lambda", plan.lambda},
                          {"rho", plan.rho},
                          {"mean_weight", plan.mean_weight},
                          {"complexity", plan.complexity}};
  out["saga"] = saga;

  json lsvrg;
  for (DualLayout layout : {DualLayout::full_table, DualLayout::anchor}) {
    const auto report = lsvrg_eta_star(L, mu, layout);
    lsvrg[report.method] = json{{"eta_star", report.eta_star},
                                {"complexity", report.total_complexity},
                                {"cost_factor", report.cost_factor}};
    lsvrg[report.method]["bounds_at_eta_star"] =
        bounds_json(lsvrg_bounds(L, mu, report.eta_star, SamplingRule::lipschitz));
  }
  out["lsvrg"] = lsvrg;

  const auto qreport = qsaga_eta_star(L, mu);
  json qsaga;
  qsaga["eta_star"] = qreport.eta_star;
  qsaga["complexity"] = qreport.total_complexity;
  qsaga["cost_factor"] = qreport.cost_factor;
  qsaga["q"] = qsaga_choose_q(qreport.eta_star, n);
  qsaga["bounds_at_eta_star"] =
      bounds_json(qsaga_bounds(L, mu, qreport.eta_star, SamplingRule::lipschitz));
  out["qsaga_ilsvrg"] = qsaga;

  TuneOutput result;
  result.report_json = out.dump(2) + "\n";

  if (cfg.get_bool("curve", false)) {
    const int grid = static_cast<int>(cfg.get_long("eta_grid", 50));
    std::string csv = "eta,lsvrg_full_table,lsvrg_anchor,qsaga_ilsvrg\n";
    for (int g = 0; g < grid; ++g) {
      const double t = -4.0 + 4.0 * static_cast<double>(g) / (grid - 1);
      const double eta = std::pow(10.0, t);
      csv += format_double(eta);
      csv += ',';
      csv += format_double(theorem_complexity(L, mu, eta, true, 1.0));
      csv += ',';
      csv += format_double(theorem_complexity(L, mu, eta, true, 2.0));
      csv += ',';
      csv += format_double(theorem_complexity(L, mu, eta, false, 1.0));
      csv += '\n';
    }
    result.curve_csv = csv;
  }
  return result;
}

SolveOutput cmd_solve(const KeyValueConfig& cfg) {
  const Experiment e = build_experiment(cfg);
  const int seeds = static_cast<int>(cfg.get_long("seeds", 1));
  const long iterations = cfg.get_long("iterations", 1000);

  RunConfig run_cfg;
  run_cfg.problem = e.problem.get();
  run_cfg.sampling = e.sampling;
  run_cfg.strategy = e.strategy;
  run_cfg.layout = e.layout;
  run_cfg.lambda = e.lambda;
  run_cfg.iterations = iterations;
  run_cfg.seed = static_cast<std::uint64_t>(cfg.get_long("seed", 1));
  run_cfg.record_every = cfg.get_long("record_every", 1);

  // Trace the weighted distance whenever a certificate exists.
  bool rate_feasible = true;
  const std::string lyap_mode = cfg.get_string("record_lyapunov", "auto");
  if (lyap_mode != "false") {
    try {
      const RateCertificate cert = solve_rate_fixed_lambda(e.rate_inputs());
      LyapunovSpec spec;
      if (!e.problem->solution())
        e.problem->set_solution(proximal_gradient_solve(*e.problem, 1e-12));
      spec.x_star = *e.problem->solution();
      spec.gamma_hat = cert.gamma_hat;
      run_cfg.lyapunov = std::move(spec);
    } catch (const NoConvergentRateError&) {
      rate_feasible = false;
      if (lyap_mode == "true") throw;
    }
  }

  const auto traces = run_seeds(run_cfg, seeds, thread_count(cfg));

  SolveOutput out;
  if (seeds == 1) {
    out.csv = trace_csv(traces.front());
  } else {
    out.csv = summary_csv(summarize(traces), nullptr);
  }

  KeyValueConfig manifest = cfg;
  manifest.set("command", "solve");
  manifest.set("lambda", e.lambda);
  manifest.set("eta", e.eta);
  manifest.set("seeds", static_cast<long>(seeds));
  manifest.set("iterations", iterations);
  manifest.set("seed", static_cast<long>(run_cfg.seed));
  manifest.set("record_every", run_cfg.record_every);
  manifest.set("record_lyapunov", std::string(rate_feasible ? "auto" : "false"));
  out.manifest = manifest.serialize();
  return out;
}

void cmd_solve_to_files(const KeyValueConfig& cfg, const std::string& out_path) {
  const SolveOutput out = cmd_solve(cfg);
  write_file(out_path, out.csv);
  write_file(out_path + ".manifest", out.manifest);
}

namespace {

std::string tightness_csv(const std::vector<TightnessRow>& rows) {
  std::string csv = "n,kappa,method,sampling,rho_corollary,rho_theorem,rel_gap\n";
  for (const auto& row : rows) {
    csv += std::to_string(row.n);
    csv += ',';
    csv += format_double(row.kappa);
    csv += ',';
    csv += row.method;
    csv += ',';
    csv += row.sampling;
    csv += ',';
    csv += format_double(row.rho_corollary);
    csv += ',';
    csv += format_double(row.rho_theorem);
    csv += ',';
    csv += format_double(row.rel_gap);
    csv += '\n';
  }
  return csv;
}

std::vector<std::string> reproduce_tightness(const KeyValueConfig& cfg,
                                             const std::string& out_dir,
                                             KeyValueConfig& manifest) {
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_long("data_seed", 1));
  manifest.set("data_seed", static_cast<long>(seed));
  const std::string path = out_dir + "/rate_tightness.csv";
  write_file(path, tightness_csv(tightness_rows(seed)));
  return {path};
}

std::vector<std::string> reproduce_complexity(const KeyValueConfig& cfg,
                                              const std::string& out_dir,
                                              KeyValueConfig& manifest) {
  const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_long("data_seed", 1));
  const int grid = static_cast<int>(cfg.get_long("eta_grid", 50));
  manifest.set("data_seed", static_cast<long>(seed));
  manifest.set("eta_grid", static_cast<long>(grid));

  std::vector<std::string> written;
  std::string markers =
      "n,kappa,method,eta_star,complexity_at_eta_star,saga_complexity\n";
  for (const auto& setting : complexity_settings(seed, grid)) {
    std::string csv = "eta";
    for (const auto& curve : setting.curves) csv += "," + curve.method;
    csv += '\n';
    for (std::size_t g = 0; g < setting.curves.front().eta.size(); ++g) {
      csv += format_double(setting.curves.front().eta[g]);
      for (const auto& curve : setting.curves) {
        csv += ',';
        csv += format_double(curve.complexity[g]);
      }
      csv += '\n';
    }
    const std::string path = out_dir + "/complexity_n" + std::to_string(setting.n) + "_kappa" +
                             format_double(setting.kappa) + ".csv";
    write_file(path, csv);
    written.push_back(path);
    for (const auto& curve : setting.curves) {
      markers += std::to_string(setting.n);
      markers += ',';
      markers += format_double(setting.kappa);
      markers += ',';
      markers += curve.method;
      markers += ',';
      markers += format_double(curve.eta_star);
      markers += ',';
      markers += format_double(curve.complexity_at_eta_star);
      markers += ',';
      markers += format_double(setting.saga_complexity);
      markers += '\n';
    }
  }
  const std::string marker_path = out_dir + "/complexity_markers.csv";
  write_file(marker_path, markers);
  written.push_back(marker_path);
  return written;
}

std::vector<std::string> reproduce_tight_run(const std::string& name, TightRunPanel panel,
                                             const KeyValueConfig& cfg,
                                             const std::string& out_dir,
                                             KeyValueConfig& manifest) {
  const int seeds = static_cast<int>(cfg.get_long("seeds", 1000));
  const long default_iters = panel == TightRunPanel::lsvrg ? 10 : 3000;
  const long iterations = cfg.get_long("iterations", default_iters);
  const std::uint64_t data_seed = static_cast<std::uint64_t>(cfg.get_long("data_seed", 1));
  const std::uint64_t run_seed = static_cast<std::uint64_t>(cfg.get_long("seed", 1));
  const long record_every = cfg.get_long("record_every", 1);

  const TightRunResult result = tight_run(panel, seeds, iterations, thread_count(cfg), data_seed,
                                          run_seed, record_every);

  std::vector<double> predicted(result.summary.k.size());
  for (std::size_t r = 0; r < predicted.size(); ++r)
    predicted[r] = result.initial_band_mean *
                   std::pow(1.0 - result.certificate.rho, static_cast<double>(result.summary.k[r]));

  const std::string path = out_dir + "/" + name + ".csv";
  write_file(path, summary_csv(result.summary, &predicted));

  manifest.set("seeds", static_cast<long>(seeds));
  manifest.set("iterations", iterations);
  manifest.set("record_every", record_every);
  manifest.set("data_seed", static_cast<long>(data_seed));
  manifest.set("seed", static_cast<long>(run_seed));
  manifest.set("method", result.method);
  manifest.set("lambda", result.lambda);
  manifest.set("rho_certified", result.certificate.rho);
  return {path};
}

std::vector<std::string> reproduce_lasso(const KeyValueConfig& cfg, const std::string& out_dir,
                                         KeyValueConfig& manifest) {
  const std::string data = cfg.get_string("data", "");
  if (data.empty() || !std::filesystem::exists(data)) throw MissingDatasetError(data);

  std::vector<std::string> written;
  const long iterations = cfg.get_long("iterations", 20000);
  const int seeds = static_cast<int>(cfg.get_long("seeds", 1));
  manifest.set("iterations", iterations);
  manifest.set("seeds", static_cast<long>(seeds));

  struct MethodSpec {
    const char* name;
    const char* method;
    const char* sampling;
  };
  const MethodSpec specs[] = {{"saga_improved", "saga", "improved"},
                              {"lsvrg_lipschitz", "lsvrg", "lipschitz"},
                              {"qsaga_lipschitz", "qsaga", "lipschitz"},
                              {"ilsvrg_lipschitz", "ilsvrg", "lipschitz"}};
  for (const MethodSpec& spec : specs) {
    KeyValueConfig solve_cfg = cfg;
    solve_cfg.set("problem", "libsvm");
    solve_cfg.set("method", spec.method);
    solve_cfg.set("sampling", spec.sampling);
    solve_cfg.set("lambda", cfg.get_string("lambda", "cor_star"));
    solve_cfg.set("eta", cfg.get_string("eta", "star"));
    solve_cfg.set("xi", cfg.get_string("xi", "auto"));
    solve_cfg.set("iterations", iterations);
    solve_cfg.set("seeds", static_cast<long>(seeds));
    solve_cfg.set("record_every",
                  cfg.get_long("record_every", std::max(1L, iterations / 500)));
    const std::string path = out_dir + "/lasso_" + spec.name + ".csv";
    cmd_solve_to_files(solve_cfg, path);
    written.push_back(path);
  }
  return written;
}

}  // namespace

std::vector<std::string> cmd_reproduce(const std::string& name, const KeyValueConfig& cfg,
                                       const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  KeyValueConfig manifest = cfg;
  manifest.set("command", "reproduce");
  manifest.set("experiment", name);

  std::vector<std::string> written;
  if (name == "fig1") {
    written = reproduce_tightness(cfg, out_dir, manifest);
  } else if (name == "fig2") {
    written = reproduce_complexity(cfg, out_dir, manifest);
  } else if (name == "fig3_saga") {
    written = reproduce_tight_run(name, TightRunPanel::saga, cfg, out_dir, manifest);
  } else if (name == "fig3_lsvrg") {
    written = reproduce_tight_run(name, TightRunPanel::lsvrg, cfg, out_dir, manifest);
  } else if (name == "fig3_qsaga") {
    written = reproduce_tight_run(name, TightRunPanel::qsaga, cfg, out_dir, manifest);
  } else if (name == "fig3_ilsvrg") {
    written = reproduce_tight_run(name, TightRunPanel::ilsvrg, cfg, out_dir, manifest);
  } else if (name == "libsvm_lasso") {
    written = reproduce_lasso(cfg, out_dir, manifest);
  } else {
    throw ConfigError("unknown experiment: " + name);
  }

  const std::string manifest_path = out_dir + "/" + name + ".manifest";
  write_file(manifest_path, manifest.serialize());
  written.push_back(manifest_path);
  return written;
}

}  // namespace vrgrad::cli
