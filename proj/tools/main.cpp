#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

namespace {

using vrgrad::cli::KeyValueConfig;

void apply_overrides(KeyValueConfig& cfg, const std::string& out, long seeds, long threads) {
  if (!out.empty()) cfg.set("out", out);
  if (seeds > 0) cfg.set("seeds", seeds);
  if (threads > 0) cfg.set("threads", threads);
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw vrgrad::ConfigError("cannot write: " + out_path);
  out << text;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variance-reduced proximal stochastic gradient toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_path, experiment;
  long seeds = 0, threads = 0;

  auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* opt = cmd->add_option("--config", config_path, "flat key = value config file");
    if (config_required) opt->required();
    cmd->add_option("--out", out_path, "output path (file or directory)");
    cmd->add_option("--seeds", seeds, "number of independent runs");
    cmd->add_option("--threads", threads, "worker threads (env VRGRAD_THREADS as fallback)");
  };

  CLI::App* rate = app.add_subcommand("rate", "certify a convergence rate");
  add_common(rate, true);
  CLI::App* tune = app.add_subcommand("tune", "closed-form step sizes and update frequencies");
  add_common(tune, true);
  CLI::App* solve = app.add_subcommand("solve", "run the solver and emit a CSV trace");
  add_common(solve, true);
  CLI::App* reproduce = app.add_subcommand("reproduce", "canned experiment bundles");
  reproduce->add_option("experiment", experiment,
                        "rate_tightness bundle: fig1 | fig2 | fig3_saga | fig3_lsvrg | "
                        "fig3_qsaga | fig3_ilsvrg | libsvm_lasso");
  add_common(reproduce, false);

  CLI11_PARSE(app, argc, argv);

  try {
    KeyValueConfig cfg;
    if (!config_path.empty()) cfg = KeyValueConfig::from_file(config_path);
    apply_overrides(cfg, out_path, seeds, threads);

    if (rate->parsed()) {
      emit(vrgrad::cli::cmd_rate(cfg), cfg.get_string("out", ""));
    } else if (tune->parsed()) {
      const auto result = vrgrad::cli::cmd_tune(cfg);
      const std::string out = cfg.get_string("out", "");
      emit(result.report_json, out);
      if (!result.curve_csv.empty())
        emit(result.curve_csv, out.empty() ? "" : out + ".curve.csv");
    } else if (solve->parsed()) {
      vrgrad::cli::cmd_solve_to_files(cfg, cfg.get_string("out", "trace.csv"));
    } else if (reproduce->parsed()) {
      if (experiment.empty()) experiment = cfg.get_string("experiment");
      const std::string dir = cfg.get_string("out", "out_" + experiment);
      for (const std::string& path : vrgrad::cli::cmd_reproduce(experiment, cfg, dir))
        std::cout << path << "\n";
    }
  } catch (const vrgrad::NoConvergentRateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const vrgrad::NonFiniteError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const vrgrad::MissingDatasetError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const vrgrad::MalformedLineError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const vrgrad::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
