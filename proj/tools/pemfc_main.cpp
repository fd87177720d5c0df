// Command-line front end: simulation runs, calibration, preset inspection.
//
// Exit codes: 0 success, 2 validation/usage error, 3 simulation failure
// (including voltage collapse before a step/EIS scenario completes),
// 4 checkpoint mismatch.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "pemfc/config.hpp"
#include "pemfc/constants.hpp"
#include "pemfc/drivers.hpp"
#include "pemfc/errors.hpp"
#include "pemfc/ga.hpp"
#include "pemfc/persist.hpp"
#include "pemfc/profile.hpp"

namespace fs = std::filesystem;
using namespace pemfc;

namespace {

std::string join_args(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

struct SimulateArgs {
  std::string config_path;
  std::string preset_name;
  std::string mode;
  std::string out_dir = "results";
  double horizon = 1000.0;
  double sample_dt = 1.0;
  // step (A/cm^2 at the CLI, matching experimental practice)
  double i_init = 0.1;
  double i_final = 0.5;
  double t_switch = 200.0;
  double t_smooth = 0.5;
  // polarization
  double i_max = 3.0;       // A/cm^2
  double delta_i = 0.0;     // A/cm^2; 0 = from config i_step_resolution
  double hold = 30.0;
  // eis
  double i_dc = 0.5;        // A/cm^2
  double delta = 0.05;
  double f_min = 0.1;
  double f_max = 1000.0;
  int points_per_decade = 10;
  int periods = 5;
  int discard = 2;
};

FuelCellConfig resolve_config(const std::string& config_path,
                              const std::string& preset_name) {
  if (!config_path.empty() && !preset_name.empty())
    throw ValidationError("config", "give either --config or --preset");
  if (!config_path.empty()) return load_config(config_path);
  if (!preset_name.empty()) return preset(preset_name);
  throw ValidationError("config", "missing --config <file> or --preset <name>");
}

int cmd_simulate(const SimulateArgs& a, const std::string& cmdline) {
  FuelCellConfig cfg = resolve_config(a.config_path, a.preset_name);
  fs::create_directories(a.out_dir);

  if (a.mode == "step") {
    StepParams sp;
    sp.i_init = a.i_init * 1e4;
    sp.i_final = a.i_final * 1e4;
    sp.t_switch = a.t_switch;
    sp.t_smooth = a.t_smooth;
    RunOptions ro;
    ro.sample_dt = a.sample_dt;
    auto r = run_step(cfg, CurrentProfile::step(sp), a.horizon, ro);
    auto m = persist_result(r, a.out_dir, cmdline);
    std::cout << "run " << m.run_id << ": " << m.status << ", "
              << r.times.size() << " samples, wall "
              << format_double(r.wall_seconds) << " s\n";
    return r.collapsed ? 3 : 0;
  }

  if (a.mode == "polarization") {
    PolarizationParams pp;
    pp.i_max = a.i_max * 1e4;
    pp.delta_i =
        (a.delta_i > 0.0 ? a.delta_i * 1e4 : cfg.computing.i_step_resolution);
    pp.hold_time = a.hold;
    auto curve = run_polarization(cfg, pp);
    write_polarization_csv(curve, (fs::path(a.out_dir) / "polarization.csv").string());
    RunManifest m;
    m.config_text = cfg.serialize();
    m.run_id = make_run_id(m.config_text);
    m.command_line = cmdline;
    m.version = library_version();
    m.status = curve.collapsed ? "collapsed" : "completed";
    m.artifacts = {"polarization.csv"};
    write_manifest(m, a.out_dir);
    std::cout << "polarization: " << curve.points.size() << " points"
              << (curve.collapsed ? " (collapsed)" : "") << "\n";
    return 0;
  }

  if (a.mode == "eis") {
    EisParams ep;
    ep.i_dc = a.i_dc * 1e4;
    ep.delta = a.delta;
    ep.frequencies =
        log_frequency_grid(a.f_min, a.f_max, a.points_per_decade);
    ep.n_periods = a.periods;
    ep.n_discard_periods = a.discard;
    auto spec = run_eis(cfg, ep);
    write_impedance_csv(spec, (fs::path(a.out_dir) / "eis.csv").string());
    RunManifest m;
    m.config_text = cfg.serialize();
    m.run_id = make_run_id(m.config_text);
    m.command_line = cmdline;
    m.version = library_version();
    m.status = "completed";
    m.artifacts = {"eis.csv"};
    write_manifest(m, a.out_dir);
    for (const auto& w : spec.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "eis: " << spec.points.size() << " frequencies\n";
    return 0;
  }

  throw ValidationError("mode", "expected step, polarization or eis");
}

struct CalibrateArgs {
  std::string experiments_dir;
  std::string config_path;
  std::string preset_name;
  std::string resume_path;
  std::string out_dir = "calibration";
  int pop = 160;
  int gens = 1500;
  std::uint64_t seed = 0;
  double budget = 0.0;
};

int cmd_calibrate(const CalibrateArgs& a, const std::string& cmdline) {
  CalibrationProblem problem;
  problem.base = resolve_config(a.config_path, a.preset_name);
  problem.experiments = load_experiments_dir(a.experiments_dir);
  if (problem.experiments.size() < 3) {
    std::cerr << "error: at least three polarization curves required (found "
              << problem.experiments.size() << ")\n";
    return 2;
  }
  problem.validate();

  GaSettings gs;
  gs.population_size = a.pop;
  gs.max_iterations = a.gens;
  gs.rng_seed = a.seed;
  gs.wall_clock_budget = a.budget;
  gs.validate();
  if (gs.population_size < 100 || gs.population_size > 200)
    std::cerr << "warning: population size " << gs.population_size
              << " outside the recommended [100, 200]\n";

  fs::create_directories(a.out_dir);
  const std::string cp_path = (fs::path(a.out_dir) / "checkpoint.bin").string();

  std::optional<Checkpoint> resume;
  if (!a.resume_path.empty()) {
    resume = Checkpoint::load(a.resume_path);
    std::cout << "resuming at generation " << resume->generation << "\n";
  }

  auto result = evolve(problem, gs, resume, cp_path,
                       [](const GenerationStats& g) {
                         std::printf("gen %4d  best %.6f  mean %.6f  %.1fs\n",
                                     g.generation, g.best, g.mean,
                                     g.wall_seconds);
                         std::fflush(stdout);
                       });

  write_history_csv(result.history,
                    (fs::path(a.out_dir) / "history.csv").string(), false);

  FuelCellConfig best = problem.base;
  best.undetermined.from_array(result.best_genome);
  best.to_settings().write_file(
      (fs::path(a.out_dir) / "best_config.cfg").string());

  RunManifest m;
  m.config_text = best.serialize();
  m.run_id = make_run_id(m.config_text + cmdline);
  m.command_line = cmdline;
  m.version = library_version();
  m.status = "completed";
  m.wall_seconds =
      result.history.empty() ? 0.0 : result.history.back().wall_seconds;
  m.artifacts = {"best_config.cfg", "history.csv", "checkpoint.bin"};
  write_manifest(m, a.out_dir);

  std::cout << "best fitness " << format_double(result.best_fitness) << " after "
            << result.generations_run << " generations\n";
  return 0;
}

int cmd_presets(const std::string& action, const std::string& out_dir) {
  if (action == "list") {
    for (const auto& name : preset_names()) std::cout << name << "\n";
    return 0;
  }
  if (action == "write") {
    fs::create_directories(out_dir);
    for (const auto& name : preset_names()) {
      const auto path = fs::path(out_dir) / (name + ".cfg");
      preset(name).to_settings().write_file(path.string());
      std::cout << path.string() << "\n";
    }
    return 0;
  }
  std::cerr << "unknown presets action: " << action << "\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"1D dynamic PEM fuel cell system simulator and calibrator"};
  app.require_subcommand(1);
  const std::string cmdline = join_args(argc, argv);

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "run a simulation scenario");
  sim->add_option("--config", sa.config_path, "settings file");
  sim->add_option("--preset", sa.preset_name, "preset cell name");
  sim->add_option("--mode", sa.mode, "step | polarization | eis")->required();
  sim->add_option("--out", sa.out_dir, "output directory");
  sim->add_option("--horizon", sa.horizon, "simulated time, s");
  sim->add_option("--sample-dt", sa.sample_dt, "output sampling interval, s");
  sim->add_option("--i-init", sa.i_init, "initial current density, A/cm^2");
  sim->add_option("--i-final", sa.i_final, "final current density, A/cm^2");
  sim->add_option("--t-switch", sa.t_switch, "step switch time, s");
  sim->add_option("--t-smooth", sa.t_smooth, "step smoothing, s");
  sim->add_option("--i-max", sa.i_max, "polarization end current, A/cm^2");
  sim->add_option("--delta-i", sa.delta_i,
                  "polarization increment, A/cm^2 (default from config)");
  sim->add_option("--hold", sa.hold, "polarization hold per step, s");
  sim->add_option("--idc", sa.i_dc, "EIS bias current density, A/cm^2");
  sim->add_option("--delta", sa.delta, "EIS amplitude ratio");
  sim->add_option("--fmin", sa.f_min, "EIS minimum frequency, Hz");
  sim->add_option("--fmax", sa.f_max, "EIS maximum frequency, Hz");
  sim->add_option("--ppd", sa.points_per_decade, "EIS points per decade");
  sim->add_option("--periods", sa.periods, "EIS periods per frequency");
  sim->add_option("--discard", sa.discard, "EIS discarded transient periods");

  CalibrateArgs ca;
  auto* cal = app.add_subcommand("calibrate", "fit undetermined parameters");
  cal->add_option("--experiments", ca.experiments_dir,
                  "directory of curve CSV + JSON descriptors")
      ->required();
  cal->add_option("--config", ca.config_path, "settings file");
  cal->add_option("--preset", ca.preset_name, "preset cell name");
  cal->add_option("--resume", ca.resume_path, "checkpoint to resume from");
  cal->add_option("--out", ca.out_dir, "output directory");
  cal->add_option("--pop", ca.pop, "population size");
  cal->add_option("--gens", ca.gens, "number of generations");
  cal->add_option("--seed", ca.seed, "rng seed");
  cal->add_option("--budget", ca.budget, "wall-clock budget, s");

  auto* presets_cmd =
      app.add_subcommand("presets", "inspect the preset registry");
  std::string presets_action = "list";
  std::string presets_out = "presets";
  presets_cmd->add_option("action", presets_action, "list | write");
  presets_cmd->add_option("--out", presets_out, "output directory for write");

  auto* constants_cmd = app.add_subcommand(
      "constants", "dump the physical-constant table (settings format)");
  std::string constants_action = "dump";
  constants_cmd->add_option("action", constants_action, "dump");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sa, cmdline);
    if (cal->parsed()) return cmd_calibrate(ca, cmdline);
    if (presets_cmd->parsed()) return cmd_presets(presets_action, presets_out);
    if (constants_cmd->parsed()) {
      std::cout << phys().to_settings_text();
      return 0;
    }
  } catch (const CheckpointMismatch& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const UnknownPreset& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
