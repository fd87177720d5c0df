#pragma once

#include <string>
#include <vector>

#include "pemfc/drivers.hpp"
#include "pemfc/ga.hpp"

namespace pemfc {

struct RunManifest {
  std::string run_id;         // timestamp + short content hash
  std::string command_line;
  std::string config_text;    // settings-format snapshot
  std::vector<std::string> artifacts;  // repo-relative file names
  std::string version;
  double wall_seconds = 0.0;
  std::string status;         // "completed", "collapsed", "failed"
};

// Deterministic CSV (header row, '.' decimal, comma separator, %.12g).
// Current density columns are emitted in both A/m^2 and A/cm^2.
void write_timeseries_csv(const SimulationResult& r, const std::string& path);
void write_polarization_csv(const PolarizationCurve& c,
                            const std::string& path);
void write_impedance_csv(const ImpedanceSpectrum& s, const std::string& path);
void write_history_csv(const std::vector<GenerationStats>& h,
                       const std::string& path, bool append);

// JSON sidecar: config snapshot, event log, diagnostics, termination.
void write_sidecar_json(const SimulationResult& r, const std::string& path);

// Atomic write protocol: artifacts first, manifest last. A directory without
// a manifest is detectably incomplete.
void write_artifacts(const SimulationResult& r, const std::string& dir,
                     RunManifest& manifest);
void write_manifest(const RunManifest& m, const std::string& dir);
RunManifest persist_result(const SimulationResult& r, const std::string& dir,
                           const std::string& command_line);

bool is_run_complete(const std::string& dir);
RunManifest read_manifest(const std::string& dir);

std::string make_run_id(const std::string& config_text);
std::string library_version();

// Experiment input: one CSV (columns i [A/cm^2], U [V]) plus a JSON
// descriptor of the operating conditions per curve.
ExperimentCurve load_experiment(const std::string& csv_path,
                                const std::string& json_path);
std::vector<ExperimentCurve> load_experiments_dir(const std::string& dir);

}  // namespace pemfc
