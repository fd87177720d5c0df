#pragma once

#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pemfc/ode_system.hpp"
#include "pemfc/profile.hpp"

namespace pemfc {

// Full time series of one simulation run.
struct SimulationResult {
  std::vector<double> times;
  std::vector<std::string> state_labels;
  std::vector<std::vector<double>> states;     // one row per sample
  std::vector<DerivedQuantities> derived;      // aligned with times
  std::vector<EventRecord> events;
  std::vector<PurgeWindow> purges;
  long controller_saturations = 0;
  SolverDiagnostics diag;
  Termination reason = Termination::reached_end;
  std::string message;
  bool collapsed = false;                      // ended in oxygen starvation
  FuelCellConfig config;
  double wall_seconds = 0.0;

  std::size_t size() const { return times.size(); }
};

struct RunOptions {
  double sample_dt = 1.0;        // s between stored samples
  double rtol = 1e-6;
  double atol = 1e-9;
  bool pre_equilibrate = true;   // settle at i(0) before recording
  double equilibrate_max = 200.0;  // s cap for the settling segment
  std::optional<AuxParams> aux;  // balance-of-plant constant override
};

// Simulate an arbitrary profile over [0, horizon].
SimulationResult run_step(const FuelCellConfig& cfg,
                          const CurrentProfile& profile, double horizon,
                          const RunOptions& opts = {});

struct PolarizationCurve {
  std::vector<std::pair<double, double>> points;  // (i A/m^2, U V)
  std::string conditions_tag;
  bool collapsed = false;  // stopped early on oxygen starvation
};

struct PolarizationOptions {
  double hold_time = 30.0;       // s cap per staircase level
  double detect_window = 10.0;   // s, quasi-steady trailing window
  double detect_tol = 1e-4;      // V/s
  double sample_dt = 0.5;        // s, internal sampling for detection
  double t_smooth = 0.5;         // s, staircase ramp width
  double rtol = 1e-6;
  double atol = 1e-9;
  bool include_zero = true;      // record the open-circuit point
  std::optional<AuxParams> aux;  // balance-of-plant constant override
};

// Staircase polarization sweep; stops at i_max or on voltage collapse.
PolarizationCurve run_polarization(const FuelCellConfig& cfg,
                                   const PolarizationParams& profile,
                                   const PolarizationOptions& opts = {});

// Same sweep but visiting an explicit ascending current list (used by the
// calibration fitness, which only needs the experimental currents).
PolarizationCurve run_polarization_at(const FuelCellConfig& cfg,
                                      const std::vector<double>& currents,
                                      const PolarizationOptions& opts = {});

struct ImpedancePoint {
  double f = 0.0;       // Hz
  double z_re = 0.0;    // Ohm m^2
  double z_im = 0.0;    // Ohm m^2
  double thd = 0.0;     // harmonic distortion of U at 2f, 3f vs fundamental
};

struct ImpedanceSpectrum {
  std::vector<ImpedancePoint> points;
  std::vector<std::string> warnings;  // nonlinearity warnings per frequency
};

// Plant seam for the EIS machinery: the real cell or an analytic oracle.
class EisPlant {
public:
  virtual ~EisPlant() = default;
  // Advance internal state to t_end under the imposed profile, writing the
  // cell voltage at the requested absolute times (all within (time, t_end]).
  virtual void advance(const CurrentProfile& profile, double t_end,
                       std::span<const double> t_samples,
                       std::span<double> u_out) = 0;
  virtual double time() const = 0;
};

// Full-model plant.
std::unique_ptr<EisPlant> make_cell_plant(const FuelCellConfig& cfg,
                                          double i_dc, const RunOptions& opts);

struct EisOptions {
  int samples_per_period = 64;
  RunOptions run;  // run.pre_equilibrate applies to the bias settling
};

ImpedanceSpectrum run_eis(const FuelCellConfig& cfg, const EisParams& profile,
                          const EisOptions& opts = {});
ImpedanceSpectrum run_eis_with_plant(EisPlant& plant, const EisParams& profile,
                                     const EisOptions& opts = {});

// Single-bin discrete Fourier projection over an integer number of cycles of
// uniformly sampled data (first sample at the window origin, endpoint open);
// exact for pure sinusoids at bin frequencies. Returns the complex amplitude
// in cosine convention: a*cos(wt) + b*sin(wt) -> (a, -b).
std::pair<double, double> phasor(std::span<const double> values,
                                 int cycles_in_window, int harmonic = 1);

// True when the least-squares slope of the trailing `window` seconds of the
// series is below tol (V/s).
bool quasi_steady_detect(std::span<const double> times,
                         std::span<const double> values, double window,
                         double tol);

// Max |U1(i) - U2(i)| over the shared current range, linear interpolation.
double delta_u_max(const PolarizationCurve& a, const PolarizationCurve& b);

// Integrator events implementing the discrete-time operating-condition
// controller (no-ops when control is disabled in the config options).
std::vector<EventSpec> control_events(const RhsContext& ctx, double t0);

// Mass-balance audit over [t0, t1] from a stored result.
struct MassAudit {
  double h2_residual = 0.0;
  double o2_residual = 0.0;
  double h2o_residual = 0.0;
};
MassAudit mass_audit(const SimulationResult& result, double t0, double t1);

}  // namespace pemfc
