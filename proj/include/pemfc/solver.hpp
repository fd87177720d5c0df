#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace pemfc {

// Derivative callback: fills dydt for the given (t, y).
using RhsFn =
    std::function<void(double t, std::span<const double> y, std::span<double> dydt)>;

struct SolverSettings {
  double rtol = 1e-6;
  double atol = 1e-9;                 // broadcast when atol_vec is empty
  std::vector<double> atol_vec;       // optional per-slot absolute tolerance
  int max_order = 5;                  // BDF order cap, 1..5
  double max_step = std::numeric_limits<double>::infinity();
  double initial_step = 0.0;          // 0 = automatic selection

  // Fixed-step single-order mode, used for convergence measurements.
  bool fixed_step = false;
  double fixed_step_size = 0.0;
  int fixed_order = 1;
  // Optional uniform-grid history y(t0 - j*h) for j = 1, 2, ... (most recent
  // first); lets fixed-order runs start at full order instead of ramping up.
  std::vector<std::vector<double>> warm_start_history;

  void validate() const;  // throws ValidationError
};

enum class EventOutcome {
  unchanged,  // observation only: integration history stays valid
  modified,   // handler changed y or the problem: restart from the event
};

// Scalar event function. A sign change of `fn` along the solution triggers
// the handler at the located crossing time.
struct EventSpec {
  std::function<double(double t, std::span<const double> y)> fn;
  int direction = 0;    // +1 rising zero-crossings, -1 falling, 0 both
  bool terminal = false;
  // Optional; may mutate y in place. Ignored for terminal events.
  std::function<EventOutcome(double t, std::vector<double>& y)> handler;
  std::string label;
};

struct EventRecord {
  double t = 0.0;
  int index = -1;       // position in the events list
  std::string label;
};

struct SolverDiagnostics {
  long steps = 0;
  long rejected_steps = 0;
  long rhs_evals = 0;
  long jacobian_evals = 0;
  long lu_factorizations = 0;
  long newton_iterations = 0;
  long events_located = 0;
};

enum class Termination {
  reached_end,
  terminal_event,
  step_size_underflow,
  newton_divergence,
  nonfinite_derivative,
};

struct IntegrationOutput {
  std::vector<double> times;                 // sampled times (see sample_dt)
  std::vector<std::vector<double>> states;   // state at each sampled time
  double t_final = 0.0;
  std::vector<double> y_final;
  std::vector<EventRecord> events;
  SolverDiagnostics diag;
  Termination reason = Termination::reached_end;
  std::string message;

  bool ok() const {
    return reason == Termination::reached_end ||
           reason == Termination::terminal_event;
  }
};

// Variable-order (1..5), variable-step implicit BDF integrator with a dense
// finite-difference Jacobian, Newton corrector and event location on the
// interpolated solution.
//
// Sampling: when sample_times is non-empty the solution is interpolated at
// exactly those times (they must be increasing and within [t0, tf]);
// otherwise every accepted step is emitted.
IntegrationOutput integrate(const RhsFn& rhs, std::span<const double> y0,
                            double t0, double tf,
                            const SolverSettings& settings = {},
                            std::vector<EventSpec> events = {},
                            std::vector<double> sample_times = {});

}  // namespace pemfc
