#pragma once

#include <memory>
#include <vector>

#include "pemfc/config.hpp"
#include "pemfc/constants.hpp"
#include "pemfc/solver.hpp"

namespace pemfc {

// Balance-of-plant constants: orifice conductances, actuator lags, valve
// sizing and controller gains. Defaults are tuned for the preset cells.
struct AuxParams {
  double k_in_a = 1.0e-6;      // supply manifold -> channel, mol/(s Pa)
  double k_in_c = 1.0e-6;
  double k_out_a = 1.0e-6;     // channel -> exhaust manifold (flow-through)
  double k_out_c = 1.0e-6;
  double k_purge = 2.0e-7;     // purge valve, channel -> ambient, mol/(s Pa)
  double tau_actuator = 1.0;   // inlet flow lag, s
  double tau_humidifier = 5.0; // supplied humidity lag, s
  double tau_flow = 0.1;       // outlet flow relaxation, s
  double A_bp_max = 1.0e-6;    // back-pressure throttle area ceiling, m^2
  double A_bp_default = 2.0e-7;
  double i_demand_floor = 500.0;  // A/m^2, keeps supply alive at low current
  double k_reg_a = 2.0e-7;     // anode supply pressure regulator, mol/(s Pa)

  double control_dt = 0.1;     // controller sample time, s
  double kp_p = 6.0e-12;       // pressure loop, m^2 per Pa
  double ki_p = 3.0e-12;       // m^2 per (Pa s)
  double kp_phi = 0.5;         // humidity loop, setpoint per unit RH error
  double ki_phi = 0.1;         // per s
};

struct PurgeSchedule {
  bool enabled = true;
  double t_purge = 0.6;        // s
  double delta_t_purge = 15.0; // s
  double valve_area = 1.0e-6;  // m^2 (informational; conductance in AuxParams)

  void validate() const;  // throws ValidationError
};

struct PurgeWindow {
  double t_open = 0.0;
  double t_close = 0.0;
};

struct PiMemory {
  double integral = 0.0;
};

struct ControllerMemory {
  PiMemory p_a, p_c, phi_a, phi_c;
};

// Mutable per-run control/scheduling state referenced by the RHS context.
struct ControlState {
  bool purge_open = false;
  double phi_set_a = 0.0;   // humidifier setpoints the supply tracks
  double phi_set_c = 0.0;
  ControllerMemory pi;
  // Event log, copied into result metadata.
  std::vector<PurgeWindow> purges;
  double pending_open = -1.0;
  long controller_saturations = 0;
};

// Compressible orifice mass flow through area A from (P_up, T) to P_down.
// Chokes at the critical pressure ratio for a diatomic gas.
double nozzle_mass_flow(double A, double P_up, double P_down, double T,
                        double M_mix, const AuxParams& ap,
                        const Constants& c = phys());

// Stoichiometric inlet mass-flow demand for one side at imposed current i.
double inlet_demand_anode(double i, double P_gc_a, const FuelCellConfig& cfg,
                          double phi_set, const AuxParams& ap,
                          const Constants& c = phys());
double inlet_demand_cathode(double i, const FuelCellConfig& cfg,
                            double phi_set, const AuxParams& ap,
                            const Constants& c = phys());

struct ControlInputs {
  double P_gc_a = 0.0;  // measured channel pressures, Pa
  double P_gc_c = 0.0;
  double rh_a = 0.0;    // measured channel relative humidities
  double rh_c = 0.0;
  double A_bp_a = 0.0;  // current actuator positions
  double A_bp_c = 0.0;
};

struct ActuatorCommand {
  double A_bp_a = 0.0;
  double A_bp_c = 0.0;
  double phi_set_a = 0.0;
  double phi_set_c = 0.0;
  bool saturated = false;
};

// One discrete PI controller sample: pressure loops drive the back-pressure
// throttles toward P_des, humidity loops trim the humidifier setpoints.
// Deterministic in (measured, targets, memory); integrators freeze while
// their actuator is clamped.
ActuatorCommand control_step(const ControlInputs& measured,
                             const OperatingConditions& targets,
                             const SimulationOptions& options, double dt,
                             ControllerMemory& memory, const AuxParams& ap);

// Integrator events that open the purge valve every delta_t_purge for
// t_purge seconds, starting at t0 + delta_t_purge. Empty when disabled.
std::vector<EventSpec> purge_events(const PurgeSchedule& schedule, double t0,
                                    std::shared_ptr<ControlState> ctrl);

}  // namespace pemfc
