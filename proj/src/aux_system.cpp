#include "pemfc/aux_system.hpp"

#include <algorithm>
#include <cmath>

#include "pemfc/errors.hpp"
#include "pemfc/physics.hpp"

namespace pemfc {

void PurgeSchedule::validate() const {
  if (!enabled) return;
  if (!(t_purge > 0.0))
    throw ValidationError("t_purge", "must be positive");
  if (!(t_purge < delta_t_purge))
    throw ValidationError("t_purge",
                          "purge duration must be below the purge interval");
}

double nozzle_mass_flow(double A, double P_up, double P_down, double T,
                        double M_mix, const AuxParams& ap, const Constants& c) {
  if (A <= 0.0 || P_up <= 0.0 || P_up <= P_down) return 0.0;
  const double g = c.gamma_gas;
  const double r_crit = std::pow(2.0 / (g + 1.0), g / (g - 1.0));
  const double r = std::max(P_down / P_up, 0.0);
  // The isentropic flow function has infinite slope at r -> 1; below a small
  // pressure drop the orifice is linearized so the Jacobian stays bounded.
  const double r_lin = 0.999;
  auto flow_fn = [&](double ratio) {
    const double rs = std::max(ratio, r_crit);  // choked below critical
    return std::sqrt(2.0 * g / (g - 1.0) *
                     (std::pow(rs, 2.0 / g) - std::pow(rs, (g + 1.0) / g)));
  };
  double fn;
  if (r > r_lin)
    fn = flow_fn(r_lin) * (1.0 - r) / (1.0 - r_lin);
  else
    fn = flow_fn(r);
  const double r_spec = c.R / M_mix;
  (void)ap;
  return c.nozzle_cd * A * P_up / std::sqrt(r_spec * T) * fn;
}

namespace {

double supply_vapor_fraction(double phi_set, double T, double P,
                             const Constants& c) {
  const double psat = physics::p_sat(T, c);
  return std::clamp(phi_set * psat / std::max(P, 1.0), 0.0, 0.99);
}

}  // namespace

double inlet_demand_anode(double i, double /*P_gc_a*/,
                          const FuelCellConfig& cfg, double phi_set,
                          const AuxParams& ap, const Constants& c) {
  const auto& op = cfg.operating;
  double n_h2;
  if (cfg.options.aux_config == AuxConfig::closed_anode_with_purge) {
    // Dead-ended anode consumes exactly what the reaction takes; the fast
    // supply-manifold regulator (see the manifold balance) holds pressure.
    n_h2 = std::max(0.0, i) * cfg.accessible.A_act / (2.0 * c.F);
  } else {
    const double i_eff = std::max(i, ap.i_demand_floor);
    n_h2 = op.S_a * i_eff * cfg.accessible.A_act / (2.0 * c.F);
  }
  const double x_v = supply_vapor_fraction(phi_set, op.T_fc, op.P_des, c);
  const double n_tot = n_h2 / (1.0 - x_v);
  const double m_mix = x_v * c.M_H2O + (1.0 - x_v) * c.M_H2;
  return n_tot * m_mix;
}

double inlet_demand_cathode(double i, const FuelCellConfig& cfg,
                            double phi_set, const AuxParams& ap,
                            const Constants& c) {
  const auto& op = cfg.operating;
  const double i_eff = std::max(i, ap.i_demand_floor);
  const double n_o2 = op.S_c * i_eff * cfg.accessible.A_act / (4.0 * c.F);
  const double n_dry = n_o2 / c.x_O2_dry;
  const double x_v = supply_vapor_fraction(phi_set, op.T_fc, op.P_des, c);
  const double n_tot = n_dry / (1.0 - x_v);
  const double m_dry = c.x_O2_dry * c.M_O2 + (1.0 - c.x_O2_dry) * c.M_N2;
  const double m_mix = x_v * c.M_H2O + (1.0 - x_v) * m_dry;
  return n_tot * m_mix;
}

namespace {

// One PI loop with conditional integration: the integrator freezes whenever
// the actuator is clamped and the error would push it further out.
double pi_update(double error, double dt, double kp, double ki, double base,
                 double lo, double hi, PiMemory& mem, bool* saturated) {
  const double trial = base + kp * error + ki * (mem.integral + dt * error);
  if (trial > hi) {
    *saturated = true;
    if (error < 0.0) mem.integral += dt * error;
    return hi;
  }
  if (trial < lo) {
    *saturated = true;
    if (error > 0.0) mem.integral += dt * error;
    return lo;
  }
  mem.integral += dt * error;
  return base + kp * error + ki * mem.integral;
}

}  // namespace

ActuatorCommand control_step(const ControlInputs& measured,
                             const OperatingConditions& targets,
                             const SimulationOptions& options, double dt,
                             ControllerMemory& memory, const AuxParams& ap) {
  ActuatorCommand cmd;
  bool sat = false;

  // Pressure too low -> close the throttle (negative actuator direction).
  const double e_pc = targets.P_des - measured.P_gc_c;
  cmd.A_bp_c = pi_update(-e_pc, dt, ap.kp_p, ap.ki_p, ap.A_bp_default, 0.0,
                         ap.A_bp_max, memory.p_c, &sat);

  if (options.aux_config == AuxConfig::flow_through) {
    const double e_pa = targets.P_des - measured.P_gc_a;
    cmd.A_bp_a = pi_update(-e_pa, dt, ap.kp_p, ap.ki_p, ap.A_bp_default, 0.0,
                           ap.A_bp_max, memory.p_a, &sat);
  } else {
    // Dead-ended anode pressure is held by the supply regulator.
    cmd.A_bp_a = measured.A_bp_a;
  }

  const double e_ha = targets.Phi_a_des - measured.rh_a;
  cmd.phi_set_a = pi_update(e_ha, dt, ap.kp_phi, ap.ki_phi, targets.Phi_a_des,
                            0.0, 1.0, memory.phi_a, &sat);
  const double e_hc = targets.Phi_c_des - measured.rh_c;
  cmd.phi_set_c = pi_update(e_hc, dt, ap.kp_phi, ap.ki_phi, targets.Phi_c_des,
                            0.0, 1.0, memory.phi_c, &sat);

  cmd.saturated = sat;
  return cmd;
}

std::vector<EventSpec> purge_events(const PurgeSchedule& schedule, double t0,
                                    std::shared_ptr<ControlState> ctrl) {
  schedule.validate();
  if (!schedule.enabled) return {};

  auto next_open = std::make_shared<double>(t0 + schedule.delta_t_purge);
  auto next_close = std::make_shared<double>(
      std::numeric_limits<double>::infinity());
  const double dt_purge = schedule.delta_t_purge;
  const double t_open_len = schedule.t_purge;

  EventSpec open;
  open.label = "purge_open";
  open.direction = +1;
  open.fn = [next_open](double t, std::span<const double>) {
    return t - *next_open;
  };
  open.handler = [ctrl, next_open, next_close, dt_purge, t_open_len](
                     double t, std::vector<double>&) {
    ctrl->purge_open = true;
    ctrl->pending_open = t;
    *next_close = t + t_open_len;
    *next_open += dt_purge;
    return EventOutcome::modified;
  };

  EventSpec close;
  close.label = "purge_close";
  close.direction = +1;
  close.fn = [next_close](double t, std::span<const double>) {
    return t - *next_close;
  };
  close.handler = [ctrl, next_close](double t, std::vector<double>&) {
    ctrl->purge_open = false;
    ctrl->purges.push_back(PurgeWindow{ctrl->pending_open, t});
    ctrl->pending_open = -1.0;
    *next_close = std::numeric_limits<double>::infinity();
    return EventOutcome::modified;
  };

  return {open, close};
}

}  // namespace pemfc
