#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "pemfc/aux_system.hpp"
#include "pemfc/config.hpp"
#include "pemfc/drivers.hpp"
#include "pemfc/errors.hpp"
#include "pemfc/ode_system.hpp"
#include "pemfc/physics.hpp"

using namespace pemfc;

TEST_CASE("state layout is a bijection onto 0..size-1") {
  for (int n : {2, 5, 16}) {
    StateLayout L(n);
    CHECK(L.size() == 4 * n + 25);
    std::set<int> seen;
    auto add = [&](int slot) {
      CHECK(slot >= 0);
      CHECK(slot < L.size());
      CHECK(seen.insert(slot).second);
    };
    add(L.cv_agc());
    for (int k = 0; k < n; ++k) add(L.cv_agdl(k));
    add(L.cv_acl());
    add(L.cv_ccl());
    for (int k = 0; k < n; ++k) add(L.cv_cgdl(k));
    add(L.cv_cgc());
    for (int k = 0; k < n; ++k) add(L.s_agdl(k));
    add(L.s_acl());
    add(L.s_ccl());
    for (int k = 0; k < n; ++k) add(L.s_cgdl(k));
    add(L.lambda_acl());
    add(L.lambda_mem());
    add(L.lambda_ccl());
    add(L.ch2_agc());
    add(L.ch2_acl());
    add(L.co2_ccl());
    add(L.co2_cgc());
    add(L.p_sm_a());
    add(L.p_sm_c());
    add(L.p_em_a());
    add(L.p_em_c());
    add(L.phi_sm_a());
    add(L.phi_sm_c());
    add(L.w_in_a());
    add(L.w_in_c());
    add(L.w_out_a());
    add(L.w_out_c());
    add(L.a_bp_a());
    add(L.a_bp_c());
    CHECK(static_cast<int>(seen.size()) == L.size());

    auto labels = L.labels();
    std::set<std::string> unique(labels.begin(), labels.end());
    CHECK(unique.size() == labels.size());
    for (const auto& l : labels) CHECK(!l.empty());
  }
}

namespace {

// Ambient-pressure idle configuration whose constructed initial state is an
// exact stationary point of the RHS.
RhsContext equilibrium_context(AuxConfig aux_mode) {
  FuelCellConfig cfg = preset("EH-31");
  cfg.operating.P_des = 101325.0;
  cfg.operating.Phi_a_des = 0.6;
  cfg.operating.Phi_c_des = 0.6;
  cfg.options.aux_config = aux_mode;
  cfg.options.control_enabled = false;
  cfg.options.purge_enabled = false;
  RhsContext ctx = RhsContext::make(cfg, CurrentProfile::constant(0.0));
  ctx.aux.i_demand_floor = 0.0;
  return ctx;
}

}  // namespace

TEST_CASE("zero-current uniform state is a fixed point of the RHS") {
  for (auto mode : {AuxConfig::closed_anode_with_purge, AuxConfig::flow_through}) {
    RhsContext ctx = equilibrium_context(mode);
    auto y = initial_state(ctx);
    auto dydt = assemble_rhs(0.0, y, ctx);
    double worst = 0.0;
    for (double v : dydt) worst = std::max(worst, std::abs(v));
    CHECK_MESSAGE(worst < 1e-10, "mode ", static_cast<int>(mode),
                  " max |dy/dt| = ", worst);
  }
}

TEST_CASE("non-finite states are reported with the offending slot") {
  RhsContext ctx = equilibrium_context(AuxConfig::flow_through);
  auto y = initial_state(ctx);
  y[ctx.layout.p_sm_c()] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(assemble_rhs(0.0, y, ctx), NonFiniteDerivative);
}

TEST_CASE("steady state enforces the Faradaic stoichiometry") {
  // Flow-through keeps the channels flushed so a true steady state exists
  // (a dead-ended anode without purges dilutes forever); the controller
  // holds the pressure targets. Instantaneous fluxes breathe against the
  // tiny gas storages, so steady-state stoichiometry is measured as the
  // time average over a trailing window.
  FuelCellConfig cfg = preset("EH-31");
  cfg.options.aux_config = AuxConfig::flow_through;
  cfg.options.purge_enabled = false;
  cfg.operating.Phi_c_des = 0.5;  // single-phase: no slow liquid storage
  RunOptions ro;
  ro.sample_dt = 1.0;
  ro.equilibrate_max = 300.0;
  const double i = 4000.0;
  auto r = run_step(cfg, CurrentProfile::constant(i), 1000.0, ro);

  double h2 = 0.0, o2 = 0.0, desorb = 0.0, span = 0.0;
  for (std::size_t k = 1; k < r.times.size(); ++k) {
    if (r.times[k] < 500.0) continue;
    const double dt = r.times[k] - r.times[k - 1];
    h2 += 0.5 * (r.derived[k - 1].flux_h2_acl + r.derived[k].flux_h2_acl) * dt;
    o2 += 0.5 * (r.derived[k - 1].flux_o2_ccl + r.derived[k].flux_o2_ccl) * dt;
    desorb += 0.5 *
              (r.derived[k - 1].membrane_desorption_flux +
               r.derived[k].membrane_desorption_flux) *
              dt;
    span += dt;
  }
  h2 /= span;
  o2 /= span;
  desorb /= span;

  const double F = phys().F;
  CHECK(o2 == doctest::Approx(i / (4.0 * F)).epsilon(1e-6));
  CHECK(h2 == doctest::Approx(i / (2.0 * F)).epsilon(1e-6));
  CHECK(h2 / o2 == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(desorb / o2 == doctest::Approx(2.0).epsilon(2e-6));
}

TEST_CASE("two-volume diffusion relaxes at the analytic rate") {
  // Two finite volumes of thickness d exchanging through the harmonic
  // interface conductance: the concentration difference decays as
  // exp(-t/tau) with tau = eps*d/(2 g).
  const double T = 347.15, P = 2e5;
  const double eps = 0.7, tau_t = 2.5, d = 4e-5;
  const double D =
      physics::diffusivities(eps, tau_t, 0.0, T, P).o2;
  const double g = fv_interface_conductance(d, D, d, D);
  CHECK(g == doctest::Approx(D / d).epsilon(1e-12));

  const double rate = 2.0 * g / (eps * d);
  auto rhs = [&](double, std::span<const double> y, std::span<double> f) {
    const double flux = g * (y[0] - y[1]);
    f[0] = -flux / (eps * d);
    f[1] = flux / (eps * d);
  };
  std::vector<double> y0 = {10.0, 6.0};
  SolverSettings s;
  s.rtol = 1e-8;
  s.atol = 1e-12;
  const double tf = 3.0 / rate;
  auto out = integrate(rhs, y0, 0.0, tf, s);
  REQUIRE(out.ok());
  const double diff = out.y_final[0] - out.y_final[1];
  CHECK(diff == doctest::Approx(4.0 * std::exp(-rate * tf)).epsilon(1e-5));
  // Total moles conserved.
  CHECK(out.y_final[0] + out.y_final[1] == doctest::Approx(16.0).epsilon(1e-12));
}

TEST_CASE("closed-anode hydrogen inventory is constant at zero current") {
  // Quiescent closed system: no purge, no control, idle supply, ambient
  // pressure target, every boundary flow identically zero.
  FuelCellConfig cfg = preset("EH-31");
  cfg.operating.P_des = 101325.0;
  cfg.operating.Phi_a_des = 0.6;
  cfg.operating.Phi_c_des = 0.6;
  cfg.options.control_enabled = false;
  cfg.options.purge_enabled = false;
  RunOptions ro;
  ro.sample_dt = 50.0;
  ro.pre_equilibrate = false;
  AuxParams ap;
  ap.i_demand_floor = 0.0;
  ro.aux = ap;
  auto r = run_step(cfg, CurrentProfile::constant(0.0), 1000.0, ro);
  RhsContext ctx = RhsContext::make(cfg, CurrentProfile::constant(0.0));
  const double h2_0 = inventories(r.states.front(), ctx).h2;
  for (const auto& y : r.states) {
    const double h2 = inventories(y, ctx).h2;
    CHECK(std::abs(h2 - h2_0) / h2_0 < 1e-6);
  }
}

TEST_CASE("mass audit closes at steady state") {
  // A clean hold: no purge pulses, no throttle moves, long enough for the
  // slow liquid storage to settle out of the audit window.
  FuelCellConfig cfg = preset("EH-31");
  cfg.options.aux_config = AuxConfig::flow_through;
  cfg.options.purge_enabled = false;
  cfg.operating.Phi_c_des = 0.5;
  RunOptions ro;
  ro.sample_dt = 1.0;
  ro.equilibrate_max = 300.0;
  auto r = run_step(cfg, CurrentProfile::constant(4000.0), 700.0, ro);
  auto audit = mass_audit(r, 400.0, 700.0);
  CHECK(audit.h2_residual < 1e-4);
  CHECK(audit.o2_residual < 1e-4);
  CHECK(audit.h2o_residual < 2e-3);
}

TEST_CASE("mass audit rejects windows with too few samples") {
  FuelCellConfig cfg = preset("EH-31");
  RunOptions ro;
  ro.sample_dt = 10.0;
  ro.equilibrate_max = 30.0;
  auto r = run_step(cfg, CurrentProfile::constant(3000.0), 50.0, ro);
  CHECK_THROWS_AS(mass_audit(r, 0.0, 20.0), InsufficientSamples);
}

TEST_CASE("purge lowers the anode water inventory") {
  // Dry hydrogen feed with a wet cathode: crossover water accumulates on the
  // anode and each purge expels it.
  FuelCellConfig cfg = preset("EH-31");
  cfg.operating.Phi_a_des = 0.3;
  cfg.operating.Phi_c_des = 0.9;
  cfg.computing.delta_t_purge = 20.0;
  cfg.computing.t_purge = 0.6;
  RunOptions ro;
  ro.sample_dt = 0.1;
  ro.equilibrate_max = 150.0;
  auto r = run_step(cfg, CurrentProfile::constant(8000.0), 65.0, ro);
  REQUIRE(!r.purges.empty());
  RhsContext ctx = RhsContext::make(cfg, CurrentProfile::constant(0.0));
  const StateLayout& L = ctx.layout;
  auto anode_vapor = [&](const std::vector<double>& y) {
    const double V_gc =
        cfg.accessible.H_gc * cfg.accessible.W_gc * cfg.accessible.L_gc;
    const double delta = cfg.accessible.H_gdl / L.n_gdl();
    double w = y[L.cv_agc()] * V_gc;
    for (int k = 0; k < L.n_gdl(); ++k)
      w += y[L.cv_agdl(k)] * cfg.undetermined.eps_gdl * delta *
           cfg.accessible.A_act;
    w += y[L.cv_acl()] * phys().eps_cl * cfg.accessible.H_cl *
         cfg.accessible.A_act;
    return w;
  };
  auto at_time = [&](double t) {
    std::size_t best = 0;
    for (std::size_t k = 0; k < r.times.size(); ++k)
      if (std::abs(r.times[k] - t) < std::abs(r.times[best] - t)) best = k;
    return r.states[best];
  };
  const auto& w = r.purges.back();
  CHECK(anode_vapor(at_time(w.t_close)) < anode_vapor(at_time(w.t_open)));
}

TEST_CASE("purge event schedule") {
  auto ctrl = std::make_shared<ControlState>();
  PurgeSchedule sched;
  sched.enabled = true;
  sched.delta_t_purge = 15.0;
  sched.t_purge = 0.5;
  auto events = purge_events(sched, 0.0, ctrl);
  REQUIRE(events.size() == 2);

  auto rhs = [](double, std::span<const double>, std::span<double> f) {
    f[0] = 0.0;
  };
  std::vector<double> y0 = {0.0};
  SolverSettings s;
  s.max_step = 1.0;
  auto out = integrate(rhs, y0, 0.0, 60.0, s, events);
  REQUIRE(out.ok());
  int opens = 0;
  std::vector<double> open_times;
  for (const auto& e : out.events)
    if (e.label == "purge_open") {
      ++opens;
      open_times.push_back(e.t);
    }
  CHECK(opens == 4);  // 15, 30, 45, 60
  for (std::size_t k = 1; k < open_times.size(); ++k)
    CHECK(open_times[k] - open_times[k - 1] ==
          doctest::Approx(15.0).epsilon(1e-7));
  CHECK(ctrl->purges.size() >= 3);
  for (const auto& w : ctrl->purges)
    CHECK(w.t_close - w.t_open == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("disabled purge schedule yields no events") {
  auto ctrl = std::make_shared<ControlState>();
  PurgeSchedule sched;
  sched.enabled = false;
  CHECK(purge_events(sched, 0.0, ctrl).empty());
}

TEST_CASE("invalid purge schedule is rejected") {
  auto ctrl = std::make_shared<ControlState>();
  PurgeSchedule sched;
  sched.enabled = true;
  sched.t_purge = 20.0;
  sched.delta_t_purge = 15.0;
  CHECK_THROWS_AS(purge_events(sched, 0.0, ctrl), ValidationError);
}

TEST_CASE("inlet flow tracks demand through the actuator lag") {
  FuelCellConfig cfg = preset("EH-31");
  cfg.options.aux_config = AuxConfig::flow_through;
  cfg.options.control_enabled = false;
  cfg.options.purge_enabled = false;
  RhsContext ctx = RhsContext::make(cfg, CurrentProfile::constant(8000.0));
  auto y = initial_state(ctx);
  const double demand = y[ctx.layout.w_in_c()];  // initialized at demand
  y[ctx.layout.w_in_c()] = 0.0;                  // step in demand from zero

  auto rhs = [&](double t, std::span<const double> yy, std::span<double> f) {
    assemble_rhs_raw(t, yy, ctx, f);
  };
  SolverSettings s;
  s.rtol = 1e-9;
  s.atol = 1e-14;
  auto out = integrate(rhs, y, 0.0, ctx.aux.tau_actuator, s);
  REQUIRE(out.ok());
  const double frac = out.y_final[ctx.layout.w_in_c()] / demand;
  CHECK(frac == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-3));
}

TEST_CASE("balanced manifold holds its pressure") {
  RhsContext ctx = equilibrium_context(AuxConfig::flow_through);
  auto y = initial_state(ctx);
  auto d = assemble_rhs(0.0, y, ctx);
  CHECK(d[ctx.layout.p_sm_a()] == 0.0);
  CHECK(d[ctx.layout.p_sm_c()] == 0.0);
}

TEST_CASE("nozzle flow chokes at the critical pressure ratio") {
  AuxParams ap;
  const double A = 2e-7, T = 347.15, M = 28.97e-3, P_up = 2e5;
  const double w_choked1 = nozzle_mass_flow(A, P_up, 0.5 * P_up, T, M, ap);
  const double w_choked2 = nozzle_mass_flow(A, P_up, 0.2 * P_up, T, M, ap);
  const double w_choked3 = nozzle_mass_flow(A, P_up, 0.0, T, M, ap);
  CHECK(w_choked1 == doctest::Approx(w_choked2).epsilon(1e-12));
  CHECK(w_choked2 == doctest::Approx(w_choked3).epsilon(1e-12));

  // Subcritical flow falls below the choked value and vanishes at dP = 0.
  const double w_sub = nozzle_mass_flow(A, P_up, 0.8 * P_up, T, M, ap);
  CHECK(w_sub < w_choked1);
  CHECK(w_sub > 0.0);
  CHECK(nozzle_mass_flow(A, P_up, P_up, T, M, ap) == 0.0);

  // Continuity across the critical ratio.
  const double r_crit = std::pow(2.0 / 2.4, 1.4 / 0.4);
  const double below = nozzle_mass_flow(A, P_up, (r_crit - 1e-9) * P_up, T, M, ap);
  const double above = nozzle_mass_flow(A, P_up, (r_crit + 1e-9) * P_up, T, M, ap);
  CHECK(below == doctest::Approx(above).epsilon(1e-6));
}

TEST_CASE("controller sign conventions and anti-windup") {
  AuxParams ap;
  OperatingConditions targets;
  targets.P_des = 2e5;
  targets.Phi_a_des = 0.6;
  targets.Phi_c_des = 0.6;
  SimulationOptions options;
  options.aux_config = AuxConfig::flow_through;

  ControlInputs in;
  in.P_gc_a = targets.P_des;
  in.P_gc_c = targets.P_des;
  in.rh_a = 0.6;
  in.rh_c = 0.6;
  in.A_bp_a = ap.A_bp_default;
  in.A_bp_c = ap.A_bp_default;

  // Zero error: actuators stay at their baseline.
  ControllerMemory mem;
  auto cmd = control_step(in, targets, options, 0.1, mem, ap);
  CHECK(cmd.A_bp_c == doctest::Approx(ap.A_bp_default));
  CHECK(cmd.phi_set_c == doctest::Approx(targets.Phi_c_des));

  // Pressure below target: closing the throttle raises pressure.
  ControlInputs low = in;
  low.P_gc_c = targets.P_des - 1e4;
  ControllerMemory mem2;
  auto cmd2 = control_step(low, targets, options, 0.1, mem2, ap);
  CHECK(cmd2.A_bp_c < ap.A_bp_default);

  // Sustained error with the actuator clamped: the integral freezes.
  ControlInputs very_low = in;
  very_low.P_gc_c = targets.P_des - 1e9;  // drives the throttle to 0
  ControllerMemory mem3;
  auto c1 = control_step(very_low, targets, options, 0.1, mem3, ap);
  CHECK(c1.A_bp_c == 0.0);
  CHECK(c1.saturated);
  const double frozen = mem3.p_c.integral;
  control_step(very_low, targets, options, 0.1, mem3, ap);
  CHECK(mem3.p_c.integral == frozen);
}

TEST_CASE("humidity and throttle commands stay within their ranges") {
  AuxParams ap;
  OperatingConditions targets;
  SimulationOptions options;
  options.aux_config = AuxConfig::flow_through;
  ControllerMemory mem;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    ControlInputs in;
    in.P_gc_a = 1e5 + 3e5 * u(rng);
    in.P_gc_c = 1e5 + 3e5 * u(rng);
    in.rh_a = 1.5 * u(rng);
    in.rh_c = 1.5 * u(rng);
    auto cmd = control_step(in, targets, options, 0.1, mem, ap);
    CHECK(cmd.A_bp_a >= 0.0);
    CHECK(cmd.A_bp_a <= ap.A_bp_max);
    CHECK(cmd.A_bp_c >= 0.0);
    CHECK(cmd.A_bp_c <= ap.A_bp_max);
    CHECK(cmd.phi_set_a >= 0.0);
    CHECK(cmd.phi_set_a <= 1.0);
    CHECK(cmd.phi_set_c >= 0.0);
    CHECK(cmd.phi_set_c <= 1.0);
  }
}

TEST_CASE("with control disabled the actuator states never move") {
  FuelCellConfig cfg = preset("EH-31");
  cfg.options.control_enabled = false;
  RunOptions ro;
  ro.sample_dt = 5.0;
  ro.equilibrate_max = 50.0;
  auto r = run_step(cfg, CurrentProfile::constant(4000.0), 100.0, ro);
  RhsContext ctx = RhsContext::make(cfg, CurrentProfile::constant(0.0));
  const double a0 = r.states.front()[ctx.layout.a_bp_c()];
  for (const auto& y : r.states) {
    CHECK(y[ctx.layout.a_bp_a()] == r.states.front()[ctx.layout.a_bp_a()]);
    CHECK(y[ctx.layout.a_bp_c()] == a0);
  }
}

TEST_CASE("closed-loop pressure regulation after a current step") {
  FuelCellConfig cfg = preset("EH-31");
  StepParams sp;
  sp.i_init = 3000.0;
  sp.i_final = 8000.0;
  sp.t_switch = 10.0;
  RunOptions ro;
  ro.sample_dt = 1.0;
  ro.equilibrate_max = 120.0;
  auto r = run_step(cfg, CurrentProfile::step(sp), 60.0, ro);
  // Settled back to within 1% of the desired pressure.
  CHECK(std::abs(r.derived.back().P_gc_c - cfg.operating.P_des) <
        0.01 * cfg.operating.P_des);
}
