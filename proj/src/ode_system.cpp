#include "pemfc/ode_system.hpp"

#include <algorithm>
#include <cmath>

#include "pemfc/errors.hpp"
#include "pemfc/physics.hpp"

namespace pemfc {

namespace {

constexpr int kMaxGdl = 64;

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }
inline double pos(double v) { return v > 0.0 ? v : 0.0; }

// C1 one-sided ramp: exactly zero at and below the origin, quadratic over
// [0, w], linear beyond. Keeps valve and orifice switching differentiable
// without leaking flow at zero pressure difference.
inline double ramp_smooth(double x, double w) {
  if (x <= 0.0) return 0.0;
  if (x >= w) return x - 0.5 * w;
  return 0.5 * x * x / w;
}
constexpr double kOrificePa = 5.0;    // ramp width for orifices, Pa
constexpr double kMistRamp = 0.02;    // ramp width for channel mist, mol/m^3

// Series conductance of two half-cells (harmonic interface averaging).
inline double interface_conductance(double d1, double D1, double d2,
                                    double D2) {
  return 1.0 / (0.5 * d1 / D1 + 0.5 * d2 / D2);
}

// Smooth one-sided cubic for the entrainment drain above s_lim.
inline double drain_shape(double x) { return x > 0.0 ? x * x * x : 0.0; }

struct SideGas {
  double D_v[kMaxGdl];     // effective vapor diffusivity per GDL node
  double D_r[kMaxGdl];     // effective reactant diffusivity per GDL node
  double D_v_cl = 0.0;
  double D_r_cl = 0.0;
  double R_reactant = 0.0; // channel -> CL series resistance for the reactant
};

}  // namespace

RhsContext RhsContext::make(const FuelCellConfig& cfg,
                            const CurrentProfile& profile) {
  cfg.validate();
  profile.validate();
  RhsContext ctx;
  ctx.config = cfg;
  ctx.profile = profile;
  ctx.layout = StateLayout(cfg.computing.n_gdl);
  ctx.ctrl = std::make_shared<ControlState>();
  ctx.ctrl->phi_set_a = cfg.operating.Phi_a_des;
  ctx.ctrl->phi_set_c = cfg.operating.Phi_c_des;
  return ctx;
}

void assemble_rhs_raw(double t, std::span<const double> y,
                      const RhsContext& ctx, std::span<double> dydt) {
  const Constants& c = phys();
  const FuelCellConfig& cfg = ctx.config;
  const StateLayout& L = ctx.layout;
  const int n = L.n_gdl();
  const double T = cfg.operating.T_fc;
  const double RT = c.R * T;
  const double csat = physics::c_sat(T, c);
  const double psat = csat * RT;
  const double i_fc = ctx.profile(t);

  const auto& acc = cfg.accessible;
  const auto& und = cfg.undetermined;
  const double delta = acc.H_gdl / n;
  const double A = acc.A_act;
  const double V_gc = acc.H_gc * acc.W_gc * acc.L_gc;
  const double c_fix = c.rho_mem_dry / c.EW;
  const double slim = physics::s_lim(und, cfg.operating.P_des);
  const double liq_mol = c.rho_liquid / c.M_H2O;  // mol liquid water per m^3

  std::fill(dydt.begin(), dydt.end(), 0.0);

  // ---- channel pressures and quasi-static cathode nitrogen ----
  const double cv_agc = pos(y[L.cv_agc()]);
  const double ch2_agc = pos(y[L.ch2_agc()]);
  const double cv_cgc = pos(y[L.cv_cgc()]);
  const double co2_cgc = pos(y[L.co2_cgc()]);
  const double P_sm_a = y[L.p_sm_a()], P_sm_c = y[L.p_sm_c()];
  const double P_em_a = y[L.p_em_a()], P_em_c = y[L.p_em_c()];
  const double phi_sm_a = clamp01(y[L.phi_sm_a()]);
  const double phi_sm_c = clamp01(y[L.phi_sm_c()]);

  const double P_agc = (cv_agc + ch2_agc) * RT;
  const double x_v_in_a = std::clamp(phi_sm_a * psat / std::max(P_sm_a, 1.0), 0.0, 0.99);
  const double x_v_in_c = std::clamp(phi_sm_c * psat / std::max(P_sm_c, 1.0), 0.0, 0.99);
  const double c_n2 = pos((1.0 - x_v_in_c) * (1.0 - c.x_O2_dry) * P_sm_c / RT);
  const double P_cgc = (cv_cgc + co2_cgc + c_n2) * RT;
  // Transport properties are evaluated at floored pressures so that wild
  // solver trial states cannot produce unbounded free diffusivities.
  const double P_a_prop = std::max(P_agc, 1e4);
  const double P_c_prop = std::max(P_cgc, 1e4);

  // ---- effective diffusivities along each GDL + CL ----
  SideGas an, ca;
  for (int k = 0; k < n; ++k) {
    auto d = physics::diffusivities(und.eps_gdl, und.tau, y[L.s_agdl(k)], T,
                                    P_a_prop, c);
    an.D_v[k] = d.h2;  // vapor moves through hydrogen on the anode
    an.D_r[k] = d.h2;
    d = physics::diffusivities(und.eps_gdl, und.tau, y[L.s_cgdl(k)], T,
                               P_c_prop, c);
    ca.D_v[k] = d.vapor;
    ca.D_r[k] = d.o2;
  }
  {
    auto d =
        physics::diffusivities(c.eps_cl, und.tau, y[L.s_acl()], T, P_a_prop, c);
    an.D_v_cl = d.h2;
    an.D_r_cl = d.h2;
    d = physics::diffusivities(c.eps_cl, und.tau, y[L.s_ccl()], T, P_c_prop, c);
    ca.D_v_cl = d.vapor;
    ca.D_r_cl = d.o2;
  }
  an.R_reactant = 0.5 * acc.H_cl / an.D_r_cl;
  ca.R_reactant = 0.5 * acc.H_cl / ca.D_r_cl;
  for (int k = 0; k < n; ++k) {
    an.R_reactant += delta / an.D_r[k];
    ca.R_reactant += delta / ca.D_r[k];
  }

  // ---- liquid saturation dynamics (needed for the vapor cross terms) ----
  // Finite-volume capillary diffusion with an entrainment drain above s_lim;
  // the channel acts as an s = 0 sink.
  auto liquid_side = [&](auto s_at, int s_cl_slot, double gamma_cl,
                         double* ds_gdl, double* ds_cl, double* gamma_gdl,
                         double* entrained) {
    double flux[kMaxGdl + 2];  // flux[k] = N(k-1 -> k), mol/(m^2 s)
    const double s_cl = y[s_cl_slot];
    // channel -> node 0 (carries liquid out of the GDL)
    double D0 = physics::capillary_diffusivity(pos(y[s_at(0)]), und.e_cap, c);
    flux[0] = liq_mol * D0 * (0.0 - pos(y[s_at(0)])) / (0.5 * delta);
    for (int k = 1; k < n; ++k) {
      const double Dk = 0.5 * (physics::capillary_diffusivity(
                                   pos(y[s_at(k - 1)]), und.e_cap, c) +
                               physics::capillary_diffusivity(
                                   pos(y[s_at(k)]), und.e_cap, c));
      flux[k] = liq_mol * Dk * (pos(y[s_at(k - 1)]) - pos(y[s_at(k)])) / delta;
    }
    const double Dn = 0.5 * (physics::capillary_diffusivity(
                                 pos(y[s_at(n - 1)]), und.e_cap, c) +
                             physics::capillary_diffusivity(pos(s_cl),
                                                            und.e_cap, c));
    flux[n] = liq_mol * Dn * (pos(y[s_at(n - 1)]) - pos(s_cl)) /
              (0.5 * delta + 0.5 * acc.H_cl);

    double total_drain = 0.0;  // mol/(m^2 s), mist entrained to the channel
    for (int k = 0; k < n; ++k) {
      const double sk = y[s_at(k)];
      const double drain =
          c.drain_rate * drain_shape((sk - slim) / c.drain_width);
      ds_gdl[k] = ((flux[k] - flux[k + 1]) / delta + gamma_gdl[k]) /
                      (und.eps_gdl * liq_mol) -
                  drain;
      total_drain += drain * und.eps_gdl * liq_mol * delta;
    }
    const double drain_cl =
        c.drain_rate * drain_shape((s_cl - slim) / c.drain_width);
    *ds_cl = (flux[n] / acc.H_cl + gamma_cl) / (c.eps_cl * liq_mol) - drain_cl;
    total_drain += drain_cl * c.eps_cl * liq_mol * acc.H_cl;
    *entrained = total_drain;
  };

  // Phase-change rates (vapor -> liquid), mol/(m^3 s).
  double gam_agdl[kMaxGdl], gam_cgdl[kMaxGdl];
  for (int k = 0; k < n; ++k) {
    gam_agdl[k] = physics::phase_exchange(y[L.cv_agdl(k)], pos(y[L.s_agdl(k)]), T, c);
    gam_cgdl[k] = physics::phase_exchange(y[L.cv_cgdl(k)], pos(y[L.s_cgdl(k)]), T, c);
  }
  const double gam_acl =
      physics::phase_exchange(y[L.cv_acl()], pos(y[L.s_acl()]), T, c);
  const double gam_ccl =
      physics::phase_exchange(y[L.cv_ccl()], pos(y[L.s_ccl()]), T, c);

  double ds_agdl[kMaxGdl], ds_cgdl[kMaxGdl];
  double ds_acl = 0.0, ds_ccl = 0.0;
  double entrain_a = 0.0, entrain_c = 0.0;
  {
    auto s_a = [&](int k) { return L.s_agdl(k); };
    liquid_side(s_a, L.s_acl(), gam_acl, ds_agdl, &ds_acl, gam_agdl,
                &entrain_a);
    auto s_c = [&](int k) { return L.s_cgdl(k); };
    liquid_side(s_c, L.s_ccl(), gam_ccl, ds_cgdl, &ds_ccl, gam_cgdl,
                &entrain_c);
  }
  for (int k = 0; k < n; ++k) {
    dydt[L.s_agdl(k)] = ds_agdl[k];
    dydt[L.s_cgdl(k)] = ds_cgdl[k];
  }
  dydt[L.s_acl()] = ds_acl;
  dydt[L.s_ccl()] = ds_ccl;

  // ---- membrane water (sorption at both CLs, drag + diffusion inside) ----
  const double lam_acl = y[L.lambda_acl()];
  const double lam_mem = y[L.lambda_mem()];
  const double lam_ccl = y[L.lambda_ccl()];
  const double a_acl = physics::water_activity(pos(y[L.cv_acl()]), T, c);
  const double a_ccl = physics::water_activity(pos(y[L.cv_ccl()]), T, c);
  const double sorp_a = c.gamma_sorption * und.eps_mc * acc.H_cl * c_fix *
                        (physics::lambda_eq(a_acl, pos(y[L.s_acl()]), c) - lam_acl);
  const double sorp_c = c.gamma_sorption * und.eps_mc * acc.H_cl * c_fix *
                        (physics::lambda_eq(a_ccl, pos(y[L.s_ccl()]), c) - lam_ccl);

  const double d_am = 0.5 * (acc.H_cl + acc.H_mem);
  const double lam_am = 0.5 * (lam_acl + lam_mem);
  const double lam_mc = 0.5 * (lam_mem + lam_ccl);
  const double J_am =
      physics::electroosmotic_drag(lam_am, c) * i_fc / c.F -
      physics::membrane_water_diffusivity(lam_am, T, c) * c_fix *
          (lam_mem - lam_acl) / d_am;
  const double J_mc =
      physics::electroosmotic_drag(lam_mc, c) * i_fc / c.F -
      physics::membrane_water_diffusivity(lam_mc, T, c) * c_fix *
          (lam_ccl - lam_mem) / d_am;

  const double cap_cl = und.eps_mc * c_fix * acc.H_cl;
  dydt[L.lambda_acl()] = (-J_am + sorp_a) / cap_cl;
  dydt[L.lambda_mem()] = (J_am - J_mc) / (c_fix * acc.H_mem);
  dydt[L.lambda_ccl()] =
      (J_mc + sorp_c + i_fc / (2.0 * c.F)) / cap_cl;

  // ---- vapor transport ----
  auto vapor_side = [&](double cv_gc, auto cv_at, int cv_cl_slot,
                        const double* Dv, double Dv_cl, auto s_at,
                        int s_cl_slot, const double* gam, double gam_cl,
                        const double* ds, double ds_cl, double sorp_flux,
                        auto cv_slot_at, int cl_slot) {
    double flux[kMaxGdl + 2];
    flux[0] = (Dv[0] / (0.5 * delta)) * (cv_gc - y[cv_at(0)]);
    for (int k = 1; k < n; ++k)
      flux[k] = interface_conductance(delta, Dv[k - 1], delta, Dv[k]) *
                (y[cv_at(k - 1)] - y[cv_at(k)]);
    flux[n] = interface_conductance(delta, Dv[n - 1], acc.H_cl, Dv_cl) *
              (y[cv_at(n - 1)] - y[cv_cl_slot]);

    for (int k = 0; k < n; ++k) {
      const double sk = clamp01(y[s_at(k)]);
      const double porosity = und.eps_gdl * std::max(1.0 - sk, 0.05);
      dydt[cv_slot_at(k)] =
          ((flux[k] - flux[k + 1]) / delta - gam[k] +
           und.eps_gdl * pos(y[cv_at(k)]) * ds[k]) /
          porosity;
    }
    const double s_cl = clamp01(y[s_cl_slot]);
    const double por_cl = c.eps_cl * std::max(1.0 - s_cl, 0.05);
    dydt[cl_slot] = (flux[n] / acc.H_cl - gam_cl - sorp_flux / acc.H_cl +
                     c.eps_cl * pos(y[cv_cl_slot]) * ds_cl) /
                    por_cl;
    return flux[0];  // channel -> GDL vapor flux, mol/(m^2 s)
  };

  auto cv_a = [&](int k) { return L.cv_agdl(k); };
  auto s_a = [&](int k) { return L.s_agdl(k); };
  const double N_v_agdl =
      vapor_side(cv_agc, cv_a, L.cv_acl(), an.D_v, an.D_v_cl, s_a, L.s_acl(),
                 gam_agdl, gam_acl, ds_agdl, ds_acl, sorp_a, cv_a, L.cv_acl());
  auto cv_c = [&](int k) { return L.cv_cgdl(k); };
  auto s_c = [&](int k) { return L.s_cgdl(k); };
  // Cathode GDL node n-1 touches the channel; reuse the anode-side kernel by
  // viewing the cathode stack from its channel inward.
  auto cv_c_in = [&](int k) { return L.cv_cgdl(n - 1 - k); };
  auto s_c_in = [&](int k) { return L.s_cgdl(n - 1 - k); };
  double Dv_c_in[kMaxGdl], gam_c_in[kMaxGdl], ds_c_in[kMaxGdl];
  for (int k = 0; k < n; ++k) {
    Dv_c_in[k] = ca.D_v[n - 1 - k];
    gam_c_in[k] = gam_cgdl[n - 1 - k];
    ds_c_in[k] = ds_cgdl[n - 1 - k];
  }
  auto cv_slot_c_in = [&](int k) { return L.cv_cgdl(n - 1 - k); };
  const double N_v_cgdl =
      vapor_side(cv_cgc, cv_c_in, L.cv_ccl(), Dv_c_in, ca.D_v_cl, s_c_in,
                 L.s_ccl(), gam_c_in, gam_ccl, ds_c_in, ds_ccl, sorp_c,
                 cv_slot_c_in, L.cv_ccl());
  (void)cv_c;
  (void)s_c;

  // ---- reactants through the GDL conduit into the CL ----
  const double N_h2 = (ch2_agc - y[L.ch2_acl()]) / an.R_reactant;
  const double N_o2 = (co2_cgc - y[L.co2_ccl()]) / ca.R_reactant;
  {
    const double s_acl_c = clamp01(y[L.s_acl()]);
    const double por = c.eps_cl * std::max(1.0 - s_acl_c, 0.05);
    dydt[L.ch2_acl()] = (N_h2 / acc.H_cl - i_fc / (2.0 * c.F * acc.H_cl) +
                         c.eps_cl * pos(y[L.ch2_acl()]) * ds_acl) /
                        por;
    const double s_ccl_c = clamp01(y[L.s_ccl()]);
    const double por_c = c.eps_cl * std::max(1.0 - s_ccl_c, 0.05);
    dydt[L.co2_ccl()] = (N_o2 / acc.H_cl - i_fc / (4.0 * c.F * acc.H_cl) +
                         c.eps_cl * pos(y[L.co2_ccl()]) * ds_ccl) /
                        por_c;
  }

  // ---- channels (well-mixed volumes) ----
  const bool closed_anode =
      cfg.options.aux_config == AuxConfig::closed_anode_with_purge;
  const double n_in_a = ctx.aux.k_in_a * ramp_smooth(P_sm_a - P_agc, kOrificePa);
  const double n_in_c = ctx.aux.k_in_c * ramp_smooth(P_sm_c - P_cgc, kOrificePa);
  double n_out_a;
  if (closed_anode)
    n_out_a = ctx.ctrl->purge_open
                  ? ctx.aux.k_purge * ramp_smooth(P_agc - c.P_ambient, kOrificePa)
                  : 0.0;
  else
    n_out_a = ctx.aux.k_out_a * ramp_smooth(P_agc - P_em_a, kOrificePa);
  const double n_out_c = ctx.aux.k_out_c * ramp_smooth(P_cgc - P_em_c, kOrificePa);

  const double ctot_a = std::max(cv_agc + ch2_agc, 1e-6);
  const double x_v_a = cv_agc / ctot_a;
  const double ctot_c = std::max(cv_cgc + co2_cgc + c_n2, 1e-6);
  const double x_v_c = cv_cgc / ctot_c;
  const double x_o2_c = co2_cgc / ctot_c;

  // Supersaturated channel vapor condenses to mist and leaves with the flow.
  const double mist_a = c.gamma_cond * ramp_smooth(cv_agc - csat, kMistRamp);
  const double mist_c = c.gamma_cond * ramp_smooth(cv_cgc - csat, kMistRamp);

  dydt[L.cv_agc()] = (x_v_in_a * n_in_a - x_v_a * n_out_a - A * N_v_agdl) / V_gc -
                     mist_a;
  dydt[L.ch2_agc()] =
      ((1.0 - x_v_in_a) * n_in_a - (1.0 - x_v_a) * n_out_a - A * N_h2) / V_gc;
  dydt[L.cv_cgc()] = (x_v_in_c * n_in_c - x_v_c * n_out_c - A * N_v_cgdl) / V_gc -
                     mist_c;
  dydt[L.co2_cgc()] = (c.x_O2_dry * (1.0 - x_v_in_c) * n_in_c -
                       x_o2_c * n_out_c - A * N_o2) /
                      V_gc;

  // ---- manifolds and flow states ----
  const double m_mix_in_a = x_v_in_a * c.M_H2O + (1.0 - x_v_in_a) * c.M_H2;
  const double m_dry_air = c.x_O2_dry * c.M_O2 + (1.0 - c.x_O2_dry) * c.M_N2;
  const double m_mix_in_c = x_v_in_c * c.M_H2O + (1.0 - x_v_in_c) * m_dry_air;
  const double m_mix_a =
      x_v_a * c.M_H2O + (1.0 - x_v_a) * c.M_H2;
  const double m_mix_c = x_v_c * c.M_H2O + x_o2_c * c.M_O2 +
                         std::max(1.0 - x_v_c - x_o2_c, 0.0) * c.M_N2;

  const double W_in_a = pos(y[L.w_in_a()]);
  const double W_in_c = pos(y[L.w_in_c()]);
  const double W_out_a = pos(y[L.w_out_a()]);
  const double W_out_c = pos(y[L.w_out_c()]);

  // Dead-ended anodes hold pressure with a fast mechanical regulator on the
  // supply manifold; it admits gas whenever the manifold sags below P_des.
  const double n_reg_a =
      closed_anode ? ctx.aux.k_reg_a *
                         ramp_smooth(cfg.operating.P_des - P_sm_a, kOrificePa)
                   : 0.0;
  dydt[L.p_sm_a()] =
      RT / acc.V_sm_a * (W_in_a / m_mix_in_a + n_reg_a - n_in_a);
  dydt[L.p_sm_c()] = RT / acc.V_sm_c * (W_in_c / m_mix_in_c - n_in_c);
  dydt[L.p_em_a()] =
      RT / acc.V_em_a * ((closed_anode ? 0.0 : n_out_a) - W_out_a / m_mix_a);
  dydt[L.p_em_c()] = RT / acc.V_em_c * (n_out_c - W_out_c / m_mix_c);

  dydt[L.phi_sm_a()] =
      (ctx.ctrl->phi_set_a - y[L.phi_sm_a()]) / ctx.aux.tau_humidifier;
  dydt[L.phi_sm_c()] =
      (ctx.ctrl->phi_set_c - y[L.phi_sm_c()]) / ctx.aux.tau_humidifier;

  const double W_dem_a =
      inlet_demand_anode(i_fc, P_agc, cfg, ctx.ctrl->phi_set_a, ctx.aux, c);
  const double W_dem_c =
      inlet_demand_cathode(i_fc, cfg, ctx.ctrl->phi_set_c, ctx.aux, c);
  dydt[L.w_in_a()] = (W_dem_a - y[L.w_in_a()]) / ctx.aux.tau_actuator;
  dydt[L.w_in_c()] = (W_dem_c - y[L.w_in_c()]) / ctx.aux.tau_actuator;

  const double W_noz_a = nozzle_mass_flow(pos(y[L.a_bp_a()]), P_em_a,
                                          c.P_ambient, T, m_mix_a, ctx.aux, c);
  const double W_noz_c = nozzle_mass_flow(pos(y[L.a_bp_c()]), P_em_c,
                                          c.P_ambient, T, m_mix_c, ctx.aux, c);
  dydt[L.w_out_a()] = (W_noz_a - y[L.w_out_a()]) / ctx.aux.tau_flow;
  dydt[L.w_out_c()] = (W_noz_c - y[L.w_out_c()]) / ctx.aux.tau_flow;

  // Throttle areas move only at controller samples.
  dydt[L.a_bp_a()] = 0.0;
  dydt[L.a_bp_c()] = 0.0;
}

std::vector<double> assemble_rhs(double t, std::span<const double> y,
                                 const RhsContext& ctx) {
  std::vector<double> dydt(y.size());
  assemble_rhs_raw(t, y, ctx, dydt);
  for (std::size_t i = 0; i < dydt.size(); ++i)
    if (!std::isfinite(dydt[i]))
      throw NonFiniteDerivative(static_cast<int>(i), t);
  return dydt;
}

std::vector<double> initial_state(const RhsContext& ctx) {
  const Constants& c = phys();
  const FuelCellConfig& cfg = ctx.config;
  const StateLayout& L = ctx.layout;
  const int n = L.n_gdl();
  const double T = cfg.operating.T_fc;
  const double RT = c.R * T;
  const double P = cfg.operating.P_des;
  const double csat = physics::c_sat(T, c);
  const double psat = csat * RT;

  std::vector<double> y(L.size(), 0.0);

  const double phi_a = cfg.operating.Phi_a_des;
  const double phi_c = cfg.operating.Phi_c_des;
  const double cv_a = phi_a * csat;
  const double cv_c = phi_c * csat;
  const double x_v_a = phi_a * psat / P;
  const double x_v_c = phi_c * psat / P;

  y[L.cv_agc()] = cv_a;
  for (int k = 0; k < n; ++k) y[L.cv_agdl(k)] = cv_a;
  y[L.cv_acl()] = cv_a;
  y[L.cv_ccl()] = cv_c;
  for (int k = 0; k < n; ++k) y[L.cv_cgdl(k)] = cv_c;
  y[L.cv_cgc()] = cv_c;

  // saturations start dry (slots already zero)

  y[L.lambda_acl()] = physics::lambda_eq(phi_a, 0.0, c);
  y[L.lambda_mem()] =
      0.5 * (physics::lambda_eq(phi_a, 0.0, c) + physics::lambda_eq(phi_c, 0.0, c));
  y[L.lambda_ccl()] = physics::lambda_eq(phi_c, 0.0, c);

  y[L.ch2_agc()] = (1.0 - x_v_a) * P / RT;
  y[L.ch2_acl()] = y[L.ch2_agc()];
  const double c_n2 = (1.0 - x_v_c) * (1.0 - c.x_O2_dry) * P / RT;
  y[L.co2_cgc()] = std::max(P / RT - cv_c - c_n2, 1e-3);
  y[L.co2_ccl()] = y[L.co2_cgc()];

  y[L.p_sm_a()] = P;
  y[L.p_sm_c()] = P;
  y[L.p_em_a()] = cfg.options.aux_config == AuxConfig::closed_anode_with_purge
                      ? c.P_ambient
                      : P;
  y[L.p_em_c()] = P;
  y[L.phi_sm_a()] = phi_a;
  y[L.phi_sm_c()] = phi_c;

  const double i0 = ctx.profile(0.0);
  y[L.w_in_a()] = inlet_demand_anode(i0, P, cfg, phi_a, ctx.aux, c);
  y[L.w_in_c()] = inlet_demand_cathode(i0, cfg, phi_c, ctx.aux, c);
  y[L.w_out_a()] = 0.0;
  y[L.w_out_c()] = 0.0;
  y[L.a_bp_a()] = ctx.aux.A_bp_default;
  y[L.a_bp_c()] = ctx.aux.A_bp_default;
  return y;
}

DerivedQuantities derived_quantities(double t, std::span<const double> y,
                                     const RhsContext& ctx) {
  const Constants& c = phys();
  const FuelCellConfig& cfg = ctx.config;
  const StateLayout& L = ctx.layout;
  const double T = cfg.operating.T_fc;
  const double RT = c.R * T;
  const double csat = physics::c_sat(T, c);
  const double psat = csat * RT;

  DerivedQuantities d;
  d.i_fc = ctx.profile(t);

  PhysState acl{.C_v = pos(y[L.cv_acl()]),
                .s = clamp01(y[L.s_acl()]),
                .lambda_m = y[L.lambda_acl()],
                .C_H2 = pos(y[L.ch2_acl()]),
                .C_O2 = 0.0,
                .T = T};
  PhysState ccl{.C_v = pos(y[L.cv_ccl()]),
                .s = clamp01(y[L.s_ccl()]),
                .lambda_m = y[L.lambda_ccl()],
                .C_H2 = 0.0,
                .C_O2 = pos(y[L.co2_ccl()]),
                .T = T};
  const double lam_mean =
      (y[L.lambda_acl()] + y[L.lambda_mem()] + y[L.lambda_ccl()]) / 3.0;
  auto v = physics::cell_voltage(d.i_fc, cfg.accessible.H_mem, acl, ccl,
                                 lam_mean, cfg.undetermined, T, c);
  d.U_cell = v.U;
  d.collapsed = v.collapsed;

  const double cv_agc = pos(y[L.cv_agc()]);
  const double ch2_agc = pos(y[L.ch2_agc()]);
  const double cv_cgc = pos(y[L.cv_cgc()]);
  const double co2_cgc = pos(y[L.co2_cgc()]);
  const double phi_sm_c = clamp01(y[L.phi_sm_c()]);
  const double x_v_in_c =
      std::clamp(phi_sm_c * psat / std::max(y[L.p_sm_c()], 1.0), 0.0, 0.99);
  const double c_n2 =
      pos((1.0 - x_v_in_c) * (1.0 - c.x_O2_dry) * y[L.p_sm_c()] / RT);

  d.P_gc_a = (cv_agc + ch2_agc) * RT;
  d.P_gc_c = (cv_cgc + co2_cgc + c_n2) * RT;
  d.rh_a = cv_agc / csat;
  d.rh_c = cv_cgc / csat;

  // Boundary flows at the audited system envelope: supply-manifold feeds in,
  // channel exits (purge or throttle path) and mist/entrainment out.
  const bool closed_anode =
      cfg.options.aux_config == AuxConfig::closed_anode_with_purge;
  const double phi_sm_a = clamp01(y[L.phi_sm_a()]);
  const double x_v_in_a =
      std::clamp(phi_sm_a * psat / std::max(y[L.p_sm_a()], 1.0), 0.0, 0.99);
  double n_out_a;
  if (closed_anode)
    n_out_a = ctx.ctrl->purge_open
                  ? ctx.aux.k_purge *
                        ramp_smooth(d.P_gc_a - c.P_ambient, kOrificePa)
                  : 0.0;
  else
    n_out_a =
        ctx.aux.k_out_a * ramp_smooth(d.P_gc_a - y[L.p_em_a()], kOrificePa);
  const double n_out_c =
      ctx.aux.k_out_c * ramp_smooth(d.P_gc_c - y[L.p_em_c()], kOrificePa);

  const double ctot_a = std::max(cv_agc + ch2_agc, 1e-6);
  const double ctot_c = std::max(cv_cgc + co2_cgc + c_n2, 1e-6);
  const double A = cfg.accessible.A_act;
  const double V_gc =
      cfg.accessible.H_gc * cfg.accessible.W_gc * cfg.accessible.L_gc;
  const double n_reg_a =
      closed_anode
          ? ctx.aux.k_reg_a *
                ramp_smooth(cfg.operating.P_des - y[L.p_sm_a()], kOrificePa)
          : 0.0;
  const double m_mix_in_a = x_v_in_a * c.M_H2O + (1.0 - x_v_in_a) * c.M_H2;
  const double m_dry_air = c.x_O2_dry * c.M_O2 + (1.0 - c.x_O2_dry) * c.M_N2;
  const double m_mix_in_c = x_v_in_c * c.M_H2O + (1.0 - x_v_in_c) * m_dry_air;
  const double n_feed_a = pos(y[L.w_in_a()]) / m_mix_in_a + n_reg_a;
  const double n_feed_c = pos(y[L.w_in_c()]) / m_mix_in_c;

  d.n_h2_in = (1.0 - x_v_in_a) * n_feed_a;
  d.n_h2_out = (1.0 - cv_agc / ctot_a) * n_out_a;
  d.n_o2_in = c.x_O2_dry * (1.0 - x_v_in_c) * n_feed_c;
  d.n_o2_out = co2_cgc / ctot_c * n_out_c;
  d.n_h2o_in = x_v_in_a * n_feed_a + x_v_in_c * n_feed_c;
  const double mist = c.gamma_cond *
                      (ramp_smooth(cv_agc - csat, kMistRamp) +
                       ramp_smooth(cv_cgc - csat, kMistRamp)) *
                      V_gc;
  d.n_h2o_out = (cv_agc / ctot_a) * n_out_a + (cv_cgc / ctot_c) * n_out_c + mist;

  d.r_h2_consumed = d.i_fc * A / (2.0 * c.F);
  d.r_o2_consumed = d.i_fc * A / (4.0 * c.F);
  d.r_h2o_produced = d.i_fc * A / (2.0 * c.F);

  // Entrained liquid counts as water leaving the system.
  const double slim = physics::s_lim(cfg.undetermined, cfg.operating.P_des);
  const double liq_mol = c.rho_liquid / c.M_H2O;
  const int n = L.n_gdl();
  const double delta = cfg.accessible.H_gdl / n;
  double entrain = 0.0;
  for (int k = 0; k < n; ++k) {
    entrain += c.drain_rate *
               drain_shape((y[L.s_agdl(k)] - slim) / c.drain_width) *
               cfg.undetermined.eps_gdl * liq_mol * delta;
    entrain += c.drain_rate *
               drain_shape((y[L.s_cgdl(k)] - slim) / c.drain_width) *
               cfg.undetermined.eps_gdl * liq_mol * delta;
  }
  entrain += c.drain_rate * drain_shape((y[L.s_acl()] - slim) / c.drain_width) *
             c.eps_cl * liq_mol * cfg.accessible.H_cl;
  entrain += c.drain_rate * drain_shape((y[L.s_ccl()] - slim) / c.drain_width) *
             c.eps_cl * liq_mol * cfg.accessible.H_cl;
  d.n_h2o_out += entrain * A;

  // Reactant fluxes into the catalyst layers.
  const auto& und = cfg.undetermined;
  const double P_a_prop = std::max(d.P_gc_a, 1e4);
  const double P_c_prop = std::max(d.P_gc_c, 1e4);
  double R_h2 = 0.5 * cfg.accessible.H_cl /
                physics::diffusivities(c.eps_cl, und.tau, clamp01(y[L.s_acl()]),
                                       T, P_a_prop, c)
                    .h2;
  double R_o2 = 0.5 * cfg.accessible.H_cl /
                physics::diffusivities(c.eps_cl, und.tau, clamp01(y[L.s_ccl()]),
                                       T, P_c_prop, c)
                    .o2;
  for (int k = 0; k < n; ++k) {
    R_h2 += delta / physics::diffusivities(und.eps_gdl, und.tau,
                                           clamp01(y[L.s_agdl(k)]), T, P_a_prop, c)
                        .h2;
    R_o2 += delta / physics::diffusivities(und.eps_gdl, und.tau,
                                           clamp01(y[L.s_cgdl(k)]), T, P_c_prop, c)
                        .o2;
  }
  d.flux_h2_acl = (ch2_agc - y[L.ch2_acl()]) / R_h2;
  d.flux_o2_ccl = (co2_cgc - y[L.co2_ccl()]) / R_o2;

  // Net sorption into the membrane at both catalyst layers; its negative is
  // the desorbed (produced) water once lambda storage is stationary.
  {
    const double c_fix = c.rho_mem_dry / c.EW;
    const double a_acl = pos(y[L.cv_acl()]) / csat;
    const double a_ccl = pos(y[L.cv_ccl()]) / csat;
    const double sorp_a = c.gamma_sorption * cfg.undetermined.eps_mc *
                          cfg.accessible.H_cl * c_fix *
                          (physics::lambda_eq(a_acl, clamp01(y[L.s_acl()]), c) -
                           y[L.lambda_acl()]);
    const double sorp_c = c.gamma_sorption * cfg.undetermined.eps_mc *
                          cfg.accessible.H_cl * c_fix *
                          (physics::lambda_eq(a_ccl, clamp01(y[L.s_ccl()]), c) -
                           y[L.lambda_ccl()]);
    d.membrane_desorption_flux = -(sorp_a + sorp_c);
  }
  return d;
}

Inventories inventories(std::span<const double> y, const RhsContext& ctx) {
  const Constants& c = phys();
  const FuelCellConfig& cfg = ctx.config;
  const StateLayout& L = ctx.layout;
  const int n = L.n_gdl();
  const double T = cfg.operating.T_fc;
  const double RT = c.R * T;
  const double psat = physics::p_sat(T, c);
  const double A = cfg.accessible.A_act;
  const double V_gc =
      cfg.accessible.H_gc * cfg.accessible.W_gc * cfg.accessible.L_gc;
  const double delta = cfg.accessible.H_gdl / n;
  const double liq_mol = c.rho_liquid / c.M_H2O;
  const double c_fix = c.rho_mem_dry / c.EW;

  Inventories inv;

  // Hydrogen: channel, CL pores, supply manifold.
  const double x_v_sm_a =
      std::clamp(clamp01(y[L.phi_sm_a()]) * psat / std::max(y[L.p_sm_a()], 1.0),
                 0.0, 0.99);
  inv.h2 = pos(y[L.ch2_agc()]) * V_gc +
           pos(y[L.ch2_acl()]) * c.eps_cl * (1.0 - clamp01(y[L.s_acl()])) *
               cfg.accessible.H_cl * A +
           (1.0 - x_v_sm_a) * pos(y[L.p_sm_a()]) / RT * cfg.accessible.V_sm_a;

  const double x_v_sm_c =
      std::clamp(clamp01(y[L.phi_sm_c()]) * psat / std::max(y[L.p_sm_c()], 1.0),
                 0.0, 0.99);
  inv.o2 = pos(y[L.co2_cgc()]) * V_gc +
           pos(y[L.co2_ccl()]) * c.eps_cl * (1.0 - clamp01(y[L.s_ccl()])) *
               cfg.accessible.H_cl * A +
           c.x_O2_dry * (1.0 - x_v_sm_c) * pos(y[L.p_sm_c()]) / RT *
               cfg.accessible.V_sm_c;

  // Water: vapor in channels/GDL/CL, liquid, dissolved, supply manifolds.
  double w = (pos(y[L.cv_agc()]) + pos(y[L.cv_cgc()])) * V_gc;
  for (int k = 0; k < n; ++k) {
    w += pos(y[L.cv_agdl(k)]) * cfg.undetermined.eps_gdl *
         (1.0 - clamp01(y[L.s_agdl(k)])) * delta * A;
    w += pos(y[L.cv_cgdl(k)]) * cfg.undetermined.eps_gdl *
         (1.0 - clamp01(y[L.s_cgdl(k)])) * delta * A;
    w += (clamp01(y[L.s_agdl(k)]) + clamp01(y[L.s_cgdl(k)])) *
         cfg.undetermined.eps_gdl * liq_mol * delta * A;
  }
  w += pos(y[L.cv_acl()]) * c.eps_cl * (1.0 - clamp01(y[L.s_acl()])) *
       cfg.accessible.H_cl * A;
  w += pos(y[L.cv_ccl()]) * c.eps_cl * (1.0 - clamp01(y[L.s_ccl()])) *
       cfg.accessible.H_cl * A;
  w += (clamp01(y[L.s_acl()]) + clamp01(y[L.s_ccl()])) * c.eps_cl * liq_mol *
       cfg.accessible.H_cl * A;
  w += (y[L.lambda_acl()] + y[L.lambda_ccl()]) * cfg.undetermined.eps_mc *
       c_fix * cfg.accessible.H_cl * A;
  w += y[L.lambda_mem()] * c_fix * cfg.accessible.H_mem * A;
  w += x_v_sm_a * pos(y[L.p_sm_a()]) / RT * cfg.accessible.V_sm_a;
  w += x_v_sm_c * pos(y[L.p_sm_c()]) / RT * cfg.accessible.V_sm_c;
  inv.h2o = w;
  return inv;
}

double fv_interface_conductance(double d1, double D1, double d2, double D2) {
  return interface_conductance(d1, D1, d2, D2);
}

std::vector<std::string> derived_labels() {
  return {"i_fc",      "U_cell",    "P_gc_a",    "P_gc_c",   "rh_a",
          "rh_c",      "n_h2_in",   "n_h2_out",  "n_o2_in",  "n_o2_out",
          "n_h2o_in",  "n_h2o_out", "r_h2_cons", "r_o2_cons", "r_h2o_prod",
          "flux_h2_acl", "flux_o2_ccl"};
}

}  // namespace pemfc
