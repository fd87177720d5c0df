#include "pemfc/physics.hpp"

#include <algorithm>
#include <cmath>

#include "pemfc/errors.hpp"

namespace pemfc::physics {

double p_sat(double T, const Constants& c) {
  if (!(T > c.psat_T_min && T < c.psat_T_max))
    throw DomainError("p_sat: temperature " + format_double(T) +
                      " K outside (" + format_double(c.psat_T_min) + ", " +
                      format_double(c.psat_T_max) + ")");
  const double tc = T - 273.15;
  const double log10p =
      c.psat_c0 + tc * (c.psat_c1 + tc * (c.psat_c2 + tc * c.psat_c3));
  return 1e5 * std::pow(10.0, log10p);
}

double c_sat(double T, const Constants& c) { return p_sat(T, c) / (c.R * T); }

double water_activity(double C_v, double T, const Constants& c) {
  return std::max(0.0, C_v) / c_sat(T, c);
}

double lambda_eq(double a_w, double s, const Constants& c) {
  const double a = std::clamp(a_w, 0.0, 1.0);
  const double sl = std::clamp(s, 0.0, 1.0);
  const double vap =
      c.sorp_c0 + a * (c.sorp_c1 + a * (c.sorp_c2 + a * c.sorp_c3));
  return (1.0 - sl) * vap + sl * c.lambda_liquid;
}

double sigma_mem(double lambda_m, double T, const Constants& c) {
  const double arr = std::exp(c.sigma_Ea * (1.0 / c.sigma_T0 - 1.0 / T));
  const double sigma = (c.sigma_k1 * lambda_m - c.sigma_k0) * arr;
  return std::max(c.sigma_floor, sigma);
}

double electroosmotic_drag(double lambda_m, const Constants& c) {
  return c.drag_k * std::max(0.0, lambda_m) / c.drag_lambda_ref;
}

double membrane_water_diffusivity(double lambda_m, double T,
                                  const Constants& c) {
  const double l = std::max(0.0, lambda_m);
  double base;  // piecewise in lambda, units of dlam_base
  if (l < 2.0) {
    base = 1.0;
  } else if (l <= 3.0) {
    base = 1.0 + 2.0 * (l - 2.0);
  } else if (l < 4.5) {
    base = 3.0 - 1.67 * (l - 3.0);
  } else {
    base = 1.25;
  }
  return c.dlam_base * base *
         std::exp(c.dlam_Ea * (1.0 / c.dlam_T0 - 1.0 / T));
}

namespace {
double d_free(double d_ref, double t_ref, double T, double P,
              const Constants& c) {
  return d_ref * std::pow(T / t_ref, 1.5) * (c.P_ref / P);
}
}  // namespace

double d_free_o2(double T, double P, const Constants& c) {
  return d_free(c.D_O2_N2_ref, c.D_O2_N2_Tref, T, P, c);
}

double d_free_vapor_in_air(double T, double P, const Constants& c) {
  return d_free(c.D_vap_air_ref, c.D_vap_air_Tref, T, P, c);
}

double d_free_h2(double T, double P, const Constants& c) {
  return d_free(c.D_H2_vap_ref, c.D_H2_vap_Tref, T, P, c);
}

Diffusivities diffusivities(double eps, double tau, double s, double T,
                            double P, const Constants& c) {
  const double sl = std::clamp(s, 0.0, 1.0);
  const double medium = std::pow(eps, tau) * std::pow(1.0 - sl, tau);
  return Diffusivities{
      .vapor = d_free_vapor_in_air(T, P, c) * medium,
      .o2 = d_free_o2(T, P, c) * medium,
      .h2 = d_free_h2(T, P, c) * medium,
  };
}

double equilibrium_potential(double T, const Constants& c) {
  return c.E0 + c.dE_dT * (T - c.E_Tref);
}

double c_o2_ref(const Constants& c) {
  return c.x_O2_dry * c.P_ref / (c.R * c.C_O2_act_Tref);
}

VoltageBreakdown cell_voltage(double i_fc, double H_mem,
                              const PhysState& /*anode_cl*/,
                              const PhysState& cathode_cl, double lambda_mean,
                              const UndeterminedParameters& p, double T,
                              const Constants& c) {
  VoltageBreakdown out;
  out.E_eq = equilibrium_potential(T, c);

  const double c_o2 = cathode_cl.C_O2;
  if (c_o2 <= c.C_floor && i_fc + p.kappa_co > 0.0) {
    out.collapsed = true;
    return out;
  }

  const double i0_eff =
      p.i0_c_ref * std::pow(c_o2 / c_o2_ref(c), p.kappa_c);
  out.eta_act = (c.R * T) / (c.alpha_transfer * c.F) *
                std::asinh((i_fc + p.kappa_co) / (2.0 * i0_eff));

  out.R_mem = H_mem / sigma_mem(lambda_mean, T, c);
  out.eta_ohm = i_fc * (out.R_mem + p.R_elec);
  out.U = out.E_eq - out.eta_act - out.eta_ohm;
  return out;
}

double phase_exchange(double C_v, double s, double T, const Constants& c) {
  const double csat = c_sat(T, c);
  const double excess = C_v - csat;
  const double gamma_evap =
      c.gamma_evap_coef * std::clamp(s, 0.0, 1.0) * c.rho_liquid / c.M_H2O;
  // The rate constant blends smoothly between the evaporation and
  // condensation branches over a narrow band around saturation; an abrupt
  // switch of a 5e3 1/s mode defeats the Newton iteration of implicit
  // integrators. The rate itself stays proportional to (C_v - C_sat).
  const double w = 5e-3 * csat;
  const double x = excess / w;
  double blend;  // 0 -> evaporation branch, 1 -> condensation branch
  if (x > 40.0)
    blend = 1.0;
  else if (x < -40.0)
    blend = 0.0;
  else
    blend = 1.0 / (1.0 + std::exp(-x));
  const double gamma = gamma_evap + (c.gamma_cond - gamma_evap) * blend;
  return gamma * excess;
}

double s_lim(const UndeterminedParameters& p, double P_des) {
  return p.a_slim * (P_des / 1e5) + p.b_slim;
}

double capillary_diffusivity(double s, double e_cap, const Constants& c) {
  const double sl = std::clamp(s, 0.0, 1.0);
  const double dj_ds =
      c.leverett_j1 + sl * (c.leverett_j2 + sl * c.leverett_j3);
  return e_cap * c.cap_diff_ref * sl * sl * sl * dj_ds;
}

}  // namespace pemfc::physics
