#pragma once

#include <string>

namespace pemfc {

// Universal constants and every empirical coefficient used by the physics
// kernel and the transport equations. A single instance is shared so that
// tests and external oracles read exactly the values the model computes with;
// `to_settings_text()` emits the whole table in the settings-file format
// (see data/physics_constants.cfg, regenerated by `pemfc constants dump`).
struct Constants {
  // Universal (SI)
  double R = 8.314462618;        // gas constant, J/(mol K)
  double F = 96485.33212;        // Faraday constant, C/mol
  double M_H2O = 18.01528e-3;    // kg/mol
  double M_H2 = 2.01588e-3;      // kg/mol
  double M_O2 = 31.9988e-3;      // kg/mol
  double M_N2 = 28.0134e-3;      // kg/mol
  double P_ref = 101325.0;       // Pa
  double P_ambient = 101325.0;   // exhaust discharge pressure, Pa
  double x_O2_dry = 0.2095;      // O2 mole fraction in dry air

  // Saturation pressure of water vapor, valid 0..100 C:
  //   log10(p_sat / 1 bar) = c0 + c1*Tc + c2*Tc^2 + c3*Tc^3,  Tc in Celsius
  double psat_c0 = -2.1794;
  double psat_c1 = 0.02953;
  double psat_c2 = -9.1837e-5;
  double psat_c3 = 1.4454e-7;
  double psat_T_min = 253.0;     // K, validity window
  double psat_T_max = 373.15;    // K

  // Membrane sorption isotherm lambda_eq(a) = s0 + s1*a + s2*a^2 + s3*a^3,
  // blended toward lambda_liquid when liquid water is present.
  double sorp_c0 = 0.043;
  double sorp_c1 = 17.81;
  double sorp_c2 = -39.85;
  double sorp_c3 = 36.0;
  double lambda_liquid = 16.8;   // liquid-equilibrated water content

  // Protonic conductivity sigma = (k1*lambda - k0) * exp(Ea*(1/T0 - 1/T)), S/m
  double sigma_k1 = 0.5139;
  double sigma_k0 = 0.326;
  double sigma_Ea = 1268.0;      // K
  double sigma_T0 = 303.15;      // K
  double sigma_floor = 1e-3;     // S/m, lower clamp

  // Electro-osmotic drag n_d = drag_k * lambda / drag_lambda_ref
  double drag_k = 2.5;
  double drag_lambda_ref = 22.0;

  // Dissolved-water diffusivity: piecewise-linear base in lambda (m^2/s)
  // times exp(dlam_Ea*(1/dlam_T0 - 1/T)).
  double dlam_base = 1e-10;
  double dlam_Ea = 2416.0;       // K
  double dlam_T0 = 303.15;       // K

  // Free-gas binary diffusion coefficients, D = D_ref*(T/T_ref)^1.5*(P_ref/P).
  double D_O2_N2_ref = 2.2e-5;       // m^2/s at 293.15 K, 1 atm
  double D_O2_N2_Tref = 293.15;      // K
  double D_vap_air_ref = 2.56e-5;    // m^2/s at 298.15 K, 1 atm
  double D_vap_air_Tref = 298.15;    // K
  double D_H2_vap_ref = 9.15e-5;     // m^2/s at 307.15 K, 1 atm
  double D_H2_vap_Tref = 307.15;     // K

  // Cell voltage model
  double E0 = 1.229;             // V at 298.15 K
  double dE_dT = -0.85e-3;       // V/K
  double E_Tref = 298.15;        // K
  double alpha_transfer = 0.5;   // cathodic transfer coefficient
  double C_O2_act_Tref = 353.15; // K, reference state for C_O2_ref
  double C_floor = 0.01;         // mol/m^3, starvation threshold

  // Interphase mass exchange (condensation / evaporation)
  double gamma_cond = 5e3;       // 1/s
  double gamma_evap_coef = 1e-4; // m^3/(mol s), scaled by s*rho_l/M_H2O

  // Vapor <-> dissolved water exchange at the catalyst layers
  double gamma_sorption = 3.0;   // 1/s

  // Liquid water
  double rho_liquid = 1000.0;    // kg/m^3
  double cap_diff_ref = 5e-5;    // m^2/s, capillary diffusivity scale
  double leverett_j1 = 1.417;    // dJ/ds = j1 + j2*s + j3*s^2
  double leverett_j2 = -4.24;
  double leverett_j3 = 3.789;
  double drain_rate = 10.0;      // 1/s, entrainment above s_lim
  double drain_width = 0.05;     // saturation scale of the drain onset

  // Membrane / catalyst layer structure
  double rho_mem_dry = 1980.0;   // kg/m^3
  double EW = 1.1;               // kg/mol, membrane equivalent weight
  double eps_cl = 0.25;          // catalyst-layer gas porosity

  // Compressible orifice (back-pressure throttles, purge valve)
  double gamma_gas = 1.4;        // diatomic heat-capacity ratio
  double nozzle_cd = 0.7;        // discharge coefficient

  std::string to_settings_text() const;
};

// Shared default coefficient table.
const Constants& phys();

}  // namespace pemfc
