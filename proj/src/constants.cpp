#include "pemfc/constants.hpp"

#include "pemfc/settings_io.hpp"

namespace pemfc {

const Constants& phys() {
  static const Constants c{};
  return c;
}

std::string Constants::to_settings_text() const {
  SettingsMap s;
  s.set_double("R", R);
  s.set_double("F", F);
  s.set_double("M_H2O", M_H2O);
  s.set_double("M_H2", M_H2);
  s.set_double("M_O2", M_O2);
  s.set_double("M_N2", M_N2);
  s.set_double("P_ref", P_ref);
  s.set_double("P_ambient", P_ambient);
  s.set_double("x_O2_dry", x_O2_dry);
  s.set_double("psat_c0", psat_c0);
  s.set_double("psat_c1", psat_c1);
  s.set_double("psat_c2", psat_c2);
  s.set_double("psat_c3", psat_c3);
  s.set_double("psat_T_min", psat_T_min);
  s.set_double("psat_T_max", psat_T_max);
  s.set_double("sorp_c0", sorp_c0);
  s.set_double("sorp_c1", sorp_c1);
  s.set_double("sorp_c2", sorp_c2);
  s.set_double("sorp_c3", sorp_c3);
  s.set_double("lambda_liquid", lambda_liquid);
  s.set_double("sigma_k1", sigma_k1);
  s.set_double("sigma_k0", sigma_k0);
  s.set_double("sigma_Ea", sigma_Ea);
  s.set_double("sigma_T0", sigma_T0);
  s.set_double("sigma_floor", sigma_floor);
  s.set_double("drag_k", drag_k);
  s.set_double("drag_lambda_ref", drag_lambda_ref);
  s.set_double("dlam_base", dlam_base);
  s.set_double("dlam_Ea", dlam_Ea);
  s.set_double("dlam_T0", dlam_T0);
  s.set_double("D_O2_N2_ref", D_O2_N2_ref);
  s.set_double("D_O2_N2_Tref", D_O2_N2_Tref);
  s.set_double("D_vap_air_ref", D_vap_air_ref);
  s.set_double("D_vap_air_Tref", D_vap_air_Tref);
  s.set_double("D_H2_vap_ref", D_H2_vap_ref);
  s.set_double("D_H2_vap_Tref", D_H2_vap_Tref);
  s.set_double("E0", E0);
  s.set_double("dE_dT", dE_dT);
  s.set_double("E_Tref", E_Tref);
  s.set_double("alpha_transfer", alpha_transfer);
  s.set_double("C_O2_act_Tref", C_O2_act_Tref);
  s.set_double("C_floor", C_floor);
  s.set_double("gamma_cond", gamma_cond);
  s.set_double("gamma_evap_coef", gamma_evap_coef);
  s.set_double("gamma_sorption", gamma_sorption);
  s.set_double("rho_liquid", rho_liquid);
  s.set_double("cap_diff_ref", cap_diff_ref);
  s.set_double("leverett_j1", leverett_j1);
  s.set_double("leverett_j2", leverett_j2);
  s.set_double("leverett_j3", leverett_j3);
  s.set_double("drain_rate", drain_rate);
  s.set_double("drain_width", drain_width);
  s.set_double("rho_mem_dry", rho_mem_dry);
  s.set_double("EW", EW);
  s.set_double("eps_cl", eps_cl);
  s.set_double("gamma_gas", gamma_gas);
  s.set_double("nozzle_cd", nozzle_cd);
  return s.to_text();
}

}  // namespace pemfc
