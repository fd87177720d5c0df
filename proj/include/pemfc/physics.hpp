#pragma once

#include "pemfc/config.hpp"
#include "pemfc/constants.hpp"

namespace pemfc {

// Local thermodynamic state at one point of the cell.
struct PhysState {
  double C_v = 0.0;       // water vapor concentration, mol/m^3
  double s = 0.0;         // liquid water saturation, [0, 1)
  double lambda_m = 0.0;  // membrane water content
  double C_H2 = 0.0;      // hydrogen concentration, mol/m^3
  double C_O2 = 0.0;      // oxygen concentration, mol/m^3
  double T = 353.15;      // temperature, K
};

namespace physics {

// Saturation pressure of water vapor, Pa. Valid on (253, 373.15) K;
// throws DomainError outside.
double p_sat(double T, const Constants& c = phys());

// Saturation concentration p_sat/(R T), mol/m^3.
double c_sat(double T, const Constants& c = phys());

// Water activity C_v/C_sat at temperature T.
double water_activity(double C_v, double T, const Constants& c = phys());

// Equilibrium membrane water content for vapor activity a_w in the presence
// of liquid saturation s. Activity is clamped to [0, 1]; liquid blends the
// isotherm toward the liquid-equilibrated content.
double lambda_eq(double a_w, double s, const Constants& c = phys());

// Protonic conductivity of the membrane, S/m, floored at sigma_floor.
double sigma_mem(double lambda_m, double T, const Constants& c = phys());

// Electro-osmotic drag coefficient (water molecules per proton).
double electroosmotic_drag(double lambda_m, const Constants& c = phys());

// Diffusivity of dissolved water in the membrane, m^2/s.
double membrane_water_diffusivity(double lambda_m, double T,
                                  const Constants& c = phys());

// Effective gas diffusion coefficients in a porous layer, m^2/s.
struct Diffusivities {
  double vapor = 0.0;  // water vapor in air
  double o2 = 0.0;     // oxygen in nitrogen
  double h2 = 0.0;     // hydrogen in water vapor
};
Diffusivities diffusivities(double eps, double tau, double s, double T,
                            double P, const Constants& c = phys());

// Free-gas binary diffusion coefficients, m^2/s.
double d_free_o2(double T, double P, const Constants& c = phys());
double d_free_vapor_in_air(double T, double P, const Constants& c = phys());
double d_free_h2(double T, double P, const Constants& c = phys());

// Reversible cell potential, V.
double equilibrium_potential(double T, const Constants& c = phys());

// Reference oxygen concentration for the activation law: O2 in dry air at
// 1 atm and the kernel reference temperature.
double c_o2_ref(const Constants& c = phys());

struct VoltageBreakdown {
  double U = 0.0;         // cell voltage, V
  double E_eq = 0.0;      // reversible potential, V
  double eta_act = 0.0;   // activation overpotential, V
  double eta_ohm = 0.0;   // ohmic loss (membrane + electronic), V
  double R_mem = 0.0;     // protonic membrane resistance, Ohm m^2
  bool collapsed = false; // oxygen below the starvation floor
};

// Cell voltage at current density i_fc (A/m^2) given the catalyst-layer
// states, membrane thickness and the mean membrane water content. A starved
// cathode is reported through `collapsed`, never thrown.
VoltageBreakdown cell_voltage(double i_fc, double H_mem,
                              const PhysState& anode_cl,
                              const PhysState& cathode_cl, double lambda_mean,
                              const UndeterminedParameters& p, double T,
                              const Constants& c = phys());

// Net vapor -> liquid conversion rate, mol/(m^3 s). Positive when
// condensing; evaporation is proportional to the liquid present.
double phase_exchange(double C_v, double s, double T,
                      const Constants& c = phys());

// Limiting liquid saturation for the entrainment drain.
double s_lim(const UndeterminedParameters& p, double P_des);

// Capillary liquid diffusivity D_cap(s), m^2/s.
double capillary_diffusivity(double s, double e_cap,
                             const Constants& c = phys());

}  // namespace physics
}  // namespace pemfc
