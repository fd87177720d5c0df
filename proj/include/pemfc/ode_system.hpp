#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pemfc/aux_system.hpp"
#include "pemfc/config.hpp"
#include "pemfc/layout.hpp"
#include "pemfc/profile.hpp"
#include "pemfc/solver.hpp"

namespace pemfc {

// Everything the right-hand side needs for one integration run. Immutable
// during the run except the referenced ControlState (purge valve, humidifier
// setpoints, controller memory), which only event handlers touch.
struct RhsContext {
  FuelCellConfig config;
  CurrentProfile profile = CurrentProfile::constant(0.0);
  StateLayout layout{5};
  AuxParams aux;
  std::shared_ptr<ControlState> ctrl = std::make_shared<ControlState>();

  static RhsContext make(const FuelCellConfig& cfg,
                         const CurrentProfile& profile);
};

// Time derivative of the full state. Finite-volume gas/vapor balances over
// the GDL nodes, capillary liquid transport, membrane water balance with
// drag/diffusion/sorption, channel and manifold filling dynamics.
// The no-throw form writes into dydt and never allocates.
void assemble_rhs_raw(double t, std::span<const double> y,
                      const RhsContext& ctx, std::span<double> dydt);

// Checked form: throws NonFiniteDerivative naming the offending slot.
std::vector<double> assemble_rhs(double t, std::span<const double> y,
                                 const RhsContext& ctx);

// Equilibrated initial state at the profile's t=0 current level: uniform
// humidity at the desired inlet value, dry GDLs, sorption-equilibrium
// membrane, manifolds at the desired pressure.
std::vector<double> initial_state(const RhsContext& ctx);

// Derived per-sample quantities for results, audits and control.
struct DerivedQuantities {
  double i_fc = 0.0;        // imposed current density, A/m^2
  double U_cell = 0.0;      // V
  bool collapsed = false;   // cathode starved
  double P_gc_a = 0.0;      // channel pressures, Pa
  double P_gc_c = 0.0;
  double rh_a = 0.0;        // channel relative humidities
  double rh_c = 0.0;
  // Boundary molar flows (mol/s), positive into the cell system.
  double n_h2_in = 0.0;     // hydrogen entering the anode channel
  double n_h2_out = 0.0;    // hydrogen leaving (purge or flow-through)
  double n_o2_in = 0.0;
  double n_o2_out = 0.0;
  double n_h2o_in = 0.0;    // vapor entering both channels
  double n_h2o_out = 0.0;   // vapor leaving + channel mist + entrained liquid
  // Faradaic rates (mol/s).
  double r_h2_consumed = 0.0;
  double r_o2_consumed = 0.0;
  double r_h2o_produced = 0.0;
  // Net water desorbed by the membrane, mol/(m^2 s); equals the production
  // flux i/(2F) once the dissolved-water storage is steady.
  double membrane_desorption_flux = 0.0;
  // GDL fluxes at the catalyst layers (mol/(m^2 s)).
  double flux_h2_acl = 0.0;
  double flux_o2_ccl = 0.0;
};

DerivedQuantities derived_quantities(double t, std::span<const double> y,
                                     const RhsContext& ctx);

// Species inventories (mol) for conservation audits: channel + catalyst
// layer + supply/exhaust manifolds per side; water counts vapor, liquid and
// dissolved phases everywhere.
struct Inventories {
  double h2 = 0.0;
  double o2 = 0.0;
  double h2o = 0.0;
};
Inventories inventories(std::span<const double> y, const RhsContext& ctx);

// Names of the derived columns appended to persisted results.
std::vector<std::string> derived_labels();

// Series conductance of two adjacent finite-volume half-cells with
// thicknesses d1, d2 and effective diffusivities D1, D2 (harmonic interface
// averaging); flux = g * (C1 - C2).
double fv_interface_conductance(double d1, double D1, double d2, double D2);

}  // namespace pemfc
