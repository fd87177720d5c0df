#pragma once

#include <array>
#include <string>
#include <vector>

#include "pemfc/settings_io.hpp"

namespace pemfc {

// Cell temperature, gas pressures, stoichiometries and inlet humidities the
// system is driven toward.
struct OperatingConditions {
  double T_fc = 347.15;      // cell temperature, K
  double P_des = 2.0e5;      // desired channel pressure, Pa
  double S_a = 1.2;          // anode stoichiometric ratio
  double S_c = 2.0;          // cathode stoichiometric ratio
  double Phi_a_des = 0.5;    // desired anode inlet relative humidity
  double Phi_c_des = 0.8;    // desired cathode inlet relative humidity

  bool operator==(const OperatingConditions&) const = default;
};

// Measurable cell geometry.
struct AccessibleParameters {
  double A_act = 8.5e-3;     // active area, m^2
  double H_gdl = 2.0e-4;     // gas diffusion layer thickness, m
  double H_mem = 2.0e-5;     // membrane thickness, m
  double H_cl = 1.0e-5;      // catalyst layer thickness, m
  double H_gc = 5.0e-4;      // gas channel height, m
  double W_gc = 4.5e-4;      // gas channel width, m
  double L_gc = 9.0;         // cumulated gas channel length, m
  double V_sm_a = 7.0e-6;    // anode supply manifold volume, m^3
  double V_sm_c = 7.0e-6;    // cathode supply manifold volume, m^3
  double V_em_a = 6.0e-6;    // anode exhaust manifold volume, m^3
  double V_em_c = 6.0e-6;    // cathode exhaust manifold volume, m^3

  bool operator==(const AccessibleParameters&) const = default;
};

struct Bounds {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Bounds&) const = default;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

// Calibratable physical parameters, each carrying its admissible interval.
struct UndeterminedParameters {
  double tau = 2.5;          // GDL tortuosity
  double eps_gdl = 0.7;      // GDL porosity
  double eps_mc = 0.27;      // ionomer volume fraction in the catalyst layer
  double i0_c_ref = 2.79;    // reference cathode exchange current density, A/m^2
  double kappa_co = 25.0;    // crossover-equivalent current density, A/m^2
  double kappa_c = 1.6;      // concentration-loss exponent
  double R_elec = 5.7e-7;    // electron-conduction resistance, Ohm m^2
  double e_cap = 2.0;        // capillary-flow scaling coefficient
  double a_slim = 0.05;      // limiting-saturation law, pressure slope
  double b_slim = 0.11;      // limiting-saturation law, offset

  Bounds tau_bounds{1.0, 4.0};
  Bounds eps_gdl_bounds{0.5, 0.9};
  Bounds eps_mc_bounds{0.15, 0.4};
  Bounds i0_c_ref_bounds{1e-3, 500.0};
  Bounds kappa_co_bounds{0.01, 40.0};
  Bounds kappa_c_bounds{0.25, 4.0};
  Bounds R_elec_bounds{1e-7, 1e-4};
  Bounds e_cap_bounds{1.0, 5.0};
  Bounds a_slim_bounds{0.0, 0.2};
  Bounds b_slim_bounds{0.0, 1.0};

  static constexpr int kCount = 10;
  static const std::array<std::string, kCount>& names();
  double value(int k) const;
  void set_value(int k, double v);
  const Bounds& bounds(int k) const;
  Bounds& bounds(int k);
  std::array<double, kCount> as_array() const;
  void from_array(const std::array<double, kCount>& v);

  bool operator==(const UndeterminedParameters&) const = default;
};

// Numerical discretization and scheduling knobs.
struct ComputingParameters {
  int n_gdl = 5;                  // finite-volume nodes per GDL
  double t_purge = 0.6;           // purge duration, s
  double delta_t_purge = 15.0;    // interval between purge starts, s
  double max_step = 5.0;          // solver max time step, s
  double i_step_resolution = 1000.0;  // polarization staircase increment, A/m^2

  bool operator==(const ComputingParameters&) const = default;
};

enum class AuxConfig { closed_anode_with_purge, flow_through };

std::string to_string(AuxConfig c);
AuxConfig aux_config_from_string(const std::string& s);

struct SimulationOptions {
  AuxConfig aux_config = AuxConfig::closed_anode_with_purge;
  bool control_enabled = true;
  bool purge_enabled = true;

  bool operator==(const SimulationOptions&) const = default;
};

struct FuelCellConfig {
  OperatingConditions operating;
  AccessibleParameters accessible;
  UndeterminedParameters undetermined;
  ComputingParameters computing;
  SimulationOptions options;

  // Throws ValidationError naming the first violated field.
  void validate() const;

  SettingsMap to_settings() const;
  std::string serialize() const;
  static FuelCellConfig from_settings(const SettingsMap& s);

  bool operator==(const FuelCellConfig&) const = default;
};

FuelCellConfig load_config(const std::string& path);
FuelCellConfig parse_config(const std::string& text);

// Preset registry of real single-cell systems.
std::vector<std::string> preset_names();
FuelCellConfig preset(const std::string& name);

}  // namespace pemfc
