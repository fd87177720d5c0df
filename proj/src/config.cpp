#include "pemfc/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pemfc/errors.hpp"

namespace pemfc {

namespace {

void check(bool ok, const std::string& field, const std::string& msg) {
  if (!ok) throw ValidationError(field, msg);
}

void check_finite(double v, const std::string& field) {
  check(std::isfinite(v), field, "must be finite");
}

void check_positive(double v, const std::string& field) {
  check_finite(v, field);
  check(v > 0.0, field, "must be strictly positive");
}

}  // namespace

const std::array<std::string, UndeterminedParameters::kCount>&
UndeterminedParameters::names() {
  static const std::array<std::string, kCount> n = {
      "tau",      "eps_gdl", "eps_mc", "i0_c_ref", "kappa_co",
      "kappa_c",  "R_elec",  "e_cap",  "a_slim",   "b_slim"};
  return n;
}

double UndeterminedParameters::value(int k) const {
  switch (k) {
    case 0: return tau;
    case 1: return eps_gdl;
    case 2: return eps_mc;
    case 3: return i0_c_ref;
    case 4: return kappa_co;
    case 5: return kappa_c;
    case 6: return R_elec;
    case 7: return e_cap;
    case 8: return a_slim;
    case 9: return b_slim;
  }
  throw Error("undetermined parameter index out of range");
}

void UndeterminedParameters::set_value(int k, double v) {
  switch (k) {
    case 0: tau = v; return;
    case 1: eps_gdl = v; return;
    case 2: eps_mc = v; return;
    case 3: i0_c_ref = v; return;
    case 4: kappa_co = v; return;
    case 5: kappa_c = v; return;
    case 6: R_elec = v; return;
    case 7: e_cap = v; return;
    case 8: a_slim = v; return;
    case 9: b_slim = v; return;
  }
  throw Error("undetermined parameter index out of range");
}

const Bounds& UndeterminedParameters::bounds(int k) const {
  return const_cast<UndeterminedParameters*>(this)->bounds(k);
}

Bounds& UndeterminedParameters::bounds(int k) {
  switch (k) {
    case 0: return tau_bounds;
    case 1: return eps_gdl_bounds;
    case 2: return eps_mc_bounds;
    case 3: return i0_c_ref_bounds;
    case 4: return kappa_co_bounds;
    case 5: return kappa_c_bounds;
    case 6: return R_elec_bounds;
    case 7: return e_cap_bounds;
    case 8: return a_slim_bounds;
    case 9: return b_slim_bounds;
  }
  throw Error("undetermined parameter index out of range");
}

std::array<double, UndeterminedParameters::kCount>
UndeterminedParameters::as_array() const {
  std::array<double, kCount> out{};
  for (int k = 0; k < kCount; ++k) out[k] = value(k);
  return out;
}

void UndeterminedParameters::from_array(
    const std::array<double, kCount>& v) {
  for (int k = 0; k < kCount; ++k) set_value(k, v[k]);
}

std::string to_string(AuxConfig c) {
  switch (c) {
    case AuxConfig::closed_anode_with_purge: return "closed-anode-with-purge";
    case AuxConfig::flow_through: return "flow-through";
  }
  return "?";
}

AuxConfig aux_config_from_string(const std::string& s) {
  if (s == "closed-anode-with-purge") return AuxConfig::closed_anode_with_purge;
  if (s == "flow-through") return AuxConfig::flow_through;
  throw ValidationError("aux_config", "unknown tag \"" + s + "\"");
}

void FuelCellConfig::validate() const {
  const auto& op = operating;
  check_finite(op.T_fc, "T_fc");
  check(op.T_fc > 273.15 && op.T_fc < 373.15, "T_fc",
        "must lie in (273.15, 373.15) K");
  check_finite(op.P_des, "P_des");
  check(op.P_des >= 101325.0, "P_des", "must be at least 101325 Pa");
  check_finite(op.S_a, "S_a");
  check(op.S_a >= 1.0, "S_a", "must be at least 1");
  check_finite(op.S_c, "S_c");
  check(op.S_c >= 1.0, "S_c", "must be at least 1");
  check_finite(op.Phi_a_des, "Phi_a_des");
  check(op.Phi_a_des >= 0.0 && op.Phi_a_des <= 1.0, "Phi_a_des",
        "must lie in [0, 1]");
  check_finite(op.Phi_c_des, "Phi_c_des");
  check(op.Phi_c_des >= 0.0 && op.Phi_c_des <= 1.0, "Phi_c_des",
        "must lie in [0, 1]");

  const auto& ac = accessible;
  check_positive(ac.A_act, "A_act");
  check_positive(ac.H_gdl, "H_gdl");
  check_positive(ac.H_mem, "H_mem");
  check_positive(ac.H_cl, "H_cl");
  check_positive(ac.H_gc, "H_gc");
  check_positive(ac.W_gc, "W_gc");
  check_positive(ac.L_gc, "L_gc");
  check_positive(ac.V_sm_a, "V_sm_a");
  check_positive(ac.V_sm_c, "V_sm_c");
  check_positive(ac.V_em_a, "V_em_a");
  check_positive(ac.V_em_c, "V_em_c");

  for (int k = 0; k < UndeterminedParameters::kCount; ++k) {
    const std::string& name = UndeterminedParameters::names()[k];
    const Bounds& b = undetermined.bounds(k);
    check_finite(b.lo, name + "_min");
    check_finite(b.hi, name + "_max");
    check(b.lo < b.hi, name + "_min", "lower bound must be below upper bound");
    double v = undetermined.value(k);
    check_finite(v, name);
    check(b.contains(v), name,
          "value " + format_double(v) + " outside bounds [" +
              format_double(b.lo) + ", " + format_double(b.hi) + "]");
  }
  check(undetermined.eps_gdl > 0.0 && undetermined.eps_gdl < 1.0, "eps_gdl",
        "must lie in (0, 1)");

  const auto& cp = computing;
  check(cp.n_gdl >= 2, "n_gdl", "need at least 2 nodes per GDL");
  check_positive(cp.t_purge, "t_purge");
  check_positive(cp.delta_t_purge, "delta_t_purge");
  check(cp.t_purge < cp.delta_t_purge, "t_purge",
        "purge duration must be shorter than the purge interval");
  check_positive(cp.max_step, "max_step");
  check_positive(cp.i_step_resolution, "i_step_resolution");
}

SettingsMap FuelCellConfig::to_settings() const {
  SettingsMap s;
  s.set_double("T_fc", operating.T_fc);
  s.set_double("P_des", operating.P_des);
  s.set_double("S_a", operating.S_a);
  s.set_double("S_c", operating.S_c);
  s.set_double("Phi_a_des", operating.Phi_a_des);
  s.set_double("Phi_c_des", operating.Phi_c_des);

  s.set_double("A_act", accessible.A_act);
  s.set_double("H_gdl", accessible.H_gdl);
  s.set_double("H_mem", accessible.H_mem);
  s.set_double("H_cl", accessible.H_cl);
  s.set_double("H_gc", accessible.H_gc);
  s.set_double("W_gc", accessible.W_gc);
  s.set_double("L_gc", accessible.L_gc);
  s.set_double("V_sm_a", accessible.V_sm_a);
  s.set_double("V_sm_c", accessible.V_sm_c);
  s.set_double("V_em_a", accessible.V_em_a);
  s.set_double("V_em_c", accessible.V_em_c);

  for (int k = 0; k < UndeterminedParameters::kCount; ++k) {
    const std::string& name = UndeterminedParameters::names()[k];
    s.set_double(name, undetermined.value(k));
    s.set_double(name + "_min", undetermined.bounds(k).lo);
    s.set_double(name + "_max", undetermined.bounds(k).hi);
  }

  s.set_int("n_gdl", computing.n_gdl);
  s.set_double("t_purge", computing.t_purge);
  s.set_double("delta_t_purge", computing.delta_t_purge);
  s.set_double("max_step", computing.max_step);
  s.set_double("i_step_resolution", computing.i_step_resolution);

  s.set("aux_config", to_string(options.aux_config));
  s.set_bool("control_enabled", options.control_enabled);
  s.set_bool("purge_enabled", options.purge_enabled);
  return s;
}

std::string FuelCellConfig::serialize() const { return to_settings().to_text(); }

FuelCellConfig FuelCellConfig::from_settings(const SettingsMap& s) {
  FuelCellConfig c;
  c.operating.T_fc = s.get_double("T_fc");
  c.operating.P_des = s.get_double("P_des");
  c.operating.S_a = s.get_double("S_a");
  c.operating.S_c = s.get_double("S_c");
  c.operating.Phi_a_des = s.get_double("Phi_a_des");
  c.operating.Phi_c_des = s.get_double("Phi_c_des");

  c.accessible.A_act = s.get_double("A_act");
  c.accessible.H_gdl = s.get_double("H_gdl");
  c.accessible.H_mem = s.get_double("H_mem");
  c.accessible.H_cl = s.get_double("H_cl");
  c.accessible.H_gc = s.get_double("H_gc");
  c.accessible.W_gc = s.get_double("W_gc");
  c.accessible.L_gc = s.get_double("L_gc");
  c.accessible.V_sm_a = s.get_double("V_sm_a");
  c.accessible.V_sm_c = s.get_double("V_sm_c");
  c.accessible.V_em_a = s.get_double("V_em_a");
  c.accessible.V_em_c = s.get_double("V_em_c");

  for (int k = 0; k < UndeterminedParameters::kCount; ++k) {
    const std::string& name = UndeterminedParameters::names()[k];
    c.undetermined.set_value(k, s.get_double(name));
    if (s.has(name + "_min")) c.undetermined.bounds(k).lo = s.get_double(name + "_min");
    if (s.has(name + "_max")) c.undetermined.bounds(k).hi = s.get_double(name + "_max");
  }

  c.computing.n_gdl = static_cast<int>(s.get_int("n_gdl"));
  c.computing.t_purge = s.get_double("t_purge");
  c.computing.delta_t_purge = s.get_double("delta_t_purge");
  c.computing.max_step = s.get_double("max_step");
  c.computing.i_step_resolution = s.get_double("i_step_resolution");

  c.options.aux_config = aux_config_from_string(s.get_string("aux_config"));
  c.options.control_enabled = s.get_bool("control_enabled");
  c.options.purge_enabled = s.get_bool("purge_enabled");

  c.validate();
  return c;
}

FuelCellConfig parse_config(const std::string& text) {
  return FuelCellConfig::from_settings(SettingsMap::parse_text(text));
}

FuelCellConfig load_config(const std::string& path) {
  return FuelCellConfig::from_settings(SettingsMap::parse_file(path));
}

namespace {

// Single fuel cell system from EH Group, the default demonstration cell.
FuelCellConfig make_eh31() {
  FuelCellConfig c;  // struct defaults are the EH-31 values
  return c;
}

// Laboratory short-stack cell with quickCONNECT-style fixture geometry.
FuelCellConfig make_bfc50() {
  FuelCellConfig c;
  c.operating.T_fc = 353.15;
  c.operating.P_des = 1.5e5;
  c.operating.S_a = 1.5;
  c.operating.S_c = 2.2;
  c.operating.Phi_a_des = 0.6;
  c.operating.Phi_c_des = 0.6;
  c.accessible.A_act = 5.0e-3;
  c.accessible.H_gdl = 1.9e-4;
  c.accessible.H_mem = 2.5e-5;
  c.accessible.H_cl = 1.2e-5;
  c.accessible.H_gc = 4.0e-4;
  c.accessible.W_gc = 5.0e-4;
  c.accessible.L_gc = 6.0;
  c.accessible.V_sm_a = 5.0e-6;
  c.accessible.V_sm_c = 5.0e-6;
  c.accessible.V_em_a = 4.0e-6;
  c.accessible.V_em_c = 4.0e-6;
  c.undetermined.tau = 2.2;
  c.undetermined.eps_gdl = 0.75;
  c.undetermined.i0_c_ref = 1.8;
  c.undetermined.kappa_co = 18.0;
  c.options.aux_config = AuxConfig::flow_through;
  c.options.purge_enabled = false;
  return c;
}

}  // namespace

std::vector<std::string> preset_names() { return {"EH-31", "BFC-50"}; }

FuelCellConfig preset(const std::string& name) {
  FuelCellConfig c;
  if (name == "EH-31") {
    c = make_eh31();
  } else if (name == "BFC-50") {
    c = make_bfc50();
  } else {
    throw UnknownPreset(name);
  }
  c.validate();
  return c;
}

}  // namespace pemfc
