#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "pemfc/config.hpp"
#include "pemfc/errors.hpp"

using namespace pemfc;

TEST_CASE("settings format parses keys, comments and blank lines") {
  auto s = SettingsMap::parse_text(
      "# header comment\n"
      "T_fc = 353.15\n"
      "\n"
      "P_des = 2.0e5   # trailing comment\n"
      "name = EH-31\n");
  CHECK(s.get_double("T_fc") == doctest::Approx(353.15));
  CHECK(s.get_double("P_des") == doctest::Approx(2.0e5));
  CHECK(s.get_string("name") == "EH-31");
}

TEST_CASE("settings parse errors carry line numbers") {
  try {
    SettingsMap::parse_text("a = 1\nnot a key value line\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("config fields survive a parse of explicit values") {
  FuelCellConfig base;
  base.operating.T_fc = 353.15;
  base.operating.P_des = 2.0e5;
  base.operating.S_c = 2.0;
  auto c = parse_config(base.serialize());
  CHECK(c.operating.T_fc == 353.15);
  CHECK(c.operating.P_des == 2.0e5);
  CHECK(c.operating.S_c == 2.0);
}

TEST_CASE("stoichiometry below one is rejected and names the field") {
  FuelCellConfig c;
  c.operating.S_c = 0.5;
  try {
    parse_config(c.serialize());
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.field() == "S_c");
  }
}

TEST_CASE("preset registry") {
  auto c = preset("EH-31");
  CHECK_NOTHROW(c.validate());
  CHECK_THROWS_AS(preset("nonexistent"), UnknownPreset);

  // Serialization round-trip of a preset is the identity.
  auto again = parse_config(c.serialize());
  CHECK(again == c);
}

TEST_CASE("preset matches the committed preset file") {
  // The presets/ directory ships one settings file per cell; they are
  // generated from the registry and must stay in sync with it.
  namespace fs = std::filesystem;
  fs::path dir = fs::path(PEMFC_SOURCE_DIR) / "presets";
  for (const auto& name : preset_names()) {
    fs::path file = dir / (name + ".cfg");
    REQUIRE_MESSAGE(fs::exists(file), "missing preset file ", file.string());
    auto from_file = load_config(file.string());
    CHECK_MESSAGE(from_file == preset(name), "preset drift: ", name);
  }
}

TEST_CASE("EH-31 geometry fields equal the committed preset file") {
  namespace fs = std::filesystem;
  auto from_file =
      load_config((fs::path(PEMFC_SOURCE_DIR) / "presets" / "EH-31.cfg").string());
  auto reg = preset("EH-31");
  CHECK(from_file.accessible.A_act == reg.accessible.A_act);
  CHECK(from_file.accessible.H_gdl == reg.accessible.H_gdl);
  CHECK(from_file.accessible.H_mem == reg.accessible.H_mem);
  CHECK(from_file.accessible.H_cl == reg.accessible.H_cl);
}

namespace {

FuelCellConfig random_valid_config(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto pick = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  FuelCellConfig c;
  c.operating.T_fc = pick(300.0, 368.0);
  c.operating.P_des = pick(101325.0, 4e5);
  c.operating.S_a = pick(1.0, 3.0);
  c.operating.S_c = pick(1.0, 4.0);
  c.operating.Phi_a_des = u01(rng);
  c.operating.Phi_c_des = u01(rng);
  c.accessible.A_act = pick(1e-4, 0.05);
  c.accessible.H_gdl = pick(5e-5, 5e-4);
  c.accessible.H_mem = pick(5e-6, 1e-4);
  c.accessible.H_cl = pick(2e-6, 3e-5);
  c.accessible.H_gc = pick(1e-4, 1e-3);
  c.accessible.W_gc = pick(1e-4, 1e-3);
  c.accessible.L_gc = pick(0.5, 20.0);
  c.accessible.V_sm_a = pick(1e-6, 1e-4);
  c.accessible.V_sm_c = pick(1e-6, 1e-4);
  c.accessible.V_em_a = pick(1e-6, 1e-4);
  c.accessible.V_em_c = pick(1e-6, 1e-4);
  for (int k = 0; k < UndeterminedParameters::kCount; ++k) {
    const Bounds& b = c.undetermined.bounds(k);
    c.undetermined.set_value(k, pick(b.lo, b.hi));
  }
  if (c.undetermined.eps_gdl >= 1.0) c.undetermined.eps_gdl = 0.9;
  c.computing.n_gdl = 2 + static_cast<int>(u01(rng) * 15);
  c.computing.delta_t_purge = pick(5.0, 60.0);
  c.computing.t_purge = pick(0.05, 0.9) * c.computing.delta_t_purge;
  c.computing.max_step = pick(0.01, 10.0);
  c.computing.i_step_resolution = pick(100.0, 5000.0);
  c.options.aux_config = u01(rng) < 0.5 ? AuxConfig::closed_anode_with_purge
                                        : AuxConfig::flow_through;
  c.options.control_enabled = u01(rng) < 0.5;
  c.options.purge_enabled = u01(rng) < 0.5;
  return c;
}

}  // namespace

TEST_CASE("serialize -> parse is the identity on randomized valid configs") {
  std::mt19937_64 rng(20240811);
  for (int i = 0; i < 1000; ++i) {
    auto c = random_valid_config(rng);
    REQUIRE_NOTHROW(c.validate());
    auto back = parse_config(c.serialize());
    REQUIRE(back == c);
  }
}

TEST_CASE("validation rejects each single-field violation independently") {
  std::mt19937_64 rng(7);
  auto base = random_valid_config(rng);
  base.validate();

  struct Case {
    const char* field;
    void (*mutate)(FuelCellConfig&);
  };
  const Case cases[] = {
      {"T_fc", [](FuelCellConfig& c) { c.operating.T_fc = 273.15; }},
      {"T_fc", [](FuelCellConfig& c) { c.operating.T_fc = 380.0; }},
      {"P_des", [](FuelCellConfig& c) { c.operating.P_des = 9e4; }},
      {"S_a", [](FuelCellConfig& c) { c.operating.S_a = 0.99; }},
      {"S_c", [](FuelCellConfig& c) { c.operating.S_c = 0.0; }},
      {"Phi_a_des", [](FuelCellConfig& c) { c.operating.Phi_a_des = -0.1; }},
      {"Phi_c_des", [](FuelCellConfig& c) { c.operating.Phi_c_des = 1.2; }},
      {"A_act", [](FuelCellConfig& c) { c.accessible.A_act = 0.0; }},
      {"H_gdl", [](FuelCellConfig& c) { c.accessible.H_gdl = -1e-4; }},
      {"n_gdl", [](FuelCellConfig& c) { c.computing.n_gdl = 1; }},
      {"t_purge",
       [](FuelCellConfig& c) { c.computing.t_purge = c.computing.delta_t_purge; }},
      {"max_step", [](FuelCellConfig& c) { c.computing.max_step = 0.0; }},
      {"tau", [](FuelCellConfig& c) { c.undetermined.tau = 5.0; }},
      {"eps_gdl", [](FuelCellConfig& c) { c.undetermined.eps_gdl = 0.2; }},
      {"i0_c_ref", [](FuelCellConfig& c) { c.undetermined.i0_c_ref = 0.0; }},
  };
  for (const auto& tc : cases) {
    auto c = base;
    tc.mutate(c);
    try {
      c.validate();
      FAIL_CHECK("expected ValidationError for ", tc.field);
    } catch (const ValidationError& e) {
      CHECK_MESSAGE(e.field() == tc.field, "field ", e.field(), " vs ",
                    tc.field);
    }
  }
}

TEST_CASE("every undetermined parameter lies within its bounds after parsing") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 50; ++i) {
    auto c = parse_config(random_valid_config(rng).serialize());
    for (int k = 0; k < UndeterminedParameters::kCount; ++k)
      CHECK(c.undetermined.bounds(k).contains(c.undetermined.value(k)));
  }
}
