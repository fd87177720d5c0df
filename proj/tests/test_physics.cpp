#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>

#include "pemfc/constants.hpp"
#include "pemfc/errors.hpp"
#include "pemfc/physics.hpp"

using namespace pemfc;
using namespace pemfc::physics;

namespace {

// Independent long-double evaluation of the committed correlations; the
// frozen literals below were additionally cross-checked at 40 digits.
long double oracle_psat(long double TK) {
  const long double tc = TK - 273.15L;
  const long double l =
      -2.1794L + 0.02953L * tc - 9.1837e-5L * tc * tc + 1.4454e-7L * tc * tc * tc;
  return 1e5L * powl(10.0L, l);
}

}  // namespace

TEST_CASE("saturation pressure matches the scalar oracle") {
  // 40-digit reference: 46692.5594058442 Pa and 3189.40971307140 Pa.
  CHECK(p_sat(353.15) == doctest::Approx(46692.5594058442).epsilon(1e-12));
  CHECK(p_sat(298.15) == doctest::Approx(3189.40971307140).epsilon(1e-12));
  CHECK(p_sat(353.15) ==
        doctest::Approx(static_cast<double>(oracle_psat(353.15L))).epsilon(1e-12));
  CHECK(p_sat(298.15) ==
        doctest::Approx(static_cast<double>(oracle_psat(298.15L))).epsilon(1e-12));
}

TEST_CASE("saturation pressure is strictly increasing over its range") {
  double prev = p_sat(274.0);
  for (double T = 275.0; T < 373.0; T += 1.0) {
    const double cur = p_sat(T);
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("saturation pressure rejects out-of-range temperatures") {
  CHECK_THROWS_AS(p_sat(250.0), DomainError);
  CHECK_THROWS_AS(p_sat(380.0), DomainError);
}

TEST_CASE("sorption isotherm endpoints") {
  CHECK(lambda_eq(0.0, 0.0) == doctest::Approx(0.043).epsilon(1e-14));
  CHECK(lambda_eq(1.0, 0.0) == doctest::Approx(14.003).epsilon(1e-14));
  // Liquid-equilibrated blend at full saturation.
  CHECK(lambda_eq(1.0, 1.0 - 1e-12) == doctest::Approx(16.8).epsilon(1e-9));
  // Activity above 1 clamps to the unit-activity value.
  CHECK(lambda_eq(1.7, 0.0) == doctest::Approx(14.003).epsilon(1e-14));
}

TEST_CASE("sorption isotherm is non-decreasing in activity on [0,1]") {
  for (double s : {0.0, 0.2, 0.6}) {
    double prev = lambda_eq(0.0, s);
    for (double a = 0.01; a <= 1.0; a += 0.01) {
      const double cur = lambda_eq(a, s);
      CHECK(cur >= prev - 1e-12);
      prev = cur;
    }
  }
}

TEST_CASE("membrane conductivity") {
  CHECK(sigma_mem(14.0, 303.15) == doctest::Approx(6.8686).epsilon(1e-12));
  CHECK(sigma_mem(14.0, 353.15) > sigma_mem(14.0, 303.15));
  // Dry membrane hits the floor at any temperature.
  CHECK(sigma_mem(0.5, 303.15) == phys().sigma_floor);
  CHECK(sigma_mem(0.5, 363.15) == phys().sigma_floor);
  // Everywhere at or above the floor.
  for (double l = 0.0; l < 20.0; l += 0.5)
    for (double T = 293.15; T < 373.0; T += 10.0)
      CHECK(sigma_mem(l, T) >= phys().sigma_floor);
}

TEST_CASE("effective diffusivities") {
  const double T = 353.15, P = 101325.0;
  // No medium correction at unit porosity, unit tortuosity, dry.
  auto d0 = diffusivities(1.0, 1.0, 0.0, T, P);
  CHECK(d0.o2 == doctest::Approx(d_free_o2(T, P)).epsilon(1e-15));
  CHECK(d0.vapor == doctest::Approx(d_free_vapor_in_air(T, P)).epsilon(1e-15));
  CHECK(d0.h2 == doctest::Approx(d_free_h2(T, P)).epsilon(1e-15));

  // Free O2 diffusivity oracle: 2.2e-5*(353.15/293.15)^1.5 m^2/s.
  CHECK(d_free_o2(T, P) == doctest::Approx(2.90888564805627e-5).epsilon(1e-12));

  // Flooding limit.
  CHECK(diffusivities(0.7, 2.0, 1.0 - 1e-9, T, P).o2 ==
        doctest::Approx(0.0).epsilon(1e-12));

  // Monotonicity in s, tau, eps.
  auto d_lo_s = diffusivities(0.7, 2.0, 0.1, T, P);
  auto d_hi_s = diffusivities(0.7, 2.0, 0.4, T, P);
  CHECK(d_hi_s.o2 < d_lo_s.o2);
  CHECK(diffusivities(0.7, 3.0, 0.1, T, P).o2 < d_lo_s.o2);
  CHECK(diffusivities(0.8, 2.0, 0.1, T, P).o2 > d_lo_s.o2);
}

TEST_CASE("cell voltage at zero current and zero crossover equals E_eq") {
  UndeterminedParameters p;
  p.kappa_co = 0.0;
  PhysState acl{.C_v = 5, .s = 0, .lambda_m = 10, .C_H2 = 40, .C_O2 = 0, .T = 347.15};
  PhysState ccl{.C_v = 5, .s = 0, .lambda_m = 10, .C_H2 = 0, .C_O2 = 8, .T = 347.15};
  auto v = cell_voltage(0.0, 2e-5, acl, ccl, 10.0, p, 347.15);
  CHECK(v.U == doctest::Approx(equilibrium_potential(347.15)).epsilon(1e-14));
  CHECK(v.eta_act == doctest::Approx(0.0));
  CHECK(v.eta_ohm == doctest::Approx(0.0));
}

TEST_CASE("cell voltage monotonicity") {
  UndeterminedParameters p;
  PhysState acl{.C_v = 5, .s = 0, .lambda_m = 10, .C_H2 = 40, .C_O2 = 0, .T = 347.15};
  PhysState ccl{.C_v = 5, .s = 0, .lambda_m = 10, .C_H2 = 0, .C_O2 = 8, .T = 347.15};

  // Non-increasing in current.
  double prev = cell_voltage(0.0, 2e-5, acl, ccl, 10.0, p, 347.15).U;
  for (double i = 500.0; i <= 3e4; i += 500.0) {
    const double u = cell_voltage(i, 2e-5, acl, ccl, 10.0, p, 347.15).U;
    CHECK(u < prev);
    prev = u;
  }

  // Non-decreasing in oxygen concentration.
  auto lo = ccl;
  auto hi = ccl;
  lo.C_O2 = 4.0;
  hi.C_O2 = 12.0;
  CHECK(cell_voltage(1e4, 2e-5, acl, hi, 10.0, p, 347.15).U >
        cell_voltage(1e4, 2e-5, acl, lo, 10.0, p, 347.15).U);

  // Doubling R_elec lowers U by exactly i*R_elec.
  auto p2 = p;
  p2.R_elec = 2.0 * p.R_elec;
  const double i = 1e4;
  const double du = cell_voltage(i, 2e-5, acl, ccl, 10.0, p, 347.15).U -
                    cell_voltage(i, 2e-5, acl, ccl, 10.0, p2, 347.15).U;
  CHECK(du == doctest::Approx(i * p.R_elec).epsilon(1e-12));
}

TEST_CASE("cell voltage reports starvation instead of throwing") {
  UndeterminedParameters p;
  PhysState acl{.C_v = 5, .s = 0, .lambda_m = 10, .C_H2 = 40, .C_O2 = 0, .T = 347.15};
  PhysState ccl{.C_v = 5, .s = 0, .lambda_m = 10, .C_H2 = 0, .C_O2 = 0.005, .T = 347.15};
  auto v = cell_voltage(1e4, 2e-5, acl, ccl, 10.0, p, 347.15);
  CHECK(v.collapsed);
}

TEST_CASE("phase exchange") {
  const double T = 353.15;
  const double csat = c_sat(T);
  // Equilibrium.
  CHECK(phase_exchange(csat, 0.3, T) == doctest::Approx(0.0));
  // Nothing to evaporate when dry.
  CHECK(phase_exchange(0.5 * csat, 0.0, T) == doctest::Approx(0.0));
  // Supersaturated: condensation at gamma_cond * (C_v - C_sat).
  const double rate = phase_exchange(2.0 * csat, 0.1, T);
  CHECK(rate == doctest::Approx(phys().gamma_cond * csat).epsilon(1e-12));
  // Subsaturated with liquid present: evaporation (negative).
  CHECK(phase_exchange(0.5 * csat, 0.1, T) < 0.0);
}

TEST_CASE("kernel functions are pure") {
  for (int rep = 0; rep < 3; ++rep) {
    CHECK(p_sat(347.15) == p_sat(347.15));
    CHECK(lambda_eq(0.7, 0.1) == lambda_eq(0.7, 0.1));
    CHECK(sigma_mem(9.5, 349.0) == sigma_mem(9.5, 349.0));
    CHECK(membrane_water_diffusivity(7.0, 349.0) ==
          membrane_water_diffusivity(7.0, 349.0));
  }
}

TEST_CASE("committed constants file matches the built-in table") {
  std::ifstream in(std::string(PEMFC_SOURCE_DIR) + "/data/physics_constants.cfg",
                   std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  CHECK(buf.str() == phys().to_settings_text());
}
