#include <doctest.h>

#include <cmath>
#include <memory>

#include "pemfc/solver.hpp"

using namespace pemfc;

namespace {

RhsFn decay() {
  return [](double, std::span<const double> y, std::span<double> f) {
    f[0] = -y[0];
  };
}

// y' = -1000 (y - cos t) - sin t has the exact solution y = cos t for
// y(0) = 1 (the stiff transient has zero amplitude).
RhsFn stiff_cos() {
  return [](double t, std::span<const double> y, std::span<double> f) {
    f[0] = -1000.0 * (y[0] - std::cos(t)) - std::sin(t);
  };
}

RhsFn robertson() {
  return [](double, std::span<const double> y, std::span<double> f) {
    f[0] = -0.04 * y[0] + 1e4 * y[1] * y[2];
    f[2] = 3e7 * y[1] * y[1];
    f[1] = -f[0] - f[2];
  };
}

}  // namespace

TEST_CASE("exponential decay reaches e^-1 within 10 rtol") {
  for (double rtol : {1e-4, 1e-6, 1e-8}) {
    SolverSettings s;
    s.rtol = rtol;
    s.atol = 1e-12;
    double y0 = 1.0;
    auto out = integrate(decay(), std::span(&y0, 1), 0.0, 1.0, s);
    REQUIRE(out.ok());
    CHECK(std::abs(out.y_final[0] - std::exp(-1.0)) < 10.0 * rtol);
  }
}

TEST_CASE("stiff problem solved accurately in far fewer steps than explicit") {
  SolverSettings s;
  s.rtol = 1e-6;
  s.atol = 1e-9;
  double y0 = 1.0;
  auto out = integrate(stiff_cos(), std::span(&y0, 1), 0.0, 10.0, s);
  REQUIRE(out.ok());
  CHECK(std::abs(out.y_final[0] - std::cos(10.0)) < 100.0 * s.rtol);
  // An explicit method at the stability limit h ~ 2/1000 needs > 5000 steps.
  CHECK(out.diag.steps < 2000);
}

TEST_CASE("Robertson kinetics conserves the species sum to 1e-6") {
  SolverSettings s;
  s.rtol = 1e-8;
  s.atol_vec = {1e-10, 1e-14, 1e-10};
  std::vector<double> y0 = {1.0, 0.0, 0.0};
  auto out = integrate(robertson(), y0, 0.0, 1e4, s);
  REQUIRE(out.ok());
  const double sum = out.y_final[0] + out.y_final[1] + out.y_final[2];
  CHECK(std::abs(sum - 1.0) < 1e-6);

  // Cross-check the trajectory against a tighter-tolerance reference run.
  SolverSettings ref = s;
  ref.rtol = 1e-10;
  ref.atol_vec = {1e-12, 1e-16, 1e-12};
  auto gold = integrate(robertson(), y0, 0.0, 1e4, ref);
  REQUIRE(gold.ok());
  CHECK(out.y_final[0] ==
        doctest::Approx(gold.y_final[0]).epsilon(1e-4));
}

namespace {

// Global error of a fixed-step fixed-order run on y' = -y over [0, 1],
// warm-started from the exact history.
double fixed_step_error(int order, double h) {
  SolverSettings s;
  s.fixed_step = true;
  s.fixed_step_size = h;
  s.fixed_order = order;
  s.rtol = 1e-10;
  s.atol = 1e-12;
  for (int j = 1; j <= order; ++j)
    s.warm_start_history.push_back({std::exp(j * h)});
  double y0 = 1.0;
  auto out = integrate(decay(), std::span(&y0, 1), 0.0, 1.0, s);
  REQUIRE(out.ok());
  return std::abs(out.y_final[0] - std::exp(-1.0));
}

}  // namespace

TEST_CASE("measured convergence order matches the nominal BDF order") {
  const double h0 = 0.05;
  for (int order = 1; order <= 5; ++order) {
    const double e1 = fixed_step_error(order, h0);
    const double e2 = fixed_step_error(order, h0 / 2.0);
    const double measured = std::log2(e1 / e2);
    CHECK_MESSAGE(std::abs(measured - order) < 0.3, "order ", order,
                  " measured ", measured, " (e1=", e1, ", e2=", e2, ")");
  }
}

TEST_CASE("BDF-1 on y' = 0 is exact at any step") {
  SolverSettings s;
  s.fixed_step = true;
  s.fixed_step_size = 0.25;
  s.fixed_order = 1;
  auto rhs = [](double, std::span<const double>, std::span<double> f) {
    f[0] = 0.0;
  };
  double y0 = 3.5;
  auto out = integrate(rhs, std::span(&y0, 1), 0.0, 10.0, s);
  REQUIRE(out.ok());
  CHECK(out.y_final[0] == 3.5);
}

TEST_CASE("A-stability in practice at Re(lambda) = -1e6") {
  for (int order : {1, 2}) {
    SolverSettings s;
    s.fixed_step = true;
    s.fixed_step_size = 0.01;  // 5000x the explicit stability limit 2e-6
    s.fixed_order = order;
    auto rhs = [](double, std::span<const double> y, std::span<double> f) {
      f[0] = -1e6 * y[0];
    };
    double y0 = 1.0;
    auto out = integrate(rhs, std::span(&y0, 1), 0.0, 1.0, s);
    REQUIRE(out.ok());
    CHECK(std::isfinite(out.y_final[0]));
    CHECK(std::abs(out.y_final[0]) < 1e-3);
  }
}

TEST_CASE("identical inputs produce identical outputs") {
  SolverSettings s;
  s.rtol = 1e-7;
  std::vector<double> y0 = {1.0, 0.0, 0.0};
  auto a = integrate(robertson(), y0, 0.0, 100.0, s);
  auto b = integrate(robertson(), y0, 0.0, 100.0, s);
  REQUIRE(a.ok());
  REQUIRE(a.times.size() == b.times.size());
  for (std::size_t i = 0; i < a.times.size(); ++i) {
    CHECK(a.times[i] == b.times[i]);
    CHECK(a.states[i] == b.states[i]);
  }
  CHECK(a.diag.steps == b.diag.steps);
}

TEST_CASE("halving rtol never inflates the error by more than 2x") {
  // Error measured in max norm over the whole trajectory; endpoint error
  // alone can be accidentally small through cancellation.
  std::vector<double> samples;
  for (double t = 0.05; t <= 1.0 + 1e-12; t += 0.05) samples.push_back(t);
  double y0 = 1.0;
  double prev_err = -1.0;
  for (double rtol = 1e-4; rtol > 1e-10; rtol /= 2.0) {
    SolverSettings s;
    s.rtol = rtol;
    s.atol = 1e-13;
    auto out = integrate(decay(), std::span(&y0, 1), 0.0, 1.0, s, {}, samples);
    REQUIRE(out.ok());
    double err = 0.0;
    for (std::size_t i = 0; i < out.times.size(); ++i)
      err = std::max(err,
                     std::abs(out.states[i][0] - std::exp(-out.times[i])));
    if (prev_err >= 0.0) CHECK(err <= 2.0 * prev_err + 1e-15);
    prev_err = err;
  }
}

TEST_CASE("dense output matches the analytic solution at requested times") {
  SolverSettings s;
  s.rtol = 1e-8;
  s.atol = 1e-12;
  std::vector<double> samples;
  for (double t = 0.0; t <= 5.0 + 1e-12; t += 0.1) samples.push_back(t);
  double y0 = 1.0;
  auto out = integrate(decay(), std::span(&y0, 1), 0.0, 5.0, s, {}, samples);
  REQUIRE(out.ok());
  REQUIRE(out.times.size() == samples.size());
  for (std::size_t i = 0; i < out.times.size(); ++i)
    CHECK(out.states[i][0] ==
          doctest::Approx(std::exp(-out.times[i])).epsilon(1e-6));
}

TEST_CASE("terminal event located at the analytic crossing time") {
  SolverSettings s;
  s.rtol = 1e-9;
  s.atol = 1e-12;
  EventSpec ev;
  ev.fn = [](double, std::span<const double> y) { return y[0] - 0.5; };
  ev.direction = -1;
  ev.terminal = true;
  ev.label = "half-value";
  double y0 = 1.0;
  const double tf = 5.0;
  auto out = integrate(decay(), std::span(&y0, 1), 0.0, tf, s, {ev});
  REQUIRE(out.reason == Termination::terminal_event);
  CHECK(std::abs(out.t_final - std::log(2.0)) < 1e-6 * tf);
  REQUIRE(out.events.size() == 1);
  CHECK(out.events[0].label == "half-value");
}

TEST_CASE("direction filter suppresses crossings of the wrong sign") {
  SolverSettings s;
  EventSpec ev;
  ev.fn = [](double, std::span<const double> y) { return y[0] - 0.5; };
  ev.direction = +1;  // rising only; decay crosses falling
  ev.terminal = true;
  double y0 = 1.0;
  auto out = integrate(decay(), std::span(&y0, 1), 0.0, 5.0, s, {ev});
  CHECK(out.reason == Termination::reached_end);
  CHECK(out.events.empty());
}

TEST_CASE("state-modifying scheduled events restart cleanly") {
  // dy/dt = 0; an event fires every 1 s and bumps y by 1.
  auto next = std::make_shared<double>(1.0);
  EventSpec ev;
  ev.fn = [next](double t, std::span<const double>) { return t - *next; };
  ev.direction = +1;
  ev.handler = [next](double, std::vector<double>& y) {
    y[0] += 1.0;
    *next += 1.0;
    return EventOutcome::modified;
  };
  ev.label = "bump";
  auto rhs = [](double, std::span<const double>, std::span<double> f) {
    f[0] = 0.0;
  };
  SolverSettings s;
  s.max_step = 0.7;
  double y0 = 0.0;
  auto out = integrate(rhs, std::span(&y0, 1), 0.0, 3.5, s, {ev});
  REQUIRE(out.ok());
  CHECK(out.events.size() == 3);
  CHECK(out.y_final[0] == doctest::Approx(3.0));
  for (std::size_t k = 0; k < out.events.size(); ++k)
    CHECK(out.events[k].t == doctest::Approx(k + 1.0).epsilon(1e-7));
}

TEST_CASE("max_step is honored") {
  SolverSettings s;
  s.max_step = 0.125;
  double y0 = 1.0;
  auto out = integrate(decay(), std::span(&y0, 1), 0.0, 2.0, s);
  REQUIRE(out.ok());
  for (std::size_t i = 1; i < out.times.size(); ++i)
    CHECK(out.times[i] - out.times[i - 1] <= 0.125 + 1e-12);
}

TEST_CASE("settings validation") {
  SolverSettings s;
  s.rtol = 0.0;
  CHECK_THROWS(integrate(decay(), std::span<const double>{}, 0.0, 1.0, s));
  SolverSettings s2;
  s2.max_order = 9;
  double y0 = 1.0;
  CHECK_THROWS(integrate(decay(), std::span(&y0, 1), 0.0, 1.0, s2));
}
