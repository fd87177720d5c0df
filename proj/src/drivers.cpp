#include "pemfc/drivers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

#include "pemfc/errors.hpp"
#include "pemfc/physics.hpp"

namespace pemfc {

namespace {

RhsFn make_rhs(const RhsContext& ctx) {
  return [&ctx](double t, std::span<const double> y, std::span<double> dydt) {
    assemble_rhs_raw(t, y, ctx, dydt);
  };
}

EventSpec collapse_event(const RhsContext& ctx) {
  EventSpec ev;
  ev.label = "voltage_collapse";
  ev.direction = -1;
  ev.terminal = true;
  const int slot = ctx.layout.co2_ccl();
  const double floor = phys().C_floor;
  ev.fn = [slot, floor](double, std::span<const double> y) {
    return y[slot] - floor;
  };
  return ev;
}

EventSpec starvation_event(const RhsContext& ctx) {
  EventSpec ev;
  ev.label = "anode_starvation";
  ev.direction = -1;
  ev.terminal = true;
  const int slot = ctx.layout.ch2_acl();
  const double floor = phys().C_floor;
  ev.fn = [slot, floor](double, std::span<const double> y) {
    return y[slot] - floor;
  };
  return ev;
}

std::vector<EventSpec> run_events(const RhsContext& ctx, double t0) {
  std::vector<EventSpec> events;
  events.push_back(collapse_event(ctx));
  events.push_back(starvation_event(ctx));
  if (ctx.config.options.purge_enabled &&
      ctx.config.options.aux_config == AuxConfig::closed_anode_with_purge) {
    PurgeSchedule sched;
    sched.enabled = true;
    sched.t_purge = ctx.config.computing.t_purge;
    sched.delta_t_purge = ctx.config.computing.delta_t_purge;
    for (auto& e : purge_events(sched, t0, ctx.ctrl)) events.push_back(e);
  }
  for (auto& e : control_events(ctx, t0)) events.push_back(e);
  return events;
}

SolverSettings solver_settings(const RhsContext& ctx, double rtol,
                               double atol) {
  SolverSettings s;
  s.rtol = rtol;
  s.atol = atol;
  s.max_step = ctx.config.computing.max_step;
  return s;
}

std::vector<double> uniform_samples(double t0, double t1, double dt) {
  std::vector<double> out;
  for (double t = t0; t < t1 - 1e-9 * std::max(1.0, std::abs(t1)); t += dt)
    out.push_back(t);
  out.push_back(t1);
  return out;
}

}  // namespace

std::vector<EventSpec> control_events(const RhsContext& ctx, double t0) {
  if (!ctx.config.options.control_enabled) return {};
  auto next = std::make_shared<double>(t0 + ctx.aux.control_dt);
  const double dt = ctx.aux.control_dt;
  // The context outlives the integration; capture what the handler needs.
  const RhsContext* cp = &ctx;

  EventSpec ev;
  ev.label = "controller";
  ev.direction = +1;
  ev.fn = [next](double t, std::span<const double>) { return t - *next; };
  ev.handler = [cp, next, dt](double t, std::vector<double>& y) {
    *next += dt;
    auto d = derived_quantities(t, y, *cp);
    ControlInputs in;
    in.P_gc_a = d.P_gc_a;
    in.P_gc_c = d.P_gc_c;
    in.rh_a = d.rh_a;
    in.rh_c = d.rh_c;
    const StateLayout& L = cp->layout;
    in.A_bp_a = y[L.a_bp_a()];
    in.A_bp_c = y[L.a_bp_c()];
    auto cmd = control_step(in, cp->config.operating, cp->config.options, dt,
                            cp->ctrl->pi, cp->aux);
    if (cmd.saturated) ++cp->ctrl->controller_saturations;
    const double tol_a = 1e-9 * cp->aux.A_bp_max;
    const bool moved = std::abs(cmd.A_bp_a - y[L.a_bp_a()]) > tol_a ||
                       std::abs(cmd.A_bp_c - y[L.a_bp_c()]) > tol_a ||
                       std::abs(cmd.phi_set_a - cp->ctrl->phi_set_a) > 1e-9 ||
                       std::abs(cmd.phi_set_c - cp->ctrl->phi_set_c) > 1e-9;
    y[L.a_bp_a()] = cmd.A_bp_a;
    y[L.a_bp_c()] = cmd.A_bp_c;
    cp->ctrl->phi_set_a = cmd.phi_set_a;
    cp->ctrl->phi_set_c = cmd.phi_set_c;
    return moved ? EventOutcome::modified : EventOutcome::unchanged;
  };
  return {ev};
}

namespace {

// Settle the state at the profile's initial current: integrate with early
// exit once the voltage slope falls below the detection threshold.
void equilibrate(RhsContext& ctx, std::vector<double>& y, double i_level,
                 double t_max, double rtol, double atol) {
  CurrentProfile hold = CurrentProfile::constant(i_level);
  std::swap(ctx.profile, hold);
  auto rhs = make_rhs(ctx);
  auto events = run_events(ctx, 0.0);
  SolverSettings s = solver_settings(ctx, rtol, atol);

  const double chunk = 10.0;
  std::vector<double> ut, uu;
  double t = 0.0;
  while (t < t_max) {
    const double t1 = std::min(t + chunk, t_max);
    auto out = integrate(rhs, y, t, t1, s, events,
                         uniform_samples(t, t1, 1.0));
    if (!out.ok()) break;
    for (std::size_t k = 0; k < out.times.size(); ++k) {
      ut.push_back(out.times[k]);
      uu.push_back(derived_quantities(out.times[k], out.states[k], ctx).U_cell);
    }
    y = out.y_final;
    t = out.t_final;
    if (ut.size() > 12 && quasi_steady_detect(ut, uu, 10.0, 1e-4)) break;
  }
  std::swap(ctx.profile, hold);
}

}  // namespace

SimulationResult run_step(const FuelCellConfig& cfg,
                          const CurrentProfile& profile, double horizon,
                          const RunOptions& opts) {
  const auto wall0 = std::chrono::steady_clock::now();
  RhsContext ctx = RhsContext::make(cfg, profile);
  if (opts.aux) ctx.aux = *opts.aux;
  std::vector<double> y = initial_state(ctx);
  if (opts.pre_equilibrate)
    equilibrate(ctx, y, profile(0.0), opts.equilibrate_max, opts.rtol,
                opts.atol);
  // Equilibration bookkeeping must not leak into the recorded run.
  ctx.ctrl->purges.clear();
  ctx.ctrl->controller_saturations = 0;

  auto rhs = make_rhs(ctx);
  auto events = run_events(ctx, 0.0);
  SolverSettings s = solver_settings(ctx, opts.rtol, opts.atol);

  auto out = integrate(rhs, y, 0.0, horizon, s, events,
                       uniform_samples(0.0, horizon, opts.sample_dt));

  SimulationResult r;
  r.config = cfg;
  r.state_labels = ctx.layout.labels();
  r.times = std::move(out.times);
  r.states = std::move(out.states);
  r.derived.reserve(r.times.size());
  for (std::size_t k = 0; k < r.times.size(); ++k)
    r.derived.push_back(derived_quantities(r.times[k], r.states[k], ctx));
  r.events = std::move(out.events);
  r.purges = ctx.ctrl->purges;
  r.controller_saturations = ctx.ctrl->controller_saturations;
  r.diag = out.diag;
  r.reason = out.reason;
  r.message = out.message;
  r.collapsed = out.reason == Termination::terminal_event &&
                !r.events.empty() && r.events.back().label == "voltage_collapse";
  if (!out.ok())
    throw Error("simulation failed: " + out.message);
  r.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0)
          .count();
  return r;
}

namespace {

PolarizationCurve polarization_sweep(const FuelCellConfig& cfg,
                                     std::vector<double> currents,
                                     const PolarizationOptions& opts) {
  PolarizationCurve curve;
  {
    const auto& op = cfg.operating;
    curve.conditions_tag = "T=" + format_double(op.T_fc) +
                           "K P=" + format_double(op.P_des) +
                           "Pa Phi_c=" + format_double(op.Phi_c_des);
  }
  if (currents.empty()) return curve;

  // The staircase switch times are decided on the fly: each hold ends as
  // soon as the voltage is quasi-steady (or at the hold cap), so the clock
  // never jumps and purge/controller schedules stay aligned.
  std::vector<double> levels = {currents.front()};
  std::vector<double> switches;

  RhsContext ctx = RhsContext::make(
      cfg, CurrentProfile::staircase(levels, switches, opts.t_smooth));
  if (opts.aux) ctx.aux = *opts.aux;
  std::vector<double> y = initial_state(ctx);

  auto rhs = make_rhs(ctx);
  auto events = run_events(ctx, 0.0);
  SolverSettings s = solver_settings(ctx, opts.rtol, opts.atol);

  double t = 0.0;
  for (std::size_t k = 0; k < currents.size(); ++k) {
    if (k > 0) {
      levels.push_back(currents[k]);
      switches.push_back(t);
      ctx.profile = CurrentProfile::staircase(levels, switches, opts.t_smooth);
    }
    // The first hold starts from the constructed initial state and gets a
    // longer settling budget.
    const double hold_cap = (k == 0) ? std::max(opts.hold_time, 90.0)
                                     : opts.hold_time;
    const double t_hold_end = t + hold_cap;
    const double t_hold_start = t;
    std::vector<double> ut, uu;
    bool stopped = false;
    while (t < t_hold_end - 1e-9) {
      const double t1 = std::min(t + 2.0, t_hold_end);
      auto out = integrate(rhs, y, t, t1, s, events,
                           uniform_samples(t, t1, opts.sample_dt));
      y = out.y_final;
      t = out.t_final;
      for (std::size_t j = 0; j < out.times.size(); ++j) {
        ut.push_back(out.times[j]);
        uu.push_back(
            derived_quantities(out.times[j], out.states[j], ctx).U_cell);
      }
      if (!out.ok()) {
        if (out.reason == Termination::terminal_event) {
          curve.collapsed = true;
          stopped = true;
          break;
        }
        throw Error("polarization run failed: " + out.message);
      }
      const double elapsed = t - t_hold_start;
      if (elapsed > opts.detect_window + 3.0 * opts.t_smooth &&
          quasi_steady_detect(ut, uu, opts.detect_window, opts.detect_tol))
        break;
    }
    if (stopped) break;
    if (uu.empty()) break;
    curve.points.emplace_back(currents[k], uu.back());
  }
  return curve;
}

}  // namespace

PolarizationCurve run_polarization(const FuelCellConfig& cfg,
                                   const PolarizationParams& profile,
                                   const PolarizationOptions& opts) {
  std::vector<double> currents;
  if (opts.include_zero) currents.push_back(0.0);
  for (double i = profile.delta_i; i <= profile.i_max * (1.0 + 1e-12);
       i += profile.delta_i)
    currents.push_back(i);
  PolarizationOptions o = opts;
  o.hold_time = profile.hold_time;
  o.t_smooth = profile.t_smooth;
  return polarization_sweep(cfg, currents, o);
}

PolarizationCurve run_polarization_at(const FuelCellConfig& cfg,
                                      const std::vector<double>& currents,
                                      const PolarizationOptions& opts) {
  for (std::size_t k = 1; k < currents.size(); ++k)
    if (currents[k] <= currents[k - 1])
      throw ValidationError("currents", "must be strictly increasing");
  return polarization_sweep(cfg, currents, opts);
}

bool quasi_steady_detect(std::span<const double> times,
                         std::span<const double> values, double window,
                         double tol) {
  if (times.size() != values.size() || times.size() < 2) return false;
  const double t_end = times.back();
  std::size_t first = times.size();
  for (std::size_t k = times.size(); k-- > 0;) {
    if (times[k] < t_end - window) break;
    first = k;
  }
  const std::size_t m = times.size() - first;
  if (m < 2) return false;
  double st = 0, sv = 0, stt = 0, stv = 0;
  for (std::size_t k = first; k < times.size(); ++k) {
    st += times[k];
    sv += values[k];
    stt += times[k] * times[k];
    stv += times[k] * values[k];
  }
  const double denom = m * stt - st * st;
  if (denom <= 0.0) return true;  // degenerate window: no resolvable slope
  const double slope = (m * stv - st * sv) / denom;
  return std::abs(slope) < tol;
}

double delta_u_max(const PolarizationCurve& a, const PolarizationCurve& b) {
  auto interp = [](const PolarizationCurve& c, double i) {
    const auto& p = c.points;
    for (std::size_t k = 1; k < p.size(); ++k) {
      if (i <= p[k].first) {
        const double w = (i - p[k - 1].first) / (p[k].first - p[k - 1].first);
        return p[k - 1].second + w * (p[k].second - p[k - 1].second);
      }
    }
    return p.back().second;
  };
  if (a.points.empty() || b.points.empty()) return 0.0;
  const double lo = std::max(a.points.front().first, b.points.front().first);
  const double hi = std::min(a.points.back().first, b.points.back().first);
  double dmax = 0.0;
  for (const auto& c : {&a, &b}) {
    for (const auto& [i, u] : c->points) {
      if (i < lo || i > hi) continue;
      const double other = (c == &a) ? interp(b, i) : interp(a, i);
      dmax = std::max(dmax, std::abs(u - other));
    }
  }
  return dmax;
}

// ---------------- EIS ----------------

std::pair<double, double> phasor(std::span<const double> values,
                                 int cycles_in_window, int harmonic) {
  const std::size_t n = values.size();
  double re = 0.0, im = 0.0;
  const double w = 2.0 * std::numbers::pi * cycles_in_window * harmonic /
                   static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    re += values[k] * std::cos(w * k);
    im -= values[k] * std::sin(w * k);
  }
  return {2.0 * re / n, 2.0 * im / n};
}

namespace {

class CellPlant final : public EisPlant {
public:
  CellPlant(const FuelCellConfig& cfg, double i_dc, const RunOptions& opts)
      : ctx_(RhsContext::make(cfg, CurrentProfile::constant(i_dc))),
        opts_(opts) {
    if (opts.aux) ctx_.aux = *opts.aux;
    y_ = initial_state(ctx_);
    if (opts.pre_equilibrate)
      equilibrate(ctx_, y_, i_dc, opts.equilibrate_max, opts_.rtol,
                  opts_.atol);
  }

  void advance(const CurrentProfile& profile, double t_end,
               std::span<const double> t_samples,
               std::span<double> u_out) override {
    ctx_.profile = profile;
    auto rhs = make_rhs(ctx_);
    auto events = run_events(ctx_, t_);
    SolverSettings s = solver_settings(ctx_, opts_.rtol, opts_.atol);
    std::vector<double> samples(t_samples.begin(), t_samples.end());
    auto out = integrate(rhs, y_, t_, t_end, s, events, samples);
    if (!out.ok()) throw Error("EIS window failed: " + out.message);
    for (std::size_t k = 0; k < out.times.size(); ++k)
      u_out[k] = derived_quantities(out.times[k], out.states[k], ctx_).U_cell;
    y_ = out.y_final;
    t_ = out.t_final;
  }

  double time() const override { return t_; }

private:
  RhsContext ctx_;
  RunOptions opts_;
  std::vector<double> y_;
  double t_ = 0.0;
};

}  // namespace

std::unique_ptr<EisPlant> make_cell_plant(const FuelCellConfig& cfg,
                                          double i_dc, const RunOptions& opts) {
  return std::make_unique<CellPlant>(cfg, i_dc, opts);
}

ImpedanceSpectrum run_eis_with_plant(EisPlant& plant, const EisParams& ep,
                                     const EisOptions& opts) {
  CurrentProfile prof = CurrentProfile::eis(ep);
  prof.validate();
  ImpedanceSpectrum spec;
  const int spp = opts.samples_per_period;

  for (double f : ep.frequencies) {
    const double period = 1.0 / f;
    const double t0 = plant.time();
    const double t_analysis = t0 + ep.n_discard_periods * period;
    const double t_end = t_analysis + ep.n_periods * period;

    // i(t) is phase-locked to the analysis window start.
    CurrentProfile window = CurrentProfile::custom([=](double t) {
      return ep.i_dc *
             (1.0 + ep.delta *
                        std::sin(2.0 * std::numbers::pi * f * (t - t_analysis)));
    });

    // Uniform grid starting at the analysis-window origin, endpoint open:
    // single-bin projections are then exact for sinusoids at bin frequencies.
    const int n_samp = spp * ep.n_periods;
    std::vector<double> ts(n_samp), us(n_samp), is(n_samp);
    const double dt = period / spp;
    for (int k = 0; k < n_samp; ++k) ts[k] = t_analysis + k * dt;
    plant.advance(window, t_end, ts, us);
    for (int k = 0; k < n_samp; ++k) is[k] = window(ts[k]);

    auto [ur, ui] = phasor(us, ep.n_periods, 1);
    auto [ir, ii] = phasor(is, ep.n_periods, 1);
    // Z = -U_hat / I_hat so that a dissipative plant has Re Z > 0.
    const double den = ir * ir + ii * ii;
    ImpedancePoint pt;
    pt.f = f;
    pt.z_re = -(ur * ir + ui * ii) / den;
    pt.z_im = -(ui * ir - ur * ii) / den;

    const double fund = std::hypot(ur, ui);
    double dist = 0.0;
    for (int h = 2; h <= 3; ++h) {
      auto [hr, hi] = phasor(us, ep.n_periods, h);
      dist += hr * hr + hi * hi;
    }
    pt.thd = fund > 0.0 ? std::sqrt(dist) / fund : 0.0;
    if (pt.thd > 0.10)
      spec.warnings.push_back("nonlinearity at f = " + format_double(f) +
                              " Hz: THD " + format_double(pt.thd));
    spec.points.push_back(pt);
  }
  return spec;
}

ImpedanceSpectrum run_eis(const FuelCellConfig& cfg, const EisParams& ep,
                          const EisOptions& opts) {
  auto plant = make_cell_plant(cfg, ep.i_dc, opts.run);
  return run_eis_with_plant(*plant, ep, opts);
}

// ---------------- mass audit ----------------

MassAudit mass_audit(const SimulationResult& result, double t0, double t1) {
  std::vector<std::size_t> idx;
  for (std::size_t k = 0; k < result.times.size(); ++k)
    if (result.times[k] >= t0 - 1e-9 && result.times[k] <= t1 + 1e-9)
      idx.push_back(k);
  if (idx.size() < 10)
    throw InsufficientSamples("mass audit needs at least 10 samples in the window");

  RhsContext ctx =
      RhsContext::make(result.config, CurrentProfile::constant(0.0));

  auto inv0 = inventories(result.states[idx.front()], ctx);
  auto inv1 = inventories(result.states[idx.back()], ctx);

  double in_h2 = 0, out_h2 = 0, rx_h2 = 0;
  double in_o2 = 0, out_o2 = 0, rx_o2 = 0;
  double in_w = 0, out_w = 0, prod_w = 0;
  for (std::size_t j = 1; j < idx.size(); ++j) {
    const auto& a = result.derived[idx[j - 1]];
    const auto& b = result.derived[idx[j]];
    const double dt = result.times[idx[j]] - result.times[idx[j - 1]];
    in_h2 += 0.5 * (a.n_h2_in + b.n_h2_in) * dt;
    out_h2 += 0.5 * (a.n_h2_out + b.n_h2_out) * dt;
    rx_h2 += 0.5 * (a.r_h2_consumed + b.r_h2_consumed) * dt;
    in_o2 += 0.5 * (a.n_o2_in + b.n_o2_in) * dt;
    out_o2 += 0.5 * (a.n_o2_out + b.n_o2_out) * dt;
    rx_o2 += 0.5 * (a.r_o2_consumed + b.r_o2_consumed) * dt;
    in_w += 0.5 * (a.n_h2o_in + b.n_h2o_in) * dt;
    out_w += 0.5 * (a.n_h2o_out + b.n_h2o_out) * dt;
    prod_w += 0.5 * (a.r_h2o_produced + b.r_h2o_produced) * dt;
  }

  auto residual = [](double acc, double in, double out, double rx,
                     double inv_ref) {
    const double denom = std::max(in, std::abs(rx));
    const double miss = std::abs(acc - (in - out - rx));
    if (denom > 1e-12) return miss / denom;
    return miss / std::max(inv_ref, 1e-12);  // quiescent window
  };

  MassAudit audit;
  audit.h2_residual =
      residual(inv1.h2 - inv0.h2, in_h2, out_h2, rx_h2, inv0.h2);
  audit.o2_residual =
      residual(inv1.o2 - inv0.o2, in_o2, out_o2, rx_o2, inv0.o2);
  audit.h2o_residual =
      residual(inv1.h2o - inv0.h2o, in_w, out_w, -prod_w, inv0.h2o);
  return audit;
}

}  // namespace pemfc
