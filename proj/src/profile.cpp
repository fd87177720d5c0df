#include "pemfc/profile.hpp"

#include <algorithm>
#include <cmath>

#include "pemfc/errors.hpp"

namespace pemfc {

double logistic_ramp(double t, double t_switch, double width) {
  const double x = (t - t_switch) / (width / 8.0);
  if (x > 40.0) return 1.0;
  if (x < -40.0) return 0.0;
  return 1.0 / (1.0 + std::exp(-x));
}

std::vector<double> log_frequency_grid(double f_min, double f_max,
                                       int points_per_decade) {
  std::vector<double> out;
  const double ratio = std::pow(10.0, 1.0 / points_per_decade);
  for (double f = f_max; f >= f_min * (1.0 - 1e-12); f /= ratio)
    out.push_back(f);
  return out;
}

CurrentProfile CurrentProfile::constant(double i) {
  CurrentProfile p;
  p.kind_ = ProfileKind::custom;
  p.levels_ = {i};
  return p;
}

CurrentProfile CurrentProfile::step(const StepParams& sp) {
  CurrentProfile p;
  p.kind_ = ProfileKind::step;
  p.step_ = sp;
  p.levels_ = {sp.i_init, sp.i_final};
  p.switches_ = {sp.t_switch};
  p.t_smooth_ = sp.t_smooth;
  return p;
}

CurrentProfile CurrentProfile::staircase(std::vector<double> levels,
                                         std::vector<double> switch_times,
                                         double t_smooth) {
  CurrentProfile p;
  p.kind_ = ProfileKind::custom;
  p.levels_ = std::move(levels);
  p.switches_ = std::move(switch_times);
  p.t_smooth_ = t_smooth;
  return p;
}

CurrentProfile CurrentProfile::polarization(const PolarizationParams& pp) {
  CurrentProfile p;
  p.kind_ = ProfileKind::polarization;
  p.pol_ = pp;
  p.t_smooth_ = pp.t_smooth;
  double level = 0.0;
  double t = pp.hold_time;
  p.levels_.push_back(level);
  while (level + pp.delta_i <= pp.i_max * (1.0 + 1e-12)) {
    level += pp.delta_i;
    p.levels_.push_back(level);
    p.switches_.push_back(t);
    t += pp.hold_time;
  }
  return p;
}

CurrentProfile CurrentProfile::eis(const EisParams& ep) {
  CurrentProfile p;
  p.kind_ = ProfileKind::eis;
  p.eis_ = ep;
  p.levels_ = {ep.i_dc};
  return p;
}

CurrentProfile CurrentProfile::custom(std::function<double(double)> fn) {
  CurrentProfile p;
  p.kind_ = ProfileKind::custom;
  p.fn_ = std::move(fn);
  return p;
}

double CurrentProfile::operator()(double t) const {
  if (fn_) return std::max(0.0, fn_(t));
  if (switches_.empty()) return levels_.empty() ? 0.0 : levels_[0];
  // Only transitions within a few ramp widths of t contribute.
  auto hi =
      std::upper_bound(switches_.begin(), switches_.end(), t + 6.0 * t_smooth_);
  auto lo =
      std::lower_bound(switches_.begin(), switches_.end(), t - 6.0 * t_smooth_);
  const std::size_t base = static_cast<std::size_t>(lo - switches_.begin());
  double i = levels_[base];
  for (auto it = lo; it != hi; ++it) {
    const std::size_t k = static_cast<std::size_t>(it - switches_.begin());
    i += (levels_[k + 1] - levels_[k]) * logistic_ramp(t, *it, t_smooth_);
  }
  return std::max(0.0, i);
}

void CurrentProfile::validate() const {
  for (double l : levels_)
    if (l < 0.0)
      throw ValidationError("current_profile", "current density must be >= 0");
  if (kind_ == ProfileKind::eis) {
    if (eis_.delta > 0.1)
      throw ValidationError("eis.delta",
                            "amplitude ratio above 0.1 breaks linearity");
    if (eis_.i_dc <= 0.0)
      throw ValidationError("eis.i_dc", "EIS needs a positive bias current");
    if (eis_.frequencies.empty())
      throw ValidationError("eis.frequencies", "no frequencies given");
  }
  if (kind_ == ProfileKind::polarization && pol_.delta_i <= 0.0)
    throw ValidationError("polarization.delta_i", "must be positive");
  if (t_smooth_ <= 0.0 && !switches_.empty())
    throw ValidationError("t_smooth", "switch smoothing must be positive");
}

}  // namespace pemfc
