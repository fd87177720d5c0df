#pragma once

#include <functional>
#include <vector>

namespace pemfc {

enum class ProfileKind { step, polarization, eis, custom };

struct StepParams {
  double i_init = 0.0;     // A/m^2
  double i_final = 0.0;    // A/m^2
  double t_switch = 0.0;   // s
  double t_smooth = 0.5;   // s, logistic ramp width
};

struct PolarizationParams {
  double i_max = 3.0e4;    // A/m^2
  double delta_i = 1000.0; // A/m^2 per staircase step
  double hold_time = 30.0; // s per step
  double t_smooth = 0.5;   // s
};

struct EisParams {
  double i_dc = 5000.0;        // A/m^2
  double delta = 0.05;         // amplitude ratio, <= 0.1 for linearity
  std::vector<double> frequencies;  // Hz
  int n_periods = 5;           // analyzed periods per frequency
  int n_discard_periods = 2;   // transient periods dropped before analysis
};

// Logarithmic frequency grid, high to low.
std::vector<double> log_frequency_grid(double f_min, double f_max,
                                       int points_per_decade);

// Imposed current density i(t) >= 0, continuous (steps are smoothed by a
// logistic ramp so the stiff integrator never sees a jump).
class CurrentProfile {
public:
  static CurrentProfile step(const StepParams& p);
  static CurrentProfile polarization(const PolarizationParams& p);
  static CurrentProfile eis(const EisParams& p);
  static CurrentProfile custom(std::function<double(double)> fn);
  // Piecewise-constant levels with smoothed switches; levels[k] applies after
  // switch_times[k-1]. Used for multi-step scenarios and staircases.
  static CurrentProfile staircase(std::vector<double> levels,
                                  std::vector<double> switch_times,
                                  double t_smooth);
  // Constant current.
  static CurrentProfile constant(double i);

  double operator()(double t) const;

  ProfileKind kind() const { return kind_; }
  const StepParams& step_params() const { return step_; }
  const PolarizationParams& polarization_params() const { return pol_; }
  const EisParams& eis_params() const { return eis_; }

  // Throws ValidationError on negative currents or EIS amplitude > 0.1.
  void validate() const;

private:
  ProfileKind kind_ = ProfileKind::custom;
  StepParams step_;
  PolarizationParams pol_;
  EisParams eis_;
  std::vector<double> levels_;
  std::vector<double> switches_;
  double t_smooth_ = 0.5;
  std::function<double(double)> fn_;
};

// Smoothed unit step centered at t_switch, rising over ~width.
double logistic_ramp(double t, double t_switch, double width);

}  // namespace pemfc
