#include "pemfc/solver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "pemfc/errors.hpp"
#include "pemfc/settings_io.hpp"

namespace pemfc {

namespace {

constexpr int kMaxOrder = 5;
constexpr int kNewtonMaxIter = 4;
constexpr double kMinFactor = 0.1;
constexpr double kMaxFactor = 10.0;
constexpr double kSafety = 0.9;
constexpr double kEps = std::numeric_limits<double>::epsilon();

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

double rms_norm(const Vec& v) {
  if (v.size() == 0) return 0.0;
  return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

// Rescaling matrix for the backward-difference table when the step size
// changes by `factor` (Shampine & Reichelt interpolation scheme).
Mat compute_R(int order, double factor) {
  Mat m = Mat::Zero(order + 1, order + 1);
  for (int j = 0; j <= order; ++j) m(0, j) = 1.0;
  for (int i = 1; i <= order; ++i)
    for (int j = 1; j <= order; ++j)
      m(i, j) = (i - 1 - factor * j) / static_cast<double>(i);
  for (int i = 1; i <= order; ++i)
    for (int j = 0; j <= order; ++j) m(i, j) *= m(i - 1, j);
  return m;
}

struct BdfCoefficients {
  double gamma[kMaxOrder + 2];
  double error_const[kMaxOrder + 2];
  BdfCoefficients() {
    gamma[0] = 0.0;
    for (int k = 1; k <= kMaxOrder + 1; ++k) gamma[k] = gamma[k - 1] + 1.0 / k;
    for (int k = 0; k <= kMaxOrder + 1; ++k) error_const[k] = 1.0 / (k + 1);
  }
};
const BdfCoefficients kBdf;

class BdfCore {
public:
  BdfCore(const RhsFn& rhs, std::span<const double> y0, double t0, double tf,
          const SolverSettings& s, std::vector<EventSpec> events,
          std::vector<double> sample_times)
      : rhs_(rhs),
        n_(static_cast<int>(y0.size())),
        t0_(t0),
        tf_(tf),
        settings_(s),
        events_(std::move(events)),
        samples_(std::move(sample_times)) {
    y_ = Eigen::Map<const Vec>(y0.data(), n_);
    atol_ = Vec::Constant(n_, s.atol);
    if (!s.atol_vec.empty()) {
      if (static_cast<int>(s.atol_vec.size()) != n_)
        throw ValidationError("atol", "per-slot atol length mismatch");
      atol_ = Eigen::Map<const Vec>(s.atol_vec.data(), n_);
    }
    max_order_ = s.fixed_step ? s.fixed_order : s.max_order;
    newton_tol_ =
        std::max(10.0 * kEps / s.rtol, std::min(0.03, std::sqrt(s.rtol)));
    if (s.fixed_step) newton_tol_ = 1e-12;
    D_.assign(kMaxOrder + 3, Vec::Zero(n_));
    scratch_f_.resize(n_);
  }

  IntegrationOutput run() {
    out_.diag = SolverDiagnostics{};
    Vec f0(n_);
    if (!eval_rhs(t0_, y_, f0)) {
      fail(Termination::nonfinite_derivative, t0_, f0);
      return std::move(out_);
    }
    t_ = t0_;
    init_history(f0);
    jacobian(t_, y_);
    lu_valid_ = false;

    g_prev_.resize(events_.size());
    for (std::size_t i = 0; i < events_.size(); ++i)
      g_prev_[i] = events_[i].fn(t_, to_span(y_));

    if (samples_.empty()) {
      emit_sample_point(t_, y_);
    } else {
      while (next_sample_ < samples_.size() && samples_[next_sample_] <= t_) {
        emit_sample_point(t_, y_);
        ++next_sample_;
      }
    }

    while (t_ < tf_) {
      if (!step()) return std::move(out_);
    }
    out_.t_final = t_;
    out_.y_final.assign(y_.data(), y_.data() + n_);
    out_.reason = Termination::reached_end;
    return std::move(out_);
  }

private:
  std::span<const double> to_span(const Vec& v) const {
    return {v.data(), static_cast<std::size_t>(v.size())};
  }

  bool eval_rhs(double t, const Vec& y, Vec& f) {
    rhs_(t, to_span(y), {f.data(), static_cast<std::size_t>(f.size())});
    ++out_.diag.rhs_evals;
    return f.allFinite();
  }

  void init_history(const Vec& f0) {
    h_ = select_initial_step(f0);
    for (auto& d : D_) d.setZero();
    D_[0] = y_;
    D_[1] = h_ * f0;
    order_ = 1;
    n_equal_steps_ = 0;

    const auto& hist = settings_.warm_start_history;
    if (settings_.fixed_step && !hist.empty()) {
      // Backward differences from the supplied uniform-grid points.
      const int m = std::min<int>(static_cast<int>(hist.size()),
                                  settings_.fixed_order);
      std::vector<Vec> pts(m + 1);
      pts[0] = y_;
      for (int j = 1; j <= m; ++j)
        pts[j] = Eigen::Map<const Vec>(hist[j - 1].data(), n_);
      for (int j = 0; j <= m; ++j) {
        Vec dj = Vec::Zero(n_);
        double binom = 1.0;
        for (int i = 0; i <= j; ++i) {
          dj += ((i % 2 == 0) ? binom : -binom) * pts[i];
          binom = binom * (j - i) / (i + 1);
        }
        D_[j] = dj;
      }
      order_ = m;
    }
  }

  double select_initial_step(const Vec& f0) {
    if (settings_.fixed_step) return settings_.fixed_step_size;
    if (settings_.initial_step > 0.0)
      return std::min({settings_.initial_step, settings_.max_step, tf_ - t_});
    Vec scale = atol_ + settings_.rtol * y_.cwiseAbs();
    double d0 = rms_norm(y_.cwiseQuotient(scale));
    double d1 = rms_norm(f0.cwiseQuotient(scale));
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min(h0, (tf_ - t_) * 0.5);
    Vec y1 = y_ + h0 * f0;
    Vec f1(n_);
    double d2 = 0.0;
    if (eval_rhs(t_ + h0, y1, f1))
      d2 = rms_norm((f1 - f0).cwiseQuotient(scale)) / h0;
    double h1;
    if (d1 <= 1e-15 && d2 <= 1e-15)
      h1 = std::max(1e-6, h0 * 1e-3);
    else
      h1 = std::pow(0.01 / std::max(d1, d2), 0.5);
    return std::min({100.0 * h0, h1, settings_.max_step, tf_ - t_});
  }

  void jacobian(double t, const Vec& y) {
    Vec f0(n_);
    eval_rhs(t, y, f0);
    if (J_.rows() != n_) J_.resize(n_, n_);
    Vec yp = y;
    Vec fp(n_);
    for (int j = 0; j < n_; ++j) {
      const double dj = std::max(1e-8, 1e-8 * std::abs(y[j]));
      yp[j] = y[j] + dj;
      eval_rhs(t, yp, fp);
      J_.col(j) = (fp - f0) / dj;
      yp[j] = y[j];
    }
    ++out_.diag.jacobian_evals;
    lu_valid_ = false;
  }

  void factorize(double c) {
    Mat a = Mat::Identity(n_, n_) - c * J_;
    lu_.compute(a);
    lu_c_ = c;
    lu_valid_ = true;
    ++out_.diag.lu_factorizations;
  }

  void rescale_history(double factor) {
    const Mat r = compute_R(order_, factor);
    const Mat u = compute_R(order_, 1.0);
    const Mat ru = r * u;
    std::vector<Vec> nd(order_ + 1, Vec::Zero(n_));
    for (int i = 0; i <= order_; ++i)
      for (int j = 0; j <= order_; ++j) nd[i] += ru(j, i) * D_[j];
    for (int i = 0; i <= order_; ++i) D_[i] = nd[i];
  }

  struct NewtonResult {
    bool converged = false;
    bool finite = true;
    int iterations = 0;
    int worst_slot = -1;
    double last_rate = 0.0;
    double last_dy_norm = 0.0;
  };

  NewtonResult newton(double t_new, const Vec& y_predict, double c,
                      const Vec& psi, const Vec& scale, Vec& y_new, Vec& d) {
    NewtonResult res;
    y_new = y_predict;
    d.setZero(n_);
    double dy_norm_old = -1.0;
    const int max_iter = settings_.fixed_step ? 12 : kNewtonMaxIter;
    for (int m = 0; m < max_iter; ++m) {
      ++out_.diag.newton_iterations;
      ++res.iterations;
      if (!eval_rhs(t_new, y_new, scratch_f_)) {
        res.finite = false;
        return res;
      }
      Vec rhs_vec = c * scratch_f_ - psi - d;
      Vec dy = lu_.solve(rhs_vec);
      if (!dy.allFinite()) {
        res.finite = false;
        return res;
      }
      const double dy_norm = rms_norm(dy.cwiseQuotient(scale));
      // Corrections at round-off level are converged by definition; their
      // iteration-to-iteration ratio is noise and must not trip the
      // divergence heuristic.
      if (dy_norm < 100.0 * kEps / settings_.rtol) {
        y_new += dy;
        d += dy;
        res.converged = true;
        return res;
      }
      double rate = -1.0;
      if (dy_norm_old >= 0.0 && dy_norm_old > 0.0) rate = dy_norm / dy_norm_old;
      res.last_rate = rate;
      res.last_dy_norm = dy_norm;
      {
        Eigen::Index am = 0;
        dy.cwiseQuotient(scale).cwiseAbs().maxCoeff(&am);
        res.worst_slot = static_cast<int>(am);
      }
      if (rate >= 0.0 &&
          (rate >= 1.0 ||
           std::pow(rate, max_iter - m) / (1.0 - rate) * dy_norm > newton_tol_))
        return res;  // diverging or too slow
      y_new += dy;
      d += dy;
      if (dy_norm == 0.0 ||
          (rate >= 0.0 && rate / (1.0 - rate) * dy_norm < newton_tol_)) {
        res.converged = true;
        return res;
      }
      dy_norm_old = dy_norm;
    }
    if (settings_.fixed_step && dy_norm_old >= 0.0 && dy_norm_old < 1e-10)
      res.converged = true;  // stagnation at round-off in fixed-step mode
    return res;
  }

  void fail(Termination reason, double t, const Vec& f) {
    out_.reason = reason;
    out_.t_final = t;
    out_.y_final.assign(y_.data(), y_.data() + n_);
    if (reason == Termination::nonfinite_derivative) {
      int slot = -1;
      for (int i = 0; i < n_; ++i)
        if (!std::isfinite(f[i])) {
          slot = i;
          break;
        }
      out_.message = "non-finite derivative in slot " + std::to_string(slot) +
                     " at t = " + format_double(t);
    } else if (reason == Termination::step_size_underflow) {
      out_.message = "step size underflow at t = " + format_double(t);
    } else if (reason == Termination::newton_divergence) {
      out_.message = "newton iteration failed to converge at t = " +
                     format_double(t);
    }
  }

  // One adaptive step, including event processing and sample emission.
  // Returns false when integration must stop (out_ already finalized).
  bool step() {
    const double min_step = 1e-14 * (tf_ - t0_);
    const double t_prev = t_;
    const Vec y_prev = y_;

    double t_new = 0.0;
    Vec y_new(n_), d(n_);
    bool accepted = false;
    int newton_iters_used = 0;
    double error_norm = 0.0;
    Vec scale(n_);

    while (!accepted) {
      if (h_ < min_step && !settings_.fixed_step) {
        fail(last_failure_was_newton_ ? Termination::newton_divergence
                                      : Termination::step_size_underflow,
             t_, y_);
        return false;
      }
      if (h_ > settings_.max_step) {
        rescale_history(settings_.max_step / h_);
        h_ = settings_.max_step;
        n_equal_steps_ = 0;
      }
      t_new = t_ + h_;
      if (t_new > tf_ || (!settings_.fixed_step && t_new > tf_ - min_step)) {
        const double h_capped = tf_ - t_;
        if (h_capped < h_) {
          rescale_history(h_capped / h_);
          h_ = h_capped;
          n_equal_steps_ = 0;
        }
        t_new = tf_;
      }

      Vec y_predict = Vec::Zero(n_);
      for (int j = 0; j <= order_; ++j) y_predict += D_[j];
      scale = atol_ + settings_.rtol * y_predict.cwiseAbs();
      Vec psi = Vec::Zero(n_);
      for (int j = 1; j <= order_; ++j) psi += kBdf.gamma[j] * D_[j];
      psi /= kBdf.gamma[order_];
      const double c = h_ / kBdf.gamma[order_];

      bool converged = false;
      int refreshes = 0;
      NewtonResult nr;
      while (!converged) {
        if (!lu_valid_ || lu_c_ != c) factorize(c);
        nr = newton(t_new, y_predict, c, psi, scale, y_new, d);
        converged = nr.converged;
        if (converged) break;
        if (refreshes == 0) {
          jacobian(t_new, y_predict);
          ++refreshes;
        } else if (refreshes == 1 && nr.finite) {
          jacobian(t_new, y_new);  // retry from the last iterate's slope
          ++refreshes;
        } else {
          break;
        }
      }
      newton_iters_used = nr.iterations;

      if (!converged) {
        if (settings_.fixed_step) {
          fail(Termination::newton_divergence, t_, y_);
          return false;
        }
        if (std::getenv("PEMFC_SOLVER_TRACE") && h_ < 1e-6)
          std::fprintf(stderr,
                       "trace: newton fail t=%.12g h=%.3e ord=%d iters=%d "
                       "finite=%d slot=%d rate=%.3g dy=%.3g\n",
                       t_, h_, order_, nr.iterations, (int)nr.finite,
                       nr.worst_slot, nr.last_rate, nr.last_dy_norm);
        last_failure_was_newton_ = true;
        ++out_.diag.rejected_steps;
        rescale_history(0.5);
        h_ *= 0.5;
        n_equal_steps_ = 0;
        continue;
      }
      last_failure_was_newton_ = false;

      if (settings_.fixed_step) {
        accepted = true;
        break;
      }

      scale = atol_ + settings_.rtol * y_new.cwiseAbs();
      Vec error = kBdf.error_const[order_] * d;
      error_norm = rms_norm(error.cwiseQuotient(scale));
      if (error_norm > 1.0) {
        ++out_.diag.rejected_steps;
        const double factor = std::max(
            kMinFactor,
            kSafety * std::pow(error_norm, -1.0 / (order_ + 1)));
        rescale_history(factor);
        h_ *= factor;
        n_equal_steps_ = 0;
        continue;
      }
      accepted = true;
    }

    ++out_.diag.steps;
    ++n_equal_steps_;
    const double h_used = t_new - t_;
    t_ = t_new;
    y_ = y_new;

    // Fold the new point into the difference table.
    D_[order_ + 2] = d - D_[order_ + 1];
    D_[order_ + 1] = d;
    for (int j = order_; j >= 0; --j) D_[j] += D_[j + 1];

    // Events and samples read the freshly updated table.
    const StepDisposition disp = process_events_and_samples(t_prev, h_used);
    if (disp == StepDisposition::finished) return false;
    if (disp == StepDisposition::restarted) return true;

    if (settings_.fixed_step) {
      if (order_ < settings_.fixed_order) ++order_;
      return true;
    }

    if (n_equal_steps_ < order_ + 1) return true;

    // Order selection from the error estimates at orders k-1, k, k+1.
    const Vec scale_now = atol_ + settings_.rtol * y_.cwiseAbs();
    double err_m = std::numeric_limits<double>::infinity();
    double err_p = std::numeric_limits<double>::infinity();
    if (order_ > 1)
      err_m = rms_norm(
          (kBdf.error_const[order_ - 1] * D_[order_]).cwiseQuotient(scale_now));
    if (order_ < max_order_)
      err_p = rms_norm((kBdf.error_const[order_ + 1] * D_[order_ + 2])
                           .cwiseQuotient(scale_now));

    auto factor_for = [](double err, int k) {
      if (err == 0.0) return kMaxFactor;
      if (!std::isfinite(err)) return 0.0;
      return std::pow(err, -1.0 / (k + 1));
    };
    const double f_m = factor_for(err_m, order_ - 1);
    const double f_c = factor_for(error_norm, order_);
    const double f_p = factor_for(err_p, order_ + 1);

    double best = f_c;
    int delta = 0;
    if (f_m > best) {
      best = f_m;
      delta = -1;
    }
    if (f_p > best) {
      best = f_p;
      delta = 1;
    }
    order_ += delta;
    const double factor =
        std::min(kMaxFactor, std::max(kMinFactor, kSafety * best));
    rescale_history(factor);
    h_ *= factor;
    n_equal_steps_ = 0;
    return true;
  }

  // ---- dense output over the last accepted step ----
  // Newton backward-difference form anchored at the step end.
  Vec interpolate(double t_query, double h_used) const {
    const double s = (t_query - t_) / h_used;  // s <= 0 within the step
    Vec p = D_[0];
    double coef = 1.0;
    for (int j = 1; j <= order_; ++j) {
      coef *= (s + j - 1) / j;
      p += coef * D_[j];
    }
    return p;
  }

  void emit_sample_point(double t, const Vec& y) {
    out_.times.push_back(t);
    out_.states.emplace_back(y.data(), y.data() + n_);
  }

  void emit_samples_until(double t_limit, double h_used) {
    if (samples_.empty()) return;
    while (next_sample_ < samples_.size() &&
           samples_[next_sample_] <= t_limit + 1e-12 * std::abs(t_limit)) {
      const double ts = samples_[next_sample_];
      emit_sample_point(ts, interpolate(ts, h_used));
      ++next_sample_;
    }
  }

  enum class StepDisposition { continued, restarted, finished };

  StepDisposition process_events_and_samples(double t_prev, double h_used) {
    const double event_tol = 1e-9 * (tf_ - t0_);
    double scan_from = t_prev;
    std::vector<double> g_scan = g_prev_;

    for (;;) {
      std::vector<double> g_end(events_.size());
      for (std::size_t i = 0; i < events_.size(); ++i)
        g_end[i] = events_[i].fn(t_, to_span(y_));

      int hit = -1;
      double t_hit = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < events_.size(); ++i) {
        const double a = g_scan[i], b = g_end[i];
        const bool crossing = (a < 0.0 && b >= 0.0) || (a > 0.0 && b <= 0.0);
        if (!crossing) continue;
        const int dir = (b > a) ? 1 : -1;
        if (events_[i].direction != 0 && events_[i].direction != dir) continue;
        const double tc = locate(static_cast<int>(i), scan_from, t_, a, b,
                                 h_used, event_tol);
        if (tc < t_hit) {
          t_hit = tc;
          hit = static_cast<int>(i);
        }
      }

      if (hit < 0) {
        if (samples_.empty()) {
          emit_sample_point(t_, y_);
        } else {
          emit_samples_until(t_, h_used);
        }
        g_prev_ = g_end;
        return StepDisposition::continued;
      }

      ++out_.diag.events_located;
      Vec y_hit = interpolate(t_hit, h_used);
      emit_samples_until(t_hit, h_used);
      out_.events.push_back(
          EventRecord{t_hit, hit, events_[hit].label});

      if (events_[hit].terminal) {
        emit_event_point(t_hit, y_hit);
        out_.t_final = t_hit;
        out_.y_final.assign(y_hit.data(), y_hit.data() + n_);
        out_.reason = Termination::terminal_event;
        return StepDisposition::finished;
      }

      EventOutcome outcome = EventOutcome::unchanged;
      if (events_[hit].handler) {
        std::vector<double> yv(y_hit.data(), y_hit.data() + n_);
        outcome = events_[hit].handler(t_hit, yv);
        y_hit = Eigen::Map<const Vec>(yv.data(), n_);
      }

      if (outcome == EventOutcome::modified) {
        // Restart the multistep history from the event point.
        t_ = t_hit;
        y_ = y_hit;
        Vec f0(n_);
        if (!eval_rhs(t_, y_, f0)) {
          fail(Termination::nonfinite_derivative, t_, f0);
          return StepDisposition::finished;
        }
        order_ = settings_.fixed_step ? 1 : 1;
        for (auto& dd : D_) dd.setZero();
        D_[0] = y_;
        const double h_restart =
            std::min({h_, settings_.max_step, std::max(tf_ - t_, 0.0)});
        h_ = std::max(h_restart, 1e-14 * (tf_ - t0_));
        D_[1] = h_ * f0;
        n_equal_steps_ = 0;
        jacobian(t_, y_);
        for (std::size_t i = 0; i < events_.size(); ++i)
          g_prev_[i] = events_[i].fn(t_, to_span(y_));
        return StepDisposition::restarted;
      }

      // Unchanged: the step stands; keep scanning the remainder in case the
      // (possibly rescheduled) event functions cross again.
      scan_from = std::min(t_hit + event_tol, t_);
      const Vec y_scan = interpolate(scan_from, h_used);
      for (std::size_t i = 0; i < events_.size(); ++i)
        g_scan[i] = events_[i].fn(scan_from, to_span(y_scan));
    }
  }

  void emit_event_point(double t, const Vec& y) {
    if (!out_.times.empty() && out_.times.back() == t) return;
    emit_sample_point(t, y);
  }

  // Illinois-style false position on the dense output.
  double locate(int event_index, double ta, double tb, double ga, double gb,
                double h_used, double tol) {
    const auto& ev = events_[event_index];
    double fa = ga, fb = gb;
    double a = ta, b = tb;
    int side = 0;
    for (int it = 0; it < 80 && (b - a) > tol; ++it) {
      double m = (fb - fa) != 0.0 ? b - fb * (b - a) / (fb - fa)
                                  : 0.5 * (a + b);
      if (!(m > a && m < b)) m = 0.5 * (a + b);
      const Vec ym = interpolate(m, h_used);
      const double fm = ev.fn(m, to_span(ym));
      if ((fa < 0.0) == (fm < 0.0)) {
        a = m;
        fa = fm;
        if (side == -1) fb *= 0.5;
        side = -1;
      } else {
        b = m;
        fb = fm;
        if (side == 1) fa *= 0.5;
        side = 1;
      }
    }
    return b;  // first point past the crossing
  }

  const RhsFn& rhs_;
  int n_;
  double t0_, tf_;
  SolverSettings settings_;
  std::vector<EventSpec> events_;
  std::vector<double> samples_;
  std::size_t next_sample_ = 0;

  double t_ = 0.0;
  Vec y_;
  Vec atol_;
  std::vector<Vec> D_;
  double h_ = 0.0;
  int order_ = 1;
  int max_order_ = 5;
  int n_equal_steps_ = 0;
  double newton_tol_ = 1e-3;
  bool last_failure_was_newton_ = false;

  Mat J_;
  Eigen::PartialPivLU<Mat> lu_;
  double lu_c_ = 0.0;
  bool lu_valid_ = false;

  std::vector<double> g_prev_;
  Vec scratch_f_;
  IntegrationOutput out_;
};

}  // namespace

void SolverSettings::validate() const {
  if (!(rtol > 0.0 && rtol < 1.0))
    throw ValidationError("rtol", "must lie in (0, 1)");
  if (!(atol > 0.0)) throw ValidationError("atol", "must be positive");
  for (double a : atol_vec)
    if (!(a > 0.0)) throw ValidationError("atol", "must be positive");
  if (max_order < 1 || max_order > 5)
    throw ValidationError("max_order", "must lie in 1..5");
  if (!(max_step > 0.0)) throw ValidationError("max_step", "must be positive");
  if (fixed_step) {
    if (!(fixed_step_size > 0.0))
      throw ValidationError("fixed_step_size", "must be positive");
    if (fixed_order < 1 || fixed_order > 5)
      throw ValidationError("fixed_order", "must lie in 1..5");
  }
}

IntegrationOutput integrate(const RhsFn& rhs, std::span<const double> y0,
                            double t0, double tf,
                            const SolverSettings& settings,
                            std::vector<EventSpec> events,
                            std::vector<double> sample_times) {
  settings.validate();
  if (!(t0 < tf)) throw ValidationError("t_span", "t0 must precede tf");
  BdfCore core(rhs, y0, t0, tf, settings, std::move(events),
               std::move(sample_times));
  return core.run();
}

}  // namespace pemfc
