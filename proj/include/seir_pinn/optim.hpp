#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "seir_pinn/errors.hpp"

namespace seir {

using Vector = Eigen::VectorXd;

struct CosineSchedule {
  double lr_max = 1e-3;
  double lr_min = 1e-5;
  long total_epochs = 1;

  void validate() const {
    require(lr_max >= lr_min && lr_min > 0.0, "schedule needs lr_max >= lr_min > 0");
    require(total_epochs > 0, "schedule needs total_epochs > 0");
  }
};

/// lr_min + (lr_max - lr_min)(1 + cos(pi e / E)) / 2, clamped to e in [0, E].
inline double cosine_lr(const CosineSchedule& s, long epoch) {
  if (epoch <= 0) return s.lr_max;
  if (epoch >= s.total_epochs) return s.lr_min;
  const double frac = static_cast<double>(epoch) / static_cast<double>(s.total_epochs);
  return s.lr_min + 0.5 * (s.lr_max - s.lr_min) * (1.0 + std::cos(std::numbers::pi * frac));
}

/// Rescales g onto the ball of radius max_norm when it lies outside.
inline Vector clip_gradient(const Vector& g, double max_norm = 1.0) {
  const double norm = g.norm();
  if (norm <= max_norm) return g;
  return g * (max_norm / norm);
}

struct AdamState {
  Vector m, v;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double max_grad_norm = 1.0;  // <= 0 disables clipping
  CosineSchedule schedule;

  AdamState() = default;
  AdamState(Eigen::Index n, CosineSchedule s)
      : m(Vector::Zero(n)), v(Vector::Zero(n)), schedule(s) {}

  double current_lr() const { return cosine_lr(schedule, step_count); }
};

/// One bias-corrected Adam update; the gradient is clipped first and the
/// learning rate follows the cosine schedule at the current step count.
/// Returns the learning rate used.
inline double adam_step(AdamState& st, Vector& params, const Vector& grad) {
  require(params.size() == grad.size() && st.m.size() == grad.size(),
          "adam_step: dimension mismatch");
  const Vector g = st.max_grad_norm > 0.0 ? clip_gradient(grad, st.max_grad_norm) : grad;
  const double lr = st.current_lr();
  ++st.step_count;
  st.m = st.beta1 * st.m + (1.0 - st.beta1) * g;
  st.v = st.beta2 * st.v + (1.0 - st.beta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
  params.array() -= lr * (st.m.array() / c1) / ((st.v.array() / c2).sqrt() + st.eps);
  return lr;
}

// ---------------------------------------------------------------------------
// L-BFGS

/// f(x) with its gradient written into g.
using Objective = std::function<double(const Vector& x, Vector& g)>;

struct LbfgsOptions {
  int history = 20;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_iterations = 500;
  double grad_tol = 1e-9;      // on the infinity norm
  double rel_loss_tol = 1e-12;
  int max_line_search = 40;
};

struct LbfgsState {
  LbfgsOptions options;
  std::deque<Vector> s, y;
  std::deque<double> rho;

  std::size_t size() const { return s.size(); }
  void clear() {
    s.clear();
    y.clear();
    rho.clear();
  }

  /// Stores (s, y) when it satisfies the curvature condition s'y > 0.
  bool push(const Vector& sv, const Vector& yv) {
    const double sy = sv.dot(yv);
    if (!(sy > 0.0) || !std::isfinite(sy)) return false;
    if (static_cast<int>(s.size()) == options.history) {
      s.pop_front();
      y.pop_front();
      rho.pop_front();
    }
    s.push_back(sv);
    y.push_back(yv);
    rho.push_back(1.0 / sy);
    return true;
  }

  /// Two-loop recursion: returns -H g for the implicit inverse Hessian H.
  Vector direction(const Vector& g) const {
    Vector q = g;
    const std::size_t k = s.size();
    std::vector<double> alpha(k);
    for (std::size_t i = k; i-- > 0;) {
      alpha[i] = rho[i] * s[i].dot(q);
      q -= alpha[i] * y[i];
    }
    if (k > 0) q *= s[k - 1].dot(y[k - 1]) / y[k - 1].squaredNorm();
    for (std::size_t i = 0; i < k; ++i) {
      const double b = rho[i] * y[i].dot(q);
      q += s[i] * (alpha[i] - b);
    }
    return -q;
  }
};

struct LineSearchResult {
  bool ok = false;
  double step = 0.0;
  double f = 0.0;
  Vector x, g;
  int evaluations = 0;
};

namespace detail {

/// Minimizer of the cubic interpolating (a, fa, da), (b, fb, db), kept
/// inside the bracket; falls back to bisection.
inline double cubic_min(double a, double fa, double da, double b, double fb, double db) {
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (disc >= 0.0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double margin = 0.1 * (hi - lo);
    if (std::isfinite(t) && t > lo + margin && t < hi - margin) return t;
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Line search along d from x enforcing the strong Wolfe conditions
///   f(x + a d) <= f(x) + c1 a g'd,   |g(x + a d)'d| <= c2 |g'd|.
inline LineSearchResult strong_wolfe_search(const Objective& fn, const Vector& x, double f0,
                                            const Vector& g0, const Vector& d, double step0,
                                            const LbfgsOptions& opt) {
  LineSearchResult res;
  const double dphi0 = g0.dot(d);
  if (!(dphi0 < 0.0)) return res;

  auto eval = [&](double a, double& f, double& dphi, Vector& xa, Vector& ga) {
    xa = x + a * d;
    ga.resize(x.size());
    ++res.evaluations;
    f = fn(xa, ga);
    dphi = std::isfinite(f) ? ga.dot(d) : std::numeric_limits<double>::quiet_NaN();
  };
  auto accept = [&](double a, double f, const Vector& xa, const Vector& ga) {
    res.ok = true;
    res.step = a;
    res.f = f;
    res.x = xa;
    res.g = ga;
  };

  double a_prev = 0.0, f_prev = f0, d_prev = dphi0;
  double a = step0;
  Vector xa, ga;
  auto zoom = [&](double lo, double f_lo, double d_lo, double hi, double f_hi, double d_hi) {
    for (int it = 0; it < opt.max_line_search; ++it) {
      double aj = detail::cubic_min(lo, f_lo, d_lo, hi, f_hi, d_hi);
      if (!std::isfinite(f_hi)) aj = 0.5 * (lo + hi);
      double fj, dj;
      eval(aj, fj, dj, xa, ga);
      if (!std::isfinite(fj) || fj > f0 + opt.c1 * aj * dphi0 || fj >= f_lo) {
        hi = aj;
        f_hi = fj;
        d_hi = dj;
      } else {
        if (std::abs(dj) <= -opt.c2 * dphi0) {
          accept(aj, fj, xa, ga);
          return;
        }
        if (dj * (hi - lo) >= 0.0) {
          hi = lo;
          f_hi = f_lo;
          d_hi = d_lo;
        }
        lo = aj;
        f_lo = fj;
        d_lo = dj;
      }
      if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) return;
    }
  };

  for (int it = 0; it < opt.max_line_search; ++it) {
    double fa, da;
    eval(a, fa, da, xa, ga);
    if (!std::isfinite(fa) || fa > f0 + opt.c1 * a * dphi0 || (it > 0 && fa >= f_prev)) {
      zoom(a_prev, f_prev, d_prev, a, fa, da);
      return res;
    }
    if (std::abs(da) <= -opt.c2 * dphi0) {
      accept(a, fa, xa, ga);
      return res;
    }
    if (da >= 0.0) {
      zoom(a, fa, da, a_prev, f_prev, d_prev);
      return res;
    }
    a_prev = a;
    f_prev = fa;
    d_prev = da;
    a *= 2.0;
  }
  return res;
}

struct LbfgsResult {
  Vector x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  std::vector<double> loss_history;  // one entry per accepted iteration
  std::string stop_reason;
};

/// Minimizes fn from x0. Stops on ||g||_inf < grad_tol, relative loss change
/// below rel_loss_tol, or max_iterations. A failed line search restarts once
/// from steepest descent; a second consecutive failure ends the run with
/// stop_reason "line search failed".
inline LbfgsResult lbfgs_minimize(LbfgsState& state, const Objective& fn, Vector x0,
                                  const std::function<void(int, double)>& on_iteration = {}) {
  const auto& opt = state.options;
  LbfgsResult out;
  Vector g(x0.size());
  double f = fn(x0, g);
  ++out.evaluations;
  if (!std::isfinite(f)) throw NumericalFailure("L-BFGS: objective not finite at the start point");
  out.x = std::move(x0);
  out.f = f;

  bool restarted = false;
  while (out.iterations < opt.max_iterations) {
    if (g.lpNorm<Eigen::Infinity>() < opt.grad_tol) {
      out.stop_reason = "gradient tolerance";
      return out;
    }
    Vector d = state.direction(g);
    if (!(g.dot(d) < 0.0)) {
      state.clear();
      d = -g;
    }
    const double step0 = state.size() == 0 ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    LineSearchResult ls = strong_wolfe_search(fn, out.x, f, g, d, step0, opt);
    out.evaluations += ls.evaluations;
    if (!ls.ok) {
      if (restarted || state.size() == 0) {
        out.stop_reason = "line search failed";
        return out;
      }
      restarted = true;
      state.clear();
      continue;
    }
    restarted = false;
    state.push(ls.x - out.x, ls.g - g);
    const double f_old = f;
    out.x = std::move(ls.x);
    g = std::move(ls.g);
    f = ls.f;
    out.f = f;
    ++out.iterations;
    out.loss_history.push_back(f);
    if (on_iteration) on_iteration(out.iterations, f);
    if (std::abs(f_old - f) <= opt.rel_loss_tol * std::max(std::abs(f_old), 1e-300)) {
      out.stop_reason = "relative loss change";
      return out;
    }
  }
  out.stop_reason = "max iterations";
  return out;
}

}  // namespace seir
