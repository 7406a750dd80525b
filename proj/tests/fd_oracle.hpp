#pragma once

// Finite-difference references for the jet and gradient checks, plus the
// random small models they run on.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "seir_pinn/loss.hpp"
#include "seir_pinn/network.hpp"
#include "seir_pinn/sampling.hpp"

namespace seir::oracle {

/// Relative difference with a floor on the scale: derivatives that vanish
/// are compared absolutely against `floor`.
inline double rel_diff(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Random small network: depth 1-4, width 4-16, 2-8 frequencies, tanh or
/// swish, random Fourier scale and output scales.
inline PinnModel random_model(std::mt19937_64& rng, int dim) {
  std::uniform_int_distribution<int> depth(1, 4), width(4, 16), m(2, 8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  NetworkConfig c;
  c.dim = dim;
  c.depth = depth(rng);
  c.width = width(rng);
  c.fourier_m = m(rng);
  c.fourier_scale = 0.5 + 1.5 * u(rng);
  c.activation = u(rng) < 0.5 ? Activation::Tanh : Activation::Swish;
  c.T = 1.0 + 4.0 * u(rng);
  c.Lx = 0.5 + u(rng);
  c.Ly = 0.5 + u(rng);
  for (auto& s : c.output_scale) s = 0.5 + u(rng);
  PinnModel model = xavier_init(c, rng());
  // Nonzero biases so every code path carries a signal.
  std::normal_distribution<double> z(0.0, 0.3);
  for (const auto& d : model.layout().hidden) model.bias(d) = model.bias(d).unaryExpr([&](double) { return z(rng); });
  model.bias(model.layout().head) = model.bias(model.layout().head).unaryExpr([&](double) { return z(rng); });
  model.set_raw_params({z(rng), z(rng), z(rng), z(rng)});
  return model;
}

struct Estimate {
  double value = 0.0, err = std::numeric_limits<double>::infinity();
};

/// Ridders' extrapolation of a central difference `d(s)` (exact as s -> 0
/// up to even powers of s), starting from step s0. Returns the tableau entry
/// with the smallest error estimate.
template <class F>
Estimate ridders(F&& d, double s0) {
  constexpr int kLevels = 12;
  constexpr double kShrink = 1.4, kShrink2 = kShrink * kShrink;
  double a[kLevels][kLevels];
  double s = s0, best = 0.0, err = std::numeric_limits<double>::infinity();
  a[0][0] = d(s);
  for (int i = 1; i < kLevels; ++i) {
    s /= kShrink;
    a[0][i] = d(s);
    double fac = kShrink2;
    for (int j = 1; j <= i; ++j) {
      a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
      fac *= kShrink2;
      const double e = std::max(std::abs(a[j][i] - a[j - 1][i]), std::abs(a[j][i] - a[j - 1][i - 1]));
      if (e <= err) {
        err = e;
        best = a[j][i];
      }
    }
    if (std::abs(a[i][i] - a[i - 1][i - 1]) >= 2.0 * err) break;
  }
  return {best, err};
}

/// Ridders from a few starting steps; a start that is too coarse for a
/// sharply curved function can stop early on a misleading estimate.
template <class F>
double extrapolate(F&& d) {
  Estimate best;
  for (double s0 : {1e-2, 3e-3, 1e-3}) {
    const Estimate e = ridders(d, s0);
    if (e.err < best.err) best = e;
  }
  return best.value;
}

/// Worst relative mismatch between analytic input jets and Ridders-
/// extrapolated central differences of the plain forward pass. A single
/// fixed step does not serve every random model: second derivatives reach
/// several hundred, where s = 1e-4 is already truncation-limited while
/// smaller steps drown in roundoff.
inline double jet_fd_mismatch(const PinnModel& model, double t, double x, double y) {
  const int dim = model.config().dim;
  std::vector<double> pt{x};
  if (dim == 2) pt.push_back(y);
  const auto jets = evaluate_with_input_derivatives(model, t, pt);
  const auto f0 = forward(model, t, x, y);

  auto at = [&](int axis, double d, int c) {
    return forward(model, t + (axis == 0 ? d : 0.0), x + (axis == 1 ? d : 0.0), y + (axis == 2 ? d : 0.0))[c];
  };
  auto first = [&](int axis, int c) {
    return extrapolate([&](double s) { return (at(axis, s, c) - at(axis, -s, c)) / (2 * s); });
  };
  auto second = [&](int axis, int c) {
    return extrapolate([&](double s) { return (at(axis, s, c) - 2 * f0[c] + at(axis, -s, c)) / (s * s); });
  };

  double worst = 0.0;
  for (int c = 0; c < 4; ++c) {
    // Derivatives that vanish up to roundoff are compared against a floor.
    const double floor = 1e-6 * std::max(1.0, std::abs(f0[c]));
    worst = std::max(worst, rel_diff(jets[c].value, f0[c], 1e-12));
    worst = std::max(worst, rel_diff(jets[c].d_t, first(0, c), floor));
    worst = std::max(worst, rel_diff(jets[c].d_x, first(1, c), floor));
    worst = std::max(worst, rel_diff(jets[c].d_xx, second(1, c), floor));
    if (dim == 2) {
      worst = std::max(worst, rel_diff(jets[c].d_y, first(2, c), floor));
      worst = std::max(worst, rel_diff(jets[c].d_yy, second(2, c), floor));
    }
  }
  return worst;
}

struct GradCheck {
  double worst_rel = 0.0;
  int checked = 0;
};

/// Compares the analytic gradient of the full loss with Ridders-extrapolated
/// central differences, coordinate by coordinate, over coordinates whose
/// gradient exceeds `min_abs`.
inline GradCheck gradient_fd_mismatch(const PinnModel& model, const PhysicsSetup& ps,
                                      const CollocationBatch& batch, const ObservationSet& obs,
                                      const LossWeights& w, double min_abs = 1e-8) {
  Vector g = Vector::Zero(model.parameter_count());
  evaluate_loss(model, ps, batch, obs, w, &g);
  PinnModel probe = model;
  auto loss_at = [&](Eigen::Index i, double delta) {
    probe.parameters()[i] = model.parameters()[i] + delta;
    const double v = evaluate_loss(probe, ps, batch, obs, w).total;
    probe.parameters()[i] = model.parameters()[i];
    return v;
  };
  GradCheck out;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (std::abs(g[i]) <= min_abs) continue;
    const double fd = extrapolate([&](double s) { return (loss_at(i, s) - loss_at(i, -s)) / (2 * s); });
    out.worst_rel = std::max(out.worst_rel, std::abs(fd - g[i]) / std::max(std::abs(g[i]), std::abs(fd)));
    ++out.checked;
  }
  return out;
}

/// Small batch and dataset for gradient checks.
inline CollocationBatch small_batch(const DomainSpec& d, std::uint64_t seed) {
  SamplingConfig sc;
  sc.n_interior = 6;
  sc.n_initial = 4;
  sc.n_boundary = d.dim == 2 ? 4 : 2;
  return sample_collocation(d, sc, seed);
}

inline ObservationSet small_observations(const DomainSpec& d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ObservationSet obs;
  for (int i = 0; i < 6; ++i) {
    Observation o;
    o.t = d.T * u(rng);
    o.x = d.Lx * u(rng);
    o.y = d.dim == 2 ? d.Ly * u(rng) : 0.0;
    o.compartment = static_cast<Compartment>(i % 4);
    o.value = u(rng);
    obs.records.push_back(o);
  }
  return obs;
}

}  // namespace seir::oracle
