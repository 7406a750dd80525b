#pragma once

// Positivity-preserving nonstandard finite difference time stepping for the
// SEIR reaction-diffusion system in one and two space dimensions.
//
// Each step is sequentially explicit: S is updated first, then E (using the
// new S), then I (new S and E), then R (new E and I). Diffusion uses a skew
// Laplacian whose centre value is taken at the new time level, so every
// update is a ratio of nonnegative sums and stays nonnegative for any
// k, h > 0. Zero-flux walls are realized with mirror ghost nodes
// (U_{-1} = U_1, U_M = U_{M-2}).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "seir_pinn/errors.hpp"
#include "seir_pinn/grid.hpp"
#include "seir_pinn/model.hpp"

namespace seir {

struct Trajectory {
  std::vector<double> times;
  std::vector<CompartmentFields> states;
  long store_stride = 1;

  std::size_t size() const { return times.size(); }
  const CompartmentFields& back() const { return states.back(); }
};

namespace detail {

/// Sum of the 2*dim mirrored neighbours of node (ix, iy).
inline double neighbour_sum(const std::vector<double>& u, const GridSpec& g, int ix, int iy) {
  const int xl = ix == 0 ? 1 : ix - 1;
  const int xr = ix == g.nx - 1 ? g.nx - 2 : ix + 1;
  const std::size_t row = static_cast<std::size_t>(iy) * g.nx;
  double s = u[row + xl] + u[row + xr];
  if (g.dim == 2) {
    const int yd = iy == 0 ? 1 : iy - 1;
    const int yu = iy == g.ny - 1 ? g.ny - 2 : iy + 1;
    s += u[static_cast<std::size_t>(yd) * g.nx + ix] + u[static_cast<std::size_t>(yu) * g.nx + ix];
  }
  return s;
}

inline void check_step_input(const CompartmentFields& state, const GridSpec& grid) {
  grid.validate();
  require(state.grid.nx == grid.nx && state.grid.ny == grid.ny && state.grid.dim == grid.dim,
          "state shape does not match the grid");
  state.check_consistent();
  for (const auto& f : state.u)
    for (double v : f) require(v >= 0.0, "NSFD step requires a nonnegative state");
}

/// One step from `state` into `next` (same shape, preallocated). No input
/// validation.
inline void step_into(const CompartmentFields& state, CompartmentFields& next,
                      const EpidemicParams& q, const GridSpec& grid) {
  const double phi = grid.phi;
  const double lr = q.lambda_diff * MeshRatio(grid).r;
  const double centre = 1.0 + 2.0 * grid.dim * lr;
  const double denE = centre + phi * (q.delta + q.eta + q.mu);
  const double denI = centre + phi * (q.gamma + q.mu);
  const double denR = centre + phi * q.mu;

  const auto& S = state.S();
  const auto& E = state.E();
  const auto& I = state.I();
  const auto& R = state.R();
  auto& Sn = next.S();
  auto& En = next.E();
  auto& In = next.I();
  auto& Rn = next.R();

  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const std::size_t n = static_cast<std::size_t>(iy) * grid.nx + ix;
      const double s_new = (S[n] + lr * neighbour_sum(S, grid, ix, iy) + phi * q.Lambda) /
                           (centre + phi * (q.beta * I[n] + q.mu));
      const double e_new =
          (E[n] + lr * neighbour_sum(E, grid, ix, iy) + phi * q.beta * q.p * s_new * I[n]) / denE;
      const double i_new = (I[n] + lr * neighbour_sum(I, grid, ix, iy) +
                            phi * (q.beta * (1.0 - q.p) * s_new * I[n] + q.delta * e_new)) /
                           denI;
      const double r_new =
          (R[n] + lr * neighbour_sum(R, grid, ix, iy) + phi * (q.eta * e_new + q.gamma * i_new)) /
          denR;
      Sn[n] = s_new;
      En[n] = e_new;
      In[n] = i_new;
      Rn[n] = r_new;
    }
  }
}

inline CompartmentFields nsfd_step(const CompartmentFields& state, const EpidemicParams& q,
                                   const GridSpec& grid) {
  check_step_input(state, grid);
  CompartmentFields next(state.grid);
  next.grid = grid;
  step_into(state, next, q, grid);
  return next;
}

}  // namespace detail

inline CompartmentFields nsfd_step_1d(const CompartmentFields& state, const EpidemicParams& params,
                                      const GridSpec& grid) {
  require(grid.dim == 1, "nsfd_step_1d needs a 1D grid");
  return detail::nsfd_step(state, params, grid);
}

inline CompartmentFields nsfd_step_2d(const CompartmentFields& state, const EpidemicParams& params,
                                      const GridSpec& grid) {
  require(grid.dim == 2, "nsfd_step_2d needs a 2D grid");
  return detail::nsfd_step(state, params, grid);
}

inline CompartmentFields nsfd_step(const CompartmentFields& state, const EpidemicParams& params,
                                   const GridSpec& grid) {
  return grid.dim == 1 ? nsfd_step_1d(state, params, grid) : nsfd_step_2d(state, params, grid);
}

struct SolveOptions {
  long store_stride = 1;
  /// When set, n_steps * k must reproduce this final time to 1e-9.
  std::optional<double> final_time;
};

inline Trajectory solve(const CompartmentFields& ic, const EpidemicParams& params,
                        const GridSpec& grid, const SolveOptions& opts = {}) {
  params.validate();
  grid.validate();
  require(opts.store_stride >= 1, "store_stride must be >= 1");
  require(ic.nonnegative(), "initial condition must be nonnegative");
  if (opts.final_time)
    require(std::abs(grid.k * static_cast<double>(grid.n_steps) - *opts.final_time) <= 1e-9,
            "n_steps * k does not reach the final time");

  Trajectory traj;
  traj.store_stride = opts.store_stride;
  CompartmentFields cur = ic;
  cur.grid = grid;
  detail::check_step_input(cur, grid);
  CompartmentFields next = cur;
  traj.times.push_back(0.0);
  traj.states.push_back(cur);
  for (long n = 1; n <= grid.n_steps; ++n) {
    detail::step_into(cur, next, params, grid);
    std::swap(cur, next);
    if (n % opts.store_stride == 0 || n == grid.n_steps) {
      for (const auto& f : cur.u)
        for (double v : f)
          if (!std::isfinite(v)) throw NumericalFailure("non-finite value in NSFD solution");
      traj.times.push_back(grid.k * static_cast<double>(n));
      traj.states.push_back(cur);
    }
  }
  return traj;
}

/// Max-abs residual of the discrete total-population equation
///   (N^{n+1} - N^n)/phi - lambda * skewLap(N) - Lambda + mu N^{n+1}
/// over all nodes (mirror ghosts at the walls). Consecutive solver states
/// satisfy it up to rounding because the nonlinear transfer terms cancel.
inline double population_identity_residual(const CompartmentFields& prev,
                                           const CompartmentFields& next,
                                           const EpidemicParams& q, const GridSpec& grid) {
  require(prev.same_shape(next), "population residual: shape mismatch");
  require(prev.grid.nx == grid.nx && prev.grid.ny == grid.ny, "population residual: grid mismatch");
  prev.check_consistent();
  next.check_consistent();

  const std::size_t nn = grid.node_count();
  std::vector<double> Np(nn), Nn(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    Np[i] = prev.total(i);
    Nn[i] = next.total(i);
  }
  const double inv_h2 = 1.0 / (grid.h * grid.h);
  double worst = 0.0;
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      const std::size_t n = static_cast<std::size_t>(iy) * grid.nx + ix;
      const double lap =
          (detail::neighbour_sum(Np, grid, ix, iy) - 2.0 * grid.dim * Nn[n]) * inv_h2;
      const double res =
          (Nn[n] - Np[n]) / grid.phi - q.lambda_diff * lap - q.Lambda + q.mu * Nn[n];
      worst = std::max(worst, std::abs(res));
    }
  }
  return worst;
}

}  // namespace seir
