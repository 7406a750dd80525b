#pragma once

// Synthetic observations drawn from solver trajectories, and the error
// metrics used to score reconstructions and parameter estimates.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "seir_pinn/errors.hpp"
#include "seir_pinn/loss.hpp"
#include "seir_pinn/nsfd.hpp"

namespace seir {

struct DatasetProvenance {
  GridSpec grid;
  EpidemicParams params;
  std::uint64_t seed = 0;
  double noise_rel = 0.0;
  std::size_t n_d = 0;
};

struct SyntheticDataset {
  ObservationSet observations;
  DatasetProvenance provenance;
};

/// Draws n_d distinct (time level, node, compartment) records uniformly
/// without replacement among compartments in `mask`, then applies
/// multiplicative noise value * (1 + noise_rel * z), z ~ N(0,1), clamped at 0.
/// Records come out in (level, node, compartment) order.
inline SyntheticDataset make_dataset(const Trajectory& traj, std::size_t n_d,
                                     const std::array<bool, 4>& mask, double noise_rel,
                                     std::uint64_t seed) {
  require(!traj.states.empty(), "make_dataset: empty trajectory");
  require(noise_rel >= 0.0 && std::isfinite(noise_rel), "noise level must be >= 0");
  std::vector<int> comps;
  for (int c = 0; c < 4; ++c)
    if (mask[c]) comps.push_back(c);
  require(!comps.empty(), "observation mask selects no compartment");
  const GridSpec& g = traj.states.front().grid;
  const std::size_t nodes = g.node_count();
  const std::size_t per_level = nodes * comps.size();
  const std::size_t available = per_level * traj.states.size();
  require(n_d <= available, "n_d = " + std::to_string(n_d) + " exceeds the " +
                                std::to_string(available) + " available records");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);

  SyntheticDataset ds;
  ds.observations.mask = mask;
  ds.observations.records.reserve(n_d);
  ds.provenance = {g, {}, seed, noise_rel, n_d};

  // Selection sampling: visits every record once, keeps it with
  // probability (still needed) / (still unseen).
  std::size_t needed = n_d;
  for (std::size_t idx = 0; idx < available && needed > 0; ++idx) {
    const double keep = static_cast<double>(needed) / static_cast<double>(available - idx);
    if (u(rng) >= keep) continue;
    --needed;
    const std::size_t level = idx / per_level;
    const std::size_t rem = idx % per_level;
    const std::size_t node = rem / comps.size();
    const int c = comps[rem % comps.size()];
    const int ix = static_cast<int>(node % g.nx);
    const int iy = static_cast<int>(node / g.nx);
    Observation o;
    o.t = traj.times[level];
    o.x = g.x(ix);
    o.y = g.dim == 2 ? g.y(iy) : 0.0;
    o.compartment = static_cast<Compartment>(c);
    const double truth = traj.states[level].u[c][node];
    o.value = noise_rel > 0.0 ? std::max(0.0, truth * (1.0 + noise_rel * z(rng))) : truth;
    ds.observations.records.push_back(o);
  }
  return ds;
}

struct ErrorMetrics {
  double rel_l2 = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
  double max_err = 0.0;
};

/// Relative L2, mean absolute, root-mean-square and max error of pred
/// against truth. A zero truth with nonzero pred gives rel_l2 = +inf.
inline ErrorMetrics error_metrics(std::span<const double> pred, std::span<const double> truth) {
  require(pred.size() == truth.size(), "error_metrics: size mismatch");
  require(!pred.empty(), "error_metrics: empty input");
  double sq = 0.0, abs_sum = 0.0, tn = 0.0, mx = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - truth[i];
    sq += d * d;
    abs_sum += std::abs(d);
    tn += truth[i] * truth[i];
    mx = std::max(mx, std::abs(d));
  }
  const double n = static_cast<double>(pred.size());
  ErrorMetrics m;
  m.rel_l2 = tn > 0.0 ? std::sqrt(sq) / std::sqrt(tn)
                      : (sq > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
  m.mae = abs_sum / n;
  m.rmse = std::sqrt(sq / n);
  m.max_err = mx;
  return m;
}

struct ErrorReport {
  std::array<ErrorMetrics, 4> per_compartment{};
};

struct ParamRecovery {
  std::string name;
  double true_value = 0.0;
  double estimate = 0.0;
  double abs_error = 0.0;
  double rel_error = 0.0;
};

struct ParamRecoveryReport {
  std::array<ParamRecovery, 4> rows{};
};

/// Absolute and relative errors of (beta, delta, gamma, lambda).
inline ParamRecoveryReport param_report(const std::array<double, 4>& truth,
                                        const std::array<double, 4>& estimate) {
  ParamRecoveryReport r;
  for (int i = 0; i < 4; ++i) {
    auto& row = r.rows[i];
    row.name = kPhysParamNames[i];
    row.true_value = truth[i];
    row.estimate = estimate[i];
    row.abs_error = std::abs(estimate[i] - truth[i]);
    row.rel_error = truth[i] != 0.0 ? row.abs_error / std::abs(truth[i])
                                    : (row.abs_error > 0.0 ? std::numeric_limits<double>::infinity()
                                                           : 0.0);
  }
  return r;
}

}  // namespace seir
