#pragma once

// Collocation sampling over the space-time cylinder [0,T] x Omega.
//
// A fraction rho of the interior points is drawn uniformly; the rest is
// drawn cell-by-cell from a coarse probe grid with probability proportional
// to (cell residual)^alpha, then uniformly inside the chosen cell. Initial
// and boundary points are always uniform.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "seir_pinn/errors.hpp"
#include "seir_pinn/loss.hpp"
#include "seir_pinn/model.hpp"

namespace seir {

struct SamplingConfig {
  int n_interior = 2048;
  int n_initial = 256;
  int n_boundary = 256;
  double alpha = 1.0;
  double rho = 0.5;
  int probe_t = 64;
  int probe_x = 64;
  int probe_y = 64;  // 2D only

  void validate() const {
    require(n_interior > 0 && n_initial > 0 && n_boundary > 0, "sample counts must be > 0");
    require(alpha >= 0.0 && std::isfinite(alpha), "alpha must be >= 0");
    require(rho >= 0.0 && rho <= 1.0, "rho must lie in [0, 1]");
    require(probe_t > 0 && probe_x > 0 && probe_y > 0, "probe grid sizes must be > 0");
  }
};

/// Residual magnitudes on the probe grid, cell index = (it * ny + iy) * nx + ix.
struct ResidualMap {
  int nt = 0, nx = 0, ny = 1;
  std::vector<double> cells;

  std::size_t cell_of(const DomainSpec& d, const SpaceTimePoint& p) const {
    auto idx = [](double v, double len, int n) {
      const int i = static_cast<int>(std::floor(v / len * n));
      return std::clamp(i, 0, n - 1);
    };
    const int it = idx(p.t, d.T, nt);
    const int ix = idx(p.x, d.Lx, nx);
    const int iy = d.dim == 2 ? idx(p.y, d.Ly, ny) : 0;
    return (static_cast<std::size_t>(it) * ny + iy) * nx + ix;
  }
};

/// Bins pointwise residual magnitudes into the probe grid (cell means).
/// Cells without samples get the mean over all samples.
inline ResidualMap bin_residuals(const DomainSpec& d, const SamplingConfig& cfg,
                                 const std::vector<SpaceTimePoint>& pts,
                                 const std::vector<double>& magnitude) {
  require(pts.size() == magnitude.size(), "bin_residuals: size mismatch");
  ResidualMap map;
  map.nt = cfg.probe_t;
  map.nx = cfg.probe_x;
  map.ny = d.dim == 2 ? cfg.probe_y : 1;
  const std::size_t ncell = static_cast<std::size_t>(map.nt) * map.nx * map.ny;
  std::vector<double> sum(ncell, 0.0);
  std::vector<int> count(ncell, 0);
  double total = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::size_t c = map.cell_of(d, pts[i]);
    sum[c] += magnitude[i];
    ++count[c];
    total += magnitude[i];
  }
  const double fill = pts.empty() ? 0.0 : total / static_cast<double>(pts.size());
  map.cells.resize(ncell);
  for (std::size_t c = 0; c < ncell; ++c) map.cells[c] = count[c] ? sum[c] / count[c] : fill;
  return map;
}

namespace detail {

inline SpaceTimePoint uniform_interior(const DomainSpec& d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  SpaceTimePoint p;
  p.t = d.T * u(rng);
  p.x = d.Lx * u(rng);
  if (d.dim == 2) p.y = d.Ly * u(rng);
  return p;
}

}  // namespace detail

inline CollocationBatch sample_collocation(const DomainSpec& d, const SamplingConfig& cfg,
                                           std::uint64_t seed,
                                           const ResidualMap* residual_map = nullptr) {
  d.validate();
  cfg.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CollocationBatch b;
  b.interior.reserve(cfg.n_interior);

  // Weighted part of the interior draw, when a usable map is present.
  std::vector<double> cdf;
  if (residual_map && cfg.alpha > 0.0 && cfg.rho < 1.0) {
    cdf.resize(residual_map->cells.size());
    double acc = 0.0;
    bool ok = true;
    for (std::size_t c = 0; c < cdf.size(); ++c) {
      const double r = residual_map->cells[c];
      if (!(r >= 0.0) || !std::isfinite(r)) {
        ok = false;
        break;
      }
      acc += std::pow(r, cfg.alpha);
      cdf[c] = acc;
    }
    if (!ok || !(acc > 0.0) || !std::isfinite(acc)) cdf.clear();
  }

  const int n_uniform =
      cdf.empty() ? cfg.n_interior
                  : static_cast<int>(std::lround(cfg.rho * static_cast<double>(cfg.n_interior)));
  for (int i = 0; i < n_uniform; ++i) b.interior.push_back(detail::uniform_interior(d, rng));
  if (!cdf.empty()) {
    const auto& m = *residual_map;
    const double total = cdf.back();
    for (int i = n_uniform; i < cfg.n_interior; ++i) {
      const double target = u(rng) * total;
      std::size_t c = static_cast<std::size_t>(
          std::upper_bound(cdf.begin(), cdf.end(), target) - cdf.begin());
      c = std::min(c, cdf.size() - 1);
      const int ix = static_cast<int>(c % m.nx);
      const int iy = static_cast<int>((c / m.nx) % m.ny);
      const int it = static_cast<int>(c / (static_cast<std::size_t>(m.nx) * m.ny));
      SpaceTimePoint p;
      p.t = d.T * (it + u(rng)) / m.nt;
      p.x = d.Lx * (ix + u(rng)) / m.nx;
      if (d.dim == 2) p.y = d.Ly * (iy + u(rng)) / m.ny;
      b.interior.push_back(p);
    }
  }

  b.initial.reserve(cfg.n_initial);
  for (int i = 0; i < cfg.n_initial; ++i) {
    SpaceTimePoint p;
    p.x = d.Lx * u(rng);
    if (d.dim == 2) p.y = d.Ly * u(rng);
    b.initial.push_back(p);
  }

  b.boundary.reserve(cfg.n_boundary);
  const int walls = d.dim == 2 ? 4 : 2;
  for (int i = 0; i < cfg.n_boundary; ++i) {
    BoundaryPoint bp;
    // Round-robin over walls so each wall gets an equal share.
    bp.wall = static_cast<Wall>(i % walls);
    bp.p.t = d.T * u(rng);
    switch (bp.wall) {
      case Wall::XMin: bp.p.x = 0.0; bp.p.y = d.dim == 2 ? d.Ly * u(rng) : 0.0; break;
      case Wall::XMax: bp.p.x = d.Lx; bp.p.y = d.dim == 2 ? d.Ly * u(rng) : 0.0; break;
      case Wall::YMin: bp.p.y = 0.0; bp.p.x = d.Lx * u(rng); break;
      case Wall::YMax: bp.p.y = d.Ly; bp.p.x = d.Lx * u(rng); break;
    }
    b.boundary.push_back(bp);
  }
  return b;
}

}  // namespace seir
