#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "seir_pinn/errors.hpp"

namespace seir {

/// Choice of the nonstandard denominator phi(k). Both satisfy phi(k) -> k.
enum class Denominator { Identity, Exponential };

inline double denominator_value(Denominator kind, double k, double mu) {
  switch (kind) {
    case Denominator::Identity:
      return k;
    case Denominator::Exponential:
      // (1 - e^{-mu k}) / mu, the decay-matched variant.
      return mu > 0.0 ? -std::expm1(-mu * k) / mu : k;
  }
  return k;
}

inline Denominator denominator_from_name(const std::string& s) {
  if (s == "identity") return Denominator::Identity;
  if (s == "exponential") return Denominator::Exponential;
  throw InvalidInput("unknown denominator function '" + s + "'");
}

inline const char* denominator_name(Denominator d) {
  return d == Denominator::Identity ? "identity" : "exponential";
}

/// Uniform node-centred space grid and uniform time stepping. Nodes sit at
/// x_j = j * h for j = 0..nx-1, so both walls are grid nodes.
struct GridSpec {
  int dim = 1;
  int nx = 101;
  int ny = 1;
  double Lx = 1.0;
  double Ly = 1.0;
  double h = 0.01;
  double k = 5e-6;
  double phi = 5e-6;
  long n_steps = 1000000;

  std::size_t node_count() const { return static_cast<std::size_t>(nx) * ny; }

  double x(int ix) const { return Lx * ix / (nx - 1); }
  double y(int iy) const { return Ly * iy / (ny - 1); }

  double final_time() const { return k * static_cast<double>(n_steps); }

  void validate() const {
    require(dim == 1 || dim == 2, "grid dim must be 1 or 2");
    require(nx >= 3, "grid needs at least 3 nodes in x");
    if (dim == 2) require(ny >= 3, "grid needs at least 3 nodes in y");
    else require(ny == 1, "1D grid must have ny == 1");
    require(h > 0.0 && k > 0.0 && phi > 0.0, "grid steps h, k and phi(k) must be > 0");
    require(n_steps >= 0, "n_steps must be >= 0");
  }
};

/// Generalized parabolic mesh ratio phi(k) / h^2.
struct MeshRatio {
  double r;
  explicit MeshRatio(const GridSpec& g) : r(g.phi / (g.h * g.h)) {}
};

/// Builds a grid over [0,Lx] (x [0,Ly]) with n_steps steps reaching T.
/// In 2D the spacings must agree (hx = hy = h).
inline GridSpec make_grid(int dim, int nx, int ny, double Lx, double Ly, double T, long n_steps,
                          Denominator denom = Denominator::Identity, double mu = 0.0) {
  require(n_steps > 0 || T == 0.0, "n_steps must be positive");
  GridSpec g;
  g.dim = dim;
  g.nx = nx;
  g.ny = dim == 2 ? ny : 1;
  g.Lx = Lx;
  g.Ly = dim == 2 ? Ly : 1.0;
  require(nx >= 3, "grid needs at least 3 nodes in x");
  g.h = Lx / (nx - 1);
  if (dim == 2) {
    require(ny >= 3, "grid needs at least 3 nodes in y");
    const double hy = Ly / (ny - 1);
    require(std::abs(hy - g.h) <= 1e-12 * g.h, "2D grid requires equal spacing in x and y");
  }
  g.n_steps = n_steps;
  g.k = n_steps > 0 ? T / static_cast<double>(n_steps) : 1.0;
  g.phi = denominator_value(denom, g.k, mu);
  g.validate();
  return g;
}

}  // namespace seir
