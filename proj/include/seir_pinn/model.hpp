#pragma once

// Continuous SEIR reaction-diffusion model with vital dynamics: parameters,
// domains, initial data and reaction kinetics.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "seir_pinn/errors.hpp"
#include "seir_pinn/grid.hpp"

namespace seir {

/// The eight rates of the model. Units follow the usual compartmental
/// convention: Lambda is population/time, beta is 1/(population*time),
/// lambda_diff is length^2/time, all others 1/time (p is a fraction).
struct EpidemicParams {
  double Lambda = 1.0;
  double mu = 0.01;
  double beta = 0.4;
  double p = 0.3;
  double delta = 0.3;
  double eta = 0.1;
  double gamma = 0.2;
  double lambda_diff = 0.05;

  void validate() const {
    const std::array<double, 8> all{Lambda, mu, beta, p, delta, eta, gamma, lambda_diff};
    for (double v : all) require(std::isfinite(v), "epidemic parameters must be finite");
    require(Lambda >= 0.0, "Lambda must be >= 0");
    require(mu > 0.0, "mu must be > 0");
    require(beta >= 0.0, "beta must be >= 0");
    require(p >= 0.0 && p <= 1.0, "p must lie in [0, 1]");
    require(delta >= 0.0, "delta must be >= 0");
    require(eta >= 0.0, "eta must be >= 0");
    require(gamma >= 0.0, "gamma must be >= 0");
    require(lambda_diff >= 0.0, "lambda_diff must be >= 0");
  }

  friend bool operator==(const EpidemicParams&, const EpidemicParams&) = default;
};

struct DomainSpec {
  int dim = 1;
  double Lx = 1.0;
  double Ly = 1.0;  // ignored when dim == 1
  double T = 5.0;

  void validate() const {
    require(dim == 1 || dim == 2, "domain dim must be 1 or 2");
    require(Lx > 0.0 && std::isfinite(Lx), "domain length Lx must be > 0");
    if (dim == 2) require(Ly > 0.0 && std::isfinite(Ly), "domain length Ly must be > 0");
    require(T > 0.0 && std::isfinite(T), "final time T must be > 0");
  }

  double length(int axis) const { return axis == 0 ? Lx : Ly; }
};

/// Uniform S and R levels plus a Gaussian seed of exposed and infected.
/// A negative centre coordinate means "domain midpoint".
struct InitialConditionSpec {
  double s0_level = 0.9;
  double seed_amplitude_E = 0.05;
  double seed_amplitude_I = 0.05;
  double seed_width = 0.05;
  double r0_level = 0.0;
  std::array<double, 2> seed_center{-1.0, -1.0};

  std::array<double, 2> center_in(const DomainSpec& d) const {
    return {seed_center[0] < 0.0 ? 0.5 * d.Lx : seed_center[0],
            seed_center[1] < 0.0 ? 0.5 * d.Ly : seed_center[1]};
  }

  void validate(const DomainSpec& d) const {
    require(s0_level >= 0.0 && seed_amplitude_E >= 0.0 && seed_amplitude_I >= 0.0 &&
                r0_level >= 0.0,
            "initial levels and amplitudes must be >= 0");
    require(seed_width > 0.0, "seed_width must be > 0");
    const auto c = center_in(d);
    require(c[0] >= 0.0 && c[0] <= d.Lx, "seed_center x lies outside the domain");
    if (d.dim == 2) require(c[1] >= 0.0 && c[1] <= d.Ly, "seed_center y lies outside the domain");
  }
};

enum class Compartment : int { S = 0, E = 1, I = 2, R = 3 };

inline constexpr std::array<const char*, 4> kCompartmentNames{"S", "E", "I", "R"};

inline Compartment compartment_from_name(const std::string& name) {
  for (int c = 0; c < 4; ++c)
    if (name == kCompartmentNames[c]) return static_cast<Compartment>(c);
  throw InvalidInput("unknown compartment '" + name + "'");
}

/// S, E, I, R sampled on the nodes of a grid. Nodes are stored x-fastest:
/// index = iy * nx + ix.
struct CompartmentFields {
  GridSpec grid;
  std::array<std::vector<double>, 4> u;

  CompartmentFields() = default;
  explicit CompartmentFields(const GridSpec& g) : grid(g) {
    for (auto& f : u) f.assign(g.node_count(), 0.0);
  }

  std::vector<double>& operator[](Compartment c) { return u[static_cast<int>(c)]; }
  const std::vector<double>& operator[](Compartment c) const { return u[static_cast<int>(c)]; }
  std::vector<double>& S() { return u[0]; }
  std::vector<double>& E() { return u[1]; }
  std::vector<double>& I() { return u[2]; }
  std::vector<double>& R() { return u[3]; }
  const std::vector<double>& S() const { return u[0]; }
  const std::vector<double>& E() const { return u[1]; }
  const std::vector<double>& I() const { return u[2]; }
  const std::vector<double>& R() const { return u[3]; }

  std::size_t size() const { return u[0].size(); }

  double total(std::size_t node) const { return u[0][node] + u[1][node] + u[2][node] + u[3][node]; }

  bool same_shape(const CompartmentFields& o) const {
    return grid.nx == o.grid.nx && grid.ny == o.grid.ny && grid.dim == o.grid.dim &&
           size() == o.size();
  }

  void check_consistent() const {
    const std::size_t n = grid.node_count();
    for (const auto& f : u) require(f.size() == n, "compartment arrays do not match grid shape");
  }

  bool nonnegative() const {
    for (const auto& f : u)
      for (double v : f)
        if (!(v >= 0.0)) return false;
    return true;
  }
};

struct ReactionRates {
  double fS, fE, fI, fR;
};

/// Right-hand sides of the model without the diffusion terms.
inline ReactionRates reaction_terms(double s, double e, double i, double r,
                                    const EpidemicParams& q) {
  const double infection = q.beta * s * i;
  return {q.Lambda - infection - q.mu * s,
          q.beta * q.p * s * i - (q.delta + q.eta + q.mu) * e,
          q.beta * (1.0 - q.p) * s * i + q.delta * e - (q.gamma + q.mu) * i,
          q.eta * e + q.gamma * i - q.mu * r};
}

/// Upper bound Lambda/mu of the total population.
inline double carrying_capacity(const EpidemicParams& q) {
  require(q.mu > 0.0, "carrying capacity needs mu > 0");
  return q.Lambda / q.mu;
}

inline CompartmentFields build_initial_conditions(const DomainSpec& domain, const GridSpec& grid,
                                                  const InitialConditionSpec& spec) {
  domain.validate();
  spec.validate(domain);
  require(grid.dim == domain.dim, "grid and domain dimensions differ");
  require(std::abs(grid.Lx - domain.Lx) <= 1e-12 * domain.Lx,
          "grid does not cover the domain in x");
  if (grid.dim == 2)
    require(std::abs(grid.Ly - domain.Ly) <= 1e-12 * domain.Ly,
            "grid does not cover the domain in y");

  const auto c = spec.center_in(domain);
  const double inv2s2 = 1.0 / (2.0 * spec.seed_width * spec.seed_width);
  CompartmentFields f(grid);
  // Offsets formed as (L*j - c*(M-1)) / (M-1) are exactly antisymmetric
  // about a midpoint centre, so the seed is exactly even there.
  auto offset = [](double len, int j, int m, double centre) {
    return (len * j - centre * (m - 1)) / (m - 1);
  };
  for (int iy = 0; iy < grid.ny; ++iy) {
    const double gy =
        grid.dim == 2 ? std::exp(-std::pow(offset(grid.Ly, iy, grid.ny, c[1]), 2) * inv2s2) : 1.0;
    for (int ix = 0; ix < grid.nx; ++ix) {
      const double g = std::exp(-std::pow(offset(grid.Lx, ix, grid.nx, c[0]), 2) * inv2s2) * gy;
      const std::size_t n = static_cast<std::size_t>(iy) * grid.nx + ix;
      f.S()[n] = spec.s0_level;
      f.E()[n] = spec.seed_amplitude_E * g;
      f.I()[n] = spec.seed_amplitude_I * g;
      f.R()[n] = spec.r0_level;
    }
  }
  return f;
}

}  // namespace seir
