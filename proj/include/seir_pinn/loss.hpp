#pragma once

// Composite PINN objective
//   total = w1 L_pde + w2 L_ic + w3 L_bc + w4 L_data + w5 (L_nonneg + L_pop + L_param)
// with exact gradients through the input-derivative jets.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "seir_pinn/errors.hpp"
#include "seir_pinn/model.hpp"
#include "seir_pinn/network.hpp"

namespace seir {

struct LossWeights {
  double pde = 1.0;
  double ic = 1.0;
  double bc = 1.0;
  double data = 1.0;
  double constraints = 1.0;

  void validate() const {
    for (double w : {pde, ic, bc, data, constraints})
      require(w >= 0.0 && std::isfinite(w), "loss weights must be finite and >= 0");
  }
};

/// Walls of the space domain; the outward normal follows from the tag.
enum class Wall : int { XMin = 0, XMax = 1, YMin = 2, YMax = 3 };

struct BoundaryPoint {
  SpaceTimePoint p;
  Wall wall = Wall::XMin;
};

struct CollocationBatch {
  std::vector<SpaceTimePoint> interior;  // PDE residual and constraint points
  std::vector<SpaceTimePoint> initial;   // t = 0
  std::vector<BoundaryPoint> boundary;
};

struct Observation {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  Compartment compartment = Compartment::I;
  double value = 0.0;
};

struct ObservationSet {
  std::vector<Observation> records;
  std::array<bool, 4> mask{true, true, true, true};

  std::size_t active_count() const {
    std::size_t n = 0;
    for (const auto& r : records)
      if (mask[static_cast<int>(r.compartment)]) ++n;
    return n;
  }
};

struct LossBreakdown {
  double pde = 0.0;
  double ic = 0.0;
  double bc = 0.0;
  double data = 0.0;
  double nonneg = 0.0;
  double pop = 0.0;
  double param = 0.0;
  double total = 0.0;

  double constraints() const { return nonneg + pop + param; }
};

/// Everything the loss needs besides the network: model constants, which
/// physical parameters are trainable, and the prescribed initial data.
struct PhysicsSetup {
  EpidemicParams params;          // fixed constants; also Theta_p in forward mode
  bool trainable_params = false;  // inverse mode
  bool bounded_params = true;     // sigmoid bounding of Theta_p
  double raw_penalty = 1e-4;      // L_param coefficient in unbounded mode
  DomainSpec domain;
  InitialConditionSpec ic;
};

/// (beta, delta, gamma, lambda) seen by the residuals.
inline std::array<double, 4> effective_params(const PinnModel& model, const PhysicsSetup& ps) {
  if (!ps.trainable_params)
    return {ps.params.beta, ps.params.delta, ps.params.gamma, ps.params.lambda_diff};
  return ps.bounded_params ? model.physical_params() : model.raw_params();
}

/// d theta_p / d raw for the trainable parameters.
inline std::array<double, 4> effective_param_slope(const PinnModel& model, const PhysicsSetup& ps) {
  if (!ps.trainable_params) return {0.0, 0.0, 0.0, 0.0};
  if (!ps.bounded_params) return {1.0, 1.0, 1.0, 1.0};
  return model.config().transform.slope(model.raw_params());
}

/// Initial data at a point, from the continuous initial-condition spec.
inline std::array<double, 4> initial_value(const InitialConditionSpec& ic, const DomainSpec& d,
                                           double x, double y) {
  const auto c = ic.center_in(d);
  const double inv2s2 = 1.0 / (2.0 * ic.seed_width * ic.seed_width);
  double g = std::exp(-(x - c[0]) * (x - c[0]) * inv2s2);
  if (d.dim == 2) g *= std::exp(-(y - c[1]) * (y - c[1]) * inv2s2);
  return {ic.s0_level, ic.seed_amplitude_E * g, ic.seed_amplitude_I * g, ic.r0_level};
}

/// Local state of the four outputs needed by the residuals.
struct ResidualInputs {
  std::array<double, 4> u;    // values
  std::array<double, 4> u_t;  // time derivatives
  std::array<double, 4> lap;  // spatial Laplacians
};

/// PDE residuals (R_S, R_E, R_I, R_R) for Theta_p = (beta, delta, gamma,
/// lambda); Lambda, mu, p and eta come from `fixed`.
inline std::array<double, 4> pde_residuals(const ResidualInputs& in, const std::array<double, 4>& th,
                                           const EpidemicParams& fixed) {
  const double beta = th[0], delta = th[1], gamma = th[2], lam = th[3];
  const double S = in.u[0], E = in.u[1], I = in.u[2], R = in.u[3];
  const double mu = fixed.mu, p = fixed.p, eta = fixed.eta;
  const double si = beta * S * I;
  return {in.u_t[0] - lam * in.lap[0] - fixed.Lambda + si + mu * S,
          in.u_t[1] - lam * in.lap[1] - p * si + (delta + eta + mu) * E,
          in.u_t[2] - lam * in.lap[2] - (1.0 - p) * si - delta * E + (gamma + mu) * I,
          in.u_t[3] - lam * in.lap[3] - eta * E - gamma * I + mu * R};
}

inline std::array<double, 4> pde_residuals(const std::array<InputJet, 4>& jets,
                                           const std::array<double, 4>& th,
                                           const EpidemicParams& fixed) {
  ResidualInputs in{};
  for (int c = 0; c < 4; ++c) {
    in.u[c] = jets[c].value;
    in.u_t[c] = jets[c].d_t;
    in.lap[c] = jets[c].d_xx + jets[c].d_yy;
  }
  return pde_residuals(in, th, fixed);
}

namespace detail {

inline void check_finite_outputs(const BatchJets& j, const char* what) {
  if (!j.out.allFinite()) throw NumericalFailure(std::string("non-finite network output in ") + what);
}

struct ResidualLayoutIndex {
  int t, x, y, xx, yy;
  explicit ResidualLayoutIndex(const JetLayout& l)
      : t(l.first_channel(Axis::T)),
        x(l.first_channel(Axis::X)),
        y(l.first_channel(Axis::Y)),
        xx(l.second_channel_of(Axis::X)),
        yy(l.second_channel_of(Axis::Y)) {}
};

}  // namespace detail

/// Evaluates every component and (when `grad` is non-null) accumulates
/// d(total)/d(theta) into it. Components with zero weight are evaluated for
/// monitoring but contribute nothing to the gradient. When `residual_out` is
/// given, receives per-interior-point residual magnitudes.
inline LossBreakdown evaluate_loss(const PinnModel& model, const PhysicsSetup& ps,
                                   const CollocationBatch& batch, const ObservationSet& obs,
                                   const LossWeights& w, Vector* grad = nullptr,
                                   std::vector<double>* residual_out = nullptr) {
  w.validate();
  const int dim = model.config().dim;
  require(ps.domain.dim == dim, "loss: model and domain dimensions differ");
  if (grad) require(grad->size() == model.parameter_count(), "loss: gradient length mismatch");
  LossBreakdown out;
  const auto th = effective_params(model, ps);
  const EpidemicParams& q = ps.params;
  std::array<double, 4> th_bar{0.0, 0.0, 0.0, 0.0};

  // PDE residuals and constraints share the interior batch.
  if (!batch.interior.empty()) {
    const JetLayout layout = JetLayout::full(dim);
    const detail::ResidualLayoutIndex ix(layout);
    ForwardCache cache;
    const bool need_grad = grad && (w.pde > 0.0 || w.constraints > 0.0);
    const BatchJets j = forward_jets(model, batch.interior, layout, need_grad ? &cache : nullptr);
    detail::check_finite_outputs(j, "PDE batch");
    const Eigen::Index n = j.n;
    const double inv_n = 1.0 / static_cast<double>(n);
    const double K = carrying_capacity(q);
    Matrix bar;
    if (need_grad) bar = Matrix::Zero(j.out.rows(), j.out.cols());
    if (residual_out) residual_out->assign(static_cast<std::size_t>(n), 0.0);

    double pde_sum = 0.0, nonneg_sum = 0.0, pop_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      ResidualInputs in{};
      for (int c = 0; c < 4; ++c) {
        in.u[c] = j.channel(c, 0, i);
        in.u_t[c] = j.channel(c, ix.t, i);
        in.lap[c] = j.channel(c, ix.xx, i) + (dim == 2 ? j.channel(c, ix.yy, i) : 0.0);
      }
      const auto r = pde_residuals(in, th, q);
      const double r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2] + r[3] * r[3];
      pde_sum += r2;
      if (residual_out) (*residual_out)[static_cast<std::size_t>(i)] = std::sqrt(r2);

      double nn = 0.0;
      for (int c = 0; c < 4; ++c) {
        const double neg = std::max(0.0, -in.u[c]);
        nn += neg * neg;
      }
      nonneg_sum += nn;
      const double over = std::max(0.0, in.u[0] + in.u[1] + in.u[2] + in.u[3] - K);
      pop_sum += over * over;

      if (!need_grad) continue;
      // d total / d R_U
      const double gs = 2.0 * w.pde * inv_n * r[0];
      const double ge = 2.0 * w.pde * inv_n * r[1];
      const double gi = 2.0 * w.pde * inv_n * r[2];
      const double gr = 2.0 * w.pde * inv_n * r[3];
      const std::array<double, 4> g{gs, ge, gi, gr};
      const double beta = th[0], delta = th[1], gamma = th[2], lam = th[3];
      const double S = in.u[0], E = in.u[1], I = in.u[2];
      const double mu = q.mu, p = q.p, eta = q.eta;

      std::array<double, 4> v_bar{
          gs * (beta * I + mu) - ge * beta * p * I - gi * beta * (1.0 - p) * I,
          ge * (delta + eta + mu) - gi * delta - gr * eta,
          gs * beta * S - ge * beta * p * S - gi * beta * (1.0 - p) * S + gi * (gamma + mu) -
              gr * gamma,
          gr * mu};
      const double over_bar = 2.0 * w.constraints * inv_n * over;
      for (int c = 0; c < 4; ++c) {
        v_bar[c] += -2.0 * w.constraints * inv_n * std::max(0.0, -in.u[c]) + over_bar;
        bar(c, i) += v_bar[c];
        bar(c, ix.t * n + i) += g[c];
        bar(c, ix.xx * n + i) += -lam * g[c];
        if (dim == 2) bar(c, ix.yy * n + i) += -lam * g[c];
      }
      const double si = S * I;
      th_bar[0] += gs * si - ge * p * si - gi * (1.0 - p) * si;
      th_bar[1] += ge * E - gi * E;
      th_bar[2] += gi * I - gr * I;
      th_bar[3] -= g[0] * in.lap[0] + g[1] * in.lap[1] + g[2] * in.lap[2] + g[3] * in.lap[3];
    }
    out.pde = pde_sum * inv_n;
    out.nonneg = nonneg_sum * inv_n;
    out.pop = pop_sum * inv_n;
    if (need_grad) backward_jets(model, cache, std::move(bar), *grad);
  }

  if (!batch.initial.empty()) {
    ForwardCache cache;
    const bool need_grad = grad && w.ic > 0.0;
    const BatchJets j =
        forward_jets(model, batch.initial, JetLayout::value_only(), need_grad ? &cache : nullptr);
    detail::check_finite_outputs(j, "IC batch");
    const Eigen::Index n = j.n;
    const double inv_n = 1.0 / static_cast<double>(n);
    Matrix bar;
    if (need_grad) bar = Matrix::Zero(j.out.rows(), j.out.cols());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& pt = batch.initial[static_cast<std::size_t>(i)];
      const auto target = initial_value(ps.ic, ps.domain, pt.x, pt.y);
      for (int c = 0; c < 4; ++c) {
        const double d = j.value(c, i) - target[c];
        sum += d * d;
        if (need_grad) bar(c, i) = 2.0 * w.ic * inv_n * d;
      }
    }
    out.ic = sum * inv_n;
    if (need_grad) backward_jets(model, cache, std::move(bar), *grad);
  }

  if (!batch.boundary.empty()) {
    const JetLayout layout = JetLayout::spatial_gradient(dim);
    std::vector<SpaceTimePoint> pts;
    pts.reserve(batch.boundary.size());
    for (const auto& b : batch.boundary) {
      require(dim == 2 || b.wall == Wall::XMin || b.wall == Wall::XMax,
              "1D boundary points must sit on the x walls");
      pts.push_back(b.p);
    }
    ForwardCache cache;
    const bool need_grad = grad && w.bc > 0.0;
    const BatchJets j = forward_jets(model, pts, layout, need_grad ? &cache : nullptr);
    detail::check_finite_outputs(j, "boundary batch");
    const Eigen::Index n = j.n;
    const double inv_n = 1.0 / static_cast<double>(n);
    Matrix bar;
    if (need_grad) bar = Matrix::Zero(j.out.rows(), j.out.cols());
    const int cx = layout.first_channel(Axis::X), cy = layout.first_channel(Axis::Y);
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Wall wall = batch.boundary[static_cast<std::size_t>(i)].wall;
      const bool along_x = wall == Wall::XMin || wall == Wall::XMax;
      const double sign = (wall == Wall::XMin || wall == Wall::YMin) ? -1.0 : 1.0;
      const int ch = along_x ? cx : cy;
      for (int c = 0; c < 4; ++c) {
        const double dn = sign * j.channel(c, ch, i);
        sum += dn * dn;
        if (need_grad) bar(c, ch * n + i) = 2.0 * w.bc * inv_n * dn * sign;
      }
    }
    out.bc = sum * inv_n;
    if (need_grad) backward_jets(model, cache, std::move(bar), *grad);
  }

  const std::size_t n_obs = obs.active_count();
  if (n_obs > 0) {
    std::vector<SpaceTimePoint> pts;
    std::vector<const Observation*> recs;
    pts.reserve(n_obs);
    recs.reserve(n_obs);
    for (const auto& r : obs.records) {
      if (!obs.mask[static_cast<int>(r.compartment)]) continue;
      pts.push_back({r.t, r.x, r.y});
      recs.push_back(&r);
    }
    ForwardCache cache;
    const bool need_grad = grad && w.data > 0.0;
    const BatchJets j = forward_jets(model, pts, JetLayout::value_only(), need_grad ? &cache : nullptr);
    detail::check_finite_outputs(j, "data batch");
    const Eigen::Index n = j.n;
    const double inv_n = 1.0 / static_cast<double>(n);
    Matrix bar;
    if (need_grad) bar = Matrix::Zero(j.out.rows(), j.out.cols());
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = static_cast<int>(recs[static_cast<std::size_t>(i)]->compartment);
      const double d = j.value(c, i) - recs[static_cast<std::size_t>(i)]->value;
      sum += d * d;
      if (need_grad) bar(c, i) = 2.0 * w.data * inv_n * d;
    }
    out.data = sum * inv_n;
    if (need_grad) backward_jets(model, cache, std::move(bar), *grad);
  }

  // Admissibility: automatic under sigmoid bounding; a small quadratic pull
  // on the raw values otherwise.
  if (ps.trainable_params && !ps.bounded_params) {
    const auto raw = model.raw_params();
    for (int i = 0; i < 4; ++i) out.param += ps.raw_penalty * raw[i] * raw[i];
    if (grad)
      for (int i = 0; i < 4; ++i)
        (*grad)[model.layout().raw_off + i] += w.constraints * 2.0 * ps.raw_penalty * raw[i];
  }

  if (grad && ps.trainable_params) {
    const auto slope = effective_param_slope(model, ps);
    for (int i = 0; i < 4; ++i) (*grad)[model.layout().raw_off + i] += th_bar[i] * slope[i];
  }

  out.total = w.pde * out.pde + w.ic * out.ic + w.bc * out.bc + w.data * out.data +
              w.constraints * out.constraints();
  if (!std::isfinite(out.total)) {
    std::string which = !std::isfinite(out.pde)    ? "pde"
                        : !std::isfinite(out.ic)   ? "ic"
                        : !std::isfinite(out.bc)   ? "bc"
                        : !std::isfinite(out.data) ? "data"
                                                   : "constraints";
    throw NumericalFailure("non-finite loss component: " + which);
  }
  return out;
}

/// Individual components, for callers that want one term at a time.
inline double loss_pde(const PinnModel& m, const PhysicsSetup& ps, const CollocationBatch& b) {
  CollocationBatch only;
  only.interior = b.interior;
  return evaluate_loss(m, ps, only, {}, {}).pde;
}
inline double loss_ic(const PinnModel& m, const PhysicsSetup& ps, const CollocationBatch& b) {
  CollocationBatch only;
  only.initial = b.initial;
  return evaluate_loss(m, ps, only, {}, {}).ic;
}
inline double loss_bc(const PinnModel& m, const PhysicsSetup& ps, const CollocationBatch& b) {
  CollocationBatch only;
  only.boundary = b.boundary;
  return evaluate_loss(m, ps, only, {}, {}).bc;
}
inline double loss_data(const PinnModel& m, const PhysicsSetup& ps, const ObservationSet& obs) {
  return evaluate_loss(m, ps, {}, obs, {}).data;
}

struct ConstraintTerms {
  double nonneg, pop, param;
};
inline ConstraintTerms loss_constraints(const PinnModel& m, const PhysicsSetup& ps,
                                        const CollocationBatch& b) {
  CollocationBatch only;
  only.interior = b.interior;
  const auto r = evaluate_loss(m, ps, only, {}, {});
  return {r.nonneg, r.pop, r.param};
}

inline LossBreakdown total_loss(const PinnModel& m, const PhysicsSetup& ps,
                                const CollocationBatch& b, const ObservationSet& obs,
                                const LossWeights& w) {
  return evaluate_loss(m, ps, b, obs, w);
}

/// Runs a loss functional that accumulates its gradient, returning the
/// loss and d(loss)/d(theta). Non-finite results raise NumericalFailure.
template <typename Functional>
std::pair<double, Vector> loss_gradient(const PinnModel& model, Functional&& f) {
  Vector g = Vector::Zero(model.parameter_count());
  const double loss = f(model, g);
  if (!std::isfinite(loss)) throw NumericalFailure("loss is not finite");
  if (!g.allFinite()) throw NumericalFailure("loss gradient is not finite");
  return {loss, std::move(g)};
}

}  // namespace seir
