#pragma once

// Staged training:
//   Stage I    Adam on w_ic L_ic + w_data L_data (data fitting)
//   Stage II   Adam on the full composite loss (physics enforcement)
//   Stage III  L-BFGS on the full loss over one frozen batch (refinement)
// Collocation points are redrawn every Adam epoch, biased toward cells with
// large residuals in the previous epoch.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "seir_pinn/datagen.hpp"
#include "seir_pinn/errors.hpp"
#include "seir_pinn/loss.hpp"
#include "seir_pinn/network.hpp"
#include "seir_pinn/nsfd.hpp"
#include "seir_pinn/optim.hpp"
#include "seir_pinn/sampling.hpp"

namespace seir {

enum class TrainMode { Forward, Inverse };

struct EarlyStopRule {
  bool enabled = true;
  double min_rel_improvement = 1e-8;
  long window = 500;
};

struct TrainConfig {
  TrainMode mode = TrainMode::Forward;
  long epochs_total = 8000;
  double stage1_fraction = 0.1;
  double stage2_fraction = 0.9;
  int lbfgs_iterations = 500;
  SamplingConfig sampling;
  LossWeights weights;
  std::uint64_t seed = 42;
  EarlyStopRule early_stop;
  double lr_max = 1e-3;
  double lr_min = 1e-5;
  double clip_norm = 1.0;

  void validate() const {
    require(epochs_total > 0, "epochs_total must be > 0");
    require(stage1_fraction >= 0.0 && stage1_fraction <= 1.0 && stage2_fraction >= 0.0 &&
                stage2_fraction <= 1.0 && stage1_fraction + stage2_fraction <= 1.0 + 1e-12,
            "stage fractions must lie in [0,1] and sum to at most 1");
    require(lbfgs_iterations >= 0, "lbfgs_iterations must be >= 0");
    require(early_stop.window > 0 && early_stop.min_rel_improvement >= 0.0,
            "early-stop window must be > 0 and tolerance >= 0");
    require(lr_max >= lr_min && lr_min > 0.0, "learning rates need lr_max >= lr_min > 0");
    sampling.validate();
    weights.validate();
  }

  long stage1_epochs() const {
    return std::lround(stage1_fraction * static_cast<double>(epochs_total));
  }
  long stage2_epochs() const {
    const long s2 = std::lround(stage2_fraction * static_cast<double>(epochs_total));
    return std::min(s2, epochs_total - stage1_epochs());
  }
};

/// One row of the loss history: an Adam epoch (stage 1/2) or an L-BFGS
/// iteration (stage 3).
struct EpochRecord {
  long epoch = 0;
  int stage = 1;
  double lr = 0.0;
  LossBreakdown loss;
  std::array<double, 4> theta_p{};
};

struct RunArtifacts {
  std::vector<EpochRecord> history;
  PinnModel model;
  TrainConfig config;
  long adam_epochs_run = 0;
  int lbfgs_iterations_run = 0;
  std::string lbfgs_stop_reason;
  bool early_stopped = false;
  std::array<double, 3> stage_seconds{0.0, 0.0, 0.0};
};

/// Per-epoch batch seed derived from the run seed (splitmix64 finalizer).
inline std::uint64_t epoch_seed(std::uint64_t seed, long epoch) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(epoch + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

using EpochCallback = std::function<void(const EpochRecord&)>;

inline RunArtifacts train(const TrainConfig& cfg, PinnModel model, const PhysicsSetup& physics,
                          const ObservationSet* dataset, const EpochCallback& on_epoch = {}) {
  cfg.validate();
  physics.params.validate();
  physics.domain.validate();
  require(physics.domain.dim == model.config().dim, "train: model and domain dimensions differ");
  require(physics.trainable_params == (cfg.mode == TrainMode::Inverse),
          "train: physics setup does not match the training mode");
  if (cfg.mode == TrainMode::Inverse)
    require(dataset && dataset->active_count() > 0, "inverse mode needs a non-empty dataset");
  static const ObservationSet kNoData{};
  const ObservationSet& data = dataset ? *dataset : kNoData;

  using clock = std::chrono::steady_clock;
  RunArtifacts art;
  art.config = cfg;

  const long s1 = cfg.stage1_epochs();
  const long s2 = cfg.stage2_epochs();
  const long adam_total = s1 + s2;

  LossWeights stage1_w{0.0, cfg.weights.ic, 0.0, cfg.weights.data, 0.0};
  const LossWeights& stage2_w = cfg.weights;

  AdamState adam(model.parameter_count(),
                 CosineSchedule{cfg.lr_max, cfg.lr_min, std::max<long>(adam_total, 1)});
  adam.max_grad_norm = cfg.clip_norm;

  std::optional<ResidualMap> residual_map;
  std::vector<double> residuals;
  Vector grad(model.parameter_count());

  // Early stopping on the running best total loss of the current stage.
  std::vector<double> best_trace;
  double best = std::numeric_limits<double>::infinity();
  int current_stage = 0;

  for (long e = 0; e < adam_total; ++e) {
    const int stage = e < s1 ? 1 : 2;
    if (stage != current_stage) {
      current_stage = stage;
      best_trace.clear();
      best = std::numeric_limits<double>::infinity();
    }
    const auto t0 = clock::now();
    const CollocationBatch batch = sample_collocation(
        physics.domain, cfg.sampling, epoch_seed(cfg.seed, e), residual_map ? &*residual_map : nullptr);
    grad.setZero();
    const LossBreakdown lb = evaluate_loss(model, physics, batch, data,
                                           stage == 1 ? stage1_w : stage2_w, &grad, &residuals);
    EpochRecord rec;
    rec.epoch = e;
    rec.stage = stage;
    rec.loss = lb;
    rec.theta_p = effective_params(model, physics);
    rec.lr = adam_step(adam, model.parameters(), grad);
    art.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    residual_map = bin_residuals(physics.domain, cfg.sampling, batch.interior, residuals);
    art.stage_seconds[stage - 1] +=
        std::chrono::duration<double>(clock::now() - t0).count();
    ++art.adam_epochs_run;

    best = std::min(best, lb.total);
    best_trace.push_back(best);
    if (cfg.early_stop.enabled && stage == 2 &&
        static_cast<long>(best_trace.size()) > cfg.early_stop.window) {
      const double before = best_trace[best_trace.size() - 1 - cfg.early_stop.window];
      if (before - best <= cfg.early_stop.min_rel_improvement * std::abs(before)) {
        art.early_stopped = true;
        break;
      }
    }
  }

  if (cfg.lbfgs_iterations > 0) {
    const auto t0 = clock::now();
    const CollocationBatch frozen =
        sample_collocation(physics.domain, cfg.sampling, epoch_seed(cfg.seed, adam_total),
                           residual_map ? &*residual_map : nullptr);
    PinnModel work = model;
    // The line search accepts the point it evaluated last, so the breakdown
    // of the most recent evaluation belongs to each accepted iterate.
    LossBreakdown last{};
    Objective fn = [&](const Vector& x, Vector& g) {
      work.set_parameters(x);
      g.setZero(x.size());
      try {
        last = evaluate_loss(work, physics, frozen, data, stage2_w, &g);
        return last.total;
      } catch (const NumericalFailure&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    LbfgsState state;
    state.options.max_iterations = cfg.lbfgs_iterations;
    const long base_epoch = art.adam_epochs_run;
    auto on_iter = [&](int it, double) {
      EpochRecord rec;
      rec.epoch = base_epoch + it - 1;
      rec.stage = 3;
      rec.loss = last;
      rec.theta_p = effective_params(work, physics);
      art.history.push_back(rec);
      if (on_epoch) on_epoch(rec);
    };
    LbfgsResult res = lbfgs_minimize(state, fn, model.parameters(), on_iter);
    model.set_parameters(res.x);
    art.lbfgs_iterations_run = res.iterations;
    art.lbfgs_stop_reason = res.stop_reason;
    art.stage_seconds[2] = std::chrono::duration<double>(clock::now() - t0).count();
  }
  art.model = std::move(model);
  return art;
}

/// Model predictions on every stored level and node of a reference
/// trajectory, scored per compartment over the whole space-time sample set.
inline ErrorReport evaluate(const PinnModel& model, const Trajectory& reference) {
  require(!reference.states.empty(), "evaluate: empty reference");
  const GridSpec& g = reference.states.front().grid;
  require(g.dim == model.config().dim, "evaluate: model and reference dimensions differ");
  const std::size_t nodes = g.node_count();
  const std::size_t total = nodes * reference.states.size();
  std::array<std::vector<double>, 4> pred, truth;
  for (int c = 0; c < 4; ++c) {
    pred[c].reserve(total);
    truth[c].reserve(total);
  }
  constexpr std::size_t kChunk = 8192;
  std::vector<SpaceTimePoint> pts;
  pts.reserve(kChunk);
  auto flush = [&]() {
    if (pts.empty()) return;
    const BatchJets j = forward_jets(model, pts, JetLayout::value_only());
    for (Eigen::Index i = 0; i < j.n; ++i)
      for (int c = 0; c < 4; ++c) pred[c].push_back(j.value(c, i));
    pts.clear();
  };
  for (std::size_t lvl = 0; lvl < reference.states.size(); ++lvl) {
    const auto& st = reference.states[lvl];
    for (std::size_t n = 0; n < nodes; ++n) {
      const int ix = static_cast<int>(n % g.nx);
      const int iy = static_cast<int>(n / g.nx);
      pts.push_back({reference.times[lvl], g.x(ix), g.dim == 2 ? g.y(iy) : 0.0});
      for (int c = 0; c < 4; ++c) truth[c].push_back(st.u[c][n]);
      if (pts.size() == kChunk) flush();
    }
  }
  flush();
  ErrorReport rep;
  for (int c = 0; c < 4; ++c) rep.per_compartment[c] = error_metrics(pred[c], truth[c]);
  return rep;
}

}  // namespace seir
