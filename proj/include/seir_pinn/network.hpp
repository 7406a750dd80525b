#pragma once

// PINN function class: Fourier-embedded space coordinates, a tanh/swish
// hidden stack with residual skips, a linear four-output head, and sigmoid
// bounded physical parameters.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "seir_pinn/autodiff.hpp"
#include "seir_pinn/errors.hpp"

namespace seir {

inline constexpr int kNumOutputs = 4;
inline constexpr int kNumPhysParams = 4;  // beta, delta, gamma, lambda

/// Order of the trainable physical parameters.
enum class PhysParam : int { Beta = 0, Delta = 1, Gamma = 2, Lambda = 3 };
inline constexpr std::array<const char*, 4> kPhysParamNames{"beta", "delta", "gamma", "lambda"};

struct SpaceTimePoint {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// gamma(x) = [sin(2 pi B x), cos(2 pi B x)] with B of shape m x spatial_dim.
struct FourierFeatureMap {
  Matrix B;

  int frequencies() const { return static_cast<int>(B.rows()); }
  int spatial_dim() const { return static_cast<int>(B.cols()); }
  int output_dim() const { return 2 * frequencies(); }

  Vector operator()(const Vector& x) const {
    require(x.size() == spatial_dim(), "fourier_features: dimension mismatch");
    for (Eigen::Index i = 0; i < x.size(); ++i)
      require(std::isfinite(x[i]), "fourier_features: non-finite input");
    const Vector theta = 2.0 * std::numbers::pi * (B * x);
    Vector out(output_dim());
    out.head(frequencies()) = theta.array().sin();
    out.tail(frequencies()) = theta.array().cos();
    return out;
  }
};

inline Vector fourier_features(const FourierFeatureMap& map, const Vector& x) { return map(x); }

inline double sigmoid(double r) {
  return r >= 0.0 ? 1.0 / (1.0 + std::exp(-r)) : std::exp(r) / (1.0 + std::exp(r));
}

/// theta_p = bound * sigmoid(raw), coordinatewise.
struct ParamTransform {
  std::array<double, 4> bounds{1.0, 1.0, 1.0, 1.0};

  void validate() const {
    for (double b : bounds) require(b > 0.0 && std::isfinite(b), "parameter bounds must be > 0");
  }

  std::array<double, 4> apply(const std::array<double, 4>& raw) const {
    std::array<double, 4> out{};
    for (int i = 0; i < 4; ++i) out[i] = bounds[i] * sigmoid(raw[i]);
    return out;
  }

  /// d theta_p / d raw.
  std::array<double, 4> slope(const std::array<double, 4>& raw) const {
    std::array<double, 4> out{};
    for (int i = 0; i < 4; ++i) {
      const double s = sigmoid(raw[i]);
      out[i] = bounds[i] * s * (1.0 - s);
    }
    return out;
  }

  std::array<double, 4> inverse(const std::array<double, 4>& value) const {
    std::array<double, 4> out{};
    for (int i = 0; i < 4; ++i) {
      const double f = value[i] / bounds[i];
      require(f > 0.0 && f < 1.0, "inverse transform: value outside (0, bound)");
      out[i] = std::log(f / (1.0 - f));
    }
    return out;
  }
};

inline std::array<double, 4> transform_params(const std::array<double, 4>& raw,
                                              const ParamTransform& t) {
  return t.apply(raw);
}

struct NetworkConfig {
  int dim = 1;
  int depth = 4;   // hidden layers
  int width = 64;
  int fourier_m = 32;
  double fourier_scale = 1.0;
  Activation activation = Activation::Tanh;
  // Input normalization: t / T and x / L.
  double T = 5.0;
  double Lx = 1.0;
  double Ly = 1.0;
  ParamTransform transform;
  /// Starting values of (beta, delta, gamma, lambda) as fractions of bounds.
  std::array<double, 4> param_start_fraction{0.5, 0.5, 0.5, 0.5};
  /// Fixed per-compartment multiplier applied after the linear head.
  std::array<double, 4> output_scale{1.0, 1.0, 1.0, 1.0};

  int input_width() const { return 1 + 2 * fourier_m; }

  void validate() const {
    require(dim == 1 || dim == 2, "network dim must be 1 or 2");
    require(depth >= 1, "network depth must be >= 1");
    require(width >= 1, "network width must be >= 1");
    require(fourier_m >= 1, "fourier_m must be >= 1");
    require(fourier_scale > 0.0, "fourier_scale must be > 0");
    require(T > 0.0 && Lx > 0.0 && (dim == 1 || Ly > 0.0), "normalization extents must be > 0");
    transform.validate();
    for (double f : param_start_fraction)
      require(f > 0.0 && f < 1.0, "param_start_fraction entries must lie in (0, 1)");
    for (double s : output_scale) require(s > 0.0 && std::isfinite(s), "output_scale must be > 0");
  }
};

/// Offsets of each block in the flat parameter vector. Ordering: for each
/// hidden layer its weights (column-major, out x in) then biases; the output
/// head the same way; the four raw physical parameters last.
struct ParamLayout {
  struct Dense {
    Eigen::Index w_off, b_off;
    int rows, cols;
  };
  std::vector<Dense> hidden;
  Dense head{};
  Eigen::Index raw_off = 0;
  Eigen::Index total = 0;

  explicit ParamLayout(const NetworkConfig& c) {
    Eigen::Index off = 0;
    int in = c.input_width();
    auto add = [&](int rows, int cols) {
      Dense d{off, off + static_cast<Eigen::Index>(rows) * cols, rows, cols};
      off = d.b_off + rows;
      return d;
    };
    for (int l = 0; l < c.depth; ++l) {
      hidden.push_back(add(c.width, in));
      in = c.width;
    }
    head = add(kNumOutputs, c.width);
    raw_off = off;
    total = off + kNumPhysParams;
  }
  ParamLayout() = default;
};

class PinnModel {
 public:
  PinnModel() = default;
  PinnModel(NetworkConfig cfg, FourierFeatureMap features)
      : cfg_(std::move(cfg)), features_(std::move(features)), layout_(cfg_) {
    cfg_.validate();
    require(features_.spatial_dim() == cfg_.dim, "feature map dimension differs from network");
    require(features_.frequencies() == cfg_.fourier_m, "feature map size differs from fourier_m");
    require(cfg_.input_width() == 1 + features_.output_dim(), "input width must be 1 + 2m");
    theta_ = Vector::Zero(layout_.total);
  }

  const NetworkConfig& config() const { return cfg_; }
  const FourierFeatureMap& features() const { return features_; }
  const ParamLayout& layout() const { return layout_; }
  Eigen::Index parameter_count() const { return layout_.total; }

  const Vector& parameters() const { return theta_; }
  Vector& parameters() { return theta_; }
  void set_parameters(const Vector& p) {
    require(p.size() == theta_.size(), "parameter vector has the wrong length");
    theta_ = p;
  }

  Eigen::Map<const Matrix> weight(const ParamLayout::Dense& d) const {
    return {theta_.data() + d.w_off, d.rows, d.cols};
  }
  Eigen::Map<const Vector> bias(const ParamLayout::Dense& d) const {
    return {theta_.data() + d.b_off, d.rows};
  }
  Eigen::Map<Matrix> weight(const ParamLayout::Dense& d) {
    return {theta_.data() + d.w_off, d.rows, d.cols};
  }
  Eigen::Map<Vector> bias(const ParamLayout::Dense& d) { return {theta_.data() + d.b_off, d.rows}; }

  std::array<double, 4> raw_params() const {
    return {theta_[layout_.raw_off], theta_[layout_.raw_off + 1], theta_[layout_.raw_off + 2],
            theta_[layout_.raw_off + 3]};
  }
  void set_raw_params(const std::array<double, 4>& raw) {
    for (int i = 0; i < 4; ++i) theta_[layout_.raw_off + i] = raw[i];
  }
  /// (beta, delta, gamma, lambda) after the bounded transform.
  std::array<double, 4> physical_params() const { return cfg_.transform.apply(raw_params()); }

  /// Whether hidden layer l closes a residual block (adds the output of
  /// layer l-2). Layer 0 lifts the embedding to the hidden width; layers
  /// (1,2), (3,4), ... form two-layer blocks; a trailing odd layer is plain.
  bool closes_skip(int l) const { return l >= 2 && l % 2 == 0; }

 private:
  NetworkConfig cfg_;
  FourierFeatureMap features_;
  ParamLayout layout_;
  Vector theta_;
};

/// Xavier-uniform weights, zero biases, Gaussian Fourier frequencies.
inline PinnModel xavier_init(const NetworkConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  FourierFeatureMap fmap;
  fmap.B.resize(cfg.fourier_m, cfg.dim);
  std::normal_distribution<double> normal(0.0, cfg.fourier_scale);
  for (Eigen::Index j = 0; j < fmap.B.cols(); ++j)
    for (Eigen::Index i = 0; i < fmap.B.rows(); ++i) fmap.B(i, j) = normal(rng);

  PinnModel model(cfg, std::move(fmap));
  auto init = [&](const ParamLayout::Dense& d) {
    const double a = std::sqrt(6.0 / (d.rows + d.cols));
    std::uniform_real_distribution<double> u(-a, a);
    auto W = model.weight(d);
    for (Eigen::Index j = 0; j < W.cols(); ++j)
      for (Eigen::Index i = 0; i < W.rows(); ++i) W(i, j) = u(rng);
    model.bias(d).setZero();
  };
  for (const auto& d : model.layout().hidden) init(d);
  init(model.layout().head);

  std::array<double, 4> start{};
  for (int i = 0; i < 4; ++i) start[i] = cfg.param_start_fraction[i] * cfg.transform.bounds[i];
  model.set_raw_params(cfg.transform.inverse(start));
  return model;
}

// ---------------------------------------------------------------------------
// Batched evaluation with input jets.

/// Activations kept for the reverse pass.
struct ForwardCache {
  JetLayout layout;
  Eigen::Index n = 0;
  Matrix input;                 // (1+2m) x C*n
  std::vector<Matrix> pre;      // per hidden layer, width x C*n
  std::vector<Matrix> post;     // per hidden layer (after skip add)
};

/// Stacked network outputs: kNumOutputs x C*n, channel blocks of width n.
struct BatchJets {
  JetLayout layout;
  Eigen::Index n = 0;
  Matrix out;

  double value(int comp, Eigen::Index i) const { return out(comp, i); }
  double channel(int comp, int ch, Eigen::Index i) const { return out(comp, ch * n + i); }
};

namespace detail {

inline Matrix embed_inputs(const PinnModel& model, const std::vector<SpaceTimePoint>& pts,
                           const JetLayout& layout) {
  const auto& cfg = model.config();
  const auto& B = model.features().B;
  const int m = cfg.fourier_m;
  const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
  Matrix z = Matrix::Zero(cfg.input_width(), layout.channels() * n);
  const double two_pi = 2.0 * std::numbers::pi;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = pts[i];
    if (!std::isfinite(p.t) || !std::isfinite(p.x) || (cfg.dim == 2 && !std::isfinite(p.y)))
      throw InvalidInput("network input must be finite");
    const double xn = p.x / cfg.Lx;
    const double yn = cfg.dim == 2 ? p.y / cfg.Ly : 0.0;
    z(0, i) = p.t / cfg.T;
    for (int j = 0; j < m; ++j) {
      double arg = B(j, 0) * xn;
      if (cfg.dim == 2) arg += B(j, 1) * yn;
      const double th = two_pi * arg;
      const double s = std::sin(th), c = std::cos(th);
      z(1 + j, i) = s;
      z(1 + m + j, i) = c;
      for (int f = 0; f < layout.n_first; ++f) {
        const Axis ax = layout.first_axis[f];
        const Eigen::Index col = (1 + f) * n + i;
        if (ax == Axis::T) {
          if (j == 0) z(0, col) = 1.0 / cfg.T;
          continue;
        }
        const int sd = ax == Axis::X ? 0 : 1;
        const double w = two_pi * B(j, sd) / (sd == 0 ? cfg.Lx : cfg.Ly);
        z(1 + j, col) = w * c;
        z(1 + m + j, col) = -w * s;
        const int sc = layout.second_channel[f];
        if (sc >= 0) {
          const Eigen::Index col2 = sc * n + i;
          z(1 + j, col2) = -w * w * s;
          z(1 + m + j, col2) = -w * w * c;
        }
      }
    }
  }
  return z;
}

}  // namespace detail

/// Evaluates the network and the requested input-derivative channels at
/// every point. When `cache` is given, stores what `backward_jets` needs.
inline BatchJets forward_jets(const PinnModel& model, const std::vector<SpaceTimePoint>& pts,
                              const JetLayout& layout, ForwardCache* cache = nullptr) {
  const auto& cfg = model.config();
  const auto& lay = model.layout();
  const Eigen::Index n = static_cast<Eigen::Index>(pts.size());
  for (int f = 0; f < layout.n_first; ++f)
    require(!(layout.first_axis[f] == Axis::Y && cfg.dim == 1),
            "jet layout asks for d/dy on a 1D model");

  Matrix z = detail::embed_inputs(model, pts, layout);
  std::vector<Matrix> pre(cfg.depth), post(cfg.depth);
  const Matrix* in = &z;
  for (int l = 0; l < cfg.depth; ++l) {
    jet::affine(model.weight(lay.hidden[l]), model.bias(lay.hidden[l]), *in, n, pre[l]);
    jet::activate(cfg.activation, layout, pre[l], n, post[l]);
    if (model.closes_skip(l)) post[l] += post[l - 2];
    in = &post[l];
  }
  BatchJets res;
  res.layout = layout;
  res.n = n;
  jet::affine(model.weight(lay.head), model.bias(lay.head), *in, n, res.out);
  for (int c = 0; c < kNumOutputs; ++c) res.out.row(c) *= cfg.output_scale[c];

  if (cache) {
    cache->layout = layout;
    cache->n = n;
    cache->input = std::move(z);
    cache->pre = std::move(pre);
    cache->post = std::move(post);
  }
  return res;
}

/// Accumulates d(loss)/d(theta) into `grad` (network weights only) given
/// d(loss)/d(out) for a batch evaluated with `forward_jets`.
inline void backward_jets(const PinnModel& model, const ForwardCache& cache, Matrix out_bar,
                          Eigen::Ref<Vector> grad) {
  const auto& cfg = model.config();
  const auto& lay = model.layout();
  const Eigen::Index n = cache.n;
  require(grad.size() == model.parameter_count(), "gradient vector has the wrong length");
  for (int c = 0; c < kNumOutputs; ++c) out_bar.row(c) *= cfg.output_scale[c];

  auto W_bar = [&](const ParamLayout::Dense& d) {
    return Eigen::Map<Matrix>(grad.data() + d.w_off, d.rows, d.cols);
  };
  auto b_bar = [&](const ParamLayout::Dense& d) {
    return Eigen::Map<Vector>(grad.data() + d.b_off, d.rows);
  };

  const Matrix& last = cfg.depth > 0 ? cache.post.back() : cache.input;
  std::vector<Matrix> post_bar(cfg.depth);
  Matrix h_bar;
  jet::affine_adjoint(model.weight(lay.head), last, n, out_bar, W_bar(lay.head), b_bar(lay.head),
                      &h_bar);
  post_bar[cfg.depth - 1] = std::move(h_bar);

  Matrix pre_bar;
  for (int l = cfg.depth - 1; l >= 0; --l) {
    Matrix& hb = post_bar[l];
    if (model.closes_skip(l)) {
      if (post_bar[l - 2].size() == 0) post_bar[l - 2] = hb;
      else post_bar[l - 2] += hb;
    }
    jet::activate_adjoint(cfg.activation, cache.layout, cache.pre[l], n, hb, pre_bar);
    const Matrix& in = l == 0 ? cache.input : cache.post[l - 1];
    Matrix in_bar;
    jet::affine_adjoint(model.weight(lay.hidden[l]), in, n, pre_bar, W_bar(lay.hidden[l]),
                        b_bar(lay.hidden[l]), l == 0 ? nullptr : &in_bar);
    if (l > 0) {
      if (post_bar[l - 1].size() == 0) post_bar[l - 1] = std::move(in_bar);
      else post_bar[l - 1] += in_bar;
    }
    hb.resize(0, 0);
  }
}

/// Plain forward pass at one point.
inline std::array<double, 4> forward(const PinnModel& model, double t, double x, double y = 0.0) {
  require(std::isfinite(t) && std::isfinite(x) && std::isfinite(y), "forward: non-finite input");
  const BatchJets j = forward_jets(model, {SpaceTimePoint{t, x, y}}, JetLayout::value_only());
  return {j.out(0, 0), j.out(1, 0), j.out(2, 0), j.out(3, 0)};
}

/// Value, d/dt, d/dx(, d/dy), d2/dx2(, d2/dy2) of each compartment output.
inline std::array<InputJet, 4> evaluate_with_input_derivatives(const PinnModel& model, double t,
                                                               const std::vector<double>& x) {
  const int dim = model.config().dim;
  require(static_cast<int>(x.size()) == dim, "evaluate_with_input_derivatives: dimension mismatch");
  const JetLayout layout = JetLayout::full(dim);
  const BatchJets j = forward_jets(
      model, {SpaceTimePoint{t, x[0], dim == 2 ? x[1] : 0.0}}, layout);
  std::array<InputJet, 4> res{};
  for (int c = 0; c < 4; ++c) {
    InputJet& r = res[c];
    r.value = j.channel(c, 0, 0);
    r.d_t = j.channel(c, layout.first_channel(Axis::T), 0);
    r.d_x = j.channel(c, layout.first_channel(Axis::X), 0);
    r.d_xx = j.channel(c, layout.second_channel_of(Axis::X), 0);
    if (dim == 2) {
      r.d_y = j.channel(c, layout.first_channel(Axis::Y), 0);
      r.d_yy = j.channel(c, layout.second_channel_of(Axis::Y), 0);
    }
  }
  return res;
}

}  // namespace seir
