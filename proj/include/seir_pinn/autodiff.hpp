#pragma once

// Truncation-free input derivatives for dense networks, and exact reverse
// accumulation through them.
//
// A batch of N points is propagated as a stacked matrix [V | D_1 | .. | D_k |
// DD_1 | ..] of width C*N, one block per jet channel: the value, first
// derivatives along selected input directions, and pure second derivatives
// along a subset of those directions. An affine map acts on every channel
// (the bias only on the value block); an elementwise activation a -> f(a)
// maps
//   v  -> f(v)
//   d  -> f'(v) d
//   dd -> f''(v) d^2 + f'(v) dd.
// The reverse pass is the adjoint of exactly these formulas, so parameter
// gradients of losses built from derivatives (PDE residuals) are exact.

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <string>

#include "seir_pinn/errors.hpp"

namespace seir {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Tanh and Swish are the network activations; Identity and Square exist so
/// polynomial networks with closed-form derivatives can exercise the jets.
enum class Activation { Tanh, Swish, Identity, Square };

inline Activation activation_from_name(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "swish") return Activation::Swish;
  throw InvalidInput("unknown activation '" + s + "' (expected tanh or swish)");
}

inline const char* activation_name(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Swish: return "swish";
    case Activation::Identity: return "identity";
    case Activation::Square: return "square";
  }
  return "?";
}

/// Value and first three derivatives of the activation at a.
struct ActivationTaylor {
  double f, d1, d2, d3;
};

inline ActivationTaylor activation_taylor(Activation act, double a) {
  if (act == Activation::Identity) return {a, 1.0, 0.0, 0.0};
  if (act == Activation::Square) return {a * a, 2.0 * a, 2.0, 0.0};
  if (act == Activation::Tanh) {
    const double s = std::tanh(a);
    const double d1 = 1.0 - s * s;
    const double d2 = -2.0 * s * d1;
    const double d3 = -2.0 * d1 * d1 - 2.0 * s * d2;
    return {s, d1, d2, d3};
  }
  // swish(a) = a * sigmoid(a)
  const double sg = 1.0 / (1.0 + std::exp(-a));
  const double g1 = sg * (1.0 - sg);
  const double g2 = g1 * (1.0 - 2.0 * sg);
  const double g3 = g1 * (1.0 - 6.0 * sg + 6.0 * sg * sg);
  return {a * sg, sg + a * g1, 2.0 * g1 + a * g2, 3.0 * g2 + a * g3};
}

/// Input coordinates a jet channel can differentiate along.
enum class Axis : int { T = 0, X = 1, Y = 2 };

/// Which derivative channels a batch carries. Channel 0 is always the value;
/// channels 1..n_first are first derivatives; the remaining channels are
/// pure second derivatives of some of the first-order axes.
struct JetLayout {
  int n_first = 0;
  std::array<Axis, 3> first_axis{};
  std::array<int, 3> second_channel{-1, -1, -1};  // per first-order slot
  int n_second = 0;

  int channels() const { return 1 + n_first + n_second; }

  int first_channel(Axis a) const {
    for (int i = 0; i < n_first; ++i)
      if (first_axis[i] == a) return 1 + i;
    return -1;
  }
  int second_channel_of(Axis a) const {
    for (int i = 0; i < n_first; ++i)
      if (first_axis[i] == a) return second_channel[i];
    return -1;
  }

  static JetLayout value_only() { return {}; }

  /// Value plus first spatial derivatives (Neumann penalties).
  static JetLayout spatial_gradient(int dim) {
    JetLayout l;
    l.n_first = dim;
    l.first_axis = {Axis::X, Axis::Y, Axis::T};
    return l;
  }

  /// Value, d/dt, first spatial derivatives and the pure spatial seconds.
  static JetLayout full(int dim) {
    JetLayout l;
    l.n_first = 1 + dim;
    l.first_axis = {Axis::T, Axis::X, Axis::Y};
    l.n_second = dim;
    l.second_channel = {-1, 1 + l.n_first, dim == 2 ? 2 + l.n_first : -1};
    return l;
  }
};

namespace jet {

/// Column block of channel c in a stacked jet matrix with n points.
template <typename M>
auto block(M& m, int c, Eigen::Index n) {
  return m.middleCols(c * n, n);
}

/// Elementwise activation of a stacked pre-activation jet. `pre` is kept
/// for the reverse pass.
inline void activate(Activation act, const JetLayout& layout, const Matrix& pre, Eigen::Index n,
                     Matrix& out) {
  out.resize(pre.rows(), pre.cols());
  const Eigen::Index rows = pre.rows();
  for (Eigen::Index col = 0; col < n; ++col) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const ActivationTaylor f = activation_taylor(act, pre(r, col));
      out(r, col) = f.f;
      for (int i = 0; i < layout.n_first; ++i) {
        const Eigen::Index cd = (1 + i) * n + col;
        const double d = pre(r, cd);
        out(r, cd) = f.d1 * d;
        const int sc = layout.second_channel[i];
        if (sc >= 0) {
          const Eigen::Index cdd = sc * n + col;
          out(r, cdd) = f.d2 * d * d + f.d1 * pre(r, cdd);
        }
      }
    }
  }
}

/// Adjoint of `activate`: given d(loss)/d(out), returns d(loss)/d(pre).
inline void activate_adjoint(Activation act, const JetLayout& layout, const Matrix& pre,
                             Eigen::Index n, const Matrix& out_bar, Matrix& pre_bar) {
  pre_bar.resize(pre.rows(), pre.cols());
  const Eigen::Index rows = pre.rows();
  for (Eigen::Index col = 0; col < n; ++col) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const ActivationTaylor f = activation_taylor(act, pre(r, col));
      double v_bar = f.d1 * out_bar(r, col);
      for (int i = 0; i < layout.n_first; ++i) {
        const Eigen::Index cd = (1 + i) * n + col;
        const double d = pre(r, cd);
        const double hd = out_bar(r, cd);
        v_bar += f.d2 * d * hd;
        double d_bar = f.d1 * hd;
        const int sc = layout.second_channel[i];
        if (sc >= 0) {
          const Eigen::Index cdd = sc * n + col;
          const double dd = pre(r, cdd);
          const double hdd = out_bar(r, cdd);
          v_bar += hdd * (f.d3 * d * d + f.d2 * dd);
          d_bar += 2.0 * f.d2 * d * hdd;
          pre_bar(r, cdd) = f.d1 * hdd;
        }
        pre_bar(r, cd) = d_bar;
      }
      pre_bar(r, col) = v_bar;
    }
  }
}

/// out = W * in, plus the bias on the value block only.
inline void affine(const Eigen::Ref<const Matrix>& W, const Eigen::Ref<const Vector>& b,
                   const Matrix& in, Eigen::Index n, Matrix& out) {
  out.noalias() = W * in;
  out.leftCols(n).colwise() += b;
}

/// Accumulates parameter adjoints of `affine` and, when `in_bar` is non-null,
/// the adjoint of its input.
inline void affine_adjoint(const Eigen::Ref<const Matrix>& W, const Matrix& in, Eigen::Index n,
                           const Matrix& out_bar, Eigen::Ref<Matrix> W_bar,
                           Eigen::Ref<Vector> b_bar, Matrix* in_bar) {
  W_bar.noalias() += out_bar * in.transpose();
  b_bar.noalias() += out_bar.leftCols(n).rowwise().sum();
  if (in_bar) in_bar->noalias() = W.transpose() * out_bar;
}

}  // namespace jet

/// Per-point derivative record returned by single-point evaluation.
struct InputJet {
  double value = 0.0;
  double d_t = 0.0;
  double d_x = 0.0;
  double d_y = 0.0;
  double d_xx = 0.0;
  double d_yy = 0.0;
};

}  // namespace seir
