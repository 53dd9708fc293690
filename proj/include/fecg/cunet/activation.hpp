#pragma once

// Complex activations acting on (re, im) pairs, with their split derivatives.

#include <array>
#include <cmath>
#include <string>

#include "fecg/core.hpp"

namespace fecg::cunet {

enum class ActivationKind { CReLU, GK, GS, Rho, Identity };

inline std::string activation_name(ActivationKind k) {
  switch (k) {
    case ActivationKind::CReLU: return "crelu";
    case ActivationKind::GK: return "gk";
    case ActivationKind::GS: return "gs";
    case ActivationKind::Rho: return "rho";
    case ActivationKind::Identity: return "identity";
  }
  return "?";
}

inline ActivationKind activation_from_name(const std::string& s) {
  if (s == "crelu") return ActivationKind::CReLU;
  if (s == "gk") return ActivationKind::GK;
  if (s == "gs") return ActivationKind::GS;
  if (s == "rho") return ActivationKind::Rho;
  if (s == "identity") return ActivationKind::Identity;
  throw ConfigError("unknown activation '" + s + "'");
}

using Mix = std::array<double, 3>;

/// Normalized exponential of the three mixture logits.
inline Mix simplex(const double* logits) {
  const double m = std::max({logits[0], logits[1], logits[2]});
  Mix e{std::exp(logits[0] - m), std::exp(logits[1] - m), std::exp(logits[2] - m)};
  const double s = e[0] + e[1] + e[2];
  for (double& v : e) v /= s;
  return e;
}

struct CVal {
  double re = 0.0, im = 0.0;
};

inline CVal crelu(double a, double b) { return {a > 0.0 ? a : 0.0, b > 0.0 ? b : 0.0}; }
inline CVal gk(double a, double b) {
  const double d = 1.0 + std::sqrt(a * a + b * b);
  return {a / d, b / d};
}
inline CVal gs(double a, double b) { return a <= b ? CVal{a, b} : CVal{b, a}; }

/// Applies one activation. `mix` must be non-null for Rho.
inline CVal activate(ActivationKind kind, double a, double b, const Mix* mix = nullptr) {
  switch (kind) {
    case ActivationKind::CReLU: return crelu(a, b);
    case ActivationKind::GK: return gk(a, b);
    case ActivationKind::GS: return gs(a, b);
    case ActivationKind::Identity: return {a, b};
    case ActivationKind::Rho: {
      if (!mix) throw ConfigError("rho activation needs mixture weights");
      const CVal r = crelu(a, b), g = gk(a, b), s = gs(a, b);
      const Mix& m = *mix;
      return {m[0] * r.re + m[1] * g.re + m[2] * s.re, m[0] * r.im + m[1] * g.im + m[2] * s.im};
    }
  }
  return {a, b};
}

struct ActGrad {
  double da = 0.0, db = 0.0;
  Mix dmu{0.0, 0.0, 0.0};  // w.r.t. effective weights, Rho only
};

/// Pulls (gre, gim) back through the activation at (a, b).
inline ActGrad activate_backward(ActivationKind kind, double a, double b, double gre, double gim,
                                 const Mix* mix = nullptr) {
  auto relu_bw = [&](double w) { return ActGrad{a > 0.0 ? w * gre : 0.0, b > 0.0 ? w * gim : 0.0, {}}; };
  auto gk_bw = [&](double w) {
    const double r = std::sqrt(a * a + b * b);
    const double d = 1.0 + r;
    if (r == 0.0) return ActGrad{w * gre, w * gim, {}};
    const double d2r = d * d * r;
    const double j_aa = 1.0 / d - a * a / d2r, j_ab = -a * b / d2r, j_bb = 1.0 / d - b * b / d2r;
    return ActGrad{w * (gre * j_aa + gim * j_ab), w * (gre * j_ab + gim * j_bb), {}};
  };
  auto gs_bw = [&](double w) { return a <= b ? ActGrad{w * gre, w * gim, {}} : ActGrad{w * gim, w * gre, {}}; };

  switch (kind) {
    case ActivationKind::CReLU: return relu_bw(1.0);
    case ActivationKind::GK: return gk_bw(1.0);
    case ActivationKind::GS: return gs_bw(1.0);
    case ActivationKind::Identity: return {gre, gim, {}};
    case ActivationKind::Rho: {
      if (!mix) throw ConfigError("rho activation needs mixture weights");
      const Mix& m = *mix;
      const ActGrad r = relu_bw(m[0]), g = gk_bw(m[1]), s = gs_bw(m[2]);
      ActGrad out{r.da + g.da + s.da, r.db + g.db + s.db, {}};
      const CVal vr = crelu(a, b), vg = gk(a, b), vs = gs(a, b);
      out.dmu = {gre * vr.re + gim * vr.im, gre * vg.re + gim * vg.im, gre * vs.re + gim * vs.im};
      return out;
    }
  }
  return {gre, gim, {}};
}

/// Chain rule from effective weights to logits through the softmax.
inline Mix simplex_backward(const Mix& mu, const Mix& dmu) {
  const double dot = mu[0] * dmu[0] + mu[1] * dmu[1] + mu[2] * dmu[2];
  return {mu[0] * (dmu[0] - dot), mu[1] * (dmu[1] - dot), mu[2] * (dmu[2] - dot)};
}

}  // namespace fecg::cunet
