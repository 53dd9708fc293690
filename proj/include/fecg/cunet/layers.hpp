#pragma once

// Layer kernels: complex convolution (im2col + GEMM), elementwise phase
// rotation, nearest upsampling, channel concatenation, padding and cropping.

#include <Eigen/Dense>

#include <cmath>

#include "fecg/cunet/activation.hpp"
#include "fecg/cunet/tensor.hpp"

namespace fecg::cunet {

using RMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RMap = Eigen::Map<RMat>;
using CRMap = Eigen::Map<const RMat>;

/// Split: real kernels on the real part, imaginary kernels on the imaginary
/// part. Full: the complete complex product.
enum class ConvMode { Split, Full };

inline std::string conv_mode_name(ConvMode m) { return m == ConvMode::Split ? "split" : "full"; }
inline ConvMode conv_mode_from_name(const std::string& s) {
  if (s == "split") return ConvMode::Split;
  if (s == "full") return ConvMode::Full;
  throw ConfigError("unknown conv mode '" + s + "'");
}

/// conv -> activation -> optional per-channel re/im gain.
struct ConvUnit {
  std::string name;
  int cin = 1, cout = 1, k = 3, stride = 1;
  ActivationKind act = ActivationKind::Rho;
  bool norm = true;
  std::size_t w_re = 0, w_im = 0, b_re = 0, b_im = 0, mu = 0, g_re = 0, g_im = 0;

  [[nodiscard]] int out_dim(int n) const { return (n + 2 * (k / 2) - k) / stride + 1; }
  [[nodiscard]] int patch() const { return cin * k * k; }

  void declare(ParamStore& ps) {
    w_re = ps.add(name + ".w_re", {cout, cin, k, k});
    w_im = ps.add(name + ".w_im", {cout, cin, k, k});
    b_re = ps.add(name + ".b_re", {cout});
    b_im = ps.add(name + ".b_im", {cout});
    if (act == ActivationKind::Rho) mu = ps.add(name + ".mu", {3});
    if (norm) {
      g_re = ps.add(name + ".g_re", {cout}, 1.0);
      g_im = ps.add(name + ".g_im", {cout}, 1.0);
    }
  }
};

struct ConvCache {
  RMat col_re, col_im;
  ComplexTensor zeta;  // pre-activation
  ComplexTensor act;   // post-activation, pre-gain
  Mix mix{};
};

namespace detail {

inline RMat im2col(const std::vector<double>& x, int C, int H, int W, int k, int stride, int Ho, int Wo) {
  const int pad = k / 2;
  RMat col(static_cast<Eigen::Index>(C) * k * k, static_cast<Eigen::Index>(Ho) * Wo);
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        double* row = col.row((static_cast<Eigen::Index>(c) * k + i) * k + j).data();
        for (int oh = 0; oh < Ho; ++oh) {
          const int h = oh * stride + i - pad;
          double* dst = row + static_cast<std::ptrdiff_t>(oh) * Wo;
          if (h < 0 || h >= H) {
            std::fill(dst, dst + Wo, 0.0);
            continue;
          }
          const double* src = x.data() + (static_cast<std::size_t>(c) * H + static_cast<std::size_t>(h)) * W;
          for (int ow = 0; ow < Wo; ++ow) {
            const int w = ow * stride + j - pad;
            dst[ow] = (w >= 0 && w < W) ? src[w] : 0.0;
          }
        }
      }
  return col;
}

inline void col2im(const RMat& col, std::vector<double>& x, int C, int H, int W, int k, int stride, int Ho, int Wo) {
  const int pad = k / 2;
  for (int c = 0; c < C; ++c)
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) {
        const double* row = col.row((static_cast<Eigen::Index>(c) * k + i) * k + j).data();
        for (int oh = 0; oh < Ho; ++oh) {
          const int h = oh * stride + i - pad;
          if (h < 0 || h >= H) continue;
          double* dst = x.data() + (static_cast<std::size_t>(c) * H + static_cast<std::size_t>(h)) * W;
          const double* src = row + static_cast<std::ptrdiff_t>(oh) * Wo;
          for (int ow = 0; ow < Wo; ++ow) {
            const int w = ow * stride + j - pad;
            if (w >= 0 && w < W) dst[w] += src[ow];
          }
        }
      }
}

}  // namespace detail

inline ComplexTensor conv_forward(const ConvUnit& u, const ParamStore& ps, ConvMode mode, const ComplexTensor& x,
                                  ConvCache* cache = nullptr) {
  if (x.C != u.cin)
    throw StructuralError("layer " + u.name + " expects " + std::to_string(u.cin) + " input channels, got " +
                          std::to_string(x.C));
  const int Ho = u.out_dim(x.H), Wo = u.out_dim(x.W);
  const Eigen::Index P = static_cast<Eigen::Index>(Ho) * Wo, K = u.patch();
  RMat col_re = detail::im2col(x.re, x.C, x.H, x.W, u.k, u.stride, Ho, Wo);
  RMat col_im = detail::im2col(x.im, x.C, x.H, x.W, u.k, u.stride, Ho, Wo);
  const CRMap Wr(ps.at(u.w_re), u.cout, K), Wi(ps.at(u.w_im), u.cout, K);

  ComplexTensor z(u.cout, Ho, Wo);
  RMap Zr(z.re.data(), u.cout, P), Zi(z.im.data(), u.cout, P);
  if (mode == ConvMode::Split) {
    Zr.noalias() = Wr * col_re;
    Zi.noalias() = Wi * col_im;
  } else {
    Zr.noalias() = Wr * col_re;
    Zr.noalias() -= Wi * col_im;
    Zi.noalias() = Wr * col_im;
    Zi.noalias() += Wi * col_re;
  }
  const double* br = ps.at(u.b_re);
  const double* bi = ps.at(u.b_im);
  for (int c = 0; c < u.cout; ++c) {
    Zr.row(c).array() += br[c];
    Zi.row(c).array() += bi[c];
  }

  const Mix mix = u.act == ActivationKind::Rho ? simplex(ps.at(u.mu)) : Mix{};
  ComplexTensor a(u.cout, Ho, Wo);
  for (std::size_t i = 0; i < z.size(); ++i) {
    const CVal v = activate(u.act, z.re[i], z.im[i], &mix);
    a.re[i] = v.re;
    a.im[i] = v.im;
  }
  ComplexTensor y = a;
  if (u.norm) {
    const double* gr = ps.at(u.g_re);
    const double* gi = ps.at(u.g_im);
    const std::size_t pl = y.plane();
    for (int c = 0; c < u.cout; ++c)
      for (std::size_t i = 0; i < pl; ++i) {
        y.re[static_cast<std::size_t>(c) * pl + i] *= gr[c];
        y.im[static_cast<std::size_t>(c) * pl + i] *= gi[c];
      }
  }
  if (cache) {
    cache->col_re = std::move(col_re);
    cache->col_im = std::move(col_im);
    cache->zeta = std::move(z);
    cache->act = std::move(a);
    cache->mix = mix;
  }
  return y;
}

/// Accumulates parameter gradients into `grad` (same layout as ps.values)
/// and returns the gradient w.r.t. the layer input of shape (cin, H, W).
inline ComplexTensor conv_backward(const ConvUnit& u, const ParamStore& ps, ConvMode mode, const ConvCache& cache,
                                   const ComplexTensor& gy, int H, int W, std::vector<double>& grad) {
  const ComplexTensor& z = cache.zeta;
  const int Ho = z.H, Wo = z.W;
  const Eigen::Index P = static_cast<Eigen::Index>(Ho) * Wo, K = u.patch();
  const std::size_t pl = z.plane();

  ComplexTensor ga = gy;
  if (u.norm) {
    const double* gr = ps.at(u.g_re);
    const double* gi = ps.at(u.g_im);
    for (int c = 0; c < u.cout; ++c) {
      double sr = 0.0, si = 0.0;
      for (std::size_t i = 0; i < pl; ++i) {
        const std::size_t idx = static_cast<std::size_t>(c) * pl + i;
        sr += gy.re[idx] * cache.act.re[idx];
        si += gy.im[idx] * cache.act.im[idx];
        ga.re[idx] = gy.re[idx] * gr[c];
        ga.im[idx] = gy.im[idx] * gi[c];
      }
      grad[u.g_re + static_cast<std::size_t>(c)] += sr;
      grad[u.g_im + static_cast<std::size_t>(c)] += si;
    }
  }

  ComplexTensor gz(u.cout, Ho, Wo);
  Mix dmu{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < z.size(); ++i) {
    const ActGrad g = activate_backward(u.act, z.re[i], z.im[i], ga.re[i], ga.im[i], &cache.mix);
    gz.re[i] = g.da;
    gz.im[i] = g.db;
    for (int j = 0; j < 3; ++j) dmu[static_cast<std::size_t>(j)] += g.dmu[static_cast<std::size_t>(j)];
  }
  if (u.act == ActivationKind::Rho) {
    const Mix dl = simplex_backward(cache.mix, dmu);
    for (std::size_t j = 0; j < 3; ++j) grad[u.mu + j] += dl[j];
  }

  const CRMap Gr(gz.re.data(), u.cout, P), Gi(gz.im.data(), u.cout, P);
  for (int c = 0; c < u.cout; ++c) {
    double sr = 0.0, si = 0.0;
    for (std::size_t i = 0; i < pl; ++i) {
      sr += gz.re[static_cast<std::size_t>(c) * pl + i];
      si += gz.im[static_cast<std::size_t>(c) * pl + i];
    }
    grad[u.b_re + static_cast<std::size_t>(c)] += sr;
    grad[u.b_im + static_cast<std::size_t>(c)] += si;
  }
  const CRMap Wr(ps.at(u.w_re), u.cout, K), Wi(ps.at(u.w_im), u.cout, K);
  RMap dWr(grad.data() + u.w_re, u.cout, K), dWi(grad.data() + u.w_im, u.cout, K);
  RMat dcol_re, dcol_im;
  if (mode == ConvMode::Split) {
    dWr.noalias() += Gr * cache.col_re.transpose();
    dWi.noalias() += Gi * cache.col_im.transpose();
    dcol_re.noalias() = Wr.transpose() * Gr;
    dcol_im.noalias() = Wi.transpose() * Gi;
  } else {
    dWr.noalias() += Gr * cache.col_re.transpose();
    dWr.noalias() += Gi * cache.col_im.transpose();
    dWi.noalias() -= Gr * cache.col_im.transpose();
    dWi.noalias() += Gi * cache.col_re.transpose();
    dcol_re.noalias() = Wr.transpose() * Gr;
    dcol_re.noalias() += Wi.transpose() * Gi;
    dcol_im.noalias() = Wr.transpose() * Gi;
    dcol_im.noalias() -= Wi.transpose() * Gr;
  }
  ComplexTensor gx(u.cin, H, W);
  detail::col2im(dcol_re, gx.re, u.cin, H, W, u.k, u.stride, Ho, Wo);
  detail::col2im(dcol_im, gx.im, u.cin, H, W, u.k, u.stride, Ho, Wo);
  return gx;
}

/// Elementwise multiplication by e^{i beta}; beta has one entry per (h, w)
/// and is shared across channels.
inline ComplexTensor diagonal_forward(const double* beta, std::size_t beta_len, const ComplexTensor& x) {
  if (beta_len != x.plane())
    throw StructuralError("diagonal layer sized for " + std::to_string(beta_len) + " bins, input has " +
                          std::to_string(x.plane()));
  ComplexTensor y(x.C, x.H, x.W);
  const std::size_t pl = x.plane();
  for (int c = 0; c < x.C; ++c)
    for (std::size_t i = 0; i < pl; ++i) {
      const std::size_t idx = static_cast<std::size_t>(c) * pl + i;
      const double cs = std::cos(beta[i]), sn = std::sin(beta[i]);
      y.re[idx] = cs * x.re[idx] - sn * x.im[idx];
      y.im[idx] = sn * x.re[idx] + cs * x.im[idx];
    }
  return y;
}

/// Returns the input gradient; adds d loss / d beta into gbeta.
inline ComplexTensor diagonal_backward(const double* beta, const ComplexTensor& y, const ComplexTensor& gy,
                                       double* gbeta) {
  ComplexTensor gx(y.C, y.H, y.W);
  const std::size_t pl = y.plane();
  for (int c = 0; c < y.C; ++c)
    for (std::size_t i = 0; i < pl; ++i) {
      const std::size_t idx = static_cast<std::size_t>(c) * pl + i;
      const double cs = std::cos(beta[i]), sn = std::sin(beta[i]);
      gx.re[idx] = cs * gy.re[idx] + sn * gy.im[idx];
      gx.im[idx] = -sn * gy.re[idx] + cs * gy.im[idx];
      gbeta[i] += -gy.re[idx] * y.im[idx] + gy.im[idx] * y.re[idx];
    }
  return gx;
}

inline ComplexTensor upsample2(const ComplexTensor& x) {
  ComplexTensor y(x.C, 2 * x.H, 2 * x.W);
  for (int c = 0; c < x.C; ++c)
    for (int h = 0; h < y.H; ++h)
      for (int w = 0; w < y.W; ++w) {
        const std::size_t s = x.index(c, h / 2, w / 2), d = y.index(c, h, w);
        y.re[d] = x.re[s];
        y.im[d] = x.im[s];
      }
  return y;
}

inline ComplexTensor upsample2_backward(const ComplexTensor& gy) {
  ComplexTensor gx(gy.C, gy.H / 2, gy.W / 2);
  for (int c = 0; c < gy.C; ++c)
    for (int h = 0; h < gy.H; ++h)
      for (int w = 0; w < gy.W; ++w) {
        const std::size_t s = gy.index(c, h, w), d = gx.index(c, h / 2, w / 2);
        gx.re[d] += gy.re[s];
        gx.im[d] += gy.im[s];
      }
  return gx;
}

inline ComplexTensor concat(const ComplexTensor& a, const ComplexTensor& b) {
  if (a.H != b.H || a.W != b.W) throw StructuralError("skip connection spatial shape mismatch");
  ComplexTensor y(a.C + b.C, a.H, a.W);
  std::copy(a.re.begin(), a.re.end(), y.re.begin());
  std::copy(a.im.begin(), a.im.end(), y.im.begin());
  std::copy(b.re.begin(), b.re.end(), y.re.begin() + static_cast<std::ptrdiff_t>(a.size()));
  std::copy(b.im.begin(), b.im.end(), y.im.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return y;
}

inline std::pair<ComplexTensor, ComplexTensor> split_channels(const ComplexTensor& g, int first) {
  ComplexTensor a(first, g.H, g.W), b(g.C - first, g.H, g.W);
  const auto n = static_cast<std::ptrdiff_t>(a.size());
  std::copy(g.re.begin(), g.re.begin() + n, a.re.begin());
  std::copy(g.im.begin(), g.im.begin() + n, a.im.begin());
  std::copy(g.re.begin() + n, g.re.end(), b.re.begin());
  std::copy(g.im.begin() + n, g.im.end(), b.im.begin());
  return {std::move(a), std::move(b)};
}

/// Zero-pads (or crops) every channel to H x W, anchored at the origin.
inline ComplexTensor resize_zero(const ComplexTensor& x, int H, int W) {
  ComplexTensor y(x.C, H, W);
  const int hh = std::min(H, x.H), ww = std::min(W, x.W);
  for (int c = 0; c < x.C; ++c)
    for (int h = 0; h < hh; ++h)
      for (int w = 0; w < ww; ++w) {
        y.re[y.index(c, h, w)] = x.re[x.index(c, h, w)];
        y.im[y.index(c, h, w)] = x.im[x.index(c, h, w)];
      }
  return y;
}

}  // namespace fecg::cunet
