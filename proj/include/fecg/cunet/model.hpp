#pragma once

// The complex UNet: entry phase layer, strided-conv encoder, bottleneck,
// upsample + skip decoder, 1x1 head and exit phase layer.

#include <random>
#include <vector>

#include "fecg/cunet/layers.hpp"

namespace fecg::cunet {

struct CUNetConfig {
  int F = 129;  // spectrogram rows the net is built for (before padding)
  int T = 33;   // spectrogram frames
  int depth = 3;
  std::vector<int> channels{8, 16, 32};
  int kernel = 3;
  ActivationKind activation = ActivationKind::Rho;
  ConvMode conv_mode = ConvMode::Split;

  [[nodiscard]] int multiple() const { return 1 << depth; }
  [[nodiscard]] int padded_F() const { return (F + multiple() - 1) / multiple() * multiple(); }
  [[nodiscard]] int padded_T() const { return (T + multiple() - 1) / multiple() * multiple(); }

  void validate() const {
    if (depth < 1) throw ConfigError("network depth must be >= 1");
    if (static_cast<int>(channels.size()) != depth)
      throw ConfigError("channels list must have one entry per depth level");
    for (int c : channels)
      if (c < 1) throw ConfigError("channel counts must be positive");
    if (kernel < 1 || kernel % 2 == 0) throw ConfigError("kernel size must be odd and positive");
    if (F < 1 || T < 1) throw ConfigError("spectrogram shape must be positive");
  }
};

struct CUNet {
  CUNetConfig cfg;
  int H = 0, W = 0;  // padded grid
  ParamStore ps;
  std::size_t beta_in = 0, beta_out = 0;
  std::vector<ConvUnit> units;
  std::vector<std::array<std::size_t, 3>> down;  // conv, conv, strided conv
  std::array<std::size_t, 2> bottleneck{};
  std::vector<std::array<std::size_t, 2>> up;  // conv after upsample, conv after concat
  std::size_t head = 0;

  [[nodiscard]] std::size_t beta_len() const { return static_cast<std::size_t>(H) * static_cast<std::size_t>(W); }
};

namespace detail {

inline std::size_t add_unit(CUNet& net, const std::string& name, int cin, int cout, int k, int stride,
                            ActivationKind act, bool norm) {
  ConvUnit u;
  u.name = name;
  u.cin = cin;
  u.cout = cout;
  u.k = k;
  u.stride = stride;
  u.act = act;
  u.norm = norm;
  u.declare(net.ps);
  net.units.push_back(u);
  return net.units.size() - 1;
}

}  // namespace detail

/// Declares every parameter block with zero weights, unit gains and zero
/// phases. Use init_random or init_identity afterwards.
inline CUNet build_cunet(const CUNetConfig& cfg) {
  cfg.validate();
  CUNet net;
  net.cfg = cfg;
  net.H = cfg.padded_F();
  net.W = cfg.padded_T();
  net.beta_in = net.ps.add("entry.beta", {net.H, net.W});
  const int k = cfg.kernel;
  const ActivationKind a = cfg.activation;
  int cin = 1;
  for (int l = 0; l < cfg.depth; ++l) {
    const int c = cfg.channels[static_cast<std::size_t>(l)];
    const std::string p = "down" + std::to_string(l);
    const auto u0 = detail::add_unit(net, p + ".conv0", cin, c, k, 1, a, true);
    const auto u1 = detail::add_unit(net, p + ".conv1", c, c, k, 1, a, true);
    const auto u2 = detail::add_unit(net, p + ".pool", c, c, k, 2, a, false);
    net.down.push_back({u0, u1, u2});
    cin = c;
  }
  net.bottleneck[0] = detail::add_unit(net, "bottleneck.conv0", cin, cin, k, 1, a, true);
  net.bottleneck[1] = detail::add_unit(net, "bottleneck.conv1", cin, cin, k, 1, a, true);
  net.up.resize(static_cast<std::size_t>(cfg.depth));
  for (int l = cfg.depth - 1; l >= 0; --l) {
    const int c = cfg.channels[static_cast<std::size_t>(l)];
    const std::string p = "up" + std::to_string(l);
    const auto u0 = detail::add_unit(net, p + ".conv0", cin, c, k, 1, a, false);
    const auto u1 = detail::add_unit(net, p + ".conv1", 2 * c, c, k, 1, a, true);
    net.up[static_cast<std::size_t>(l)] = {u0, u1};
    cin = c;
  }
  net.head = detail::add_unit(net, "head", cin, 1, 1, 1, ActivationKind::Identity, false);
  net.beta_out = net.ps.add("exit.beta", {net.H, net.W});
  return net;
}

/// Gaussian fan-in initialization of all kernels; biases and phases zero,
/// gains one, mixture logits zero (equal weights).
inline void init_random(CUNet& net, std::uint64_t seed) {
  std::mt19937_64 rng(mix_seed(seed, 0x11u));
  std::normal_distribution<double> z;
  for (const ConvUnit& u : net.units) {
    const double sd = std::sqrt(1.0 / static_cast<double>(u.patch()));
    const std::size_t n = static_cast<std::size_t>(u.cout) * static_cast<std::size_t>(u.patch());
    for (std::size_t i = 0; i < n; ++i) net.ps.values[u.w_re + i] = sd * z(rng);
    for (std::size_t i = 0; i < n; ++i) net.ps.values[u.w_im + i] = sd * z(rng);
  }
}

/// Pass-through weights: every layer forwards channel 0 unchanged and the
/// decoder reads the level-0 skip, so with identity activations the whole
/// net is the identity map on its (padded) input.
inline void init_identity(CUNet& net) {
  std::fill(net.ps.values.begin(), net.ps.values.end(), 0.0);
  for (const ConvUnit& u : net.units) {
    if (u.norm) {
      std::fill_n(net.ps.at(u.g_re), u.cout, 1.0);
      std::fill_n(net.ps.at(u.g_im), u.cout, 1.0);
    }
  }
  auto center = [&](std::size_t unit, int out_c, int in_c) {
    const ConvUnit& u = net.units[unit];
    const std::size_t idx = (static_cast<std::size_t>(out_c) * u.cin + static_cast<std::size_t>(in_c)) * u.k * u.k +
                            static_cast<std::size_t>(u.k / 2) * u.k + static_cast<std::size_t>(u.k / 2);
    net.ps.values[u.w_re + idx] = 1.0;
    net.ps.values[u.w_im + idx] = 1.0;
  };
  for (const auto& d : net.down)
    for (std::size_t u : d) center(u, 0, 0);
  for (std::size_t u : net.bottleneck) center(u, 0, 0);
  for (std::size_t l = 0; l < net.up.size(); ++l) {
    center(net.up[l][0], 0, 0);
    // Second conv of level l reads the concatenation [upsampled, skip].
    center(net.up[l][1], 0, l == 0 ? net.cfg.channels[0] : 0);
  }
  center(net.head, 0, 0);
}

struct ForwardCache {
  std::vector<ConvCache> units;
  std::vector<std::pair<int, int>> in_dims;  // (H, W) seen by each unit
  std::vector<int> up_channels;              // channels of the upsampled branch per level
  ComplexTensor entry_out, exit_out;
};

/// Forward pass on a (1, F, T) tensor; output has the same shape.
inline ComplexTensor forward(const CUNet& net, const ComplexTensor& x, ForwardCache* cache = nullptr) {
  x.validate();
  if (x.C != 1 || x.H != net.cfg.F || x.W != net.cfg.T)
    throw StructuralError("network built for 1x" + std::to_string(net.cfg.F) + "x" + std::to_string(net.cfg.T) +
                          " input, got " + std::to_string(x.C) + "x" + std::to_string(x.H) + "x" +
                          std::to_string(x.W));
  const ConvMode mode = net.cfg.conv_mode;
  if (cache) {
    cache->units.assign(net.units.size(), {});
    cache->in_dims.assign(net.units.size(), {0, 0});
    cache->up_channels.assign(net.up.size(), 0);
  }
  auto run = [&](std::size_t u, const ComplexTensor& in) {
    if (cache) cache->in_dims[u] = {in.H, in.W};
    return conv_forward(net.units[u], net.ps, mode, in, cache ? &cache->units[u] : nullptr);
  };

  ComplexTensor h = diagonal_forward(net.ps.at(net.beta_in), net.beta_len(), resize_zero(x, net.H, net.W));
  if (cache) cache->entry_out = h;
  std::vector<ComplexTensor> skips;
  for (const auto& d : net.down) {
    h = run(d[1], run(d[0], h));
    skips.push_back(h);
    h = run(d[2], h);
  }
  h = run(net.bottleneck[1], run(net.bottleneck[0], h));
  for (std::size_t l = net.up.size(); l-- > 0;) {
    ComplexTensor u = run(net.up[l][0], upsample2(h));
    if (cache) cache->up_channels[l] = u.C;
    h = run(net.up[l][1], concat(u, skips[l]));
  }
  h = diagonal_forward(net.ps.at(net.beta_out), net.beta_len(), run(net.head, h));
  if (cache) cache->exit_out = h;
  return resize_zero(h, net.cfg.F, net.cfg.T);
}

/// Gradient of a scalar loss w.r.t. every parameter, given d loss / d output
/// (shape 1 x F x T). Accumulates into `grad`.
inline void backward(const CUNet& net, const ForwardCache& cache, const ComplexTensor& gout,
                     std::vector<double>& grad) {
  if (grad.size() != net.ps.size()) grad.assign(net.ps.size(), 0.0);
  const ConvMode mode = net.cfg.conv_mode;
  auto back = [&](std::size_t u, const ComplexTensor& g) {
    const auto [H, W] = cache.in_dims[u];
    return conv_backward(net.units[u], net.ps, mode, cache.units[u], g, H, W, grad);
  };

  ComplexTensor g = resize_zero(gout, net.H, net.W);
  g = diagonal_backward(net.ps.at(net.beta_out), cache.exit_out, g, grad.data() + net.beta_out);
  g = back(net.head, g);
  std::vector<ComplexTensor> gskip(net.down.size());
  for (std::size_t l = 0; l < net.up.size(); ++l) {
    g = back(net.up[l][1], g);
    auto [gu, gs] = split_channels(g, cache.up_channels[l]);
    gskip[l] = std::move(gs);
    g = upsample2_backward(back(net.up[l][0], gu));
  }
  g = back(net.bottleneck[0], back(net.bottleneck[1], g));
  for (std::size_t l = net.down.size(); l-- > 0;) {
    g = back(net.down[l][2], g);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.re[i] += gskip[l].re[i];
      g.im[i] += gskip[l].im[i];
    }
    g = back(net.down[l][0], back(net.down[l][1], g));
  }
  diagonal_backward(net.ps.at(net.beta_in), cache.entry_out, g, grad.data() + net.beta_in);
}

}  // namespace fecg::cunet
