#pragma once

#include <complex>
#include <string>
#include <vector>

#include "fecg/core.hpp"
#include "fecg/fft.hpp"

namespace fecg::spectral {

using cplx = std::complex<double>;

enum class Window { Hann, Rect };

inline std::string window_name(Window w) { return w == Window::Hann ? "hann" : "rect"; }

inline Window window_from_name(const std::string& s) {
  if (s == "hann") return Window::Hann;
  if (s == "rect" || s == "rectangular" || s == "boxcar") return Window::Rect;
  throw ConfigError("unknown STFT window '" + s + "'");
}

struct StftConfig {
  int window_len = 256;
  int hop = 64;
  Window window = Window::Hann;
  int fft_len = 256;

  [[nodiscard]] int bins() const { return fft_len / 2 + 1; }
  [[nodiscard]] int pad() const { return window_len / 2; }

  /// Frames produced for a signal of n samples (after reflect padding).
  [[nodiscard]] int frames(std::size_t n) const {
    const auto nn = static_cast<long long>(n);
    return static_cast<int>((nn + hop - 1) / hop) + 1;
  }
  /// Length of the padded buffer the frames tile exactly.
  [[nodiscard]] std::size_t padded_len(std::size_t n) const {
    return static_cast<std::size_t>(frames(n) - 1) * static_cast<std::size_t>(hop) +
           static_cast<std::size_t>(window_len);
  }

  [[nodiscard]] std::vector<double> taper() const {
    std::vector<double> w(static_cast<std::size_t>(window_len), 1.0);
    if (window == Window::Hann)
      for (int n = 0; n < window_len; ++n) w[static_cast<std::size_t>(n)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / window_len);
    return w;
  }

  /// Shifted copies of the window sum to a constant.
  [[nodiscard]] bool satisfies_cola(double tol = 1e-9) const {
    const auto w = taper();
    double ref = -1.0;
    for (int n = 0; n < hop; ++n) {
      double s = 0.0;
      for (int k = n; k < window_len; k += hop) s += w[static_cast<std::size_t>(k)];
      if (ref < 0.0) ref = s;
      if (std::abs(s - ref) > tol * std::max(1.0, ref) || !(s > 0.0)) return false;
    }
    return true;
  }

  void validate() const {
    if (window_len < 2 || window_len % 2 != 0) throw ConfigError("STFT window length must be even and >= 2");
    if (hop < 1 || hop > window_len) throw ConfigError("STFT hop must be in [1, window_len]");
    if (fft_len < window_len) throw ConfigError("STFT fft_len must be >= window_len");
    if (!satisfies_cola()) throw ConfigError("STFT window/hop pair violates constant overlap-add");
  }

  bool operator==(const StftConfig&) const = default;
};

/// F x T one-sided spectrogram stored row-major (index f * T + t).
struct ComplexSpectrogram {
  int F = 0;
  int T = 0;
  std::vector<cplx> data;
  StftConfig config;
  std::size_t original_len = 0;
  double fs = kDefaultFs;

  cplx& at(int f, int t) { return data[static_cast<std::size_t>(f) * static_cast<std::size_t>(T) + static_cast<std::size_t>(t)]; }
  [[nodiscard]] const cplx& at(int f, int t) const {
    return data[static_cast<std::size_t>(f) * static_cast<std::size_t>(T) + static_cast<std::size_t>(t)];
  }

  void validate() const {
    config.validate();
    if (F != config.bins()) throw StructuralError("spectrogram has " + std::to_string(F) + " rows, config implies " +
                                                  std::to_string(config.bins()));
    if (T != config.frames(original_len))
      throw StructuralError("spectrogram has " + std::to_string(T) + " frames, expected " +
                            std::to_string(config.frames(original_len)));
    if (data.size() != static_cast<std::size_t>(F) * static_cast<std::size_t>(T))
      throw StructuralError("spectrogram grid size does not match F x T");
  }
};

namespace detail {

inline std::vector<double> reflect_pad(std::span<const double> x, std::size_t pad, std::size_t total) {
  const std::size_t n = x.size();
  std::vector<double> out(total, 0.0);
  for (std::size_t i = 0; i < pad; ++i) out[i] = x[pad - i];
  for (std::size_t i = 0; i < n; ++i) out[pad + i] = x[i];
  for (std::size_t i = 0; i < pad && pad + n + i < total; ++i) out[pad + n + i] = x[n - 2 - i];
  return out;
}

// Sum of squared windows at each padded position.
inline std::vector<double> window_power(const StftConfig& cfg, int frames, std::size_t total) {
  const auto w = cfg.taper();
  std::vector<double> acc(total, 0.0);
  for (int t = 0; t < frames; ++t)
    for (int n = 0; n < cfg.window_len; ++n) {
      const double v = w[static_cast<std::size_t>(n)];
      acc[static_cast<std::size_t>(t) * static_cast<std::size_t>(cfg.hop) + static_cast<std::size_t>(n)] += v * v;
    }
  return acc;
}

}  // namespace detail

inline ComplexSpectrogram stft(const TimeSeries& x, const StftConfig& cfg = {}) {
  cfg.validate();
  if (x.size() < static_cast<std::size_t>(cfg.window_len))
    throw InvalidInput("signal shorter than the STFT window");
  const std::size_t pad = static_cast<std::size_t>(cfg.pad());
  const int frames = cfg.frames(x.size());
  const std::size_t total = cfg.padded_len(x.size());
  const auto buf = detail::reflect_pad(x.view(), pad, total);
  const auto w = cfg.taper();

  ComplexSpectrogram S;
  S.F = cfg.bins();
  S.T = frames;
  S.config = cfg;
  S.original_len = x.size();
  S.fs = x.fs;
  S.data.assign(static_cast<std::size_t>(S.F) * static_cast<std::size_t>(S.T), cplx{});
  std::vector<double> frame(static_cast<std::size_t>(cfg.fft_len), 0.0);
  for (int t = 0; t < frames; ++t) {
    const std::size_t off = static_cast<std::size_t>(t) * static_cast<std::size_t>(cfg.hop);
    for (int n = 0; n < cfg.window_len; ++n)
      frame[static_cast<std::size_t>(n)] = w[static_cast<std::size_t>(n)] * buf[off + static_cast<std::size_t>(n)];
    const auto spec = fft::rfft(frame);
    for (int f = 0; f < S.F; ++f) S.at(f, t) = spec[static_cast<std::size_t>(f)];
  }
  return S;
}

/// Weighted overlap-add inverse, trimmed to the original length.
inline TimeSeries istft(const ComplexSpectrogram& S) {
  S.validate();
  const StftConfig& cfg = S.config;
  const std::size_t total = cfg.padded_len(S.original_len);
  const auto w = cfg.taper();
  const auto wp = detail::window_power(cfg, S.T, total);
  std::vector<double> acc(total, 0.0);
  std::vector<cplx> col(static_cast<std::size_t>(S.F));
  for (int t = 0; t < S.T; ++t) {
    for (int f = 0; f < S.F; ++f) col[static_cast<std::size_t>(f)] = S.at(f, t);
    const auto frame = fft::irfft(col, cfg.fft_len);
    const std::size_t off = static_cast<std::size_t>(t) * static_cast<std::size_t>(cfg.hop);
    for (int n = 0; n < cfg.window_len; ++n)
      acc[off + static_cast<std::size_t>(n)] += w[static_cast<std::size_t>(n)] * frame[static_cast<std::size_t>(n)];
  }
  const std::size_t pad = static_cast<std::size_t>(cfg.pad());
  std::vector<double> out(S.original_len);
  for (std::size_t i = 0; i < S.original_len; ++i) {
    const double d = wp[pad + i];
    out[i] = d > 1e-12 ? acc[pad + i] / d : 0.0;
  }
  return TimeSeries(std::move(out), S.fs);
}

/// Adjoint of istft: maps a gradient w.r.t. the time signal to gradients
/// w.r.t. the real and imaginary parts of every spectrogram cell (row-major
/// F x T, same layout as ComplexSpectrogram::data).
inline std::vector<cplx> istft_adjoint(std::span<const double> grad_x, const StftConfig& cfg, int F, int T) {
  const std::size_t n = grad_x.size();
  const std::size_t total = cfg.padded_len(n);
  const auto w = cfg.taper();
  const auto wp = detail::window_power(cfg, T, total);
  const std::size_t pad = static_cast<std::size_t>(cfg.pad());
  std::vector<double> gy(total, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = wp[pad + i];
    gy[pad + i] = d > 1e-12 ? grad_x[i] / d : 0.0;
  }
  std::vector<cplx> grad(static_cast<std::size_t>(F) * static_cast<std::size_t>(T));
  std::vector<double> g(static_cast<std::size_t>(cfg.fft_len), 0.0);
  const double inv_n = 1.0 / cfg.fft_len;
  for (int t = 0; t < T; ++t) {
    const std::size_t off = static_cast<std::size_t>(t) * static_cast<std::size_t>(cfg.hop);
    for (int k = 0; k < cfg.window_len; ++k)
      g[static_cast<std::size_t>(k)] = w[static_cast<std::size_t>(k)] * gy[off + static_cast<std::size_t>(k)];
    const auto G = fft::rfft(g);
    for (int f = 0; f < F; ++f) {
      const bool edge = f == 0 || (cfg.fft_len % 2 == 0 && f == cfg.fft_len / 2);
      const double c = (edge ? 1.0 : 2.0) * inv_n;
      const cplx v = G[static_cast<std::size_t>(f)];
      grad[static_cast<std::size_t>(f) * static_cast<std::size_t>(T) + static_cast<std::size_t>(t)] =
          cplx{c * v.real(), edge ? 0.0 : c * v.imag()};
    }
  }
  return grad;
}

}  // namespace fecg::spectral
