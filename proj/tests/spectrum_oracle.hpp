#pragma once

// Test-only spectral oracles. Periodograms are computed with a direct DFT so
// they stay independent of the FFT path used by the library.

#include <cmath>
#include <vector>

namespace oracle {

/// |X(f_k)|^2 for k in [k_lo, k_hi] via direct summation.
inline std::vector<std::pair<double, double>> periodogram(const std::vector<double>& x, double fs, double f_lo,
                                                          double f_hi) {
  const std::size_t n = x.size();
  const double df = fs / static_cast<double>(n);
  const auto k_lo = static_cast<std::size_t>(std::ceil(f_lo / df));
  const auto k_hi = static_cast<std::size_t>(std::floor(f_hi / df));
  std::vector<std::pair<double, double>> out;
  for (std::size_t k = k_lo; k <= k_hi && k <= n / 2; ++k) {
    // Recurrence for cos/sin of successive phases.
    const double w = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
    const double cw = std::cos(w), sw = std::sin(w);
    double c = 1.0, s = 0.0, re = 0.0, im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      re += x[i] * c;
      im -= x[i] * s;
      const double c2 = c * cw - s * sw;
      s = s * cw + c * sw;
      c = c2;
    }
    out.emplace_back(static_cast<double>(k) * df, re * re + im * im);
  }
  return out;
}

/// Least-squares slope of log10 power against log10 frequency.
inline double loglog_slope(const std::vector<double>& x, double fs, double f_lo, double f_hi) {
  const auto pg = periodogram(x, fs, f_lo, f_hi);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  double n = 0;
  for (const auto& [f, p] : pg) {
    if (f <= 0.0 || p <= 0.0) continue;
    const double lx = std::log10(f), ly = std::log10(p);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    n += 1;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline double band_power(const std::vector<double>& x, double fs, double f_lo, double f_hi) {
  double acc = 0.0;
  for (const auto& [f, p] : periodogram(x, fs, f_lo, f_hi)) acc += p;
  return acc;
}

}  // namespace oracle
