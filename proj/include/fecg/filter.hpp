#pragma once

// Front-end IIR filtering: Butterworth bandpass and bandstop ("notch")
// designs realized as cascaded second-order sections, applied forward and
// backward for zero phase.

#include <algorithm>
#include <complex>
#include <string>
#include <vector>

#include "fecg/core.hpp"

namespace fecg::filter {

using cplx = std::complex<double>;

/// Transposed direct-form II biquad with a0 = 1.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;

  [[nodiscard]] double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
  [[nodiscard]] cplx response(double omega) const {
    const cplx z1 = std::polar(1.0, -omega), z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
  }
};

struct Sos {
  std::vector<Biquad> sections;

  [[nodiscard]] double magnitude(double f_hz, double fs) const {
    cplx h{1.0, 0.0};
    for (const Biquad& s : sections) h *= s.response(2.0 * M_PI * f_hz / fs);
    return std::abs(h);
  }
};

enum class FilterKind { Notch, Bandpass };

struct FilterSpec {
  FilterKind kind = FilterKind::Bandpass;
  int order = 10;
  double notch_center = 50.0;
  double notch_bw = 1.0;
  double band_lo = 1.0;
  double band_hi = 100.0;

  static FilterSpec notch(double center = 50.0, double bw = 1.0, int order = 10) {
    FilterSpec s;
    s.kind = FilterKind::Notch;
    s.notch_center = center;
    s.notch_bw = bw;
    s.order = order;
    return s;
  }
  static FilterSpec bandpass(double lo = 1.0, double hi = 100.0, int order = 10) {
    FilterSpec s;
    s.kind = FilterKind::Bandpass;
    s.band_lo = lo;
    s.band_hi = hi;
    s.order = order;
    return s;
  }

  [[nodiscard]] double lower_edge() const {
    return kind == FilterKind::Notch ? notch_center - notch_bw / 2.0 : band_lo;
  }
  [[nodiscard]] double upper_edge() const {
    return kind == FilterKind::Notch ? notch_center + notch_bw / 2.0 : band_hi;
  }

  void validate(double fs) const {
    if (order < 2 || order % 2 != 0) throw DesignError("filter order must be even and >= 2");
    const double lo = lower_edge(), hi = upper_edge();
    if (!(lo > 0.0 && hi > lo && hi < fs / 2.0))
      throw DesignError("filter band [" + std::to_string(lo) + ", " + std::to_string(hi) +
                        "] Hz must lie inside (0, fs/2) for fs = " + std::to_string(fs));
  }
};

namespace detail {

inline cplx bilinear(cplx s, double fs) { return (2.0 * fs + s) / (2.0 * fs - s); }

inline double prewarp(double f_hz, double fs) { return 2.0 * fs * std::tan(M_PI * f_hz / fs); }

// One section per pole pair (a conjugate pair, or two real poles).
inline Sos assemble(const std::vector<std::pair<cplx, cplx>>& pole_pairs,
                    const std::vector<std::pair<cplx, cplx>>& zero_pairs) {
  Sos sos;
  for (std::size_t i = 0; i < pole_pairs.size(); ++i) {
    const auto [p1, p2] = pole_pairs[i];
    const auto [z1, z2] = zero_pairs[i];
    Biquad q;
    q.a1 = -(p1 + p2).real();
    q.a2 = (p1 * p2).real();
    q.b0 = 1.0;
    q.b1 = -(z1 + z2).real();
    q.b2 = (z1 * z2).real();
    sos.sections.push_back(q);
  }
  return sos;
}

inline void check_stable(const std::vector<std::pair<cplx, cplx>>& pairs) {
  for (const auto& [p1, p2] : pairs)
    for (const cplx& p : {p1, p2})
      if (!(std::abs(p) < 1.0 - 1e-12)) throw DesignError("designed filter is unstable (pole radius " +
                                                         std::to_string(std::abs(p)) + ")");
}

// Butterworth prototype poles (left half s-plane, order n, unit cutoff).
inline std::vector<cplx> prototype_poles(int n) {
  std::vector<cplx> p;
  for (int k = 0; k < n; ++k) {
    const double ang = M_PI * (2.0 * k + n + 1) / (2.0 * n);
    p.push_back(std::polar(1.0, ang));
  }
  return p;
}

}  // namespace detail

/// Designs the filter; total order = spec.order (prototype order = order / 2).
inline Sos design(const FilterSpec& spec, double fs) {
  spec.validate(fs);
  const int n = spec.order / 2;
  const double w_lo = detail::prewarp(spec.lower_edge(), fs);
  const double w_hi = detail::prewarp(spec.upper_edge(), fs);
  const double bw = w_hi - w_lo;
  const double w0sq = w_lo * w_hi;

  // Each prototype pole maps to two analog poles. Complex prototype poles
  // come in conjugate pairs, so keeping the upper-half-plane root of each
  // yields one section per pair; a real prototype pole yields either a
  // conjugate pair or two real poles.
  std::vector<std::pair<cplx, cplx>> analog;
  for (const cplx& p : detail::prototype_poles(n)) {
    const cplx a = spec.kind == FilterKind::Bandpass ? p * bw : bw / p;
    const cplx disc = std::sqrt(a * a - 4.0 * w0sq);
    const cplx s1 = (a + disc) / 2.0, s2 = (a - disc) / 2.0;
    if (std::abs(p.imag()) < 1e-12) {
      analog.emplace_back(s1, s2);
    } else if (p.imag() > 0.0) {
      analog.emplace_back(s1, std::conj(s1));
      analog.emplace_back(s2, std::conj(s2));
    }
  }
  if (static_cast<int>(analog.size()) != n)
    throw DesignError("unexpected pole layout in filter design (" + std::to_string(analog.size()) + " of " +
                      std::to_string(n) + " sections)");

  std::vector<std::pair<cplx, cplx>> digital;
  for (const auto& [s1, s2] : analog) digital.emplace_back(detail::bilinear(s1, fs), detail::bilinear(s2, fs));
  detail::check_stable(digital);

  std::vector<std::pair<cplx, cplx>> zeros;
  if (spec.kind == FilterKind::Bandpass) {
    zeros.assign(static_cast<std::size_t>(n), {cplx{1.0, 0.0}, cplx{-1.0, 0.0}});
  } else {
    const cplx zc = std::polar(1.0, 2.0 * std::atan(std::sqrt(w0sq) / (2.0 * fs)));
    zeros.assign(static_cast<std::size_t>(n), {zc, std::conj(zc)});
  }
  Sos sos = detail::assemble(digital, zeros);

  // Unit gain at the passband reference frequency.
  const double f_ref = spec.kind == FilterKind::Bandpass
                           ? fs / M_PI * std::atan(std::sqrt(w0sq) / (2.0 * fs))
                           : 0.0;
  double g = sos.magnitude(f_ref, fs);
  if (!(g > 0.0) || !std::isfinite(g)) throw DesignError("filter gain normalization failed");
  const double per = std::pow(g, -1.0 / static_cast<double>(sos.sections.size()));
  for (Biquad& q : sos.sections) {
    q.b0 *= per;
    q.b1 *= per;
    q.b2 *= per;
  }
  return sos;
}

/// Causal single pass with optional initial state (two values per section).
inline void sosfilt_inplace(const Sos& sos, std::vector<double>& x, std::vector<double> state) {
  if (state.empty()) state.assign(2 * sos.sections.size(), 0.0);
  for (std::size_t s = 0; s < sos.sections.size(); ++s) {
    const Biquad& q = sos.sections[s];
    double z1 = state[2 * s], z2 = state[2 * s + 1];
    for (double& v : x) {
      const double in = v;
      const double out = q.b0 * in + z1;
      z1 = q.b1 * in - q.a1 * out + z2;
      z2 = q.b2 * in - q.a2 * out;
      v = out;
    }
  }
}

/// Steady-state initial conditions for a unit step input.
inline std::vector<double> sosfilt_zi(const Sos& sos) {
  std::vector<double> zi;
  double scale = 1.0;
  for (const Biquad& q : sos.sections) {
    const double y = q.dc_gain();
    zi.push_back(scale * (y - q.b0));
    zi.push_back(scale * (q.b2 - q.a2 * y));
    scale *= y;
  }
  return zi;
}

/// Forward-backward filtering with odd-reflection padding and steady-state
/// initial conditions.
inline std::vector<double> sosfiltfilt(const Sos& sos, std::span<const double> x, std::size_t padlen) {
  const std::size_t n = x.size();
  if (n == 0) return {};
  padlen = std::min(padlen, n - 1);
  std::vector<double> ext;
  ext.reserve(n + 2 * padlen);
  for (std::size_t i = padlen; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= padlen; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

  const std::vector<double> zi = sosfilt_zi(sos);
  auto scaled = [&](double v) {
    std::vector<double> s = zi;
    for (double& e : s) e *= v;
    return s;
  };
  sosfilt_inplace(sos, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  sosfilt_inplace(sos, ext, scaled(ext.front()));
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(padlen), ext.begin() + static_cast<std::ptrdiff_t>(padlen + n)};
}

/// Zero-phase application of the designed filter. Effective order doubles.
inline TimeSeries apply_filter(const TimeSeries& x, const FilterSpec& spec) {
  require_valid_fs(x.fs);
  if (!(x.fs > 2.0 * spec.upper_edge())) throw InvalidInput("sampling rate too low for filter band");
  const Sos sos = design(spec, x.fs);
  // Reflection padding: three seconds.
  const auto padlen = static_cast<std::size_t>(std::max(3.0 * x.fs, 3.0 * (2.0 * sos.sections.size() + 1.0)));
  return TimeSeries(sosfiltfilt(sos, x.view(), padlen), x.fs);
}

/// The standard front end: 50 Hz notch followed by 1-100 Hz bandpass.
inline TimeSeries preprocess(const TimeSeries& x) {
  return apply_filter(apply_filter(x, FilterSpec::notch()), FilterSpec::bandpass());
}

}  // namespace fecg::filter
