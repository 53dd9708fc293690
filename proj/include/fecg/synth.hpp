#pragma once

// Gaussian-sum phase-domain ECG generator. Each cardiac cycle sweeps a phase
// ramp from -pi to pi and the waveform is the sum of five Gaussian bumps
// (P, Q, R, S, T) placed at fixed angular positions.

#include <algorithm>
#include <array>
#include <random>
#include <string>
#include <vector>

#include "fecg/core.hpp"

namespace fecg::synth {

struct Wave {
  char label = 'R';
  double theta = 0.0;      // angular position, rad
  double amplitude = 0.0;  // mV-like model units
  double width = 0.1;      // rad, > 0
};

struct ECGModelParams {
  std::array<Wave, 5> waves{};
  double base_amplitude_scale = 1.0;

  /// Validates the five-wave invariants; throws InvalidInput.
  void validate() const {
    for (std::size_t j = 0; j < waves.size(); ++j) {
      const Wave& w = waves[j];
      if (!(w.width > 0.0)) throw InvalidInput(std::string("wave ") + w.label + " has non-positive width");
      if (!(w.theta > -M_PI && w.theta <= M_PI))
        throw InvalidInput(std::string("wave ") + w.label + " position outside (-pi, pi]");
      if (j > 0 && !(w.theta > waves[j - 1].theta))
        throw InvalidInput("wave positions must be strictly increasing");
    }
  }

  /// Index of the R descriptor, or of the largest positive wave when no R is labelled.
  [[nodiscard]] std::size_t r_index() const {
    for (std::size_t j = 0; j < waves.size(); ++j)
      if (waves[j].label == 'R') return j;
    std::size_t best = 0;
    for (std::size_t j = 1; j < waves.size(); ++j)
      if (waves[j].amplitude > waves[best].amplitude) best = j;
    return best;
  }

  [[nodiscard]] double value_at(double theta) const {
    double z = 0.0;
    for (const Wave& w : waves) {
      const double d = wrap_phase(theta - w.theta);
      z += w.amplitude * std::exp(-d * d / (2.0 * w.width * w.width));
    }
    return base_amplitude_scale * z;
  }

  /// d value_at / d theta.
  [[nodiscard]] double slope_at(double theta) const {
    double dz = 0.0;
    for (const Wave& w : waves) {
      const double d = wrap_phase(theta - w.theta);
      const double b2 = w.width * w.width;
      dz -= w.amplitude * d / b2 * std::exp(-d * d / (2.0 * b2));
    }
    return base_amplitude_scale * dz;
  }

  ECGModelParams scaled(double factor) const {
    ECGModelParams p = *this;
    for (Wave& w : p.waves) w.amplitude *= factor;
    return p;
  }
};

/// Classic PQRST morphology (positions in degrees -70, -15, 0, 15, 100).
inline ECGModelParams default_pqrst() {
  constexpr double deg = M_PI / 180.0;
  ECGModelParams p;
  p.waves = {Wave{'P', -70.0 * deg, 1.2, 0.25}, Wave{'Q', -15.0 * deg, -5.0, 0.1},
             Wave{'R', 0.0, 30.0, 0.1}, Wave{'S', 15.0 * deg, -7.5, 0.1},
             Wave{'T', 100.0 * deg, 0.75, 0.4}};
  return p;
}

/// A model with only the R bump active, used by tests and the EKF defaults.
inline ECGModelParams r_only(double amplitude = 1.0) {
  ECGModelParams p = default_pqrst();
  for (Wave& w : p.waves) w.amplitude = (w.label == 'R') ? amplitude : 0.0;
  return p;
}

struct RRSeries {
  std::vector<double> intervals;  // seconds

  static constexpr double kMin = 0.2;
  static constexpr double kMax = 2.0;

  void validate() const {
    if (intervals.empty()) throw InvalidInput("RR series is empty");
    for (double rr : intervals)
      if (!(rr >= kMin && rr <= kMax))
        throw InvalidInput("RR interval " + std::to_string(rr) + " s outside [0.2, 2.0]");
  }

  [[nodiscard]] double total() const {
    double t = 0.0;
    for (double rr : intervals) t += rr;
    return t;
  }
};

struct SynthResult {
  TimeSeries ecg;
  std::vector<std::size_t> rpeaks;  // ground-truth R sample indices
};

/// One cycle per RR interval; each cycle is made zero-mean.
inline SynthResult synth_ecg(const ECGModelParams& params, const RRSeries& rr, double fs) {
  params.validate();
  rr.validate();
  require_valid_fs(fs);

  const auto n = static_cast<std::size_t>(std::llround(rr.total() * fs));
  SynthResult out;
  out.ecg = TimeSeries(std::vector<double>(n, 0.0), fs);
  const double r_theta = params.waves[params.r_index()].theta;

  double start = 0.0;  // seconds
  std::size_t idx = 0;
  for (double interval : rr.intervals) {
    const double stop = start + interval;
    const std::size_t first = idx;
    while (idx < n && static_cast<double>(idx) / fs < stop) {
      const double t = static_cast<double>(idx) / fs;
      const double theta = -M_PI + 2.0 * M_PI * (t - start) / interval;
      out.ecg[idx] = params.value_at(theta);
      ++idx;
    }
    if (idx > first) {
      const std::span<const double> cyc(out.ecg.samples.data() + first, idx - first);
      const double m = mean(cyc);
      for (std::size_t i = first; i < idx; ++i) out.ecg[i] -= m;
    }
    const double t_r = start + interval * (r_theta + M_PI) / (2.0 * M_PI);
    const auto r_idx = static_cast<long long>(std::llround(t_r * fs));
    if (r_idx >= 0 && static_cast<std::size_t>(r_idx) < n) out.rpeaks.push_back(static_cast<std::size_t>(r_idx));
    start = stop;
  }
  return out;
}

/// Beat intervals with instantaneous HR ~ Normal(mean_hr, hrv_std) bpm.
template <class Rng>
RRSeries make_rr(double mean_hr, double hrv_std, std::size_t n_beats, Rng& rng) {
  if (!(mean_hr >= 60.0 && mean_hr <= 240.0))
    throw InvalidInput("mean heart rate " + std::to_string(mean_hr) + " bpm outside [60, 240]");
  if (n_beats < 1) throw InvalidInput("n_beats must be >= 1");
  if (!(hrv_std >= 0.0)) throw InvalidInput("hrv_std must be non-negative");
  RRSeries rr;
  rr.intervals.reserve(n_beats);
  std::normal_distribution<double> hr(mean_hr, hrv_std > 0.0 ? hrv_std : 1.0);
  for (std::size_t i = 0; i < n_beats; ++i) {
    const double bpm = hrv_std > 0.0 ? hr(rng) : mean_hr;
    double interval = bpm > 0.0 ? 60.0 / bpm : RRSeries::kMax;
    interval = std::clamp(interval, RRSeries::kMin, RRSeries::kMax);
    rr.intervals.push_back(interval);
  }
  return rr;
}

/// Enough beats to cover `seconds` of signal at the given mean rate.
template <class Rng>
RRSeries make_rr_for_duration(double mean_hr, double hrv_std, double seconds, Rng& rng) {
  RRSeries rr = make_rr(mean_hr, hrv_std, static_cast<std::size_t>(std::ceil(seconds * mean_hr / 60.0)) + 2, rng);
  while (rr.total() < seconds) {
    RRSeries more = make_rr(mean_hr, hrv_std, 4, rng);
    rr.intervals.insert(rr.intervals.end(), more.intervals.begin(), more.intervals.end());
  }
  return rr;
}

/// Gestational amplitude band for the fetal peak, µV.
struct FetalBand {
  double lo = 5.0;
  double hi = 20.0;
  static constexpr double kCeiling = 20.0;
};

/// Rescales so max|x| equals target exactly (up to rounding).
inline TimeSeries rescale_peak(const TimeSeries& x, double target) {
  const double peak = max_abs(x.view());
  if (!(peak > 0.0)) throw InvalidInput("cannot rescale an all-zero signal");
  TimeSeries out = x;
  const double g = target / peak;
  for (double& v : out.samples) v *= g;
  return out;
}

struct ScaledFetal {
  TimeSeries ecg;
  double target_peak = 0.0;
};

template <class Rng>
double draw_fetal_peak(Rng& rng, FetalBand band = {}) {
  if (!(band.lo > 0.0 && band.lo <= band.hi && band.hi <= FetalBand::kCeiling))
    throw InvalidInput("fetal amplitude band must satisfy 0 < lo <= hi <= 20 uV");
  std::uniform_real_distribution<double> u(band.lo, band.hi);
  return std::min(u(rng), FetalBand::kCeiling);
}

/// Rescales a fetal trace to a peak drawn from the gestational band.
template <class Rng>
ScaledFetal scale_fetal(const TimeSeries& fecg, Rng& rng, FetalBand band = {}) {
  if (fecg.empty()) throw InvalidInput("fetal trace is empty");
  if (!(max_abs(fecg.view()) > 0.0)) throw InvalidInput("cannot rescale an all-zero fetal trace");
  const double target = draw_fetal_peak(rng, band);
  return {rescale_peak(fecg, target), target};
}

}  // namespace fecg::synth
