#pragma once

// Dry-electrode noise model: banded pink, banded white and a two-component
// Gaussian mixture, each peak-normalized in the frequency domain, weighted,
// summed and brought back to the time domain.

#include <algorithm>
#include <random>
#include <vector>

#include "fecg/core.hpp"
#include "fecg/fft.hpp"

namespace fecg::noise {

struct NoiseBands {
  double pink_hi = 10.0;   // Hz, in [9, 12]
  double white_hi = 75.0;  // Hz, in [60, 90]

  static constexpr double kPinkLo = 9.0, kPinkHi = 12.0;
  static constexpr double kWhiteLo = 60.0, kWhiteHi = 90.0;

  void validate() const {
    if (!(pink_hi >= kPinkLo && pink_hi <= kPinkHi)) throw InvalidInput("pink band edge outside [9, 12] Hz");
    if (!(white_hi >= kWhiteLo && white_hi <= kWhiteHi)) throw InvalidInput("white band edge outside [60, 90] Hz");
  }
};

struct MixtureParams {
  double sigma0 = 1.0;   // background
  double sigma1 = 10.0;  // impulsive
  double p = 0.1;        // probability of the impulsive component

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("mixture probability outside [0, 1]");
    if (!(sigma0 > 0.0 && sigma1 > 0.0)) throw InvalidInput("mixture standard deviations must be positive");
  }

  [[nodiscard]] double variance() const { return (1.0 - p) * sigma0 * sigma0 + p * sigma1 * sigma1; }
};

/// Spectral weights; zero disables a component (used by tests to isolate one).
struct NoiseWeights {
  double pink = 2.0;
  double white = 0.2;
  double mixture = 0.15;

  void validate() const {
    if (pink < 0.0 || white < 0.0 || mixture < 0.0) throw InvalidInput("noise weights must be non-negative");
  }
};

/// Frequencies below this are zeroed in every component.
inline constexpr double kLowCutHz = 1.0;

template <class Rng>
NoiseBands sample_bands(Rng& rng) {
  std::uniform_real_distribution<double> pink(NoiseBands::kPinkLo, NoiseBands::kPinkHi);
  std::uniform_real_distribution<double> white(NoiseBands::kWhiteLo, NoiseBands::kWhiteHi);
  NoiseBands b;
  b.pink_hi = pink(rng);
  b.white_hi = white(rng);
  return b;
}

/// x_i = (sigma0 (1 - u_i) + sigma1 u_i) z_i, u_i ~ Bernoulli(p), z_i ~ N(0, 1).
template <class Rng>
std::vector<double> gaussian_mixture(std::size_t n, const MixtureParams& params, Rng& rng) {
  params.validate();
  if (n < 1) throw InvalidInput("gaussian_mixture needs n >= 1");
  std::bernoulli_distribution pick(params.p);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) {
    const double u = pick(rng) ? 1.0 : 0.0;
    v = (params.sigma0 * (1.0 - u) + params.sigma1 * u) * z(rng);
  }
  return x;
}

namespace detail {

inline void normalize_peak(std::vector<fft::cplx>& spec) {
  double peak = 0.0;
  for (const auto& c : spec) peak = std::max(peak, std::abs(c));
  if (peak > 0.0)
    for (auto& c : spec) c /= peak;
}

inline double bin_hz(std::size_t k, std::size_t n, double fs) {
  return static_cast<double>(k) * fs / static_cast<double>(n);
}

}  // namespace detail

template <class Rng>
TimeSeries synthesize_noise(std::size_t n_samples, double fs, const NoiseBands& bands, const NoiseWeights& weights,
                            const MixtureParams& mix, Rng& rng) {
  require_valid_fs(fs);
  bands.validate();
  weights.validate();
  mix.validate();
  if (static_cast<double>(n_samples) < fs) throw InvalidInput("noise needs at least one second of samples");

  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<double> pink_base(n_samples), white_base(n_samples);
  for (double& v : pink_base) v = z(rng);
  for (double& v : white_base) v = z(rng);
  const std::vector<double> mix_base = gaussian_mixture(n_samples, mix, rng);

  auto pink = fft::rfft(pink_base);
  auto white = fft::rfft(white_base);
  auto impulsive = fft::rfft(mix_base);
  for (std::size_t k = 0; k < pink.size(); ++k) {
    const double f = detail::bin_hz(k, n_samples, fs);
    const bool above_cut = f >= kLowCutHz;
    pink[k] = (above_cut && f <= bands.pink_hi) ? pink[k] / std::sqrt(f) : fft::cplx{};
    if (!(above_cut && f <= bands.white_hi)) white[k] = {};
    if (!above_cut) impulsive[k] = {};
  }
  detail::normalize_peak(pink);
  detail::normalize_peak(white);
  detail::normalize_peak(impulsive);

  std::vector<fft::cplx> combined(pink.size());
  for (std::size_t k = 0; k < combined.size(); ++k)
    combined[k] = weights.pink * pink[k] + weights.white * white[k] + weights.mixture * impulsive[k];
  return TimeSeries(fft::irfft(combined, static_cast<int>(n_samples)), fs);
}

/// 10 log10(P_signal / P_noise), power as mean square.
inline double measure_snr_db(std::span<const double> signal, std::span<const double> noise) {
  const double ps = mean_square(signal), pn = mean_square(noise);
  if (!(ps > 0.0) || !(pn > 0.0)) throw UndefinedMetric("SNR undefined for zero-power operand");
  return 10.0 * std::log10(ps / pn);
}

/// Rescales `noise` so that 10 log10(P_reference / P_noise) == snr_db.
inline TimeSeries scale_to_snr(const TimeSeries& noise, const TimeSeries& reference, double snr_db) {
  if (noise.size() != reference.size() || noise.fs != reference.fs)
    throw InvalidInput("noise and reference must share length and sampling rate");
  const double pr = mean_square(reference.view());
  if (!(pr > 0.0)) throw InvalidInput("reference has zero power");
  const double pn = mean_square(noise.view());
  if (!(pn > 0.0)) throw InvalidInput("noise has zero power and cannot be scaled");
  const double gain = std::sqrt(pr / (pn * std::pow(10.0, snr_db / 10.0)));
  TimeSeries out = noise;
  for (double& v : out.samples) v *= gain;
  return out;
}

}  // namespace fecg::noise
