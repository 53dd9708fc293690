#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fecg {

/// Project-wide sampling rate (Hz).
inline constexpr double kDefaultFs = 250.0;
/// Upper edge of the physiological band; any fs must exceed twice this.
inline constexpr double kBandTopHz = 100.0;

// Error hierarchy. The CLI maps each branch to its own exit code.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidInput : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct StructuralError : Error {
  using Error::Error;
};
struct UndefinedMetric : Error {
  using Error::Error;
};
struct DesignError : Error {
  using Error::Error;
};
struct NumericalError : Error {
  using Error::Error;
};
struct FormatError : Error {
  using Error::Error;
};
struct VersionError : FormatError {
  using FormatError::FormatError;
};
struct TruncatedError : FormatError {
  using FormatError::FormatError;
};
struct ChecksumError : FormatError {
  using FormatError::FormatError;
};
struct StorageError : Error {
  using Error::Error;
};

/// Uniformly sampled real signal. Units are µV unless a caller says otherwise.
struct TimeSeries {
  std::vector<double> samples;
  double fs = kDefaultFs;

  TimeSeries() = default;
  TimeSeries(std::vector<double> s, double rate) : samples(std::move(s)), fs(rate) {}

  [[nodiscard]] std::size_t size() const { return samples.size(); }
  [[nodiscard]] bool empty() const { return samples.empty(); }
  [[nodiscard]] double duration() const { return static_cast<double>(samples.size()) / fs; }
  [[nodiscard]] std::span<const double> view() const { return samples; }
  double& operator[](std::size_t i) { return samples[i]; }
  double operator[](std::size_t i) const { return samples[i]; }
};

inline void require_valid_fs(double fs) {
  if (!(fs > 2.0 * kBandTopHz) || !std::isfinite(fs))
    throw InvalidInput("sampling rate " + std::to_string(fs) + " Hz must exceed " +
                       std::to_string(2.0 * kBandTopHz) + " Hz");
}

inline double mean_square(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

inline double rms(std::span<const double> x) { return std::sqrt(mean_square(x)); }

inline double max_abs(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

inline double mean(std::span<const double> x) {
  if (x.empty()) return 0.0;
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Sample standard deviation (n - 1 denominator); zero for fewer than two values.
inline double stddev(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  const double m = mean(x);
  double acc = 0.0;
  for (double v : x) acc += (v - m) * (v - m);
  return std::sqrt(acc / static_cast<double>(x.size() - 1));
}

/// SplitMix64 step; used to derive independent per-record / per-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline double wrap_phase(double theta) {
  constexpr double two_pi = 2.0 * M_PI;
  double w = std::fmod(theta + M_PI, two_pi);
  if (w <= 0.0) w += two_pi;
  return w - M_PI;
}

}  // namespace fecg
