#pragma once

// R-peak detection and the scoring protocol: one-to-one peak matching within
// 50 ms, detection sensitivity / F-score, per-beat heart-rate error, and the
// waveform metrics PRD and PCC.

#include <algorithm>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "fecg/core.hpp"
#include "fecg/filter.hpp"

namespace fecg::eval {

using PeakList = std::vector<std::size_t>;

// ---------------------------------------------------------------------------
// Detection

struct DetectorConfig {
  double band_lo = 5.0;        // Hz
  double band_hi = 15.0;       // Hz
  double refractory_s = 0.200;
  double integration_s = 0.150;
  double search_s = 0.075;     // half-width of the R refinement window

  static DetectorConfig maternal() { return {}; }
  static DetectorConfig fetal() { return {10.0, 40.0, 0.150, 0.080, 0.040}; }
};

namespace detail {

inline std::vector<double> moving_average_centered(std::span<const double> x, std::size_t w) {
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> out(n);
  const std::size_t half = w / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

}  // namespace detail

/// Bandpass, differentiate, square, integrate, then adaptive thresholding
/// with search-back. Peaks are refined to the signal maximum near each
/// detection.
inline PeakList detect_rpeaks(const TimeSeries& x, const DetectorConfig& cfg = DetectorConfig::maternal()) {
  const double fs = x.fs;
  if (!(fs > 0.0)) throw InvalidInput("detector needs a positive sampling rate");
  if (x.duration() < 2.0) throw InvalidInput("detector needs at least 2 s of signal");
  const std::size_t n = x.size();
  if (!(max_abs(x.view()) > 0.0)) return {};

  const filter::Sos bp = filter::design(filter::FilterSpec::bandpass(cfg.band_lo, cfg.band_hi, 4), fs);
  const auto band = filter::sosfiltfilt(bp, x.view(), static_cast<std::size_t>(fs));
  std::vector<double> energy(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double d = 0.5 * (band[i + 1] - band[i - 1]);
    energy[i] = d * d;
  }
  const auto integ = detail::moving_average_centered(energy, std::max<std::size_t>(1, static_cast<std::size_t>(cfg.integration_s * fs)));

  std::vector<std::size_t> cand;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (integ[i] > integ[i - 1] && integ[i] >= integ[i + 1]) cand.push_back(i);
  if (cand.empty()) return {};

  const auto learn = static_cast<std::size_t>(std::min<double>(static_cast<double>(n), 2.0 * fs));
  double spk = 0.25 * *std::max_element(integ.begin(), integ.begin() + static_cast<std::ptrdiff_t>(learn));
  double npk = 0.5 * mean(std::span<const double>(integ.data(), learn));
  const auto refractory = static_cast<std::size_t>(cfg.refractory_s * fs);

  std::vector<std::size_t> beats;
  std::vector<double> beat_vals;
  auto threshold = [&] { return npk + 0.25 * (spk - npk); };
  auto mean_rr = [&]() -> double {
    if (beats.size() < 2) return 0.0;
    const std::size_t k = std::min<std::size_t>(8, beats.size() - 1);
    return static_cast<double>(beats.back() - beats[beats.size() - 1 - k]) / static_cast<double>(k);
  };

  std::size_t ci = 0;
  std::size_t last_checked = 0;
  for (; ci < cand.size(); ++ci) {
    const std::size_t i = cand[ci];
    const double v = integ[i];

    // Search back over skipped candidates when the gap grows too long.
    const double rr = mean_rr();
    if (rr > 0.0 && !beats.empty() && static_cast<double>(i - beats.back()) > 1.66 * rr) {
      std::size_t best = 0;
      double best_v = 0.0;
      for (std::size_t cj = last_checked; cj < ci; ++cj) {
        const std::size_t j = cand[cj];
        if (j <= beats.back() + refractory || j + refractory >= i) continue;
        if (integ[j] > 0.5 * threshold() && integ[j] > best_v) {
          best = j;
          best_v = integ[j];
        }
      }
      if (best_v > 0.0) {
        beats.push_back(best);
        beat_vals.push_back(best_v);
        spk = 0.25 * best_v + 0.75 * spk;
      }
    }
    last_checked = ci;

    if (v > threshold()) {
      if (!beats.empty() && i - beats.back() <= refractory) {
        if (v > beat_vals.back()) {
          beats.back() = i;
          beat_vals.back() = v;
        }
        continue;
      }
      beats.push_back(i);
      beat_vals.push_back(v);
      spk = 0.125 * v + 0.875 * spk;
    } else {
      npk = 0.125 * v + 0.875 * npk;
    }
  }

  // Refine to the signal maximum and enforce the refractory period.
  const auto half = static_cast<std::size_t>(cfg.search_s * fs);
  PeakList out;
  for (std::size_t b : beats) {
    const std::size_t lo = b >= half ? b - half : 0;
    const std::size_t hi = std::min(n - 1, b + half);
    std::size_t best = lo;
    for (std::size_t j = lo; j <= hi; ++j)
      if (x[j] > x[best]) best = j;
    if (!out.empty() && best <= out.back() + refractory) {
      if (x[best] > x[out.back()]) out.back() = best;
      continue;
    }
    out.push_back(best);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matching and detection metrics

struct PeakMatch {
  std::size_t tp = 0, fp = 0, fn = 0;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (reference, detected), sorted by reference
};

inline constexpr double kMatchToleranceS = 0.050;

/// Greedy one-to-one matching: closest admissible pairs first.
inline PeakMatch match_rpeaks(const PeakList& detected, const PeakList& reference, double fs,
                              double tol_s = kMatchToleranceS) {
  const double tol = tol_s * fs;
  struct Cand {
    double dist;
    std::size_t ri, di;
  };
  std::vector<Cand> cands;
  std::size_t start = 0;
  for (std::size_t ri = 0; ri < reference.size(); ++ri) {
    const double r = static_cast<double>(reference[ri]);
    while (start < detected.size() && static_cast<double>(detected[start]) < r - tol) ++start;
    for (std::size_t di = start; di < detected.size() && static_cast<double>(detected[di]) <= r + tol; ++di)
      cands.push_back({std::abs(static_cast<double>(detected[di]) - r), ri, di});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    return std::tie(a.dist, a.ri, a.di) < std::tie(b.dist, b.ri, b.di);
  });
  std::vector<bool> ref_used(reference.size(), false), det_used(detected.size(), false);
  PeakMatch m;
  for (const Cand& c : cands) {
    if (ref_used[c.ri] || det_used[c.di]) continue;
    ref_used[c.ri] = det_used[c.di] = true;
    m.pairs.emplace_back(reference[c.ri], detected[c.di]);
  }
  std::sort(m.pairs.begin(), m.pairs.end());
  m.tp = m.pairs.size();
  m.fn = reference.size() - m.tp;
  m.fp = detected.size() - m.tp;
  return m;
}

struct DetectionScores {
  double se = 0.0;       // percent
  double f_score = 0.0;  // percent
};

inline DetectionScores detection_metrics(const PeakMatch& m) {
  if (m.tp + m.fn == 0) throw UndefinedMetric("no reference peaks: sensitivity undefined");
  const auto tp = static_cast<double>(m.tp), fn = static_cast<double>(m.fn), fp = static_cast<double>(m.fp);
  return {100.0 * tp / (tp + fn), 100.0 * 2.0 * tp / (2.0 * tp + fn + fp)};
}

/// RMS difference of per-beat heart rate (bpm) over matched beats whose
/// predecessors in both lists are also matched to each other.
inline double hr_error(const PeakMatch& m, const PeakList& reference, const PeakList& detected, double fs) {
  if (m.pairs.size() < 2) throw UndefinedMetric("heart-rate error needs at least two matched beats");
  auto index_of = [](const PeakList& list, std::size_t v) -> std::optional<std::size_t> {
    const auto it = std::lower_bound(list.begin(), list.end(), v);
    if (it == list.end() || *it != v) return std::nullopt;
    return static_cast<std::size_t>(it - list.begin());
  };
  double acc = 0.0;
  std::size_t beats = 0;
  for (std::size_t l = 1; l < m.pairs.size(); ++l) {
    const auto [r, d] = m.pairs[l];
    const auto [r_prev, d_prev] = m.pairs[l - 1];
    const auto ri = index_of(reference, r), di = index_of(detected, d);
    if (!ri || !di || *ri == 0 || *di == 0) continue;
    if (reference[*ri - 1] != r_prev || detected[*di - 1] != d_prev) continue;
    const double hr_ref = 60.0 * fs / static_cast<double>(r - r_prev);
    const double hr_det = 60.0 * fs / static_cast<double>(d - d_prev);
    acc += (hr_det - hr_ref) * (hr_det - hr_ref);
    ++beats;
  }
  if (beats == 0) throw UndefinedMetric("heart-rate error: no consecutive matched beats");
  return std::sqrt(acc / static_cast<double>(beats));
}

// ---------------------------------------------------------------------------
// Waveform metrics

inline void require_same_length(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InvalidInput("metric operands differ in length");
}

/// 100 sqrt(sum (f - g)^2 / sum f^2).
inline double prd(std::span<const double> reference, std::span<const double> estimate) {
  require_same_length(reference, estimate);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double d = reference[i] - estimate[i];
    num += d * d;
    den += reference[i] * reference[i];
  }
  if (!(den > 0.0)) throw UndefinedMetric("PRD undefined for an all-zero reference");
  return 100.0 * std::sqrt(num / den);
}

/// Uncentered correlation x 100.
inline double pcc(std::span<const double> reference, std::span<const double> estimate) {
  require_same_length(reference, estimate);
  double fg = 0.0, ff = 0.0, gg = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    fg += reference[i] * estimate[i];
    ff += reference[i] * reference[i];
    gg += estimate[i] * estimate[i];
  }
  if (!(ff > 0.0) || !(gg > 0.0)) throw UndefinedMetric("PCC undefined for a zero-norm operand");
  return 100.0 * fg / (std::sqrt(ff) * std::sqrt(gg));
}

/// Mean-removed Pearson correlation x 100, reported alongside pcc().
inline double pcc_centered(std::span<const double> reference, std::span<const double> estimate) {
  require_same_length(reference, estimate);
  const double mf = mean(reference), mg = mean(estimate);
  double fg = 0.0, ff = 0.0, gg = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double a = reference[i] - mf, b = estimate[i] - mg;
    fg += a * b;
    ff += a * a;
    gg += b * b;
  }
  if (!(ff > 0.0) || !(gg > 0.0)) throw UndefinedMetric("centered PCC undefined for a constant operand");
  return 100.0 * fg / (std::sqrt(ff) * std::sqrt(gg));
}

struct EvalReport {
  double prd = 0.0;
  double pcc = 0.0;
  double pcc_centered = 0.0;
  double se = 0.0;
  double f_score = 0.0;
  std::optional<double> hr_err;  // absent when fewer than two consecutive matches
  PeakMatch counts;
};

/// Scores one estimate of the fetal trace against its reference and annotations.
inline EvalReport evaluate(const TimeSeries& reference, const PeakList& reference_peaks, const TimeSeries& estimate,
                           const DetectorConfig& det = DetectorConfig::fetal()) {
  EvalReport r;
  r.prd = prd(reference.view(), estimate.view());
  const bool silent = !(max_abs(estimate.view()) > 0.0);
  r.pcc = silent ? 0.0 : pcc(reference.view(), estimate.view());
  r.pcc_centered = silent ? 0.0 : pcc_centered(reference.view(), estimate.view());
  const PeakList found = detect_rpeaks(estimate, det);
  r.counts = match_rpeaks(found, reference_peaks, estimate.fs);
  const DetectionScores d = detection_metrics(r.counts);
  r.se = d.se;
  r.f_score = d.f_score;
  try {
    r.hr_err = hr_error(r.counts, reference_peaks, found, estimate.fs);
  } catch (const UndefinedMetric&) {
    r.hr_err.reset();
  }
  return r;
}

}  // namespace fecg::eval
