#pragma once

// Single-channel classical comparators: an extended Kalman filter / RTS
// smoother built on the Gaussian-sum ECG model, and SVD template subtraction
// over QRS-aligned beats.

#include <Eigen/Dense>

#include <algorithm>
#include <limits>
#include <vector>

#include "fecg/core.hpp"
#include "fecg/eval.hpp"
#include "fecg/synth.hpp"

namespace fecg::baselines {

using eval::PeakList;
using synth::ECGModelParams;

struct Separation {
  TimeSeries estimate;  // the maternal (or template) estimate
  TimeSeries residual;  // input minus estimate
};

// ---------------------------------------------------------------------------
// Phase from R-peaks

/// Linear phase between consecutive R-peaks, 0 at each peak, wrapped to
/// (-pi, pi]. Edges extrapolate with the nearest RR interval. Also returns
/// the local angular rate (rad per sample).
struct PhaseTrack {
  std::vector<double> theta;
  std::vector<double> omega;
};

inline PhaseTrack phase_from_peaks(std::size_t n, const PeakList& rpeaks) {
  if (rpeaks.empty()) throw InvalidInput("phase tracking needs at least one R-peak");
  PhaseTrack p;
  p.theta.resize(n);
  p.omega.resize(n);
  const double fallback_rr = rpeaks.size() >= 2 ? static_cast<double>(rpeaks[1] - rpeaks[0]) : static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto it = std::upper_bound(rpeaks.begin(), rpeaks.end(), i);
    double ref, rr;
    if (it == rpeaks.begin()) {
      ref = static_cast<double>(rpeaks.front());
      rr = fallback_rr;
    } else if (it == rpeaks.end()) {
      ref = static_cast<double>(rpeaks.back());
      rr = rpeaks.size() >= 2 ? static_cast<double>(rpeaks.back() - rpeaks[rpeaks.size() - 2]) : fallback_rr;
    } else {
      ref = static_cast<double>(*(it - 1));
      rr = static_cast<double>(*it - *(it - 1));
    }
    rr = std::max(rr, 1.0);
    p.omega[i] = 2.0 * M_PI / rr;
    p.theta[i] = wrap_phase(2.0 * M_PI * (static_cast<double>(i) - ref) / rr);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Model fitting

/// Phase-binned mean beat.
inline std::vector<double> mean_beat(const TimeSeries& x, const PhaseTrack& phase, std::size_t bins) {
  std::vector<double> acc(bins, 0.0), cnt(bins, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto b = static_cast<std::size_t>((phase.theta[i] + M_PI) / (2.0 * M_PI) * static_cast<double>(bins));
    b = std::min(b, bins - 1);
    acc[b] += x[i];
    cnt[b] += 1.0;
  }
  for (std::size_t b = 0; b < bins; ++b) acc[b] = cnt[b] > 0 ? acc[b] / cnt[b] : 0.0;
  // Fill empty bins from neighbours.
  for (std::size_t b = 0; b < bins; ++b)
    if (cnt[b] == 0.0) acc[b] = b > 0 ? acc[b - 1] : 0.0;
  return acc;
}

/// Levenberg-Marquardt fit of the five Gaussian waves (plus a constant
/// offset) to the phase-domain mean beat. Starts from `init` rescaled to the
/// beat's R amplitude; falls back to that start if the fit leaves the
/// model's valid region.
inline ECGModelParams fit_ecg_model(const TimeSeries& x, const PeakList& rpeaks,
                                    const ECGModelParams& init = synth::default_pqrst(), std::size_t bins = 256,
                                    int iterations = 60) {
  const PhaseTrack phase = phase_from_peaks(x.size(), rpeaks);
  const std::vector<double> beat = mean_beat(x, phase, bins);
  const double r_amp = beat[bins / 2] - mean(beat);
  const double init_r = init.value_at(init.waves[init.r_index()].theta);
  ECGModelParams start = init;
  start.base_amplitude_scale = 1.0;
  const double scale = std::abs(init_r) > 0.0 ? r_amp / init_r * init.base_amplitude_scale : 0.0;
  for (auto& w : start.waves) w.amplitude *= scale;
  if (!(max_abs(beat) > 0.0)) return start;

  constexpr int kW = 5;
  Eigen::VectorXd p(3 * kW + 1);
  for (int j = 0; j < kW; ++j) {
    p(3 * j) = start.waves[static_cast<std::size_t>(j)].amplitude;
    p(3 * j + 1) = start.waves[static_cast<std::size_t>(j)].theta;
    p(3 * j + 2) = start.waves[static_cast<std::size_t>(j)].width;
  }
  p(3 * kW) = mean(beat);
  std::vector<double> th(bins);
  for (std::size_t b = 0; b < bins; ++b) th[b] = -M_PI + (static_cast<double>(b) + 0.5) * 2.0 * M_PI / static_cast<double>(bins);

  auto residuals = [&](const Eigen::VectorXd& q, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    r.resize(static_cast<Eigen::Index>(bins));
    if (J) J->setZero(static_cast<Eigen::Index>(bins), q.size());
    for (std::size_t b = 0; b < bins; ++b) {
      double v = q(3 * kW);
      for (int j = 0; j < kW; ++j) {
        const double a = q(3 * j), c = q(3 * j + 1), w = q(3 * j + 2);
        const double d = wrap_phase(th[b] - c);
        const double e = std::exp(-d * d / (2.0 * w * w));
        v += a * e;
        if (J) {
          const auto bi = static_cast<Eigen::Index>(b);
          (*J)(bi, 3 * j) = e;
          (*J)(bi, 3 * j + 1) = a * e * d / (w * w);
          (*J)(bi, 3 * j + 2) = a * e * d * d / (w * w * w);
        }
      }
      if (J) (*J)(static_cast<Eigen::Index>(b), 3 * kW) = 1.0;
      r(static_cast<Eigen::Index>(b)) = v - beat[b];
    }
  };

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  residuals(p, r, &J);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    Eigen::MatrixXd A = JtJ;
    A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
    const Eigen::VectorXd step = A.ldlt().solve(-g);
    Eigen::VectorXd trial = p + step;
    for (int j = 0; j < kW; ++j) trial(3 * j + 2) = std::max(trial(3 * j + 2), 0.01);
    Eigen::VectorXd rt;
    residuals(trial, rt, nullptr);
    const double ct = rt.squaredNorm();
    if (ct < cost) {
      p = trial;
      cost = ct;
      residuals(p, r, &J);
      lambda = std::max(lambda / 3.0, 1e-9);
    } else {
      lambda *= 4.0;
      if (lambda > 1e8) break;
    }
  }

  ECGModelParams fitted = start;
  for (int j = 0; j < kW; ++j) {
    auto& w = fitted.waves[static_cast<std::size_t>(j)];
    w.amplitude = p(3 * j);
    w.theta = wrap_phase(p(3 * j + 1));
    w.width = p(3 * j + 2);
  }
  std::sort(fitted.waves.begin(), fitted.waves.end(), [](const auto& a, const auto& b) { return a.theta < b.theta; });
  try {
    fitted.validate();
  } catch (const InvalidInput&) {
    return start;
  }
  return fitted;
}

// ---------------------------------------------------------------------------
// Extended Kalman filter / smoother

/// Noise settings, tuned once on a held-out synthetic record and frozen.
/// Variances scale with the square of the model's peak amplitude.
struct EkfTuning {
  double q_theta = 1e-4;     // rad^2 per sample
  double q_z_rel = 1e-3;     // process std of z / model peak
  double r_theta = 1e-2;     // rad^2, phase observation
  double r_x_rel = 0.3;      // measurement std / model peak
};

struct EKFState {
  double theta = 0.0;
  double z = 0.0;
  Eigen::Matrix2d cov = Eigen::Matrix2d::Identity();
};

struct KalmanTrace {
  std::vector<EKFState> filtered;
  std::vector<EKFState> predicted;  // prior at step i (before the update with sample i)
  std::vector<Eigen::Matrix2d> transition;  // Jacobian used to predict step i from i - 1
  std::size_t stabilizations = 0;           // PSD repairs applied
  double min_eigenvalue = 0.0;
};

namespace detail {

inline double model_peak(const ECGModelParams& m) {
  double peak = 0.0;
  for (int k = 0; k < 720; ++k) peak = std::max(peak, std::abs(m.value_at(-M_PI + k * M_PI / 360.0)));
  return peak;
}

// Symmetrize and floor eigenvalues at zero. Returns true if a repair happened.
inline bool stabilize(Eigen::Matrix2d& P) {
  P = (0.5 * (P + P.transpose())).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(P);
  const Eigen::Vector2d ev = es.eigenvalues();
  if (ev.minCoeff() >= 0.0) return false;
  P = es.eigenvectors() * ev.cwiseMax(0.0).asDiagonal() * es.eigenvectors().transpose();
  return true;
}

}  // namespace detail

inline KalmanTrace run_ekf(const TimeSeries& x, const PeakList& rpeaks, const ECGModelParams& model,
                           const EkfTuning& tune = {}) {
  if (rpeaks.empty()) throw InvalidInput("EKF needs maternal R-peaks");
  const std::size_t n = x.size();
  const PhaseTrack phase = phase_from_peaks(n, rpeaks);
  const double peak = std::max(detail::model_peak(model), 1e-12);
  const Eigen::Matrix2d Q = Eigen::Vector2d(tune.q_theta, std::pow(tune.q_z_rel * peak, 2)).asDiagonal();
  const Eigen::Matrix2d R = Eigen::Vector2d(tune.r_theta, std::pow(tune.r_x_rel * peak, 2)).asDiagonal();

  KalmanTrace tr;
  tr.filtered.resize(n);
  tr.predicted.resize(n);
  tr.transition.resize(n, Eigen::Matrix2d::Identity());
  tr.min_eigenvalue = std::numeric_limits<double>::infinity();

  EKFState s;
  s.theta = phase.theta.empty() ? 0.0 : phase.theta[0];
  s.z = n ? x[0] : 0.0;
  s.cov = Eigen::Vector2d(0.1, peak * peak).asDiagonal();

  for (std::size_t i = 0; i < n; ++i) {
    EKFState prior = s;
    Eigen::Matrix2d A = Eigen::Matrix2d::Identity();
    if (i > 0) {
      const double th_next = wrap_phase(s.theta + phase.omega[i]);
      prior.theta = th_next;
      prior.z = s.z + model.value_at(th_next) - model.value_at(s.theta);
      A(1, 0) = model.slope_at(th_next) - model.slope_at(s.theta);
      prior.cov = A * s.cov * A.transpose() + Q;
    }
    tr.transition[i] = A;
    tr.predicted[i] = prior;

    // Observations: R-peak phase and the sample itself; H = I.
    const Eigen::Vector2d innov(wrap_phase(phase.theta[i] - prior.theta), x[i] - prior.z);
    const Eigen::Matrix2d Sinn = prior.cov + R;
    const Eigen::Matrix2d K = prior.cov * Sinn.inverse();
    const Eigen::Vector2d upd = K * innov;
    s.theta = wrap_phase(prior.theta + upd(0));
    s.z = prior.z + upd(1);
    const Eigen::Matrix2d IK = Eigen::Matrix2d::Identity() - K;
    s.cov = IK * prior.cov * IK.transpose() + K * R * K.transpose();  // Joseph form
    if (detail::stabilize(s.cov)) ++tr.stabilizations;
    tr.min_eigenvalue = std::min(tr.min_eigenvalue, Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(s.cov).eigenvalues().minCoeff());
    tr.filtered[i] = s;
  }
  return tr;
}

/// Rauch-Tung-Striebel backward pass over a forward trace.
inline std::vector<EKFState> rts_smooth(const KalmanTrace& tr) {
  const std::size_t n = tr.filtered.size();
  std::vector<EKFState> sm(tr.filtered);
  if (n < 2) return sm;
  for (std::size_t k = n - 1; k-- > 0;) {
    const EKFState& f = tr.filtered[k];
    const EKFState& pr = tr.predicted[k + 1];
    const Eigen::Matrix2d& A = tr.transition[k + 1];
    const Eigen::Matrix2d C = f.cov * A.transpose() * pr.cov.inverse();
    const Eigen::Vector2d diff(wrap_phase(sm[k + 1].theta - pr.theta), sm[k + 1].z - pr.z);
    const Eigen::Vector2d corr = C * diff;
    sm[k].theta = wrap_phase(f.theta + corr(0));
    sm[k].z = f.z + corr(1);
    sm[k].cov = f.cov + C * (sm[k + 1].cov - pr.cov) * C.transpose();
    detail::stabilize(sm[k].cov);
  }
  return sm;
}

namespace detail {

inline Separation from_states(const TimeSeries& x, const std::vector<EKFState>& states) {
  Separation out;
  out.estimate = TimeSeries(std::vector<double>(x.size()), x.fs);
  out.residual = TimeSeries(std::vector<double>(x.size()), x.fs);
  for (std::size_t i = 0; i < x.size(); ++i) {
    out.estimate[i] = states[i].z;
    out.residual[i] = x[i] - states[i].z;
  }
  return out;
}

inline bool all_zero(const TimeSeries& x) { return !(max_abs(x.view()) > 0.0); }

inline Separation zeros_like(const TimeSeries& x) {
  return {TimeSeries(std::vector<double>(x.size(), 0.0), x.fs), TimeSeries(std::vector<double>(x.size(), 0.0), x.fs)};
}

}  // namespace detail

/// Forward EKF; the residual is the fetal candidate.
inline Separation ekf_denoise(const TimeSeries& x, const PeakList& rpeaks, const ECGModelParams& model,
                              const EkfTuning& tune = {}) {
  if (rpeaks.empty()) throw InvalidInput("EKF needs maternal R-peaks");
  if (detail::all_zero(x)) return detail::zeros_like(x);
  return detail::from_states(x, run_ekf(x, rpeaks, model, tune).filtered);
}

/// Forward EKF followed by a backward RTS pass (non-causal).
inline Separation eks_denoise(const TimeSeries& x, const PeakList& rpeaks, const ECGModelParams& model,
                              const EkfTuning& tune = {}) {
  if (rpeaks.empty()) throw InvalidInput("EKS needs maternal R-peaks");
  if (detail::all_zero(x)) return detail::zeros_like(x);
  return detail::from_states(x, rts_smooth(run_ekf(x, rpeaks, model, tune)));
}

// ---------------------------------------------------------------------------
// SVD template subtraction

inline constexpr std::size_t kBeatLength = 256;

/// QRS-aligned beats, each resampled to kBeatLength points with the R-peak
/// at column kBeatLength / 2. Left and right halves are resampled
/// separately so unequal RR intervals still align on the QRS.
struct BeatMatrix {
  Eigen::MatrixXd rows;
  std::vector<double> r_index;
  std::vector<double> left;   // samples before R covered by the beat
  std::vector<double> right;  // samples after R covered by the beat

  [[nodiscard]] std::size_t beats() const { return r_index.size(); }
  static constexpr std::size_t kAlign = kBeatLength / 2;
};

namespace detail {

inline double lerp_at(std::span<const double> x, double t) {
  const double hi = static_cast<double>(x.size() - 1);
  t = std::clamp(t, 0.0, hi);
  const auto i = static_cast<std::size_t>(std::floor(t));
  if (i + 1 >= x.size()) return x.back();
  const double a = t - static_cast<double>(i);
  return (1.0 - a) * x[i] + a * x[i + 1];
}

inline double row_position(const BeatMatrix& bm, std::size_t k, double sample) {
  constexpr double half = static_cast<double>(BeatMatrix::kAlign);
  const double r = bm.r_index[k];
  if (sample < r) return half - (r - sample) * half / bm.left[k];
  return half + (sample - r) * half / bm.right[k];
}

}  // namespace detail

inline BeatMatrix build_beat_matrix(const TimeSeries& x, const PeakList& rpeaks) {
  if (rpeaks.size() < 3) throw InvalidInput("template subtraction needs at least 3 beats");
  BeatMatrix bm;
  const std::size_t nb = rpeaks.size();
  bm.rows.resize(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(kBeatLength));
  constexpr double half = static_cast<double>(BeatMatrix::kAlign);
  for (std::size_t k = 0; k < nb; ++k) {
    const double r = static_cast<double>(rpeaks[k]);
    const double rr_prev = k > 0 ? r - static_cast<double>(rpeaks[k - 1]) : static_cast<double>(rpeaks[1] - rpeaks[0]);
    const double rr_next = k + 1 < nb ? static_cast<double>(rpeaks[k + 1]) - r : r - static_cast<double>(rpeaks[k - 1]);
    bm.r_index.push_back(r);
    bm.left.push_back(std::max(rr_prev / 2.0, 1.0));
    bm.right.push_back(std::max(rr_next / 2.0, 1.0));
    for (std::size_t j = 0; j < kBeatLength; ++j) {
      const double u = static_cast<double>(j);
      const double t = u < half ? r - (half - u) * bm.left[k] / half : r + (u - half) * bm.right[k] / half;
      bm.rows(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = detail::lerp_at(x.view(), t);
    }
  }
  return bm;
}

/// Rank-r reconstruction of the beat rows.
inline Eigen::MatrixXd low_rank(const Eigen::MatrixXd& rows, std::size_t rank) {
  if (rank < 1) throw InvalidInput("SVD rank must be >= 1");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(rows, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto r = static_cast<Eigen::Index>(std::min<std::size_t>(rank, static_cast<std::size_t>(svd.singularValues().size())));
  return svd.matrixU().leftCols(r) * svd.singularValues().head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
}

/// Template subtraction. The row-domain residual (beats minus their rank-r
/// reconstruction) is mapped back to each beat's original samples; samples
/// outside every beat window keep the input value in the residual.
inline Separation svd_template_subtract(const TimeSeries& x, const PeakList& rpeaks, std::size_t rank) {
  if (rpeaks.size() < 3) throw InvalidInput("template subtraction needs at least 3 beats");
  if (rank < 1) throw InvalidInput("SVD rank must be >= 1");
  const BeatMatrix bm = build_beat_matrix(x, rpeaks);
  const Eigen::MatrixXd diff = bm.rows - low_rank(bm.rows, rank);

  Separation out;
  out.residual = x;
  const auto n = static_cast<long long>(x.size());
  std::vector<double> row(kBeatLength);
  for (std::size_t k = 0; k < bm.beats(); ++k) {
    for (std::size_t j = 0; j < kBeatLength; ++j) row[j] = diff(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j));
    const auto lo = std::max<long long>(0, static_cast<long long>(std::ceil(bm.r_index[k] - bm.left[k])));
    const auto hi = std::min<long long>(n, static_cast<long long>(std::ceil(bm.r_index[k] + bm.right[k])));
    for (long long i = lo; i < hi; ++i)
      out.residual[static_cast<std::size_t>(i)] =
          detail::lerp_at(row, detail::row_position(bm, k, static_cast<double>(i)));
  }
  out.estimate = x;
  for (std::size_t i = 0; i < x.size(); ++i) out.estimate[i] = x[i] - out.residual[i];
  return out;
}

struct SvdPipelineConfig {
  std::size_t maternal_rank = 1;
  std::size_t fetal_rank = 2;
  eval::DetectorConfig fetal_detector = eval::DetectorConfig::fetal();
};

/// Two passes: maternal template removal on maternal peaks, then fetal
/// template reconstruction on peaks detected in the first residual. Returns
/// the fetal estimate.
inline TimeSeries svd_extract_fetal(const TimeSeries& x, const PeakList& maternal_peaks,
                                    const SvdPipelineConfig& cfg = {}) {
  const TimeSeries r1 = svd_template_subtract(x, maternal_peaks, cfg.maternal_rank).residual;
  const PeakList fetal = eval::detect_rpeaks(r1, cfg.fetal_detector);
  if (fetal.size() < 3) return r1;
  return svd_template_subtract(r1, fetal, cfg.fetal_rank).estimate;
}

}  // namespace fecg::baselines
