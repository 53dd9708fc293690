#pragma once

// Segmentation, the training objective, Adam, the training loop and
// whole-record inference.

#include <functional>
#include <numeric>
#include <random>
#include <thread>

#include "fecg/cunet/model.hpp"
#include "fecg/stft.hpp"

namespace fecg::cunet {

// ---------------------------------------------------------------------------
// Segments

struct SegmentPlan {
  std::size_t length = 2048;
  std::size_t hop = 1024;

  void validate() const {
    if (length < 2 || hop < 1 || hop > length) throw ConfigError("segment hop must be in [1, length]");
  }

  /// Start offsets; the last segment is aligned to the end of the signal.
  [[nodiscard]] std::vector<std::size_t> starts(std::size_t n) const {
    validate();
    if (n < length)
      throw InvalidInput("input has " + std::to_string(n) + " samples, one segment needs " + std::to_string(length));
    std::vector<std::size_t> s;
    for (std::size_t p = 0; p + length <= n; p += hop) s.push_back(p);
    if (s.back() + length < n) s.push_back(n - length);
    return s;
  }

  /// Cross-fade weights for segment `idx` out of `count`. Interior halves use
  /// a Hann taper, the outer edges of the first and last segments are flat.
  [[nodiscard]] std::vector<double> weights(std::size_t idx, std::size_t count) const {
    std::vector<double> w(length);
    for (std::size_t i = 0; i < length; ++i) {
      const double s = std::sin(M_PI * static_cast<double>(i) / static_cast<double>(length));
      w[i] = s * s;
      if (idx == 0 && i < length / 2) w[i] = 1.0;
      if (idx + 1 == count && i >= length / 2) w[i] = 1.0;
    }
    return w;
  }
};

inline ComplexTensor to_tensor(const spectral::ComplexSpectrogram& S) {
  ComplexTensor t(1, S.F, S.T);
  for (std::size_t i = 0; i < S.data.size(); ++i) {
    t.re[i] = S.data[i].real();
    t.im[i] = S.data[i].imag();
  }
  return t;
}

inline spectral::ComplexSpectrogram to_spectrogram(const ComplexTensor& t, const spectral::StftConfig& cfg,
                                                   std::size_t original_len, double fs) {
  spectral::ComplexSpectrogram S;
  S.F = t.H;
  S.T = t.W;
  S.config = cfg;
  S.original_len = original_len;
  S.fs = fs;
  S.data.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) S.data[i] = {t.re[i], t.im[i]};
  return S;
}

/// Scale used to normalize a segment: its standard deviation, or 1 for a
/// constant segment.
inline double segment_scale(std::span<const double> x) {
  const double s = stddev(x);
  return s > 0.0 && std::isfinite(s) ? s : 1.0;
}

struct Example {
  ComplexTensor input;
  ComplexTensor target;
  std::vector<double> target_time;
  double scale = 1.0;
};

/// Cuts aligned segments of a (preprocessed) abdominal trace and its fetal
/// reference into normalized spectrogram pairs.
inline std::vector<Example> make_examples(const TimeSeries& abdominal, const TimeSeries& fetal,
                                          const SegmentPlan& plan, const spectral::StftConfig& stft_cfg) {
  if (abdominal.size() != fetal.size()) throw InvalidInput("abdominal and fetal traces differ in length");
  std::vector<Example> out;
  for (std::size_t s : plan.starts(abdominal.size())) {
    const auto first = abdominal.samples.begin() + static_cast<std::ptrdiff_t>(s);
    std::vector<double> x(first, first + static_cast<std::ptrdiff_t>(plan.length));
    const auto ffirst = fetal.samples.begin() + static_cast<std::ptrdiff_t>(s);
    std::vector<double> f(ffirst, ffirst + static_cast<std::ptrdiff_t>(plan.length));
    Example e;
    e.scale = segment_scale(x);
    for (double& v : x) v /= e.scale;
    for (double& v : f) v /= e.scale;
    e.input = to_tensor(spectral::stft(TimeSeries(std::move(x), abdominal.fs), stft_cfg));
    e.target = to_tensor(spectral::stft(TimeSeries(f, abdominal.fs), stft_cfg));
    e.target_time = std::move(f);
    out.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Objective

struct LossTerms {
  double spectral = 0.0;
  double time = 0.0;
  [[nodiscard]] double total() const { return spectral + time; }
};

/// Mean |Y - S|^2 over the spectrogram plus mean squared error of the
/// inverse transform; accumulates d loss / d parameters (scaled by `weight`).
inline LossTerms example_loss(const CUNet& net, const Example& ex, const spectral::StftConfig& stft_cfg, double fs,
                              std::vector<double>* grad, double weight = 1.0) {
  ForwardCache cache;
  const ComplexTensor y = forward(net, ex.input, grad ? &cache : nullptr);
  const std::size_t cells = y.size();
  LossTerms L;
  ComplexTensor gy(1, y.H, y.W);
  for (std::size_t i = 0; i < cells; ++i) {
    const double dr = y.re[i] - ex.target.re[i], di = y.im[i] - ex.target.im[i];
    L.spectral += dr * dr + di * di;
    gy.re[i] = 2.0 * dr / static_cast<double>(cells);
    gy.im[i] = 2.0 * di / static_cast<double>(cells);
  }
  L.spectral /= static_cast<double>(cells);

  const std::size_t n = ex.target_time.size();
  const TimeSeries yt = spectral::istft(to_spectrogram(y, stft_cfg, n, fs));
  std::vector<double> gt(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = yt[i] - ex.target_time[i];
    L.time += d * d;
    gt[i] = 2.0 * d / static_cast<double>(n);
  }
  L.time /= static_cast<double>(n);

  if (grad) {
    const auto gs = spectral::istft_adjoint(gt, stft_cfg, y.H, y.W);
    for (std::size_t i = 0; i < cells; ++i) {
      gy.re[i] = weight * (gy.re[i] + gs[i].real());
      gy.im[i] = weight * (gy.im[i] + gs[i].imag());
    }
    backward(net, cache, gy, *grad);
  }
  return L;
}

// ---------------------------------------------------------------------------
// Optimizer

struct Adam {
  double lr = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m, v;
  long long t = 0;

  void step(std::vector<double>& params, const std::vector<double>& grad) {
    if (m.size() != params.size()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
    }
    ++t;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
};

// ---------------------------------------------------------------------------
// Training loop

struct TrainConfig {
  double lr = 1e-3;
  std::size_t batch = 8;
  int epochs = 5;
  long long max_steps = 0;  // 0: no limit beyond epochs
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

struct TrainResult {
  std::vector<double> loss;  // mean batch loss per step
  long long steps = 0;
};

using StepCallback = std::function<void(long long step, double loss)>;

namespace detail {

// Per-example gradients, summed in example order.
inline double batch_gradient(const CUNet& net, const std::vector<Example>& data, const std::vector<std::size_t>& idx,
                             const spectral::StftConfig& stft_cfg, double fs, unsigned threads,
                             std::vector<double>& grad) {
  const std::size_t b = idx.size();
  const double w = 1.0 / static_cast<double>(b);
  std::vector<std::vector<double>> g(b, std::vector<double>(net.ps.size(), 0.0));
  std::vector<double> losses(b, 0.0);
  auto work = [&](std::size_t i) { losses[i] = example_loss(net, data[idx[i]], stft_cfg, fs, &g[i], w).total(); };
  if (threads <= 1 || b == 1) {
    for (std::size_t i = 0; i < b; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    const unsigned nt = std::min<unsigned>(threads, static_cast<unsigned>(b));
    for (unsigned t = 0; t < nt; ++t)
      pool.emplace_back([&, t] {
        for (std::size_t i = t; i < b; i += nt) work(i);
      });
    for (auto& th : pool) th.join();
  }
  grad.assign(net.ps.size(), 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += g[i][j];
    loss += losses[i] * w;
  }
  return loss;
}

}  // namespace detail

inline TrainResult train(CUNet& net, const std::vector<Example>& data, const TrainConfig& tc,
                         const spectral::StftConfig& stft_cfg, double fs, const StepCallback& on_step = {}) {
  if (data.empty()) throw InvalidInput("training needs at least one example");
  if (tc.batch < 1) throw ConfigError("batch size must be >= 1");
  if (!(tc.lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
  Adam opt;
  opt.lr = tc.lr;
  TrainResult res;
  std::vector<double> grad;
  std::vector<std::size_t> order(data.size());
  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix_seed(tc.seed, 0x100u + static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < order.size(); s += tc.batch) {
      if (tc.max_steps > 0 && res.steps >= tc.max_steps) return res;
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(s),
                                         order.begin() + static_cast<std::ptrdiff_t>(std::min(s + tc.batch, order.size())));
      const double loss = detail::batch_gradient(net, data, idx, stft_cfg, fs, tc.threads, grad);
      if (!std::isfinite(loss))
        throw NumericalError("non-finite training loss at step " + std::to_string(res.steps) + " (epoch " +
                             std::to_string(epoch) + ")");
      opt.step(net.ps.values, grad);
      res.loss.push_back(loss);
      ++res.steps;
      if (on_step) on_step(res.steps, loss);
    }
  }
  return res;
}

/// Mean loss over a set of examples without updating anything.
inline double evaluate_loss(const CUNet& net, const std::vector<Example>& data, const spectral::StftConfig& stft_cfg,
                            double fs) {
  double acc = 0.0;
  for (const Example& e : data) acc += example_loss(net, e, stft_cfg, fs, nullptr).total();
  return acc / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Inference

/// Segment, normalize, transform, run the net, invert and overlap-add.
/// Output length equals input length.
inline TimeSeries extract_fecg(const CUNet& net, const TimeSeries& abdominal, const SegmentPlan& plan,
                               const spectral::StftConfig& stft_cfg) {
  const auto starts = plan.starts(abdominal.size());
  std::vector<double> acc(abdominal.size(), 0.0), wsum(abdominal.size(), 0.0);
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const auto first = abdominal.samples.begin() + static_cast<std::ptrdiff_t>(starts[k]);
    std::vector<double> x(first, first + static_cast<std::ptrdiff_t>(plan.length));
    const double scale = segment_scale(x);
    for (double& v : x) v /= scale;
    const ComplexTensor y = forward(net, to_tensor(spectral::stft(TimeSeries(std::move(x), abdominal.fs), stft_cfg)));
    const TimeSeries yt = spectral::istft(to_spectrogram(y, stft_cfg, plan.length, abdominal.fs));
    const auto w = plan.weights(k, starts.size());
    for (std::size_t i = 0; i < plan.length; ++i) {
      acc[starts[k] + i] += w[i] * yt[i] * scale;
      wsum[starts[k] + i] += w[i];
    }
  }
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] = wsum[i] > 0.0 ? acc[i] / wsum[i] : 0.0;
  return TimeSeries(std::move(acc), abdominal.fs);
}

/// Network configuration matching a segment plan and STFT settings.
inline CUNetConfig config_for(const SegmentPlan& plan, const spectral::StftConfig& stft_cfg, CUNetConfig base = {}) {
  base.F = stft_cfg.bins();
  base.T = stft_cfg.frames(plan.length);
  return base;
}

}  // namespace fecg::cunet
