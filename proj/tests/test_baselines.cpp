#include <gtest/gtest.h>

#include <random>

#include "fecg/baselines.hpp"

using namespace fecg;
using namespace fecg::baselines;

namespace {

struct Mixture {
  synth::SynthResult m, f;
  TimeSeries sum;
};

Mixture noiseless_mixture(std::uint64_t seed, double seconds = 30.0) {
  std::mt19937_64 rng(seed);
  Mixture out;
  out.m = synth::synth_ecg(synth::default_pqrst().scaled(60.0 / 30.0),
                           synth::make_rr_for_duration(80, 3, seconds + 2.0, rng), 250.0);
  out.f = synth::synth_ecg(synth::default_pqrst(), synth::make_rr_for_duration(140, 4, seconds + 2.0, rng), 250.0);
  const std::size_t n = static_cast<std::size_t>(seconds * 250.0);
  out.m.ecg.samples.resize(n);
  out.f.ecg = synth::rescale_peak(TimeSeries(std::vector<double>(out.f.ecg.samples.begin(), out.f.ecg.samples.begin() + static_cast<long>(n)), 250.0), 10.0);
  std::erase_if(out.m.rpeaks, [&](std::size_t r) { return r >= n; });
  std::erase_if(out.f.rpeaks, [&](std::size_t r) { return r >= n; });
  out.sum = out.m.ecg;
  for (std::size_t i = 0; i < n; ++i) out.sum[i] += out.f.ecg[i];
  return out;
}

}  // namespace

TEST(PhaseFromPeaks, ZeroAtPeaksAndWrapped) {
  const auto p = phase_from_peaks(1000, {100, 300, 520, 700});
  for (std::size_t r : {100u, 300u, 520u, 700u}) EXPECT_NEAR(p.theta[r], 0.0, 1e-12);
  for (double t : p.theta) {
    EXPECT_GT(t, -M_PI);
    EXPECT_LE(t, M_PI);
  }
  EXPECT_NEAR(p.omega[400], 2.0 * M_PI / 220.0, 1e-12);
}

TEST(Ekf, CleanSelfConsistency) {
  std::mt19937_64 rng(2);
  const auto s = synth::synth_ecg(synth::default_pqrst(), synth::make_rr_for_duration(80, 3, 30.0, rng), 250.0);
  const auto out = ekf_denoise(s.ecg, s.rpeaks, synth::default_pqrst());
  EXPECT_LE(rms(out.residual.view()), 0.10 * rms(s.ecg.view()));
}

TEST(Ekf, SmootherNoWorseThanFilter) {
  std::mt19937_64 rng(2);
  const auto s = synth::synth_ecg(synth::default_pqrst(), synth::make_rr_for_duration(80, 3, 30.0, rng), 250.0);
  const auto f = ekf_denoise(s.ecg, s.rpeaks, synth::default_pqrst());
  const auto sm = eks_denoise(s.ecg, s.rpeaks, synth::default_pqrst());
  EXPECT_LE(rms(sm.residual.view()), rms(f.residual.view()));
}

TEST(Ekf, CovarianceStaysPsd) {
  const auto mx = noiseless_mixture(4);
  const auto tr = run_ekf(mx.sum, mx.m.rpeaks, synth::default_pqrst().scaled(2.0));
  EXPECT_GE(tr.min_eigenvalue, -1e-12);
  for (const auto& st : tr.filtered) {
    EXPECT_DOUBLE_EQ(st.cov(0, 1), st.cov(1, 0));
    EXPECT_GT(st.theta, -M_PI);
    EXPECT_LE(st.theta, M_PI);
  }
}

TEST(Ekf, NoiselessMixtureKeepsFetal) {
  const auto mx = noiseless_mixture(5);
  const auto model = fit_ecg_model(mx.sum, mx.m.rpeaks);
  const auto f = ekf_denoise(mx.sum, mx.m.rpeaks, model);
  const auto s = eks_denoise(mx.sum, mx.m.rpeaks, model);
  const double pf = eval::pcc(mx.f.ecg.view(), f.residual.view());
  const double ps = eval::pcc(mx.f.ecg.view(), s.residual.view());
  EXPECT_GE(pf, 90.0);
  EXPECT_GE(ps, pf - 1.0);
}

TEST(Ekf, ZeroInput) {
  const TimeSeries z(std::vector<double>(1000, 0.0), 250.0);
  for (const auto& out : {ekf_denoise(z, {100, 300}, synth::default_pqrst()),
                          eks_denoise(z, {100, 300}, synth::default_pqrst())}) {
    for (double v : out.estimate.samples) EXPECT_EQ(v, 0.0);
    for (double v : out.residual.samples) EXPECT_EQ(v, 0.0);
  }
  EXPECT_THROW(ekf_denoise(z, {}, synth::default_pqrst()), InvalidInput);
}

TEST(FitModel, RecoversGeneratorShape) {
  std::mt19937_64 rng(6);
  const auto truth = synth::default_pqrst().scaled(1.7);
  const auto s = synth::synth_ecg(truth, synth::make_rr_for_duration(75, 2, 40.0, rng), 250.0);
  const auto fitted = fit_ecg_model(s.ecg, s.rpeaks);
  // Compare the mean-free beat shapes on a phase grid.
  double num = 0, den = 0, mt = 0, mf = 0;
  std::vector<double> a, b;
  for (int k = 0; k < 360; ++k) {
    const double th = -M_PI + k * M_PI / 180.0;
    a.push_back(truth.value_at(th));
    b.push_back(fitted.value_at(th));
    mt += a.back() / 360.0;
    mf += b.back() / 360.0;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += std::pow((a[i] - mt) - (b[i] - mf), 2);
    den += std::pow(a[i] - mt, 2);
  }
  EXPECT_LT(std::sqrt(num / den), 0.15);
}

TEST(Svd, PeriodicRankOne) {
  const auto s = synth::synth_ecg(synth::default_pqrst(), synth::RRSeries{std::vector<double>(30, 0.8)}, 250.0);
  const auto out = svd_template_subtract(s.ecg, s.rpeaks, 1);
  EXPECT_LE(rms(out.residual.view()), 0.01 * rms(s.ecg.view()));
}

TEST(Svd, FullRankReconstructsCoveredSamples) {
  std::mt19937_64 rng(7);
  const auto s = synth::synth_ecg(synth::default_pqrst(), synth::make_rr(90, 5, 12, rng), 250.0);
  std::normal_distribution<double> z;
  TimeSeries x = s.ecg;
  for (auto& v : x.samples) v += 0.1 * z(rng);
  const auto out = svd_template_subtract(x, s.rpeaks, s.rpeaks.size());
  const BeatMatrix bm = build_beat_matrix(x, s.rpeaks);
  const auto lo = static_cast<std::size_t>(std::ceil(bm.r_index.front() - bm.left.front()));
  const auto hi = static_cast<std::size_t>(std::ceil(bm.r_index.back() + bm.right.back()));
  for (std::size_t i = lo; i < std::min(hi, x.size()); ++i) EXPECT_NEAR(out.residual[i], 0.0, 1e-9);
}

TEST(Svd, BeatMatrixAlignment) {
  std::mt19937_64 rng(8);
  const auto s = synth::synth_ecg(synth::default_pqrst(), synth::make_rr(70, 6, 10, rng), 250.0);
  const BeatMatrix bm = build_beat_matrix(s.ecg, s.rpeaks);
  EXPECT_EQ(bm.rows.rows(), static_cast<Eigen::Index>(s.rpeaks.size()));
  EXPECT_EQ(bm.rows.cols(), static_cast<Eigen::Index>(kBeatLength));
  for (std::size_t k = 0; k < bm.beats(); ++k)
    EXPECT_DOUBLE_EQ(bm.rows(static_cast<Eigen::Index>(k), BeatMatrix::kAlign), s.ecg[s.rpeaks[k]]);
}

TEST(Svd, LinearInAmplitude) {
  const auto mx = noiseless_mixture(9, 20.0);
  TimeSeries twice = mx.sum;
  for (auto& v : twice.samples) v *= 2.0;
  const auto a = svd_template_subtract(mx.sum, mx.m.rpeaks, 1);
  const auto b = svd_template_subtract(twice, mx.m.rpeaks, 1);
  for (std::size_t i = 0; i < a.residual.size(); ++i) {
    EXPECT_NEAR(b.residual[i], 2.0 * a.residual[i], 1e-9);
    EXPECT_NEAR(b.estimate[i], 2.0 * a.estimate[i], 1e-9);
  }
}

TEST(Svd, MixtureRankOneKeepsFetal) {
  const auto mx = noiseless_mixture(10);
  const auto out = svd_template_subtract(mx.sum, mx.m.rpeaks, 1);
  EXPECT_GE(eval::pcc(mx.f.ecg.view(), out.residual.view()), 80.0);
}

TEST(Svd, RejectsTooFewBeats) {
  const TimeSeries x(std::vector<double>(1000, 1.0), 250.0);
  EXPECT_THROW(svd_template_subtract(x, {100, 300}, 1), InvalidInput);
  EXPECT_THROW(svd_template_subtract(x, {100, 300, 500}, 0), InvalidInput);
}
