#include <gtest/gtest.h>

#include <random>

#include "fecg/filter.hpp"

using namespace fecg;
using namespace fecg::filter;

namespace {

std::vector<double> sine(double f, double fs, std::size_t n, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = std::sin(2.0 * M_PI * f * static_cast<double>(i) / fs + phase);
  return x;
}

// Amplitude of the f-Hz component over the central half, by least squares
// against sin and cos.
double tone_amplitude(const std::vector<double>& y, double f, double fs) {
  const std::size_t a = y.size() / 4, b = 3 * y.size() / 4;
  double ss = 0, sc = 0, cc = 0, ys = 0, yc = 0;
  for (std::size_t i = a; i < b; ++i) {
    const double s = std::sin(2.0 * M_PI * f * static_cast<double>(i) / fs);
    const double c = std::cos(2.0 * M_PI * f * static_cast<double>(i) / fs);
    ss += s * s;
    sc += s * c;
    cc += c * c;
    ys += y[i] * s;
    yc += y[i] * c;
  }
  const double det = ss * cc - sc * sc;
  const double A = (ys * cc - yc * sc) / det, B = (yc * ss - ys * sc) / det;
  return std::hypot(A, B);
}

double db(double g) { return 20.0 * std::log10(g); }

}  // namespace

TEST(Design, SectionCountMatchesOrder) {
  EXPECT_EQ(design(FilterSpec::notch(), 250.0).sections.size(), 5u);
  EXPECT_EQ(design(FilterSpec::bandpass(), 250.0).sections.size(), 5u);
  EXPECT_EQ(design(FilterSpec::bandpass(5, 15, 4), 250.0).sections.size(), 2u);
}

TEST(Design, ButterworthEdgesAreHalfPower) {
  const Sos bp = design(FilterSpec::bandpass(), 250.0);
  EXPECT_NEAR(bp.magnitude(1.0, 250.0), M_SQRT1_2, 1e-6);
  EXPECT_NEAR(bp.magnitude(100.0, 250.0), M_SQRT1_2, 1e-6);
  const Sos nt = design(FilterSpec::notch(), 250.0);
  EXPECT_NEAR(nt.magnitude(49.5, 250.0), M_SQRT1_2, 1e-6);
  EXPECT_NEAR(nt.magnitude(50.5, 250.0), M_SQRT1_2, 1e-6);
}

TEST(Design, NotchResponse) {
  const Sos nt = design(FilterSpec::notch(), 250.0);
  EXPECT_LT(nt.magnitude(50.0, 250.0), 1e-8);
  EXPECT_NEAR(nt.magnitude(0.0, 250.0), 1.0, 1e-9);
  EXPECT_GT(nt.magnitude(45.0, 250.0), 0.999);
  EXPECT_GT(nt.magnitude(55.0, 250.0), 0.999);
}

TEST(Design, BandpassResponse) {
  const Sos bp = design(FilterSpec::bandpass(), 250.0);
  EXPECT_LT(bp.magnitude(0.0, 250.0), 1e-9);
  EXPECT_LT(bp.magnitude(0.2, 250.0), 1e-3);
  EXPECT_NEAR(bp.magnitude(10.0, 250.0), 1.0, 1e-3);
  EXPECT_NEAR(bp.magnitude(40.0, 250.0), 1.0, 1e-3);
  EXPECT_LT(bp.magnitude(124.0, 250.0), 0.1);
}

TEST(Design, RejectsBadSpecs) {
  EXPECT_THROW(design(FilterSpec::bandpass(1.0, 130.0), 250.0), DesignError);
  EXPECT_THROW(design(FilterSpec::bandpass(10.0, 5.0), 250.0), DesignError);
  EXPECT_THROW(design(FilterSpec::bandpass(1.0, 40.0, 5), 250.0), DesignError);
  EXPECT_THROW(design(FilterSpec::notch(124.8, 1.0), 250.0), DesignError);
}

TEST(ApplyFilter, NotchRemovesMains) {
  const auto y = apply_filter(TimeSeries(sine(50.0, 250.0, 5000), 250.0), FilterSpec::notch());
  EXPECT_LT(db(tone_amplitude(y.samples, 50.0, 250.0)), -40.0);
}

TEST(ApplyFilter, NotchKeepsNeighbours) {
  for (double f : {10.0, 45.0, 55.0}) {
    const auto y = apply_filter(TimeSeries(sine(f, 250.0, 5000), 250.0), FilterSpec::notch());
    EXPECT_NEAR(db(tone_amplitude(y.samples, f, 250.0)), 0.0, 0.1) << f;
  }
}

TEST(ApplyFilter, BandpassPassbandAndStopband) {
  const auto pass = apply_filter(TimeSeries(sine(10.0, 250.0, 5000), 250.0), FilterSpec::bandpass());
  EXPECT_NEAR(db(tone_amplitude(pass.samples, 10.0, 250.0)), 0.0, 0.1);
  const auto stop = apply_filter(TimeSeries(sine(0.1, 250.0, 25000), 250.0), FilterSpec::bandpass());
  EXPECT_LT(db(tone_amplitude(stop.samples, 0.1, 250.0)), -40.0);
}

TEST(ApplyFilter, ZeroPhase) {
  const auto x = sine(8.0, 250.0, 5000, 0.3);
  const auto y = apply_filter(TimeSeries(x, 250.0), FilterSpec::bandpass());
  int best = 0;
  double best_c = -1e300;
  for (int lag = -10; lag <= 10; ++lag) {
    double c = 0.0;
    for (std::size_t i = 1000; i < 4000; ++i) c += x[i] * y[static_cast<std::size_t>(static_cast<long>(i) + lag)];
    if (c > best_c) best_c = c, best = lag;
  }
  EXPECT_EQ(best, 0);
}

TEST(ApplyFilter, Linear) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> z;
  std::vector<double> a(3000), b(3000), s(3000);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = z(rng);
    b[i] = z(rng);
    s[i] = 2.0 * a[i] - 0.5 * b[i];
  }
  const auto fa = preprocess(TimeSeries(a, 250.0)), fb = preprocess(TimeSeries(b, 250.0));
  const auto fsum = preprocess(TimeSeries(s, 250.0));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(fsum[i], 2.0 * fa[i] - 0.5 * fb[i], 1e-9);
}

TEST(ApplyFilter, ConstantInputSettlesToZero) {
  const auto y = apply_filter(TimeSeries(std::vector<double>(2500, 3.0), 250.0), FilterSpec::bandpass());
  for (double v : y.samples) EXPECT_NEAR(v, 0.0, 1e-6);
}

TEST(ApplyFilter, RejectsLowSamplingRate) {
  EXPECT_THROW(apply_filter(TimeSeries(std::vector<double>(1000, 0.0), 150.0), FilterSpec::bandpass()), InvalidInput);
}

TEST(Sosfiltfilt, IdentitySectionIsNoop) {
  Sos id;
  id.sections.resize(2);
  const std::vector<double> x{1, -2, 3, 0.5, 7};
  EXPECT_EQ(sosfiltfilt(id, x, 3), x);
}
