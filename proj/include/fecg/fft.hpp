#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <vector>

#include "fecg/core.hpp"

namespace fecg::fft {

using cplx = std::complex<double>;

namespace detail {

// FFTW planning is not thread-safe; execution with new arrays is. Plans are
// created once per (size, direction) and live for the process lifetime.
struct PlanCache {
  std::mutex mu;
  std::map<int, fftw_plan> r2c;
  std::map<int, fftw_plan> c2r;

  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int n, bool forward) {
    std::lock_guard lock(mu);
    auto& table = forward ? r2c : c2r;
    if (auto it = table.find(n); it != table.end()) return it->second;
    std::vector<double> re(static_cast<std::size_t>(n));
    std::vector<fftw_complex> spec(static_cast<std::size_t>(n / 2 + 1));
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan p = forward ? fftw_plan_dft_r2c_1d(n, re.data(), spec.data(), flags)
                          : fftw_plan_dft_c2r_1d(n, spec.data(), re.data(), flags);
    if (p == nullptr) throw Error("FFTW failed to plan size " + std::to_string(n));
    table.emplace(n, p);
    return p;
  }
};

}  // namespace detail

/// One-sided forward DFT, X_k = sum_n x_n e^{-2 pi i k n / N}, k = 0..N/2.
inline std::vector<cplx> rfft(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  if (n == 0) return {};
  std::vector<double> in(x.begin(), x.end());
  std::vector<cplx> out(static_cast<std::size_t>(n / 2 + 1));
  fftw_plan p = detail::PlanCache::instance().get(n, true);
  fftw_execute_dft_r2c(p, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

/// Inverse of rfft for a real signal of length n (normalized by 1/n). The
/// imaginary parts of the DC and (even n) Nyquist bins are ignored.
inline std::vector<double> irfft(std::span<const cplx> spec, int n) {
  if (n <= 0) return {};
  if (static_cast<int>(spec.size()) != n / 2 + 1)
    throw StructuralError("irfft: spectrum has " + std::to_string(spec.size()) +
                          " bins, expected " + std::to_string(n / 2 + 1));
  // c2r destroys its input.
  std::vector<cplx> in(spec.begin(), spec.end());
  std::vector<double> out(static_cast<std::size_t>(n));
  fftw_plan p = detail::PlanCache::instance().get(n, false);
  fftw_execute_dft_c2r(p, reinterpret_cast<fftw_complex*>(in.data()), out.data());
  const double scale = 1.0 / n;
  for (double& v : out) v *= scale;
  return out;
}

}  // namespace fecg::fft
