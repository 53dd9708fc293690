#pragma once

// Per-record method runs, metric aggregation, fetal-SNR binning and report
// files shared by the command-line tools and the acceptance harness.

#include <array>
#include <optional>

#include "fecg/baselines.hpp"
#include "fecg/cunet.hpp"
#include "fecg/dataset.hpp"
#include "fecg/eval.hpp"
#include "fecg/filter.hpp"

namespace fecg::pipeline {

using json = io::json;
using eval::PeakList;

enum class Method { CUNet, EKF, EKS, SVD, Passthrough };

inline constexpr std::array kAllMethods{Method::CUNet, Method::EKF, Method::EKS, Method::SVD, Method::Passthrough};

inline std::string method_name(Method m) {
  switch (m) {
    case Method::CUNet: return "cunet";
    case Method::EKF: return "ekf";
    case Method::EKS: return "eks";
    case Method::SVD: return "svd";
    case Method::Passthrough: return "passthrough";
  }
  return "?";
}

inline Method method_from_name(const std::string& s) {
  for (Method m : kAllMethods)
    if (method_name(m) == s) return m;
  throw ConfigError("unknown method '" + s + "' (expected cunet, ekf, eks, svd or passthrough)");
}

/// Filtered abdominal input and the matching filtered fetal reference.
struct Prepared {
  std::size_t id = 0;
  TimeSeries x, reference;
  PeakList reference_peaks;
  double fetal_snr_db = 0.0;
};

inline Prepared prepare(const dataset::Record& r, std::size_t id) {
  return {id, filter::preprocess(r.abdominal), filter::preprocess(r.fecg_ref), r.meta.fetal_rpeaks,
          dataset::fetal_snr_db(r)};
}

struct MethodContext {
  std::optional<cunet::Checkpoint> checkpoint;
  baselines::EkfTuning ekf{};
  baselines::SvdPipelineConfig svd{};
};

inline TimeSeries run_method(Method m, const TimeSeries& x, const MethodContext& ctx) {
  switch (m) {
    case Method::Passthrough: return x;
    case Method::CUNet: {
      if (!ctx.checkpoint) throw ConfigError("method 'cunet' needs a checkpoint");
      const auto& ck = *ctx.checkpoint;
      if (ck.fs != x.fs)
        throw InvalidInput("checkpoint was trained at " + std::to_string(ck.fs) + " Hz, input is " +
                           std::to_string(x.fs) + " Hz");
      return cunet::extract_fecg(ck.net, x, ck.segments, ck.stft);
    }
    default: break;
  }
  const PeakList mpeaks = eval::detect_rpeaks(x, eval::DetectorConfig::maternal());
  if (mpeaks.size() < 3) return x;
  if (m == Method::SVD) return baselines::svd_extract_fetal(x, mpeaks, ctx.svd);
  const auto model = baselines::fit_ecg_model(x, mpeaks);
  return (m == Method::EKF ? baselines::ekf_denoise(x, mpeaks, model, ctx.ekf)
                           : baselines::eks_denoise(x, mpeaks, model, ctx.ekf))
      .residual;
}

struct RecordResult {
  std::size_t id = 0;
  Method method = Method::Passthrough;
  double fetal_snr_db = 0.0;
  eval::EvalReport report;
};

using EstimateFn = std::function<void(const Prepared&, Method, const TimeSeries& estimate)>;

/// Runs every method on every listed record. Results are ordered by record
/// id, then by the order of `methods`, regardless of `jobs`.
inline std::vector<RecordResult> evaluate_records(const std::filesystem::path& dir, const dataset::DatasetManifest& m,
                                                  const std::vector<std::size_t>& ids,
                                                  const std::vector<Method>& methods, const MethodContext& ctx,
                                                  unsigned jobs = 1, const EstimateFn& on_estimate = {}) {
  std::vector<RecordResult> out(ids.size() * methods.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t k = next++; k < ids.size(); k = next++) {
      try {
        if (ids[k] >= m.records.size()) throw StorageError("record id " + std::to_string(ids[k]) + " not in manifest");
        const Prepared p = prepare(dataset::load_dataset_record(dir, m.records[ids[k]]), ids[k]);
        for (std::size_t j = 0; j < methods.size(); ++j) {
          const TimeSeries est = run_method(methods[j], p.x, ctx);
          out[k * methods.size() + j] = {p.id, methods[j], p.fetal_snr_db,
                                         eval::evaluate(p.reference, p.reference_peaks, est)};
          if (on_estimate) {
            std::lock_guard lk(mu);
            on_estimate(p, methods[j], est);
          }
        }
      } catch (...) {
        std::lock_guard lk(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned nt = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, ids.size()))));
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation

struct Stat {
  double mean = 0.0, std = 0.0;
  std::size_t n = 0;
};

/// Mean and sample standard deviation; std is 0 for a single value.
inline Stat stat_of(const std::vector<double>& v) {
  Stat s;
  s.n = v.size();
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double acc = 0.0;
    for (double x : v) acc += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(acc / static_cast<double>(v.size() - 1));
  }
  return s;
}

inline constexpr std::array<const char*, 6> kMetricNames{"prd", "pcc", "pcc_centered", "se", "f_score", "hr_err"};

inline std::optional<double> metric(const eval::EvalReport& r, std::size_t k) {
  switch (k) {
    case 0: return r.prd;
    case 1: return r.pcc;
    case 2: return r.pcc_centered;
    case 3: return r.se;
    case 4: return r.f_score;
    default: return r.hr_err;
  }
}

struct MethodSummary {
  Method method = Method::Passthrough;
  std::array<Stat, kMetricNames.size()> stats;
};

inline std::vector<MethodSummary> summarize(const std::vector<RecordResult>& results, const std::vector<Method>& methods) {
  std::vector<MethodSummary> out;
  for (Method m : methods) {
    MethodSummary s{m, {}};
    for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
      std::vector<double> v;
      for (const auto& r : results)
        if (r.method == m)
          if (auto x = metric(r.report, k)) v.push_back(*x);
      s.stats[k] = stat_of(v);
    }
    out.push_back(s);
  }
  return out;
}

/// Fetal-referenced SNR bin edges in dB.
inline constexpr std::array<double, 6> kSnrEdges{-25.0, -20.0, -15.0, -10.0, -5.0, 0.0};

inline std::optional<std::size_t> snr_bin(double snr_db) {
  for (std::size_t b = 0; b + 1 < kSnrEdges.size(); ++b)
    if (snr_db >= kSnrEdges[b] && snr_db < kSnrEdges[b + 1]) return b;
  return std::nullopt;
}

struct BinRow {
  Method method = Method::Passthrough;
  double lo = 0.0, hi = 0.0;
  std::array<Stat, kMetricNames.size()> stats;
};

inline std::vector<BinRow> bin_by_snr(const std::vector<RecordResult>& results, const std::vector<Method>& methods) {
  std::vector<BinRow> out;
  for (Method m : methods)
    for (std::size_t b = 0; b + 1 < kSnrEdges.size(); ++b) {
      BinRow row{m, kSnrEdges[b], kSnrEdges[b + 1], {}};
      for (std::size_t k = 0; k < kMetricNames.size(); ++k) {
        std::vector<double> v;
        for (const auto& r : results)
          if (r.method == m && snr_bin(r.fetal_snr_db) == b)
            if (auto x = metric(r.report, k)) v.push_back(*x);
        row.stats[k] = stat_of(v);
      }
      out.push_back(row);
    }
  return out;
}

/// Adjacent-pair violations of the expected trend over non-empty bins.
inline int trend_inversions(const std::vector<double>& means, bool expect_increasing) {
  int bad = 0;
  for (std::size_t i = 1; i < means.size(); ++i)
    if (expect_increasing ? means[i] < means[i - 1] : means[i] > means[i - 1]) ++bad;
  return bad;
}

// ---------------------------------------------------------------------------
// Report files

inline json stat_json(const Stat& s) { return {{"mean", s.mean}, {"std", s.std}}; }

inline json report_json(const std::vector<RecordResult>& results, const std::vector<Method>& methods) {
  json recs = json::array();
  for (const auto& r : results) {
    const auto& e = r.report;
    recs.push_back({{"id", r.id},
                    {"method", method_name(r.method)},
                    {"fetal_snr_db", r.fetal_snr_db},
                    {"prd", e.prd},
                    {"pcc", e.pcc},
                    {"pcc_centered", e.pcc_centered},
                    {"se", e.se},
                    {"f_score", e.f_score},
                    {"hr_err", e.hr_err ? json(*e.hr_err) : json(nullptr)},
                    {"tp", e.counts.tp},
                    {"fp", e.counts.fp},
                    {"fn", e.counts.fn}});
  }
  json agg = json::object(), counts = json::object();
  for (const auto& s : summarize(results, methods)) {
    json row = json::object();
    for (std::size_t k = 0; k < kMetricNames.size(); ++k) row[kMetricNames[k]] = stat_json(s.stats[k]);
    agg[method_name(s.method)] = row;
    counts[method_name(s.method)] = s.stats[0].n;
  }
  json bins = json::array();
  for (const auto& b : bin_by_snr(results, methods)) {
    json row = {{"method", method_name(b.method)}, {"lo", b.lo}, {"hi", b.hi}, {"count", b.stats[0].n}};
    for (std::size_t k = 0; k < kMetricNames.size(); ++k) row[kMetricNames[k]] = stat_json(b.stats[k]);
    bins.push_back(row);
  }
  return {{"records", recs}, {"aggregate", agg}, {"counts", counts}, {"snr_bins", bins}, {"snr_edges", kSnrEdges}};
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

inline std::string records_csv(const std::vector<RecordResult>& results) {
  std::string out = "id,method,fetal_snr_db,prd,pcc,pcc_centered,se,f_score,hr_err,tp,fp,fn\n";
  for (const auto& r : results) {
    const auto& e = r.report;
    out += std::to_string(r.id) + "," + method_name(r.method) + "," + fmt(r.fetal_snr_db) + "," + fmt(e.prd) + "," +
           fmt(e.pcc) + "," + fmt(e.pcc_centered) + "," + fmt(e.se) + "," + fmt(e.f_score) + "," +
           (e.hr_err ? fmt(*e.hr_err) : std::string()) + "," + std::to_string(e.counts.tp) + "," +
           std::to_string(e.counts.fp) + "," + std::to_string(e.counts.fn) + "\n";
  }
  return out;
}

inline std::string summary_csv(const std::vector<MethodSummary>& rows) {
  std::string out = "method";
  for (const char* k : kMetricNames) out += std::string(",") + k + "_mean," + k + "_std";
  out += "\n";
  for (const auto& s : rows) {
    out += method_name(s.method);
    for (const auto& st : s.stats) out += "," + fmt(st.mean) + "," + fmt(st.std);
    out += "\n";
  }
  return out;
}

inline std::string bins_csv(const std::vector<BinRow>& rows) {
  std::string out = "method,snr_lo,snr_hi,count";
  for (const char* k : kMetricNames) out += std::string(",") + k + "_mean," + k + "_std";
  out += "\n";
  for (const auto& b : rows) {
    out += method_name(b.method) + "," + fmt(b.lo) + "," + fmt(b.hi) + "," + std::to_string(b.stats[0].n);
    for (const auto& st : b.stats) out += "," + fmt(st.mean) + "," + fmt(st.std);
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training data

/// Segment examples from the filtered abdominal input and filtered fetal
/// reference of each listed record, in id order.
inline std::vector<cunet::Example> build_examples(const std::filesystem::path& dir, const dataset::DatasetManifest& m,
                                                  const std::vector<std::size_t>& ids, const cunet::SegmentPlan& plan,
                                                  const spectral::StftConfig& stft_cfg, unsigned jobs = 1) {
  std::vector<std::vector<cunet::Example>> per(ids.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t k = next++; k < ids.size(); k = next++) {
      try {
        if (ids[k] >= m.records.size()) throw StorageError("record id " + std::to_string(ids[k]) + " not in manifest");
        const auto r = dataset::load_dataset_record(dir, m.records[ids[k]]);
        per[k] = cunet::make_examples(filter::preprocess(r.abdominal), filter::preprocess(r.fecg_ref), plan, stft_cfg);
      } catch (...) {
        std::lock_guard lk(mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned nt = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(1, ids.size()))));
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<cunet::Example> out;
  for (auto& v : per)
    for (auto& e : v) out.push_back(std::move(e));
  return out;
}

}  // namespace fecg::pipeline
