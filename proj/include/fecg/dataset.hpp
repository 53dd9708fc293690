#pragma once

// In-silico dataset: per-record synthesis of maternal and fetal traces plus
// dry-electrode noise, record files, and the manifest with the train/test
// split.

#include <atomic>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "fecg/io.hpp"
#include "fecg/noise.hpp"
#include "fecg/synth.hpp"

namespace fecg::dataset {

using json = io::json;

struct Range {
  double lo = 0.0, hi = 0.0;
};

struct GenerateConfig {
  double fs = kDefaultFs;
  double duration_s = 60.0;
  Range snr_db{5.0, 20.0};           // noise vs mECG + fECG
  Range maternal_hr{65.0, 95.0};     // bpm
  double maternal_hrv = 3.0;
  Range fetal_hr{120.0, 160.0};
  double fetal_hrv = 5.0;
  synth::FetalBand fetal_band{};     // µV
  Range maternal_ratio{1.0, 15.0};   // maternal / fetal peak, log-uniform
  noise::NoiseWeights weights{};
  noise::MixtureParams mixture{};

  void validate() const {
    require_valid_fs(fs);
    if (!(duration_s * fs >= 2048.0)) throw ConfigError("duration_s: records must hold at least 2048 samples");
    if (!(snr_db.lo <= snr_db.hi)) throw ConfigError("snr_db: lo must not exceed hi");
    if (!(maternal_hr.lo >= 60.0 && maternal_hr.lo <= maternal_hr.hi && maternal_hr.hi <= 240.0))
      throw ConfigError("maternal_hr: must satisfy 60 <= lo <= hi <= 240");
    if (!(fetal_hr.lo >= 60.0 && fetal_hr.lo <= fetal_hr.hi && fetal_hr.hi <= 240.0))
      throw ConfigError("fetal_hr: must satisfy 60 <= lo <= hi <= 240");
    if (!(maternal_ratio.lo > 0.0 && maternal_ratio.lo <= maternal_ratio.hi))
      throw ConfigError("maternal_ratio: must satisfy 0 < lo <= hi");
    if (!(fetal_band.lo > 0.0 && fetal_band.lo <= fetal_band.hi && fetal_band.hi <= synth::FetalBand::kCeiling))
      throw ConfigError("fetal_band: must satisfy 0 < lo <= hi <= 20");
    if (maternal_hrv < 0.0 || fetal_hrv < 0.0) throw ConfigError("hrv: must be non-negative");
    weights.validate();
    mixture.validate();
  }
};

/// Scalar draws for one record; cheap to compute without synthesizing.
struct RecordPlan {
  std::uint64_t seed = 0;
  double snr_db = 0.0;
  noise::NoiseBands bands;
  double fetal_peak_uv = 0.0;
  double maternal_peak_uv = 0.0;
  double maternal_hr = 0.0;
  double fetal_hr = 0.0;
};

struct RecordMeta {
  RecordPlan plan;
  std::vector<std::size_t> maternal_rpeaks, fetal_rpeaks;
};

struct Record {
  TimeSeries abdominal, fecg_ref, mecg_ref, noise_ref;
  RecordMeta meta;

  [[nodiscard]] std::size_t size() const { return abdominal.size(); }
};

inline RecordPlan plan_record(std::uint64_t seed, const GenerateConfig& cfg) {
  std::mt19937_64 rng(mix_seed(seed, 1));
  auto uni = [&](Range r) { return std::uniform_real_distribution<double>(r.lo, r.hi)(rng); };
  RecordPlan p;
  p.seed = seed;
  p.snr_db = uni(cfg.snr_db);
  p.bands = noise::sample_bands(rng);
  p.fetal_peak_uv = synth::draw_fetal_peak(rng, cfg.fetal_band);
  const double ratio = std::exp(uni({std::log(cfg.maternal_ratio.lo), std::log(cfg.maternal_ratio.hi)}));
  p.maternal_peak_uv = ratio * p.fetal_peak_uv;
  p.maternal_hr = uni(cfg.maternal_hr);
  p.fetal_hr = uni(cfg.fetal_hr);
  return p;
}

namespace detail {

inline synth::SynthResult synth_cropped(double hr, double hrv, std::size_t n, double fs, std::mt19937_64& rng) {
  const double seconds = static_cast<double>(n) / fs;
  auto out = synth::synth_ecg(synth::default_pqrst(), synth::make_rr_for_duration(hr, hrv, seconds + 1.0, rng), fs);
  out.ecg.samples.resize(n);
  std::erase_if(out.rpeaks, [n](std::size_t r) { return r >= n; });
  return out;
}

}  // namespace detail

inline Record generate_record(std::uint64_t seed, const GenerateConfig& cfg) {
  cfg.validate();
  const RecordPlan p = plan_record(seed, cfg);
  const auto n = static_cast<std::size_t>(std::llround(cfg.duration_s * cfg.fs));
  std::mt19937_64 mrng(mix_seed(seed, 2)), frng(mix_seed(seed, 3)), nrng(mix_seed(seed, 4));

  auto m = detail::synth_cropped(p.maternal_hr, cfg.maternal_hrv, n, cfg.fs, mrng);
  auto f = detail::synth_cropped(p.fetal_hr, cfg.fetal_hrv, n, cfg.fs, frng);
  Record r;
  r.mecg_ref = synth::rescale_peak(m.ecg, p.maternal_peak_uv);
  r.fecg_ref = synth::rescale_peak(f.ecg, p.fetal_peak_uv);
  r.meta.plan = p;
  r.meta.maternal_rpeaks = std::move(m.rpeaks);
  r.meta.fetal_rpeaks = std::move(f.rpeaks);

  TimeSeries physio = r.mecg_ref;
  for (std::size_t i = 0; i < n; ++i) physio[i] += r.fecg_ref[i];
  const TimeSeries raw = noise::synthesize_noise(n, cfg.fs, p.bands, cfg.weights, cfg.mixture, nrng);
  r.noise_ref = noise::scale_to_snr(raw, physio, p.snr_db);
  r.abdominal = physio;
  for (std::size_t i = 0; i < n; ++i) r.abdominal[i] += r.noise_ref[i];
  return r;
}

/// 10 log10(P_fecg / P(mecg + noise)): the fetal-referenced SNR used for
/// reporting.
inline double fetal_snr_db(const Record& r) {
  std::vector<double> rest(r.size());
  for (std::size_t i = 0; i < rest.size(); ++i) rest[i] = r.mecg_ref[i] + r.noise_ref[i];
  return noise::measure_snr_db(r.fecg_ref.view(), rest);
}

// ---------------------------------------------------------------------------
// Record files

inline constexpr char kRecordMagic[] = "FECGREC\0";
inline constexpr std::uint32_t kRecordVersion = 1;

inline json meta_to_json(const RecordMeta& m) {
  const RecordPlan& p = m.plan;
  return {{"seed", p.seed},
          {"snr_db", p.snr_db},
          {"bands", {{"pink_hi", p.bands.pink_hi}, {"white_hi", p.bands.white_hi}}},
          {"fetal_peak_uv", p.fetal_peak_uv},
          {"maternal_peak_uv", p.maternal_peak_uv},
          {"maternal_hr", p.maternal_hr},
          {"fetal_hr", p.fetal_hr},
          {"maternal_rpeaks", m.maternal_rpeaks},
          {"fetal_rpeaks", m.fetal_rpeaks}};
}

inline RecordMeta meta_from_json(const json& j) {
  RecordMeta m;
  RecordPlan& p = m.plan;
  p.seed = j.at("seed").get<std::uint64_t>();
  p.snr_db = j.at("snr_db").get<double>();
  p.bands.pink_hi = j.at("bands").at("pink_hi").get<double>();
  p.bands.white_hi = j.at("bands").at("white_hi").get<double>();
  p.fetal_peak_uv = j.at("fetal_peak_uv").get<double>();
  p.maternal_peak_uv = j.at("maternal_peak_uv").get<double>();
  p.maternal_hr = j.at("maternal_hr").get<double>();
  p.fetal_hr = j.at("fetal_hr").get<double>();
  m.maternal_rpeaks = j.at("maternal_rpeaks").get<std::vector<std::size_t>>();
  m.fetal_rpeaks = j.at("fetal_rpeaks").get<std::vector<std::size_t>>();
  return m;
}

inline std::string serialize_record(const Record& r) {
  io::Container c;
  c.header = {{"fs", r.abdominal.fs}, {"length", r.size()}, {"meta", meta_to_json(r.meta)}};
  c.blocks = {{"abdominal", r.abdominal.samples},
              {"fecg_ref", r.fecg_ref.samples},
              {"mecg_ref", r.mecg_ref.samples},
              {"noise_ref", r.noise_ref.samples}};
  return io::serialize(std::string(kRecordMagic, 8), kRecordVersion, std::move(c));
}

inline Record deserialize_record(const std::string& bytes) {
  const io::Container c = io::deserialize(bytes, std::string(kRecordMagic, 8), kRecordVersion);
  Record r;
  try {
    const double fs = c.header.at("fs").get<double>();
    const auto n = c.header.at("length").get<std::size_t>();
    const char* names[] = {"abdominal", "fecg_ref", "mecg_ref", "noise_ref"};
    TimeSeries* dst[] = {&r.abdominal, &r.fecg_ref, &r.mecg_ref, &r.noise_ref};
    if (c.blocks.size() != 4) throw FormatError("record must hold 4 channel blocks");
    for (std::size_t i = 0; i < 4; ++i) {
      if (c.blocks[i].name != names[i]) throw FormatError("unexpected channel '" + c.blocks[i].name + "'");
      if (c.blocks[i].data.size() != n) throw FormatError("channel '" + c.blocks[i].name + "' has wrong length");
      *dst[i] = TimeSeries(c.blocks[i].data, fs);
    }
    r.meta = meta_from_json(c.header.at("meta"));
  } catch (const json::exception& e) {
    throw FormatError(std::string("record header: ") + e.what());
  }
  return r;
}

inline void save_record(const Record& r, const std::filesystem::path& path) { io::write_file(path, serialize_record(r)); }
inline Record load_record(const std::filesystem::path& path) { return deserialize_record(io::read_file(path)); }

// ---------------------------------------------------------------------------
// Datasets

inline constexpr int kManifestVersion = 1;
inline constexpr std::size_t kFullScaleRecords = 10100;
inline constexpr std::size_t kFullScaleTest = 100;
inline constexpr std::size_t kDeskRecords = 120;

struct ManifestEntry {
  std::size_t id = 0;
  std::string file;
  std::uint64_t seed = 0;
  double snr_db = 0.0;
  double fetal_snr_db = 0.0;
};

struct DatasetManifest {
  int version = kManifestVersion;
  double fs = kDefaultFs;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> records;
  std::vector<std::size_t> train, test;
  json config = json::object();
};

/// Test-set size: 100 at full scale, otherwise one sixth (20 of 120).
inline std::size_t default_test_count(std::size_t n) {
  return n >= kFullScaleRecords ? kFullScaleTest : std::max<std::size_t>(1, n / 6);
}

struct Split {
  std::vector<std::size_t> train, test;
};

/// Record ids [0, n - test_count) train, the rest test.
inline Split make_split(std::size_t n, std::size_t test_count) {
  if (test_count == 0 || test_count >= n) throw ConfigError("test_count: must be in [1, records)");
  Split s;
  for (std::size_t i = 0; i < n; ++i) (i < n - test_count ? s.train : s.test).push_back(i);
  return s;
}

inline std::string record_file_name(std::size_t id) {
  std::ostringstream s;
  s << "records/" << std::setw(5) << std::setfill('0') << id << ".fbin";
  return s.str();
}

inline json config_to_json(const GenerateConfig& c) {
  auto rng = [](Range r) { return json::array({r.lo, r.hi}); };
  return {{"fs", c.fs},
          {"duration_s", c.duration_s},
          {"snr_db", rng(c.snr_db)},
          {"maternal_hr", rng(c.maternal_hr)},
          {"maternal_hrv", c.maternal_hrv},
          {"fetal_hr", rng(c.fetal_hr)},
          {"fetal_hrv", c.fetal_hrv},
          {"fetal_band", json::array({c.fetal_band.lo, c.fetal_band.hi})},
          {"maternal_ratio", rng(c.maternal_ratio)},
          {"noise_weights", {{"pink", c.weights.pink}, {"white", c.weights.white}, {"mixture", c.weights.mixture}}},
          {"mixture", {{"sigma0", c.mixture.sigma0}, {"sigma1", c.mixture.sigma1}, {"p", c.mixture.p}}}};
}

inline GenerateConfig config_from_json(const json& j, GenerateConfig c = {}) {
  auto rng = [&](const char* key, Range& r) {
    if (!j.contains(key)) return;
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != 2) throw ConfigError(std::string(key) + ": expected [lo, hi]");
    r = {a[0].get<double>(), a[1].get<double>()};
  };
  try {
    c.fs = j.value("fs", c.fs);
    c.duration_s = j.value("duration_s", c.duration_s);
    rng("snr_db", c.snr_db);
    rng("maternal_hr", c.maternal_hr);
    rng("fetal_hr", c.fetal_hr);
    rng("maternal_ratio", c.maternal_ratio);
    c.maternal_hrv = j.value("maternal_hrv", c.maternal_hrv);
    c.fetal_hrv = j.value("fetal_hrv", c.fetal_hrv);
    if (j.contains("fetal_band")) {
      Range b;
      rng("fetal_band", b);
      c.fetal_band = {b.lo, b.hi};
    }
    if (j.contains("noise_weights")) {
      const auto& w = j.at("noise_weights");
      c.weights = {w.value("pink", c.weights.pink), w.value("white", c.weights.white), w.value("mixture", c.weights.mixture)};
    }
    if (j.contains("mixture")) {
      const auto& m = j.at("mixture");
      c.mixture = {m.value("sigma0", c.mixture.sigma0), m.value("sigma1", c.mixture.sigma1), m.value("p", c.mixture.p)};
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("generate config: ") + e.what());
  }
  return c;
}

inline json manifest_to_json(const DatasetManifest& m) {
  json recs = json::array();
  for (const auto& e : m.records)
    recs.push_back({{"id", e.id}, {"file", e.file}, {"seed", e.seed}, {"snr_db", e.snr_db}, {"fetal_snr_db", e.fetal_snr_db}});
  return {{"version", m.version}, {"fs", m.fs},     {"seed", m.seed},
          {"count", m.records.size()}, {"config", m.config}, {"records", recs},
          {"split", {{"train", m.train}, {"test", m.test}}}};
}

inline DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  try {
    m.version = j.at("version").get<int>();
    if (m.version > kManifestVersion)
      throw VersionError("manifest version " + std::to_string(m.version) + " is newer than supported");
    m.fs = j.at("fs").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.config = j.value("config", json::object());
    for (const auto& e : j.at("records"))
      m.records.push_back({e.at("id").get<std::size_t>(), e.at("file").get<std::string>(), e.at("seed").get<std::uint64_t>(),
                           e.at("snr_db").get<double>(), e.at("fetal_snr_db").get<double>()});
    m.train = j.at("split").at("train").get<std::vector<std::size_t>>();
    m.test = j.at("split").at("test").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  return m;
}

inline DatasetManifest load_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  if (!std::filesystem::exists(path)) throw StorageError("no dataset manifest at " + path.string());
  try {
    return manifest_from_json(json::parse(io::read_file(path)));
  } catch (const json::parse_error& e) {
    throw FormatError("manifest: " + std::string(e.what()));
  }
}

inline Record load_dataset_record(const std::filesystem::path& dir, const ManifestEntry& e) {
  try {
    return load_record(dir / e.file);
  } catch (const Error& err) {
    throw StorageError("record " + std::to_string(e.id) + ": " + err.what());
  }
}

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

/// Writes n records plus manifest.json under `dir`. Record i uses seed
/// mix_seed(seed, i); the last `test_count` records form the test split.
inline DatasetManifest generate_dataset(std::size_t n, std::uint64_t seed, const GenerateConfig& cfg,
                                        const std::filesystem::path& dir, std::size_t test_count = 0,
                                        unsigned jobs = 1, const ProgressFn& progress = {}) {
  cfg.validate();
  if (n < 2) throw ConfigError("records: need at least 2");
  if (test_count == 0) test_count = default_test_count(n);
  Split split = make_split(n, test_count);

  DatasetManifest m;
  m.fs = cfg.fs;
  m.seed = seed;
  m.config = config_to_json(cfg);
  m.records.resize(n);
  std::atomic<std::size_t> next{0}, done{0};
  std::mutex err_mu, progress_mu;
  std::string first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const std::uint64_t rs = mix_seed(seed, i);
        const Record r = generate_record(rs, cfg);
        const std::string file = record_file_name(i);
        try {
          save_record(r, dir / file);
        } catch (const Error& e) {
          throw StorageError("record " + std::to_string(i) + ": " + e.what());
        }
        m.records[i] = {i, file, rs, r.meta.plan.snr_db, fetal_snr_db(r)};
      } catch (const std::exception& e) {
        std::lock_guard lk(err_mu);
        if (first_error.empty()) first_error = e.what();
      }
      const std::size_t d = ++done;
      if (progress) {
        std::lock_guard lk(progress_mu);
        progress(d, n);
      }
    }
  };
  const unsigned nt = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  if (nt == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (!first_error.empty()) throw StorageError(first_error);
  m.train = std::move(split.train);
  m.test = std::move(split.test);
  io::write_text(dir / "manifest.json", manifest_to_json(m).dump(2) + "\n");
  return m;
}

}  // namespace fecg::dataset
