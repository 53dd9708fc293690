#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

#include "fecg/dataset.hpp"

using namespace fecg;
using namespace fecg::dataset;

namespace {

GenerateConfig short_config() {
  GenerateConfig c;
  c.duration_s = 10.0;
  return c;
}

std::filesystem::path scratch(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("fecg_test_dataset_" + name);
  std::filesystem::remove_all(p);
  return p;
}

double power(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s / static_cast<double>(x.size());
}

}  // namespace

TEST(GenerateRecord, DeterministicUnderSeed) {
  const auto a = generate_record(7, short_config());
  const auto b = generate_record(7, short_config());
  EXPECT_EQ(a.abdominal.samples, b.abdominal.samples);
  EXPECT_EQ(a.meta.fetal_rpeaks, b.meta.fetal_rpeaks);
  const auto c = generate_record(8, short_config());
  EXPECT_NE(a.abdominal.samples, c.abdominal.samples);
}

TEST(GenerateRecord, LengthAndAnnotations) {
  const auto r = generate_record(1, GenerateConfig{});
  EXPECT_EQ(r.size(), 15000u);
  EXPECT_EQ(r.fecg_ref.size(), 15000u);
  ASSERT_FALSE(r.meta.fetal_rpeaks.empty());
  EXPECT_LT(r.meta.fetal_rpeaks.back(), 15000u);
  EXPECT_LT(r.meta.maternal_rpeaks.back(), 15000u);
  const double fetal_beats = static_cast<double>(r.meta.fetal_rpeaks.size());
  EXPECT_NEAR(fetal_beats, r.meta.plan.fetal_hr, 0.1 * r.meta.plan.fetal_hr);
}

TEST(GenerateRecord, SuperpositionHolds) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = generate_record(seed, short_config());
    for (std::size_t i = 0; i < r.size(); ++i)
      ASSERT_NEAR(r.abdominal[i], r.mecg_ref[i] + r.fecg_ref[i] + r.noise_ref[i], 1e-6);
  }
}

TEST(GenerateRecord, NoiseSnrMatchesDraw) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = generate_record(seed, short_config());
    std::vector<double> physio(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) physio[i] = r.mecg_ref[i] + r.fecg_ref[i];
    const double snr = 10.0 * std::log10(power(physio) / power(r.noise_ref.samples));
    EXPECT_NEAR(snr, r.meta.plan.snr_db, 0.01);
    EXPECT_GE(r.meta.plan.snr_db, 5.0);
    EXPECT_LE(r.meta.plan.snr_db, 20.0);
  }
}

TEST(GenerateRecord, AmplitudesFollowPlan) {
  const auto r = generate_record(3, short_config());
  EXPECT_NEAR(max_abs(r.fecg_ref.view()), r.meta.plan.fetal_peak_uv, 1e-9);
  EXPECT_NEAR(max_abs(r.mecg_ref.view()), r.meta.plan.maternal_peak_uv, 1e-9);
  EXPECT_LE(r.meta.plan.fetal_peak_uv, 20.0);
  EXPECT_GE(r.meta.plan.maternal_peak_uv, r.meta.plan.fetal_peak_uv);
}

TEST(GenerateRecord, FetalSnrIsBelowZero) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = generate_record(seed, short_config());
    const double s = fetal_snr_db(r);
    EXPECT_LT(s, 0.0);
    EXPECT_GT(s, -30.0);
  }
}

TEST(PlanRecord, SnrDrawsAreUniform) {
  // One-sample Kolmogorov-Smirnov against U[5, 20]; 1% critical value.
  const GenerateConfig cfg;
  std::vector<double> x;
  for (std::uint64_t i = 0; i < 1000; ++i) x.push_back(plan_record(mix_seed(99, i), cfg).snr_db);
  std::sort(x.begin(), x.end());
  double d = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = (x[i] - 5.0) / 15.0;
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  EXPECT_LT(d, 1.628 / std::sqrt(n));
}

TEST(PlanRecord, RatesInConfiguredRanges) {
  const GenerateConfig cfg;
  for (std::uint64_t i = 0; i < 500; ++i) {
    const auto p = plan_record(i, cfg);
    EXPECT_GE(p.fetal_hr, 120.0);
    EXPECT_LE(p.fetal_hr, 160.0);
    EXPECT_GE(p.maternal_hr, 65.0);
    EXPECT_LE(p.maternal_hr, 95.0);
    const double ratio = p.maternal_peak_uv / p.fetal_peak_uv;
    EXPECT_GE(ratio, cfg.maternal_ratio.lo - 1e-12);
    EXPECT_LE(ratio, cfg.maternal_ratio.hi + 1e-12);
  }
}

TEST(GenerateConfig, RejectsBadValues) {
  GenerateConfig c;
  c.duration_s = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.snr_db = {20.0, 5.0};
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.fetal_hr = {50.0, 160.0};
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(config_from_json({{"snr_db", 3}}), ConfigError);
}

TEST(GenerateConfig, JsonRoundTrip) {
  GenerateConfig c;
  c.duration_s = 30.0;
  c.snr_db = {6.0, 9.0};
  c.maternal_ratio = {2.0, 4.0};
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(back.duration_s, 30.0);
  EXPECT_EQ(back.snr_db.lo, 6.0);
  EXPECT_EQ(back.maternal_ratio.hi, 4.0);
  EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(RecordFile, RoundTripIsExact) {
  const auto dir = scratch("roundtrip");
  const auto r = generate_record(11, short_config());
  save_record(r, dir / "r.fbin");
  const auto back = load_record(dir / "r.fbin");
  EXPECT_EQ(back.abdominal.samples, r.abdominal.samples);
  EXPECT_EQ(back.fecg_ref.samples, r.fecg_ref.samples);
  EXPECT_EQ(back.mecg_ref.samples, r.mecg_ref.samples);
  EXPECT_EQ(back.noise_ref.samples, r.noise_ref.samples);
  EXPECT_EQ(back.meta.fetal_rpeaks, r.meta.fetal_rpeaks);
  EXPECT_EQ(back.meta.plan.snr_db, r.meta.plan.snr_db);
  EXPECT_EQ(back.abdominal.fs, 250.0);
  std::filesystem::remove_all(dir);
}

TEST(RecordFile, CorruptionDetected) {
  const auto r = generate_record(12, short_config());
  std::string bytes = serialize_record(r);
  std::string flipped = bytes;
  flipped[flipped.size() - 100] ^= 0x40;
  EXPECT_THROW(deserialize_record(flipped), ChecksumError);
  EXPECT_THROW(deserialize_record(bytes.substr(0, bytes.size() - 8)), TruncatedError);
  std::string newer = bytes;
  newer[8] = 9;
  EXPECT_THROW(deserialize_record(newer), VersionError);
  std::string magic = bytes;
  magic[0] = 'X';
  EXPECT_THROW(deserialize_record(magic), FormatError);
}

TEST(Split, CountsAndDisjointness) {
  EXPECT_EQ(default_test_count(kFullScaleRecords), 100u);
  EXPECT_EQ(default_test_count(kDeskRecords), 20u);
  const auto full = make_split(kFullScaleRecords, default_test_count(kFullScaleRecords));
  EXPECT_EQ(full.train.size(), 10000u);
  EXPECT_EQ(full.test.size(), 100u);
  EXPECT_EQ(full.test.front(), 10000u);
  EXPECT_EQ(full.train.back() + 1, full.test.front());
  EXPECT_THROW(make_split(10, 10), ConfigError);
  EXPECT_THROW(make_split(10, 0), ConfigError);
}

TEST(Dataset, ManifestMatchesFiles) {
  const auto dir = scratch("manifest");
  const auto m = generate_dataset(6, 5, short_config(), dir, 2, 2);
  EXPECT_EQ(m.train.size(), 4u);
  EXPECT_EQ(m.test, (std::vector<std::size_t>{4, 5}));
  const auto back = load_manifest(dir);
  ASSERT_EQ(back.records.size(), 6u);
  for (const auto& e : back.records) {
    EXPECT_TRUE(std::filesystem::exists(dir / e.file));
    const auto r = load_dataset_record(dir, e);
    EXPECT_EQ(r.meta.plan.seed, e.seed);
    EXPECT_NEAR(fetal_snr_db(r), e.fetal_snr_db, 1e-9);
  }
  EXPECT_EQ(back.records[3].file, "records/00003.fbin");
  std::filesystem::remove_all(dir);
}

TEST(Dataset, IndependentOfJobCount) {
  const auto d1 = scratch("jobs1"), d3 = scratch("jobs3");
  generate_dataset(4, 21, short_config(), d1, 1, 1);
  generate_dataset(4, 21, short_config(), d3, 1, 3);
  for (std::size_t i = 0; i < 4; ++i)
    EXPECT_EQ(io::read_file(d1 / record_file_name(i)), io::read_file(d3 / record_file_name(i)));
  EXPECT_EQ(io::read_file(d1 / "manifest.json"), io::read_file(d3 / "manifest.json"));
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d3);
}

TEST(Dataset, MissingManifestIsStorageError) {
  EXPECT_THROW(load_manifest(scratch("missing")), StorageError);
}
