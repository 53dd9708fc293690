#pragma once

// Command-line front end: generate, train, eval and extract. Each command
// merges built-in defaults, an optional JSON config file and explicit flags
// into one resolved config, which is written next to its outputs.

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "fecg/pipeline.hpp"
#include "fecg/plot.hpp"
#include "fecg/runtime.hpp"

namespace fecg::cli {

using json = io::json;
namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kOther = 1, kUsage = 2, kData = 3, kNumerical = 4 };

inline constexpr const char* kOutputRootEnv = "FECG_OUTPUT_ROOT";

struct UsageError : Error {
  using Error::Error;
};

/// FNV-1a 64 over the canonical dump.
inline std::string config_hash(const json& j) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : j.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf, 12);
}

inline fs::path output_root() {
  const char* env = std::getenv(kOutputRootEnv);
  return (env && *env) ? fs::path(env) : fs::path("runs");
}

/// Explicit --out wins; otherwise <root>/<command>-<hash of resolved config>.
inline fs::path resolve_out(const std::string& command, const json& cfg) {
  const std::string out = cfg.value("out", "");
  if (!out.empty()) return out;
  json key = cfg;
  key.erase("out");
  key.erase("jobs");
  return output_root() / (command + "-" + config_hash(key));
}

inline json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  if (!fs::exists(path)) throw UsageError("config file not found: " + path);
  try {
    json j = json::parse(io::read_file(path));
    if (!j.is_object()) throw UsageError("config file must hold a JSON object: " + path);
    return j;
  } catch (const json::parse_error& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
}

/// defaults <- file <- flags that were actually given. Unknown keys in the
/// file are rejected by name.
class Resolver {
 public:
  explicit Resolver(json defaults) : cfg_(std::move(defaults)) {}

  void merge_file(const json& file) {
    for (auto it = file.begin(); it != file.end(); ++it) {
      if (!cfg_.contains(it.key())) throw UsageError("config file: unknown field '" + it.key() + "'");
      cfg_[it.key()] = it.value();
    }
  }

  template <class T>
  void flag(const CLI::Option* opt, const std::string& key, const T& value) {
    if (opt->count() > 0) cfg_[key] = value;
  }

  [[nodiscard]] const json& get() const { return cfg_; }

 private:
  json cfg_;
};

template <class T>
T field(const json& cfg, const std::string& key) {
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception&) {
    throw UsageError("config field '" + key + "' is missing or has the wrong type");
  }
}

inline void write_config(const fs::path& out, const json& cfg) {
  io::write_text(out / "config.json", cfg.dump(2) + "\n");
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// generate

inline json generate_defaults() {
  return {{"out", ""},
          {"records", dataset::kDeskRecords},
          {"test_count", 0},
          {"seed", 0},
          {"full_scale", false},
          {"jobs", 1},
          {"generator", dataset::config_to_json({})}};
}

inline int cmd_generate(const json& cfg, bool dry_run, std::ostream& log) {
  const std::string out = field<std::string>(cfg, "out");
  if (out.empty()) throw UsageError("generate: --out is required");
  const bool full = field<bool>(cfg, "full_scale");
  std::size_t n = field<std::size_t>(cfg, "records");
  std::size_t test = field<std::size_t>(cfg, "test_count");
  if (full) {
    n = dataset::kFullScaleRecords;
    test = dataset::kFullScaleTest;
  }
  if (test == 0) test = dataset::default_test_count(n);
  const auto gen = dataset::config_from_json(cfg.at("generator"));
  try {
    gen.validate();
  } catch (const ConfigError& e) {
    throw UsageError(std::string("generator.") + e.what());
  }
  const auto split = dataset::make_split(n, test);
  if (dry_run) {
    log << "records " << n << " train " << split.train.size() << " test " << split.test.size() << " (dry run)\n";
    return kOk;
  }
  const auto m = dataset::generate_dataset(n, field<std::uint64_t>(cfg, "seed"), gen, out, test,
                                           field<unsigned>(cfg, "jobs"), [&](std::size_t d, std::size_t t) {
                                             if (d == t || d % 500 == 0) log << "generated " << d << "/" << t << "\n";
                                           });
  write_config(out, cfg);
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& e : m.records) {
    lo = std::min(lo, e.fetal_snr_db);
    hi = std::max(hi, e.fetal_snr_db);
  }
  log << "records " << m.records.size() << " train " << m.train.size() << " test " << m.test.size() << "\n";
  log << "fetal SNR range [" << lo << ", " << hi << "] dB\n";
  log << "manifest " << (fs::path(out) / "manifest.json").string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// train

inline json train_defaults() {
  const cunet::CUNetConfig net;
  const cunet::TrainConfig tc;
  const spectral::StftConfig st;
  const cunet::SegmentPlan plan;
  return {{"data", ""},
          {"out", ""},
          {"seed", 0},
          {"lr", tc.lr},
          {"batch", tc.batch},
          {"epochs", tc.epochs},
          {"max_steps", 0},
          {"train_records", 0},
          {"jobs", 1},
          {"init", "random"},
          {"depth", net.depth},
          {"channels", net.channels},
          {"kernel", net.kernel},
          {"activation", cunet::activation_name(net.activation)},
          {"conv_mode", cunet::conv_mode_name(net.conv_mode)},
          {"stft", {{"window_len", st.window_len}, {"hop", st.hop}, {"window", spectral::window_name(st.window)}, {"fft_len", st.fft_len}}},
          {"segment_length", plan.length},
          {"segment_hop", plan.hop},
          {"log_every", 50}};
}

inline spectral::StftConfig stft_from_json(const json& j) {
  spectral::StftConfig s;
  try {
    s.window_len = j.at("window_len").get<int>();
    s.hop = j.at("hop").get<int>();
    s.window = spectral::window_from_name(j.at("window").get<std::string>());
    s.fft_len = j.at("fft_len").get<int>();
  } catch (const json::exception&) {
    throw UsageError("config field 'stft' needs window_len, hop, window and fft_len");
  }
  s.validate();
  return s;
}

inline plot::Figure loss_figure(const std::vector<double>& loss) {
  plot::Figure f;
  f.title = "training loss";
  f.x_label = "step";
  f.y_label = "batch loss";
  f.log_y = true;
  plot::Series s{"loss", {}, loss, "#1f77b4"};
  for (std::size_t i = 0; i < loss.size(); ++i) s.x.push_back(static_cast<double>(i + 1));
  f.series = {s};
  return f;
}

struct TrainOutcome {
  cunet::Checkpoint checkpoint;
  cunet::TrainResult result;
  fs::path out;
};

inline TrainOutcome run_train(const json& cfg, std::ostream& log) {
  const std::string data = field<std::string>(cfg, "data");
  if (data.empty()) throw UsageError("train: --data is required");
  const auto m = dataset::load_manifest(data);

  cunet::SegmentPlan plan;
  plan.length = field<std::size_t>(cfg, "segment_length");
  plan.hop = field<std::size_t>(cfg, "segment_hop");
  plan.validate();
  const auto st = stft_from_json(cfg.at("stft"));
  cunet::CUNetConfig base;
  base.depth = field<int>(cfg, "depth");
  base.channels = field<std::vector<int>>(cfg, "channels");
  base.kernel = field<int>(cfg, "kernel");
  base.activation = cunet::activation_from_name(field<std::string>(cfg, "activation"));
  base.conv_mode = cunet::conv_mode_from_name(field<std::string>(cfg, "conv_mode"));

  cunet::TrainConfig tc;
  tc.lr = field<double>(cfg, "lr");
  tc.batch = field<std::size_t>(cfg, "batch");
  tc.epochs = field<int>(cfg, "epochs");
  tc.max_steps = field<long long>(cfg, "max_steps");
  tc.seed = field<std::uint64_t>(cfg, "seed");
  tc.threads = field<unsigned>(cfg, "jobs");
  if (tc.epochs < 0) throw UsageError("epochs must be >= 0");

  std::vector<std::size_t> ids = m.train;
  const auto limit = field<std::size_t>(cfg, "train_records");
  if (limit > 0 && limit < ids.size()) ids.resize(limit);

  const std::string init = field<std::string>(cfg, "init");
  if (init != "random" && init != "identity") throw UsageError("init must be 'random' or 'identity'");

  TrainOutcome o;
  o.out = resolve_out("train", cfg);
  auto& ck = o.checkpoint;
  ck.net = cunet::build_cunet(cunet::config_for(plan, st, base));
  if (init == "identity") {
    cunet::init_identity(ck.net);
  } else {
    cunet::init_random(ck.net, tc.seed);
  }
  ck.stft = st;
  ck.segments = plan;
  ck.fs = m.fs;
  ck.seed = tc.seed;

  const auto examples = pipeline::build_examples(data, m, ids, plan, st, tc.threads);
  log << "training on " << ids.size() << " records (" << examples.size() << " segments), "
      << ck.net.ps.values.size() << " parameters\n";
  const auto every = field<long long>(cfg, "log_every");
  const auto t0 = std::chrono::steady_clock::now();
  o.result = cunet::train(ck.net, examples, tc, st, m.fs, [&](long long step, double loss) {
    if (every > 0 && step % every == 0) {
      const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      log << "step " << step << " loss " << loss << " (" << sec << " s)\n";
    }
  });
  const auto& loss = o.result.loss;
  ck.extra = {{"train_records", ids.size()},
              {"segments", examples.size()},
              {"steps", o.result.steps},
              {"initial_loss", loss.empty() ? json(nullptr) : json(loss.front())},
              {"final_loss", loss.empty() ? json(nullptr) : json(loss.back())}};

  cunet::save_checkpoint(ck, o.out / "checkpoint.fckpt");
  std::string csv = "step,loss\n";
  for (std::size_t i = 0; i < loss.size(); ++i) csv += std::to_string(i + 1) + "," + pipeline::fmt(loss[i]) + "\n";
  io::write_text(o.out / "loss.csv", csv);
  io::write_text(o.out / "loss.svg", plot::render_svg(loss_figure(loss)));
  write_config(o.out, cfg);
  log << "steps " << o.result.steps;
  if (!loss.empty()) log << " initial loss " << loss.front() << " final loss " << loss.back();
  log << "\ncheckpoint " << (o.out / "checkpoint.fckpt").string() << "\n";
  return o;
}

// ---------------------------------------------------------------------------
// eval

inline json eval_defaults() {
  return {{"data", ""}, {"out", ""},  {"checkpoint", ""}, {"methods", {"ekf", "eks", "svd", "passthrough"}},
          {"split", "test"}, {"jobs", 1}, {"plots", 1}, {"plot_start_s", 10.0}, {"plot_seconds", 5.0}};
}

inline std::vector<pipeline::Method> methods_from(const json& cfg) {
  std::vector<pipeline::Method> ms;
  for (const auto& name : field<std::vector<std::string>>(cfg, "methods")) {
    try {
      ms.push_back(pipeline::method_from_name(name));
    } catch (const ConfigError& e) {
      throw UsageError(e.what());
    }
  }
  if (ms.empty()) throw UsageError("eval: no methods selected");
  return ms;
}

inline void write_overlay(const fs::path& stem, const std::string& title, const TimeSeries& ref, const TimeSeries& est,
                          double t0, double seconds) {
  const auto fig = plot::overlay(title, ref.samples, est.samples, ref.fs, t0, seconds);
  io::write_text(stem.string() + ".svg", plot::render_svg(fig));
  std::string csv = "t,reference,estimate\n";
  for (std::size_t i = 0; i < fig.series[0].x.size(); ++i)
    csv += pipeline::fmt(fig.series[0].x[i]) + "," + pipeline::fmt(fig.series[0].y[i]) + "," +
           pipeline::fmt(fig.series[1].y[i]) + "\n";
  io::write_text(stem.string() + ".csv", csv);
}

inline std::vector<pipeline::RecordResult> run_eval(const json& cfg, std::ostream& log, fs::path* out_dir = nullptr) {
  const std::string data = field<std::string>(cfg, "data");
  if (data.empty()) throw UsageError("eval: --data is required");
  const auto methods = methods_from(cfg);
  pipeline::MethodContext ctx;
  const std::string ckpath = field<std::string>(cfg, "checkpoint");
  if (std::find(methods.begin(), methods.end(), pipeline::Method::CUNet) != methods.end()) {
    if (ckpath.empty()) throw UsageError("eval: method 'cunet' needs --checkpoint");
    ctx.checkpoint = cunet::load_checkpoint(ckpath);
  }
  const auto m = dataset::load_manifest(data);
  const std::string split = field<std::string>(cfg, "split");
  std::vector<std::size_t> ids;
  if (split == "test") {
    ids = m.test;
  } else if (split == "train") {
    ids = m.train;
  } else if (split == "all") {
    for (const auto& e : m.records) ids.push_back(e.id);
  } else {
    throw UsageError("split must be test, train or all");
  }
  const fs::path out = resolve_out("eval", cfg);
  const auto n_plots = field<std::size_t>(cfg, "plots");
  std::vector<std::size_t> plot_ids(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(std::min(n_plots, ids.size())));
  const double t0 = field<double>(cfg, "plot_start_s"), secs = field<double>(cfg, "plot_seconds");

  const auto results = pipeline::evaluate_records(
      data, m, ids, methods, ctx, field<unsigned>(cfg, "jobs"),
      [&](const pipeline::Prepared& p, pipeline::Method meth, const TimeSeries& est) {
        if (std::find(plot_ids.begin(), plot_ids.end(), p.id) == plot_ids.end()) return;
        char stem[64];
        std::snprintf(stem, sizeof stem, "overlay_%05zu_%s", p.id, pipeline::method_name(meth).c_str());
        write_overlay(out / "plots" / stem,
                      "record " + std::to_string(p.id) + " " + pipeline::method_name(meth), p.reference, est, t0, secs);
      });

  io::write_text(out / "report.json", pipeline::report_json(results, methods).dump(2) + "\n");
  io::write_text(out / "records.csv", pipeline::records_csv(results));
  const auto summary = pipeline::summarize(results, methods);
  io::write_text(out / "summary.csv", pipeline::summary_csv(summary));
  io::write_text(out / "snr_bins.csv", pipeline::bins_csv(pipeline::bin_by_snr(results, methods)));
  write_config(out, cfg);
  log << "method        PRD                PCC                SE       F        HR_err\n";
  for (const auto& s : summary) {
    char line[256];
    std::snprintf(line, sizeof line, "%-12s  %7.2f +- %6.2f  %7.2f +- %6.2f  %7.2f  %7.2f  %6.2f\n",
                  pipeline::method_name(s.method).c_str(), s.stats[0].mean, s.stats[0].std, s.stats[1].mean,
                  s.stats[1].std, s.stats[3].mean, s.stats[4].mean, s.stats[5].mean);
    log << line;
  }
  log << "report " << (out / "report.json").string() << "\n";
  if (out_dir) *out_dir = out;
  return results;
}

// ---------------------------------------------------------------------------
// extract

inline constexpr char kSignalMagic[] = "FECGSIG\0";
inline constexpr std::uint32_t kSignalVersion = 1;

inline void save_signal(const TimeSeries& x, const fs::path& path) {
  io::Container c;
  c.header = {{"fs", x.fs}, {"length", x.size()}};
  c.blocks = {{"fecg", x.samples}};
  io::write_file(path, io::serialize(std::string(kSignalMagic, 8), kSignalVersion, std::move(c)));
}

inline TimeSeries load_signal(const fs::path& path) {
  const auto c = io::deserialize(io::read_file(path), std::string(kSignalMagic, 8), kSignalVersion);
  if (c.blocks.size() != 1) throw FormatError("signal file must hold one block");
  return TimeSeries(c.blocks[0].data, c.header.at("fs").get<double>());
}

inline json extract_defaults() {
  return {{"checkpoint", ""}, {"input", ""}, {"channel", "abdominal"}, {"out", ""},
          {"preprocess", true}, {"plot_start_s", 10.0}, {"plot_seconds", 5.0}};
}

inline TimeSeries run_extract(const json& cfg, std::ostream& log) {
  const std::string ckpath = field<std::string>(cfg, "checkpoint"), input = field<std::string>(cfg, "input");
  if (ckpath.empty()) throw UsageError("extract: --checkpoint is required");
  if (input.empty()) throw UsageError("extract: --input is required");
  const auto ck = cunet::load_checkpoint(ckpath);
  const auto rec = dataset::load_record(input);
  const std::string channel = field<std::string>(cfg, "channel");
  TimeSeries x;
  if (channel == "abdominal") {
    x = rec.abdominal;
  } else if (channel == "fecg_ref") {
    x = rec.fecg_ref;
  } else if (channel == "mecg_ref") {
    x = rec.mecg_ref;
  } else {
    throw UsageError("channel must be abdominal, fecg_ref or mecg_ref");
  }
  if (ck.fs != x.fs)
    throw InvalidInput("checkpoint sampling rate " + pipeline::fmt(ck.fs) + " Hz does not match input " +
                       pipeline::fmt(x.fs) + " Hz");
  if (field<bool>(cfg, "preprocess")) x = filter::preprocess(x);
  const TimeSeries y = cunet::extract_fecg(ck.net, x, ck.segments, ck.stft);
  const fs::path out = resolve_out("extract", cfg);
  save_signal(y, out / "extracted.fsig");
  std::string csv = "sample,fecg\n";
  for (std::size_t i = 0; i < y.size(); ++i) csv += std::to_string(i) + "," + pipeline::fmt(y[i]) + "\n";
  io::write_text(out / "extracted.csv", csv);
  const TimeSeries ref = field<bool>(cfg, "preprocess") ? filter::preprocess(rec.fecg_ref) : rec.fecg_ref;
  write_overlay(out / "overlay", "extracted vs reference fECG", ref, y, field<double>(cfg, "plot_start_s"),
                field<double>(cfg, "plot_seconds"));
  write_config(out, cfg);
  log << "extracted " << y.size() << " samples, PRD vs reference " << eval::prd(ref.view(), y.view()) << "\n";
  log << "output " << (out / "extracted.fsig").string() << "\n";
  return y;
}

// ---------------------------------------------------------------------------
// Entry point

inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const ConfigError*>(&e)) return kUsage;
  if (dynamic_cast<const NumericalError*>(&e) || dynamic_cast<const UndefinedMetric*>(&e) ||
      dynamic_cast<const DesignError*>(&e))
    return kNumerical;
  if (dynamic_cast<const InvalidInput*>(&e) || dynamic_cast<const FormatError*>(&e) ||
      dynamic_cast<const StorageError*>(&e) || dynamic_cast<const StructuralError*>(&e))
    return kData;
  return kOther;
}

inline int run(int argc, const char* const* argv, std::ostream& log = std::cerr) {
  configure_allocator();
  CLI::App app{"Fetal ECG extraction lab: synthetic data, CUNet training, baselines and scoring", "fecg"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "fecg 1.0.0");

  std::string config_path;
  auto add_config = [&](CLI::App* sub) { sub->add_option("--config", config_path, "JSON config file"); };

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  add_config(gen);
  std::string g_out;
  std::size_t g_records = 0, g_test = 0;
  std::uint64_t g_seed = 0;
  unsigned g_jobs = 1;
  double g_duration = 0;
  bool g_dry = false;
  auto* g_out_o = gen->add_option("--out", g_out, "Dataset directory");
  auto* g_rec_o = gen->add_option("--records", g_records, "Number of records")->check(CLI::PositiveNumber);
  auto* g_test_o = gen->add_option("--test-count", g_test, "Records in the test split");
  auto* g_seed_o = gen->add_option("--seed", g_seed, "Dataset seed");
  auto* g_jobs_o = gen->add_option("--jobs", g_jobs, "Worker threads")->check(CLI::PositiveNumber);
  auto* g_dur_o = gen->add_option("--duration", g_duration, "Record length in seconds")->check(CLI::PositiveNumber);
  auto* g_full_o = gen->add_flag("--full-scale", "10,100 records with a 100-record test split");
  gen->add_flag("--dry-run", g_dry, "Resolve the config and report counts without writing records");

  // train
  auto* tr = app.add_subcommand("train", "Train a CUNet on a dataset");
  add_config(tr);
  std::string t_data, t_out, t_init, t_act, t_mode, t_channels;
  std::uint64_t t_seed = 0;
  double t_lr = 0;
  std::size_t t_batch = 0, t_records = 0;
  int t_epochs = 0, t_depth = 0;
  long long t_steps = 0;
  unsigned t_jobs = 1;
  auto* t_data_o = tr->add_option("--data", t_data, "Dataset directory");
  auto* t_out_o = tr->add_option("--out", t_out, "Output directory");
  auto* t_seed_o = tr->add_option("--seed", t_seed, "Initialization and shuffling seed");
  auto* t_lr_o = tr->add_option("--lr", t_lr, "Adam learning rate")->check(CLI::NonNegativeNumber);
  auto* t_batch_o = tr->add_option("--batch", t_batch, "Batch size")->check(CLI::PositiveNumber);
  auto* t_epochs_o = tr->add_option("--epochs", t_epochs, "Epochs")->check(CLI::NonNegativeNumber);
  auto* t_steps_o = tr->add_option("--max-steps", t_steps, "Stop after this many steps (0: no limit)");
  auto* t_rec_o = tr->add_option("--train-records", t_records, "Use only the first N training records");
  auto* t_jobs_o = tr->add_option("--jobs", t_jobs, "Worker threads")->check(CLI::PositiveNumber);
  auto* t_init_o = tr->add_option("--init", t_init, "random or identity");
  auto* t_depth_o = tr->add_option("--depth", t_depth, "Down/up levels")->check(CLI::PositiveNumber);
  auto* t_ch_o = tr->add_option("--channels", t_channels, "Comma-separated channels per level");
  auto* t_act_o = tr->add_option("--activation", t_act, "crelu, gk, gs, rho or identity");
  auto* t_mode_o = tr->add_option("--conv-mode", t_mode, "split or full");
  long long t_log = 0;
  auto* t_log_o = tr->add_option("--log-every", t_log, "Progress line every N steps (0: quiet)");

  // eval
  auto* ev = app.add_subcommand("eval", "Score methods on a dataset split");
  add_config(ev);
  std::string e_data, e_out, e_ck, e_methods, e_split;
  unsigned e_jobs = 1;
  std::size_t e_plots = 0;
  auto* e_data_o = ev->add_option("--data", e_data, "Dataset directory");
  auto* e_out_o = ev->add_option("--out", e_out, "Output directory");
  auto* e_ck_o = ev->add_option("--checkpoint", e_ck, "CUNet checkpoint");
  auto* e_meth_o = ev->add_option("--methods", e_methods, "Comma-separated: cunet, ekf, eks, svd, passthrough");
  auto* e_split_o = ev->add_option("--split", e_split, "test, train or all");
  auto* e_jobs_o = ev->add_option("--jobs", e_jobs, "Worker threads")->check(CLI::PositiveNumber);
  auto* e_plots_o = ev->add_option("--plots", e_plots, "Records to plot");

  // extract
  auto* ex = app.add_subcommand("extract", "Extract the fetal trace from one record");
  add_config(ex);
  std::string x_ck, x_in, x_ch, x_out;
  bool x_raw = false;
  auto* x_ck_o = ex->add_option("--checkpoint", x_ck, "CUNet checkpoint");
  auto* x_in_o = ex->add_option("--input", x_in, "Record file (.fbin)");
  auto* x_ch_o = ex->add_option("--channel", x_ch, "abdominal, fecg_ref or mecg_ref");
  auto* x_out_o = ex->add_option("--out", x_out, "Output directory");
  auto* x_raw_o = ex->add_flag("--no-preprocess", x_raw, "Skip the notch/bandpass front end");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, std::cout, log);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (gen->parsed()) {
      Resolver r(generate_defaults());
      r.merge_file(load_config_file(config_path));
      r.flag(g_out_o, "out", g_out);
      r.flag(g_rec_o, "records", g_records);
      r.flag(g_test_o, "test_count", g_test);
      r.flag(g_seed_o, "seed", g_seed);
      r.flag(g_jobs_o, "jobs", g_jobs);
      r.flag(g_full_o, "full_scale", true);
      json cfg = r.get();
      if (g_dur_o->count() > 0) cfg["generator"]["duration_s"] = g_duration;
      return cmd_generate(cfg, g_dry, log);
    }
    if (tr->parsed()) {
      Resolver r(train_defaults());
      r.merge_file(load_config_file(config_path));
      r.flag(t_data_o, "data", t_data);
      r.flag(t_out_o, "out", t_out);
      r.flag(t_seed_o, "seed", t_seed);
      r.flag(t_lr_o, "lr", t_lr);
      r.flag(t_batch_o, "batch", t_batch);
      r.flag(t_epochs_o, "epochs", t_epochs);
      r.flag(t_steps_o, "max_steps", t_steps);
      r.flag(t_rec_o, "train_records", t_records);
      r.flag(t_jobs_o, "jobs", t_jobs);
      r.flag(t_init_o, "init", t_init);
      r.flag(t_depth_o, "depth", t_depth);
      r.flag(t_act_o, "activation", t_act);
      r.flag(t_mode_o, "conv_mode", t_mode);
      r.flag(t_log_o, "log_every", t_log);
      if (t_ch_o->count() > 0) {
        std::vector<int> ch;
        for (const auto& s : split_list(t_channels)) {
          try {
            ch.push_back(std::stoi(s));
          } catch (const std::exception&) {
            throw UsageError("--channels: '" + s + "' is not an integer");
          }
        }
        r.flag(t_ch_o, "channels", ch);
      }
      run_train(r.get(), log);
      return kOk;
    }
    if (ev->parsed()) {
      Resolver r(eval_defaults());
      r.merge_file(load_config_file(config_path));
      r.flag(e_data_o, "data", e_data);
      r.flag(e_out_o, "out", e_out);
      r.flag(e_ck_o, "checkpoint", e_ck);
      r.flag(e_split_o, "split", e_split);
      r.flag(e_jobs_o, "jobs", e_jobs);
      r.flag(e_plots_o, "plots", e_plots);
      r.flag(e_meth_o, "methods", split_list(e_methods));
      run_eval(r.get(), log);
      return kOk;
    }
    if (ex->parsed()) {
      Resolver r(extract_defaults());
      r.merge_file(load_config_file(config_path));
      r.flag(x_ck_o, "checkpoint", x_ck);
      r.flag(x_in_o, "input", x_in);
      r.flag(x_ch_o, "channel", x_ch);
      r.flag(x_out_o, "out", x_out);
      r.flag(x_raw_o, "preprocess", false);
      run_extract(r.get(), log);
      return kOk;
    }
  } catch (const std::exception& e) {
    const int code = exit_code_for(e);
    log << "error: " << e.what() << "\n";
    return code;
  }
  return kUsage;
}

}  // namespace fecg::cli
