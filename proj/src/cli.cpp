/*
 * Copyright 2026 The oddstream Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "oddstream/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "oddstream/config.hpp"
#include "oddstream/detector.hpp"
#include "oddstream/error.hpp"
#include "oddstream/io.hpp"
#include "oddstream/metrics.hpp"
#include "oddstream/protocols.hpp"
#include "oddstream/random.hpp"

namespace oddstream::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string Fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

/// Either a file stream or the caller's stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      os_ = &fallback;
    } else {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
      if (!*file_) throw Error(ErrorCode::kIoFailure, "cannot open " + path + " for writing");
      os_ = file_.get();
    }
  }
  ~Sink() {
    if (file_) file_->flush();
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* os_;
};

RunConfig LoadConfigOrDefault(const std::string& path) {
  return path.empty() ? RunConfig{} : LoadRunConfig(path);
}

std::string Require(const std::string& flag, const std::string& cli_value,
                    const std::optional<std::string>& config_value) {
  if (!cli_value.empty()) return cli_value;
  if (config_value) return *config_value;
  throw UsageError("missing " + flag + " (pass it as a flag or set it in the config)");
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool ParseOnOff(const std::string& s) {
  if (s == "on" || s == "true" || s == "1") return true;
  if (s == "off" || s == "false" || s == "0") return false;
  throw UsageError("expected on/off, got '" + s + "'");
}

double ParseDouble(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw UsageError("not a number: '" + s + "'");
  return v;
}

std::size_t ParseCount(const std::string& s) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw UsageError("not a count: '" + s + "'");
  return v;
}

Json Resolved(const std::string& command, const DetectorConfig& detector) {
  Json j;
  j["command"] = command;
  j["detector"] = ToJson(detector);
  return j;
}

void WriteCsvHeader(std::ostream& os, const std::string& hash, const std::string& columns) {
  os << "# config_hash=" << hash << '\n' << columns << '\n';
}

// ---------------------------------------------------------------------------

struct CalibrateArgs {
  std::string train, val, config, out;
};

int DoCalibrate(const CalibrateArgs& a, std::ostream& out) {
  const RunConfig rc = LoadConfigOrDefault(a.config);
  DetectorConfig dc = ResolveDetector(rc);
  dc.lambda.reset();
  const auto train = io::LoadAny(Require("--train", a.train, rc.train));
  const auto val = io::LoadAny(Require("--val", a.val, rc.val));
  Detector<double> det(train.features, dc);
  const auto scores = det.Calibrate(val.features, rc.threads.value_or(0));
  const double lambda = det.lambda();
  const auto accepted = std::count_if(scores.begin(), scores.end(), [&](double s) { return s >= lambda; });

  Json resolved = Resolved("calibrate", dc);
  resolved["train"] = Require("--train", a.train, rc.train);
  resolved["val"] = Require("--val", a.val, rc.val);
  Json report;
  report["config_hash"] = ConfigHash(resolved);
  report["config"] = resolved;
  report["lambda"] = lambda;
  report["tpr_target"] = dc.tpr_target;
  report["achieved_tpr"] = static_cast<double>(accepted) / static_cast<double>(scores.size());
  report["val_count"] = scores.size();
  report["bank_size"] = det.bank().size();
  report["degenerate_threshold"] = det.degenerate_threshold();
  Sink sink(a.out, out);
  *sink << report.dump(2) << '\n';
  return kExitOk;
}

struct StreamArgs {
  std::string train, val, input, config, log, metrics, adapt;
  bool timing = false;
};

int DoStream(const StreamArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig rc = LoadConfigOrDefault(a.config);
  DetectorConfig dc = ResolveDetector(rc);
  if (!a.adapt.empty()) dc.adapt = ParseOnOff(a.adapt);
  const std::string train_path = Require("--train", a.train, rc.train);
  const std::string val_path = Require("--val", a.val, rc.val);
  if (a.input.empty()) throw UsageError("missing --input");

  const auto train = io::ToDataset("id-train", io::LoadAny(train_path));
  const auto val = io::ToDataset("id-val", io::LoadAny(val_path));
  const auto input = io::ToDataset(std::filesystem::path(a.input).stem().string(), io::LoadAny(a.input));

  Json resolved = Resolved("stream", dc);
  resolved["train"] = train_path;
  resolved["val"] = val_path;
  resolved["input"] = a.input;
  const std::string hash = ConfigHash(resolved);

  ProtocolSpec spec{ProtocolKind::kSingle, {input}, 0};
  const ProtocolRun run = RunProtocol(spec, dc, train, val, {rc.threads.value_or(0), a.timing});
  if (run.report.lambda == 0.0) {
    err << "warning: calibrated threshold is 0; augmentation gates collapse onto the score sign\n";
  }
  if (!a.log.empty()) {
    Sink log(a.log, out);
    for (const auto& r : run.log) *log << DecisionLine(r, hash) << '\n';
  }
  Json metrics;
  metrics["config_hash"] = hash;
  metrics["config"] = resolved;
  metrics["report"] = ToJson(run.report);
  Sink sink(a.metrics, out);
  *sink << metrics.dump(2) << '\n';
  return kExitOk;
}

struct EvalArgs {
  std::string protocol, datasets, config, train, val, log, metrics;
  std::uint64_t seed = 0;
  bool timing = false;
};

int DoEval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  const RunConfig rc = LoadConfigOrDefault(a.config);
  const DetectorConfig dc = ResolveDetector(rc);
  const ProtocolKind kind = ParseProtocol(a.protocol);
  const std::string train_path = Require("--train", a.train, rc.train);
  const std::string val_path = Require("--val", a.val, rc.val);
  const auto paths = SplitList(a.datasets);
  if (paths.empty()) throw UsageError("--datasets needs at least one file");

  ProtocolSpec spec{kind, {}, a.seed};
  for (const auto& p : paths) {
    spec.datasets.push_back(io::ToDataset(std::filesystem::path(p).stem().string(), io::LoadAny(p)));
  }
  const auto train = io::ToDataset("id-train", io::LoadAny(train_path));
  const auto val = io::ToDataset("id-val", io::LoadAny(val_path));

  Json resolved = Resolved("eval", dc);
  resolved["protocol"] = std::string(ProtocolName(kind));
  resolved["datasets"] = paths;
  resolved["train"] = train_path;
  resolved["val"] = val_path;
  resolved["seed"] = a.seed;
  const std::string hash = ConfigHash(resolved);

  const ProtocolRun run = RunProtocol(spec, dc, train, val, {rc.threads.value_or(0), a.timing});
  if (run.report.lambda == 0.0) {
    err << "warning: calibrated threshold is 0; augmentation gates collapse onto the score sign\n";
  }
  if (!a.log.empty()) {
    Sink log(a.log, out);
    for (std::size_t i = 0; i < run.log.size(); ++i) {
      *log << DecisionLine(run.log[i], hash, &spec.datasets[run.source[i]].name) << '\n';
    }
  }
  Json metrics;
  metrics["config_hash"] = hash;
  metrics["config"] = resolved;
  metrics["report"] = ToJson(run.report);
  Sink sink(a.metrics, out);
  *sink << metrics.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------------------

SeededKnnSetup SeededSetup(const RunConfig& rc, Gaussian1d ood) {
  SeededKnnSetup s;
  s.ood = ood;
  if (rc.id_mean) s.id.mean = *rc.id_mean;
  if (rc.id_std) s.id.std = *rc.id_std;
  if (rc.ood_mean) s.ood.mean = *rc.ood_mean;
  if (rc.ood_std) s.ood.std = *rc.ood_std;
  if (rc.id_count) s.id_count = *rc.id_count;
  if (rc.val_count) s.val_count = *rc.val_count;
  if (rc.ood_count) s.ood_test_count = *rc.ood_count;
  if (rc.k) s.k = *rc.k;
  if (rc.kappa) s.kappa = *rc.kappa;
  if (rc.repeats) s.repeats = *rc.repeats;
  if (rc.tpr_target) s.tpr_target = *rc.tpr_target;
  if (rc.seed) s.seed = *rc.seed;
  if (rc.threads) s.threads = *rc.threads;
  return s;
}

/// Detector for the synthetic clusters: raw coordinates unless the config
/// asks for normalization.
DetectorConfig SyntheticDetector(const RunConfig& rc) {
  DetectorConfig dc = ResolveDetector(rc);
  if (!rc.normalize) dc.normalize = false;
  return dc;
}

ClusterSetup ClusterSetupFrom(const RunConfig& rc) {
  ClusterSetup s;
  if (rc.dim) s.dim = *rc.dim;
  if (rc.id_mean) s.id_mean = *rc.id_mean;
  if (rc.id_std) s.id_std = *rc.id_std;
  if (rc.ood_mean) s.ood_mean = *rc.ood_mean;
  if (rc.ood_std) s.ood_std = *rc.ood_std;
  if (rc.id_count) s.bank_count = *rc.id_count;
  if (rc.val_count) s.val_count = *rc.val_count;
  if (rc.ood_count) s.stream_count = *rc.ood_count;
  if (rc.seed) s.seed = *rc.seed;
  return s;
}

struct Summary {
  double fpr_mean, fpr_se, auroc_mean, auroc_se, reeval_mean, reeval_se;
};

Summary Summarize(const std::vector<EvalReport>& reports) {
  std::vector<double> f, a, r;
  for (const auto& rep : reports) {
    f.push_back(rep.fpr95);
    a.push_back(rep.auroc);
    r.push_back(rep.id_reeval_accuracy.value_or(0.0));
  }
  Summary s{};
  std::tie(s.fpr_mean, s.fpr_se) = MeanAndStdError(f);
  std::tie(s.auroc_mean, s.auroc_se) = MeanAndStdError(a);
  std::tie(s.reeval_mean, s.reeval_se) = MeanAndStdError(r);
  return s;
}

std::vector<EvalReport> ClusterRuns(const ClusterSetup& base, const DetectorConfig& dc,
                                    std::size_t repeats, unsigned threads) {
  std::vector<EvalReport> reports;
  for (std::size_t r = 0; r < repeats; ++r) {
    ClusterSetup s = base;
    s.seed = DeriveSeed(base.seed, r);
    reports.push_back(RunClusterExperiment(s, dc, threads).report);
  }
  return reports;
}

std::string SummaryRow(const Summary& s) {
  return Fmt(s.fpr_mean) + "," + Fmt(s.fpr_se) + "," + Fmt(s.auroc_mean) + "," + Fmt(s.auroc_se) + "," +
         Fmt(s.reeval_mean) + "," + Fmt(s.reeval_se);
}

struct SynthArgs {
  std::string preset, config, out;
};

int DoSynth(const SynthArgs& a, std::ostream& out) {
  const RunConfig rc = LoadConfigOrDefault(a.config);
  Sink sink(a.out, out);
  std::ostream& os = *sink;
  Json resolved;
  resolved["command"] = "synth";
  resolved["preset"] = a.preset;

  if (a.preset == "fig1") {
    const Gaussian1d id{rc.id_mean.value_or(0.0), rc.id_std.value_or(1.0)};
    const Gaussian1d ood{rc.ood_mean.value_or(2.0), rc.ood_std.value_or(0.5)};
    const std::size_t repeats = rc.repeats.value_or(20);
    const std::size_t id_count = rc.id_count.value_or(5000);
    const std::size_t ood_count = rc.ood_count.value_or(5000);
    const std::uint64_t seed = rc.seed.value_or(0);
    resolved["id_mean"] = id.mean;
    resolved["id_std"] = id.std;
    resolved["ood_mean"] = ood.mean;
    resolved["ood_std"] = ood.std;
    resolved["id_count"] = id_count;
    resolved["ood_count"] = ood_count;
    resolved["repeats"] = repeats;
    resolved["seed"] = seed;

    std::vector<std::vector<double>> id_draws, ood_draws;
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto flat = [](const FeatureVectors& fs) {
        std::vector<double> xs;
        for (const auto& f : fs) xs.push_back(f[0]);
        return xs;
      };
      id_draws.push_back(flat(SampleGaussian({{id.mean}, id.std, id_count, DeriveSeed(seed, 2 * r)})));
      ood_draws.push_back(flat(SampleGaussian({{ood.mean}, ood.std, ood_count, DeriveSeed(seed, 2 * r + 1)})));
    }
    std::vector<double> thresholds;
    for (int i = 0; i <= 60; ++i) thresholds.push_back(i / 20.0);
    thresholds.push_back(1.96);
    std::sort(thresholds.begin(), thresholds.end());

    WriteCsvHeader(os, ConfigHash(resolved),
                   "threshold,id_acc,ood_acc,fpr,mc_id_acc_mean,mc_id_acc_se,mc_ood_acc_mean,mc_ood_acc_se");
    for (double t : thresholds) {
      const BoundaryAccuracy exact = AnalyticBoundaryAccuracy(id, ood, t);
      std::vector<double> ida, oda;
      for (std::size_t r = 0; r < repeats; ++r) {
        const BoundaryAccuracy e = EmpiricalBoundaryAccuracy(id_draws[r], ood_draws[r], t);
        ida.push_back(e.id_acc);
        oda.push_back(e.ood_acc);
      }
      const auto [im, is] = MeanAndStdError(ida);
      const auto [om, oe] = MeanAndStdError(oda);
      os << Fmt(t) << ',' << Fmt(exact.id_acc) << ',' << Fmt(exact.ood_acc) << ',' << Fmt(exact.fpr) << ','
         << Fmt(im) << ',' << Fmt(is) << ',' << Fmt(om) << ',' << Fmt(oe) << '\n';
    }
    return kExitOk;
  }

  if (a.preset == "fig3" || a.preset == "fig4") {
    const Gaussian1d ood = a.preset == "fig3" ? Gaussian1d{2.0, 0.5} : Gaussian1d{10.0, 0.5};
    const SeededKnnSetup setup = SeededSetup(rc, ood);
    const std::vector<std::size_t> ms =
        rc.accessible.value_or(std::vector<std::size_t>{0, 1, 5, 10, 50, 100, 500});
    resolved["setup"] = ToJson(setup);
    resolved["accessible"] = ms;
    WriteCsvHeader(os, ConfigHash(resolved), "accessible,fpr_mean,fpr_se,id_acceptance");
    for (const auto& res : SweepSeededKnn(setup, ms)) {
      os << res.accessible << ',' << Fmt(res.mean_fpr) << ',' << Fmt(res.std_error) << ','
         << Fmt(res.mean_id_acceptance) << '\n';
    }
    return kExitOk;
  }

  if (a.preset == "clusters") {
    const ClusterSetup setup = ClusterSetupFrom(rc);
    DetectorConfig adaptive = SyntheticDetector(rc);
    DetectorConfig vanilla = adaptive;
    vanilla.adapt = false;
    const std::size_t repeats = rc.repeats.value_or(10);
    const unsigned threads = rc.threads.value_or(0);
    resolved["setup"] = ToJson(setup);
    resolved["detector"] = ToJson(adaptive);
    resolved["repeats"] = repeats;
    WriteCsvHeader(os, ConfigHash(resolved),
                   "method,fpr95_mean,fpr95_se,auroc_mean,auroc_se,id_reeval_mean,id_reeval_se");
    os << "knn," << SummaryRow(Summarize(ClusterRuns(setup, vanilla, repeats, threads))) << '\n';
    os << "adaptive," << SummaryRow(Summarize(ClusterRuns(setup, adaptive, repeats, threads))) << '\n';
    return kExitOk;
  }
  throw UsageError("unknown preset '" + a.preset + "' (expected fig1, fig3, fig4 or clusters)");
}

struct AblateArgs {
  std::string sweep, values, config, train, val, input, out;
};

DetectorConfig WithSweep(DetectorConfig dc, const std::string& sweep, const std::string& value) {
  if (sweep == "k") {
    dc.k = ParseCount(value);
  } else if (sweep == "gamma") {
    if (value == "inf") {
      dc.gamma.reset();
    } else {
      dc.gamma = ParseDouble(value);
    }
  } else if (sweep == "kappa") {
    dc.kappa = ParseDouble(value);
  } else if (sweep == "combinator") {
    dc.combinator = ParseCombinator(value);
  } else if (sweep == "normalize") {
    dc.normalize = ParseOnOff(value);
  } else {
    throw UsageError("unknown sweep '" + sweep + "' (expected k, gamma, kappa, combinator or normalize)");
  }
  dc.Validate();
  return dc;
}

int DoAblate(const AblateArgs& a, std::ostream& out) {
  const RunConfig rc = LoadConfigOrDefault(a.config);
  const DetectorConfig base = a.input.empty() ? SyntheticDetector(rc) : ResolveDetector(rc);
  const auto values = SplitList(a.values);
  if (values.empty()) throw UsageError("--values needs at least one value");
  std::vector<DetectorConfig> configs;
  for (const auto& v : values) configs.push_back(WithSweep(base, a.sweep, v));

  Json resolved = Resolved("ablate", base);
  resolved["sweep"] = a.sweep;
  resolved["values"] = values;
  const unsigned threads = rc.threads.value_or(0);

  std::vector<Summary> rows;
  if (!a.input.empty()) {
    const std::string train_path = Require("--train", a.train, rc.train);
    const std::string val_path = Require("--val", a.val, rc.val);
    const auto train = io::ToDataset("id-train", io::LoadAny(train_path));
    const auto val = io::ToDataset("id-val", io::LoadAny(val_path));
    const auto input = io::ToDataset(std::filesystem::path(a.input).stem().string(), io::LoadAny(a.input));
    resolved["train"] = train_path;
    resolved["val"] = val_path;
    resolved["input"] = a.input;
    for (const auto& dc : configs) {
      ProtocolSpec spec{ProtocolKind::kSingle, {input}, 0};
      rows.push_back(Summarize({RunProtocol(spec, dc, train, val, {threads, false}).report}));
    }
  } else {
    const ClusterSetup setup = ClusterSetupFrom(rc);
    const std::size_t repeats = rc.repeats.value_or(3);
    resolved["setup"] = ToJson(setup);
    resolved["repeats"] = repeats;
    for (const auto& dc : configs) rows.push_back(Summarize(ClusterRuns(setup, dc, repeats, threads)));
  }

  Sink sink(a.out, out);
  WriteCsvHeader(*sink, ConfigHash(resolved),
                 "sweep,value,fpr95_mean,fpr95_se,auroc_mean,auroc_se,id_reeval_mean,id_reeval_se");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    *sink << a.sweep << ',' << values[i] << ',' << SummaryRow(rows[i]) << '\n';
  }
  return kExitOk;
}

struct ConvertArgs {
  std::string from, to, in, out;
};

int DoConvert(const ConvertArgs& a) {
  if (a.in.empty() || a.out.empty()) throw UsageError("convert needs --in and --out");
  io::FeatureFile file;
  if (a.from == "csv") {
    file = io::ReadCsv(a.in);
  } else if (a.from == "oddf") {
    file = io::ReadFeatures(a.in);
  } else {
    throw UsageError("--from must be csv or oddf");
  }
  if (a.to == "oddf") {
    io::WriteFeatures(a.out, file.features, file.labels);
  } else if (a.to == "csv") {
    std::ofstream os(a.out, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::kIoFailure, "cannot open " + a.out + " for writing");
    io::WriteCsv(os, file);
  } else {
    throw UsageError("--to must be csv or oddf");
  }
  return kExitOk;
}

int ExitFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInvalidTarget:
      return kExitUsage;
    default:
      return kExitData;
  }
}

void ReportError(std::ostream& err, std::string_view code, int status, const std::string& message) {
  Json j;
  j["error"] = std::string(code);
  j["exit"] = status;
  j["message"] = message;
  err << j.dump() << '\n';
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Streaming kNN out-of-distribution detection with test-time memory adaptation",
               "oddstream"};
  app.require_subcommand(1);

  CalibrateArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate the decision threshold on ID validation data");
  calibrate->add_option("--train", cal.train, "ID training features (bank)");
  calibrate->add_option("--val", cal.val, "ID validation features");
  calibrate->add_option("--config", cal.config, "JSON run configuration");
  calibrate->add_option("--out", cal.out, "Threshold report path (default: stdout)");

  StreamArgs st;
  auto* stream = app.add_subcommand("stream", "Stream one feature file through the detector");
  stream->add_option("--train", st.train, "ID training features (bank)");
  stream->add_option("--val", st.val, "ID validation features");
  stream->add_option("--input", st.input, "Test features; labels are used for metrics only");
  stream->add_option("--config", st.config, "JSON run configuration");
  stream->add_option("--log", st.log, "JSONL decision log path");
  stream->add_option("--metrics", st.metrics, "Metrics JSON path (default: stdout)");
  stream->add_option("--adapt", st.adapt, "Override adaptation: on|off");
  stream->add_flag("--timing", st.timing, "Record mean decision latency");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Run an evaluation protocol over several datasets");
  eval->add_option("--protocol", ev.protocol, "single|sequential|ood-mixture|id-ood-mixture")->required();
  eval->add_option("--datasets", ev.datasets, "Comma-separated feature files")->required();
  eval->add_option("--config", ev.config, "JSON run configuration");
  eval->add_option("--seed", ev.seed, "Shuffle seed for mixture protocols");
  eval->add_option("--train", ev.train, "ID training features (bank)");
  eval->add_option("--val", ev.val, "ID validation features");
  eval->add_option("--log", ev.log, "JSONL decision log path");
  eval->add_option("--metrics", ev.metrics, "Metrics JSON path (default: stdout)");
  eval->add_flag("--timing", ev.timing, "Record mean decision latency");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "Synthetic Gaussian experiments, emitted as CSV");
  synth->add_option("--preset", sy.preset, "fig1|fig3|fig4|clusters")->required();
  synth->add_option("--config", sy.config, "JSON run configuration");
  synth->add_option("--out", sy.out, "CSV path (default: stdout)");

  AblateArgs ab;
  auto* ablate = app.add_subcommand("ablate", "Hyper-parameter sweeps, emitted as CSV");
  ablate->add_option("--sweep", ab.sweep, "k|gamma|kappa|combinator|normalize")->required();
  ablate->add_option("--values", ab.values, "Comma-separated values to sweep")->required();
  ablate->add_option("--config", ab.config, "JSON run configuration");
  ablate->add_option("--train", ab.train, "ID training features (default: synthetic clusters)");
  ablate->add_option("--val", ab.val, "ID validation features");
  ablate->add_option("--input", ab.input, "Test features");
  ablate->add_option("--out", ab.out, "CSV path (default: stdout)");

  ConvertArgs cv;
  auto* convert = app.add_subcommand("convert", "Convert between CSV and ODDF feature files");
  convert->add_option("--from", cv.from, "csv|oddf")->required();
  convert->add_option("--to", cv.to, "csv|oddf")->required();
  convert->add_option("--in", cv.in, "Input path")->required();
  convert->add_option("--out", cv.out, "Output path")->required();

  std::vector<const char*> argv{"oddstream"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << app.help();
    ReportError(err, "UsageError", kExitUsage, e.what());
    return kExitUsage;
  }

  try {
    if (*calibrate) return DoCalibrate(cal, out);
    if (*stream) return DoStream(st, out, err);
    if (*eval) return DoEval(ev, out, err);
    if (*synth) return DoSynth(sy, out);
    if (*ablate) return DoAblate(ab, out);
    if (*convert) return DoConvert(cv);
  } catch (const UsageError& e) {
    ReportError(err, "UsageError", kExitUsage, e.what());
    return kExitUsage;
  } catch (const Error& e) {
    const int status = ExitFor(e.code());
    ReportError(err, ErrorCodeName(e.code()), status, e.what());
    return status;
  } catch (const std::exception& e) {
    ReportError(err, "Internal", kExitInternal, e.what());
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace oddstream::cli
