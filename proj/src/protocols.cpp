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

#include "oddstream/protocols.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <numeric>
#include <thread>

#include "oddstream/error.hpp"
#include "oddstream/random.hpp"

namespace oddstream {

namespace {

unsigned ResolveThreads(unsigned requested, std::size_t jobs) {
  unsigned t = requested == 0 ? std::max(1u, std::thread::hardware_concurrency()) : requested;
  return static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(jobs, 1)));
}

// Runs job(i) for i in [0, jobs) on a small worker pool; first error wins.
void ParallelFor(std::size_t jobs, unsigned threads, const std::function<void(std::size_t)>& job) {
  threads = ResolveThreads(threads, jobs);
  if (threads <= 1) {
    for (std::size_t i = 0; i < jobs; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < jobs && !failed; i = next++) {
        try {
          job(i);
        } catch (...) {
          if (!failed.exchange(true)) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

void RequireFiniteStd(double std) {
  if (!(std > 0.0) || !std::isfinite(std)) {
    throw Error(ErrorCode::kNonPositiveStd, "standard deviation must be > 0");
  }
}

FeatureVectors Sample1d(Gaussian1d g, std::size_t count, std::uint64_t seed) {
  return SampleGaussian({{g.mean}, g.std, count, seed});
}

}  // namespace

DatasetRef DatasetRef::Uniform(std::string name, FeatureVectors features, Truth truth) {
  DatasetRef d{std::move(name), std::move(features), {}};
  d.truth.assign(d.features.size(), truth);
  return d;
}

std::string_view ProtocolName(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::kSingle: return "single";
    case ProtocolKind::kSequential: return "sequential";
    case ProtocolKind::kOodMixture: return "ood-mixture";
    case ProtocolKind::kIdOodMixture: return "id-ood-mixture";
  }
  return "unknown";
}

ProtocolKind ParseProtocol(std::string_view name) {
  for (auto kind : {ProtocolKind::kSingle, ProtocolKind::kSequential, ProtocolKind::kOodMixture,
                    ProtocolKind::kIdOodMixture}) {
    if (ProtocolName(kind) == name) return kind;
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown protocol '" + std::string(name) + "'");
}

ProtocolRun RunProtocol(const ProtocolSpec& spec, const DetectorConfig& config,
                        const DatasetRef& id_train, const DatasetRef& id_val,
                        const ProtocolOptions& options) {
  if (spec.datasets.empty()) throw Error(ErrorCode::kEmptyDataset, "protocol has no datasets");
  if (spec.kind == ProtocolKind::kSingle && spec.datasets.size() != 1) {
    throw Error(ErrorCode::kInvalidConfig, "single protocol takes exactly one dataset");
  }
  if (id_train.features.empty()) throw Error(ErrorCode::kEmptyDataset, "ID training set is empty");
  if (id_val.features.empty()) throw Error(ErrorCode::kEmptyDataset, "ID validation set is empty");
  const Eigen::Index dim = id_train.features.front().size();
  for (const auto& d : spec.datasets) {
    if (d.features.empty()) throw Error(ErrorCode::kEmptyDataset, "dataset '" + d.name + "' is empty");
    if (d.truth.size() != d.features.size()) {
      throw Error(ErrorCode::kMissingLabel, "dataset '" + d.name + "' has mismatched truth labels");
    }
    for (const auto& f : d.features) {
      if (f.size() != dim) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "dataset '" + d.name + "' has dimension " + std::to_string(f.size()) +
                        ", bank has " + std::to_string(dim));
      }
    }
  }

  ProtocolRun run;
  Detector<double> detector(id_train.features, config);
  run.calibration_scores = detector.Calibrate(id_val.features, options.threads);
  run.report.lambda = detector.lambda();
  run.report.bank_size_initial = detector.bank().size();

  // (dataset, row) pairs in stream order.
  std::vector<std::pair<std::size_t, std::size_t>> order;
  for (std::size_t d = 0; d < spec.datasets.size(); ++d) {
    for (std::size_t i = 0; i < spec.datasets[d].features.size(); ++i) order.emplace_back(d, i);
  }
  if (spec.kind == ProtocolKind::kOodMixture || spec.kind == ProtocolKind::kIdOodMixture) {
    Rng rng(spec.shuffle_seed);
    rng.Shuffle(order);
  }

  double elapsed = 0.0;
  run.log.reserve(order.size());
  run.source.reserve(order.size());
  for (const auto& [d, i] : order) {
    const FeatureVectors one{spec.datasets[d].features[i]};
    auto records = detector.ProcessStream(one, options.timing ? &elapsed : nullptr);
    run.log.push_back(records.front());
    run.source.push_back(d);
  }

  std::vector<double> stream_id;
  std::vector<double> stream_ood;
  std::vector<std::vector<double>> ood_by_dataset(spec.datasets.size());
  for (std::size_t r = 0; r < order.size(); ++r) {
    const auto [d, i] = order[r];
    const double s = run.log[r].score;
    if (spec.datasets[d].truth[i] == Truth::kOod) {
      stream_ood.push_back(s);
      ood_by_dataset[d].push_back(s);
    } else {
      stream_id.push_back(s);
    }
  }
  if (stream_ood.empty()) {
    throw Error(ErrorCode::kEmptyDataset, "stream contains no OOD-labeled samples");
  }
  const std::vector<double>& id_reference = stream_id.empty() ? run.calibration_scores : stream_id;

  const double lambda = detector.lambda();
  run.report.fpr95 = AcceptedFraction(stream_ood, lambda);
  run.report.auroc = Auroc({id_reference, stream_ood});
  for (std::size_t d = 0; d < spec.datasets.size(); ++d) {
    if (ood_by_dataset[d].empty()) continue;
    DatasetMetrics m;
    m.fpr95 = AcceptedFraction(ood_by_dataset[d], lambda);
    m.auroc = Auroc({id_reference, ood_by_dataset[d]});
    m.count = spec.datasets[d].features.size();
    run.report.per_dataset[spec.datasets[d].name] = m;
  }
  run.report.bank_size_final = detector.bank().size();
  run.report.id_reeval_accuracy = detector.ReevaluateId(id_val.features, options.threads);
  if (options.timing) {
    run.report.mean_inference_micros = elapsed / static_cast<double>(order.size());
  }
  return run;
}

FeatureVectors SampleGaussian(const GaussianSpec& spec) {
  RequireFiniteStd(spec.std);
  FeatureVectors out;
  if (spec.count == 0) return out;
  if (spec.mean.empty()) throw Error(ErrorCode::kInvalidConfig, "Gaussian mean must be non-empty");
  const auto dim = static_cast<Eigen::Index>(spec.mean.size());
  Rng rng(spec.seed);
  out.reserve(spec.count);
  for (std::size_t n = 0; n < spec.count; ++n) {
    FeatureVector v(dim);
    for (Eigen::Index j = 0; j < dim; ++j) v[j] = spec.mean[static_cast<std::size_t>(j)] + spec.std * rng.Normal();
    out.push_back(std::move(v));
  }
  return out;
}

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

BoundaryAccuracy AnalyticBoundaryAccuracy(Gaussian1d id, Gaussian1d ood, double threshold) {
  RequireFiniteStd(id.std);
  RequireFiniteStd(ood.std);
  BoundaryAccuracy a;
  a.id_acc = NormalCdf((threshold - id.mean) / id.std);
  a.fpr = NormalCdf((threshold - ood.mean) / ood.std);
  a.ood_acc = 1.0 - a.fpr;
  return a;
}

BoundaryAccuracy EmpiricalBoundaryAccuracy(std::span<const double> id_samples,
                                           std::span<const double> ood_samples, double threshold) {
  if (id_samples.empty() || ood_samples.empty()) {
    throw Error(ErrorCode::kEmptyInput, "empirical accuracy needs samples from both distributions");
  }
  const auto below = [threshold](std::span<const double> xs) {
    return static_cast<double>(std::count_if(xs.begin(), xs.end(),
                                             [threshold](double x) { return x < threshold; })) /
           static_cast<double>(xs.size());
  };
  BoundaryAccuracy a;
  a.id_acc = below(id_samples);
  a.fpr = below(ood_samples);
  a.ood_acc = 1.0 - a.fpr;
  return a;
}

namespace {

struct SeededRepeat {
  FeatureVectors bank;
  FeatureVectors val;
  FeatureVectors test;
  FeatureVectors pool;
};

struct SeededOutcome {
  double fpr;
  double id_acceptance;
};

SeededRepeat DrawSeededRepeat(const SeededKnnSetup& setup, std::size_t pool_size, std::size_t repeat) {
  const std::uint64_t base = DeriveSeed(setup.seed, repeat);
  return {Sample1d(setup.id, setup.id_count, DeriveSeed(base, 0)),
          Sample1d(setup.id, setup.val_count, DeriveSeed(base, 1)),
          Sample1d(setup.ood, setup.ood_test_count, DeriveSeed(base, 2)),
          Sample1d(setup.ood, pool_size, DeriveSeed(base, 3))};
}

// Algorithm input: lambda comes from the ID-only bank and stays fixed once the
// accessible OOD samples are seeded, as it does for a streaming detector.
SeededOutcome SeededFpr(const SeededKnnSetup& setup, const SeededRepeat& data, std::size_t accessible) {
  DetectorConfig config;
  config.k = setup.k;
  config.kappa = setup.kappa;
  config.gamma.reset();
  config.adapt = false;
  config.normalize = false;
  config.tpr_target = setup.tpr_target;

  MemoryBankd bank = MemoryBankd::FromFeatures(data.bank, false);
  bank.Reserve(data.bank.size() + accessible);
  Detector<double> detector(std::move(bank), config);
  detector.Calibrate(data.val, 1);
  for (std::size_t i = 0; i < accessible; ++i) {
    detector.mutable_bank().Insert(data.pool[i], setup.kappa, Provenance::kAugmentedOod);
  }
  const double lambda = detector.lambda();
  return {AcceptedFraction(detector.ScoreAll(data.test, 1), lambda),
          AcceptedFraction(detector.ScoreAll(data.val, 1), lambda)};
}

void ValidateSeeded(const SeededKnnSetup& setup) {
  if (setup.id_count == 0 || setup.val_count == 0 || setup.ood_test_count == 0 || setup.repeats == 0) {
    throw Error(ErrorCode::kInvalidCount, "sample counts and repeats must be positive");
  }
  if (setup.k == 0) throw Error(ErrorCode::kInvalidCount, "k must be positive");
  RequireFiniteStd(setup.id.std);
  RequireFiniteStd(setup.ood.std);
}

}  // namespace

double SeededKnnFpr(const SeededKnnSetup& setup, std::size_t accessible, std::size_t repeat) {
  ValidateSeeded(setup);
  return SeededFpr(setup, DrawSeededRepeat(setup, accessible, repeat), accessible).fpr;
}

std::vector<SeededKnnResult> SweepSeededKnn(const SeededKnnSetup& setup,
                                            const std::vector<std::size_t>& accessible) {
  ValidateSeeded(setup);
  const std::size_t pool = accessible.empty() ? 0 : *std::max_element(accessible.begin(), accessible.end());
  // outcomes[repeat][j] for accessible[j]
  std::vector<std::vector<SeededOutcome>> outcomes(setup.repeats, std::vector<SeededOutcome>(accessible.size()));
  ParallelFor(setup.repeats, setup.threads, [&](std::size_t r) {
    const SeededRepeat data = DrawSeededRepeat(setup, pool, r);
    for (std::size_t j = 0; j < accessible.size(); ++j) outcomes[r][j] = SeededFpr(setup, data, accessible[j]);
  });
  std::vector<SeededKnnResult> out;
  for (std::size_t j = 0; j < accessible.size(); ++j) {
    SeededKnnResult res;
    res.accessible = accessible[j];
    std::vector<double> accepted;
    for (std::size_t r = 0; r < setup.repeats; ++r) {
      res.fprs.push_back(outcomes[r][j].fpr);
      accepted.push_back(outcomes[r][j].id_acceptance);
    }
    std::tie(res.mean_fpr, res.std_error) = MeanAndStdError(res.fprs);
    res.mean_id_acceptance = MeanAndStdError(accepted).first;
    out.push_back(std::move(res));
  }
  return out;
}

SeededKnnResult RunSeededKnn(const SeededKnnSetup& setup, std::size_t accessible) {
  return SweepSeededKnn(setup, {accessible}).front();
}

ClusterData MakeClusterData(const ClusterSetup& setup) {
  if (setup.dim == 0 || setup.bank_count == 0 || setup.val_count == 0 || setup.stream_count == 0) {
    throw Error(ErrorCode::kInvalidCount, "cluster dimensions and counts must be positive");
  }
  const std::vector<double> id_mean(setup.dim, setup.id_mean);
  const std::vector<double> ood_mean(setup.dim, setup.ood_mean);
  ClusterData data;
  data.train = DatasetRef::Uniform(
      "id-train", SampleGaussian({id_mean, setup.id_std, setup.bank_count, DeriveSeed(setup.seed, 0)}),
      Truth::kId);
  data.val = DatasetRef::Uniform(
      "id-val", SampleGaussian({id_mean, setup.id_std, setup.val_count, DeriveSeed(setup.seed, 1)}),
      Truth::kId);
  data.stream = DatasetRef::Uniform(
      "ood-cluster",
      SampleGaussian({ood_mean, setup.ood_std, setup.stream_count, DeriveSeed(setup.seed, 2)}),
      Truth::kOod);
  return data;
}

ProtocolRun RunClusterExperiment(const ClusterSetup& setup, const DetectorConfig& config,
                                 unsigned threads) {
  ClusterData data = MakeClusterData(setup);
  ProtocolSpec spec{ProtocolKind::kSingle, {std::move(data.stream)}, setup.seed};
  return RunProtocol(spec, config, data.train, data.val, {threads, false});
}

std::pair<double, double> MeanAndStdError(std::span<const double> values) {
  if (values.empty()) return {0.0, 0.0};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

}  // namespace oddstream
