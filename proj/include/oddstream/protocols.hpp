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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oddstream/detector.hpp"
#include "oddstream/geometry.hpp"
#include "oddstream/metrics.hpp"
#include "oddstream/scoring.hpp"

namespace oddstream {

// ---------------------------------------------------------------------------
// Streaming evaluation protocols
// ---------------------------------------------------------------------------

/// A named feature set with per-sample ground truth. The truth labels only
/// feed metrics; the detector never sees them.
struct DatasetRef {
  std::string name;
  FeatureVectors features;
  std::vector<Truth> truth;

  static DatasetRef Uniform(std::string name, FeatureVectors features, Truth truth);
};

enum class ProtocolKind { kSingle, kSequential, kOodMixture, kIdOodMixture };

std::string_view ProtocolName(ProtocolKind kind);
ProtocolKind ParseProtocol(std::string_view name);

struct ProtocolSpec {
  ProtocolKind kind = ProtocolKind::kSingle;
  std::vector<DatasetRef> datasets;
  std::uint64_t shuffle_seed = 0;
};

struct ProtocolOptions {
  unsigned threads = 0;
  bool timing = false;
};

struct ProtocolRun {
  EvalReport report;
  std::vector<DecisionRecord> log;
  /// Dataset index of each log row.
  std::vector<std::size_t> source;
  /// ID validation scores against the initial bank.
  std::vector<double> calibration_scores;
};

/// Streams the protocol's samples through a fresh detector built on
/// `id_train` and calibrated on `id_val`.
///
/// Single and Sequential keep the listed order (Sequential carries the bank
/// from one dataset to the next); the mixtures shuffle the pooled samples
/// with `shuffle_seed`. Metrics use the scores recorded at decision time:
/// FPR95 is the fraction of OOD-labeled samples judged ID, and AUROC ranks
/// them against the streamed ID-labeled scores, or against the calibration
/// scores when the stream has no ID samples. Per-dataset entries are
/// reported for every dataset containing OOD samples.
ProtocolRun RunProtocol(const ProtocolSpec& spec, const DetectorConfig& config,
                        const DatasetRef& id_train, const DatasetRef& id_val,
                        const ProtocolOptions& options = {});

// ---------------------------------------------------------------------------
// Synthetic Gaussian experiments
// ---------------------------------------------------------------------------

struct GaussianSpec {
  std::vector<double> mean;  // dimension is mean.size()
  double std = 1.0;          // isotropic standard deviation
  std::size_t count = 0;
  std::uint64_t seed = 0;
};

FeatureVectors SampleGaussian(const GaussianSpec& spec);

struct Gaussian1d {
  double mean = 0.0;
  double std = 1.0;
};

struct BoundaryAccuracy {
  double id_acc = 0.0;
  double ood_acc = 0.0;
  double fpr = 0.0;
};

/// Standard normal CDF.
double NormalCdf(double x);

/// Closed-form accuracies of the rule "x < threshold means ID".
BoundaryAccuracy AnalyticBoundaryAccuracy(Gaussian1d id, Gaussian1d ood, double threshold);

/// The same accuracies measured on samples.
BoundaryAccuracy EmpiricalBoundaryAccuracy(std::span<const double> id_samples,
                                           std::span<const double> ood_samples, double threshold);

/// kNN detection with m labeled OOD samples seeded into the bank before
/// testing, no online augmentation. Features are 1-D and unnormalized.
struct SeededKnnSetup {
  Gaussian1d id{0.0, 1.0};
  Gaussian1d ood{2.0, 0.5};
  std::size_t id_count = 5000;
  std::size_t val_count = 5000;
  std::size_t ood_test_count = 5000;
  std::size_t k = 100;
  double kappa = 100.0;
  std::size_t repeats = 20;
  double tpr_target = 0.95;
  std::uint64_t seed = 0;
  unsigned threads = 0;
};

struct SeededKnnResult {
  std::size_t accessible = 0;
  double mean_fpr = 0.0;
  double std_error = 0.0;
  std::vector<double> fprs;  // one per repeat
  double mean_id_acceptance = 0.0;  // held-out ID samples at or above lambda
};

/// FPR for one repeat with `accessible` seeded OOD samples. Lambda is
/// calibrated on the ID-only bank before seeding and then held fixed. Repeat
/// r draws its data from DeriveSeed(setup.seed, r); the seeded samples are a
/// prefix of a fixed per-repeat pool, so larger m strictly extends smaller m.
double SeededKnnFpr(const SeededKnnSetup& setup, std::size_t accessible, std::size_t repeat);

SeededKnnResult RunSeededKnn(const SeededKnnSetup& setup, std::size_t accessible);

std::vector<SeededKnnResult> SweepSeededKnn(const SeededKnnSetup& setup,
                                            const std::vector<std::size_t>& accessible);

/// Overlapping d-dimensional ID / OOD clusters streamed through one detector.
struct ClusterSetup {
  std::size_t dim = 8;
  double id_mean = 0.0;
  double id_std = 1.0;
  double ood_mean = 1.5;
  double ood_std = 0.70710678118654752440;  // covariance 0.5 * I
  std::size_t bank_count = 5000;
  std::size_t val_count = 1000;
  std::size_t stream_count = 2000;
  std::uint64_t seed = 0;
};

struct ClusterData {
  DatasetRef train;
  DatasetRef val;
  DatasetRef stream;
};

ClusterData MakeClusterData(const ClusterSetup& setup);

/// Single-protocol run of the cluster stream under `config`. The clusters
/// differ mostly in radius, which normalization projects away, so callers
/// normally run them with `config.normalize = false`.
ProtocolRun RunClusterExperiment(const ClusterSetup& setup, const DetectorConfig& config,
                                 unsigned threads = 0);

/// Sample mean and standard error of the mean.
std::pair<double, double> MeanAndStdError(std::span<const double> values);

}  // namespace oddstream
