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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "oddstream/error.hpp"
#include "oddstream/geometry.hpp"
#include "oddstream/memory_bank.hpp"
#include "oddstream/scoring.hpp"

namespace oddstream {

enum class Verdict : std::uint8_t { kId, kOod };
enum class Augmentation : std::uint8_t { kNone, kAsId, kAsOod };

constexpr std::string_view VerdictName(Verdict v) { return v == Verdict::kId ? "id" : "ood"; }

constexpr std::string_view AugmentationName(Augmentation a) {
  switch (a) {
    case Augmentation::kNone: return "none";
    case Augmentation::kAsId: return "as-id";
    case Augmentation::kAsOod: return "as-ood";
  }
  return "unknown";
}

struct DetectorConfig {
  std::size_t k = 50;
  /// Decision threshold. Unset until calibrated (or supplied).
  std::optional<double> lambda;
  /// Selection margin. Unset means "never augment" (an infinite margin).
  std::optional<double> gamma = 1.5;
  double kappa = 5.0;
  Combinator combinator = Combinator::kAvg;
  ScoreVariant variant = ScoreVariant::kStandard;
  bool normalize = true;
  bool adapt = true;
  double tpr_target = 0.95;

  /// k = 50, margin 1.5, OOD scale 5: tuned for ~50k-sample training sets.
  static DetectorConfig CifarScale() { return {}; }

  /// k = 1000, margin 1.0, OOD scale 10: tuned for ~1M-sample training sets.
  static DetectorConfig ImagenetScale() {
    DetectorConfig c;
    c.k = 1000;
    c.gamma = 1.0;
    c.kappa = 10.0;
    return c;
  }

  void Validate() const {
    if (k < 1) throw Error(ErrorCode::kInvalidConfig, "k must be >= 1");
    if (gamma && !(*gamma >= 1.0 && std::isfinite(*gamma))) {
      throw Error(ErrorCode::kInvalidConfig, "gamma must be a finite value >= 1 (or unset)");
    }
    if (!(kappa >= 1.0 && std::isfinite(kappa))) {
      throw Error(ErrorCode::kInvalidConfig, "kappa must be a finite value >= 1");
    }
    if (lambda && !(*lambda <= 0.0 && std::isfinite(*lambda))) {
      throw Error(ErrorCode::kInvalidConfig, "lambda must be finite and <= 0");
    }
    if (!(tpr_target > 0.0 && tpr_target <= 1.0)) {
      throw Error(ErrorCode::kInvalidTarget, "tpr_target must lie in (0, 1]");
    }
  }
};

struct DecisionRecord {
  std::size_t sample_index = 0;
  double score = 0.0;
  Verdict verdict = Verdict::kId;
  Augmentation augmentation = Augmentation::kNone;
  std::size_t bank_size_before = 0;

  friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

/// Lower empirical quantile: the largest score v such that at least
/// `tpr_target` of `scores` are >= v.
inline double CalibrateThreshold(std::span<const double> scores, double tpr_target = 0.95) {
  if (scores.empty()) throw Error(ErrorCode::kEmptyScores, "calibration needs >= 1 score");
  if (!(tpr_target > 0.0 && tpr_target <= 1.0)) {
    throw Error(ErrorCode::kInvalidTarget, "tpr_target must lie in (0, 1]");
  }
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t n = sorted.size();
  const auto fraction = [n](std::size_t m) { return static_cast<double>(m) / static_cast<double>(n); };
  auto m = static_cast<std::size_t>(std::ceil(tpr_target * static_cast<double>(n)));
  m = std::clamp<std::size_t>(m, 1, n);
  while (m > 1 && fraction(m - 1) >= tpr_target) --m;
  while (m < n && fraction(m) < tpr_target) ++m;
  return sorted[m - 1];
}

/// True when `score` falls below the OOD gate lambda * gamma.
inline bool OodGate(double score, double lambda, double gamma) { return score < lambda * gamma; }

/// True when `score` rises above the ID gate lambda / gamma.
inline bool IdGate(double score, double lambda, double gamma) { return score > lambda / gamma; }

/// Streaming kNN OOD detector with margin-gated memory augmentation.
///
/// Each test sample is scored against the bank, judged ID iff its score is
/// at least lambda, and then (when adaptation is on) appended to the bank:
/// as a scale-kappa OOD entry when the score is below lambda * gamma, as a
/// scale-1 ID entry when it is above lambda / gamma, and not at all in the
/// dead zone between. A sample never influences its own decision.
template <typename Scalar = double>
class Detector {
 public:
  using Vector = Feature<Scalar>;

  Detector(MemoryBank<Scalar> bank, DetectorConfig config)
      : bank_(std::move(bank)), config_(std::move(config)) {
    config_.Validate();
    if (bank_.normalizes() != config_.normalize) {
      throw Error(ErrorCode::kInvalidConfig, "bank normalization flag disagrees with config");
    }
  }

  Detector(const FeatureList<Scalar>& id_train, DetectorConfig config)
      : Detector(MemoryBank<Scalar>::FromFeatures(id_train, config.normalize), config) {}

  const MemoryBank<Scalar>& bank() const { return bank_; }
  MemoryBank<Scalar>& mutable_bank() { return bank_; }
  const DetectorConfig& config() const { return config_; }
  bool calibrated() const { return config_.lambda.has_value(); }
  std::size_t stream_position() const { return position_; }

  double lambda() const {
    if (!config_.lambda) throw Error(ErrorCode::kInvalidConfig, "detector is not calibrated");
    return *config_.lambda;
  }

  /// A zero threshold collapses both gates onto the sign of the score.
  bool degenerate_threshold() const { return calibrated() && *config_.lambda == 0.0; }

  void set_lambda(double lambda) {
    if (!(lambda <= 0.0 && std::isfinite(lambda))) {
      throw Error(ErrorCode::kInvalidConfig, "lambda must be finite and <= 0");
    }
    config_.lambda = lambda;
  }

  void set_adapt(bool adapt) { config_.adapt = adapt; }

  /// Score of a raw (not yet normalized) feature against the current bank.
  double ScoreOf(const Vector& x) const { return ScorePrepared(bank_.Prepare(x)); }

  std::vector<double> ScoreAll(const FeatureList<Scalar>& xs, unsigned threads = 0) const {
    std::vector<double> out(xs.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(1, xs.size())));
    if (threads <= 1) {
      for (std::size_t i = 0; i < xs.size(); ++i) out[i] = ScoreOf(xs[i]);
      return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    const std::size_t chunk = (xs.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        try {
          const std::size_t end = std::min(xs.size(), (t + 1) * chunk);
          for (std::size_t i = t * chunk; i < end; ++i) out[i] = ScoreOf(xs[i]);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
    return out;
  }

  /// Sets lambda from ID validation scores unless one was supplied. Returns
  /// the validation scores against the current bank.
  std::vector<double> Calibrate(const FeatureList<Scalar>& id_val, unsigned threads = 0) {
    if (id_val.empty()) throw Error(ErrorCode::kEmptyInput, "calibration set is empty");
    std::vector<double> scores = ScoreAll(id_val, threads);
    if (!config_.lambda) set_lambda(CalibrateThreshold(scores, config_.tpr_target));
    return scores;
  }

  /// Scores and judges `x` without touching the bank.
  DecisionRecord Decide(const Vector& x) const {
    DecisionRecord r;
    r.sample_index = position_;
    r.bank_size_before = bank_.size();
    r.score = ScoreOf(x);
    r.verdict = r.score >= lambda() ? Verdict::kId : Verdict::kOod;
    return r;
  }

  /// Applies the margin gates to an already-scored sample.
  Augmentation Augment(const Vector& x, double score) {
    if (!config_.adapt || !config_.gamma) return Augmentation::kNone;
    const double lam = lambda();
    const double gamma = *config_.gamma;
    if (OodGate(score, lam, gamma)) {
      bank_.Insert(bank_.Prepare(x), static_cast<Scalar>(config_.kappa), Provenance::kAugmentedOod);
      return Augmentation::kAsOod;
    }
    if (IdGate(score, lam, gamma)) {
      bank_.Insert(bank_.Prepare(x), Scalar(1), Provenance::kAugmentedId);
      return Augmentation::kAsId;
    }
    return Augmentation::kNone;
  }

  DecisionRecord Step(const Vector& x) {
    DecisionRecord r = Decide(x);
    r.augmentation = Augment(x, r.score);
    ++position_;
    return r;
  }

  /// Sequential decide-then-augment over `samples`. When `elapsed_micros`
  /// is given, wall-clock time spent inside Decide() is accumulated there.
  std::vector<DecisionRecord> ProcessStream(const FeatureList<Scalar>& samples,
                                            double* elapsed_micros = nullptr) {
    std::vector<DecisionRecord> out;
    out.reserve(samples.size());
    for (const auto& x : samples) {
      if (elapsed_micros) {
        const auto t0 = std::chrono::steady_clock::now();
        DecisionRecord r = Decide(x);
        const auto t1 = std::chrono::steady_clock::now();
        *elapsed_micros += std::chrono::duration<double, std::micro>(t1 - t0).count();
        r.augmentation = Augment(x, r.score);
        ++position_;
        out.push_back(r);
      } else {
        out.push_back(Step(x));
      }
    }
    return out;
  }

  /// Fraction of `id_val` still judged ID against the current (possibly
  /// augmented) bank with the original threshold.
  double ReevaluateId(const FeatureList<Scalar>& id_val, unsigned threads = 0) const {
    if (id_val.empty()) throw Error(ErrorCode::kEmptyInput, "reevaluation set is empty");
    const double lam = lambda();
    const std::vector<double> scores = ScoreAll(id_val, threads);
    const auto accepted = std::count_if(scores.begin(), scores.end(),
                                        [lam](double s) { return s >= lam; });
    return static_cast<double>(accepted) / static_cast<double>(scores.size());
  }

 private:
  double ScorePrepared(const Vector& z) const {
    const NeighborList<Scalar> nn = bank_.Query(z, config_.k);
    const std::span<const Neighbor<Scalar>> view(nn);
    if (config_.variant == ScoreVariant::kLogRatio) {
      return static_cast<double>(LogRatioScore<Scalar>(view));
    }
    return static_cast<double>(Score<Scalar>(view, config_.combinator));
  }

  MemoryBank<Scalar> bank_;
  DetectorConfig config_;
  std::size_t position_ = 0;
};

}  // namespace oddstream
