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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oddstream {

struct ScoredPopulation {
  std::vector<double> id_scores;
  std::vector<double> ood_scores;
};

struct DatasetMetrics {
  double fpr95 = 0.0;
  double auroc = 0.0;
  std::size_t count = 0;
};

struct EvalReport {
  double fpr95 = 0.0;
  double auroc = 0.0;
  double lambda = 0.0;
  std::size_t bank_size_initial = 0;
  std::size_t bank_size_final = 0;
  std::optional<double> id_reeval_accuracy;
  std::map<std::string, DatasetMetrics> per_dataset;
  std::optional<double> mean_inference_micros;
};

/// Fraction of OOD scores accepted (score >= threshold) once the threshold
/// is calibrated on the ID scores at `tpr_target`.
double FprAtTpr(const ScoredPopulation& pop, double tpr_target = 0.95);

/// Fraction of `ood_scores` at or above `threshold`.
double AcceptedFraction(std::span<const double> ood_scores, double threshold);

/// Normalized Mann-Whitney U: P(id > ood) + P(id == ood) / 2.
double Auroc(const ScoredPopulation& pop);

}  // namespace oddstream
