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

#include "oddstream/metrics.hpp"

#include <algorithm>
#include <cstdint>

#include "oddstream/detector.hpp"
#include "oddstream/error.hpp"

namespace oddstream {

namespace {

void RequireNonEmpty(const ScoredPopulation& pop) {
  if (pop.id_scores.empty() || pop.ood_scores.empty()) {
    throw Error(ErrorCode::kEmptyScores, "both ID and OOD score lists must be non-empty");
  }
}

}  // namespace

double AcceptedFraction(std::span<const double> ood_scores, double threshold) {
  if (ood_scores.empty()) throw Error(ErrorCode::kEmptyScores, "no OOD scores");
  const auto accepted = std::count_if(ood_scores.begin(), ood_scores.end(),
                                      [threshold](double s) { return s >= threshold; });
  return static_cast<double>(accepted) / static_cast<double>(ood_scores.size());
}

double FprAtTpr(const ScoredPopulation& pop, double tpr_target) {
  RequireNonEmpty(pop);
  const double threshold = CalibrateThreshold(pop.id_scores, tpr_target);
  return AcceptedFraction(pop.ood_scores, threshold);
}

double Auroc(const ScoredPopulation& pop) {
  RequireNonEmpty(pop);
  std::vector<double> id = pop.id_scores;
  std::sort(id.begin(), id.end());
  // Twice the U statistic, kept integral so the result is a single rounding.
  std::uint64_t twice_u = 0;
  for (double o : pop.ood_scores) {
    const auto lo = std::lower_bound(id.begin(), id.end(), o);
    const auto hi = std::upper_bound(lo, id.end(), o);
    twice_u += 2 * static_cast<std::uint64_t>(id.end() - hi) + static_cast<std::uint64_t>(hi - lo);
  }
  const double pairs = static_cast<double>(id.size()) * static_cast<double>(pop.ood_scores.size());
  return static_cast<double>(twice_u) / (2.0 * pairs);
}

}  // namespace oddstream
