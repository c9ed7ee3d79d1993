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
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "oddstream/error.hpp"
#include "oddstream/memory_bank.hpp"

namespace oddstream {

/// How the k scaled neighbor distances collapse into one score.
enum class Combinator { kAvg, kKth, kMedian };

/// kStandard is the negative mean scaled distance. kLogRatio lets neighbors
/// labeled OOD contribute with a positive sign; it is experimental and
/// unreliable when the OOD labels come from the detector's own decisions
/// (no OOD entries early in a stream, and mislabeled entries later).
enum class ScoreVariant { kStandard, kLogRatio };

enum class Truth : std::uint8_t { kId, kOod };

constexpr std::string_view CombinatorName(Combinator c) {
  switch (c) {
    case Combinator::kAvg: return "k-avg";
    case Combinator::kKth: return "k-th";
    case Combinator::kMedian: return "k-median";
  }
  return "unknown";
}

inline Combinator ParseCombinator(std::string_view name) {
  if (name == "k-avg" || name == "avg") return Combinator::kAvg;
  if (name == "k-th" || name == "kth") return Combinator::kKth;
  if (name == "k-median" || name == "median") return Combinator::kMedian;
  throw Error(ErrorCode::kInvalidConfig, "unknown combinator '" + std::string(name) + "'");
}

constexpr std::string_view ScoreVariantName(ScoreVariant v) {
  return v == ScoreVariant::kStandard ? "standard" : "log-ratio";
}

inline ScoreVariant ParseScoreVariant(std::string_view name) {
  if (name == "standard") return ScoreVariant::kStandard;
  if (name == "log-ratio") return ScoreVariant::kLogRatio;
  throw Error(ErrorCode::kInvalidConfig, "unknown score variant '" + std::string(name) + "'");
}

/// 0-based position used by the median combinator: the floor(k/2)-th
/// neighbor in 1-based ascending order, clamped to the first for k = 1.
constexpr std::size_t MedianPosition(std::size_t k) { return k / 2 == 0 ? 0 : k / 2 - 1; }

/// Weighted negative-distance score over a neighbor list sorted ascending by
/// distance. k is the number of neighbors supplied.
template <typename Scalar>
Scalar Score(std::span<const Neighbor<Scalar>> neighbors, Combinator combinator) {
  if (neighbors.empty()) throw Error(ErrorCode::kEmptyNeighbors, "score needs >= 1 neighbor");
  switch (combinator) {
    case Combinator::kAvg: {
      Scalar sum(0);
      for (const auto& n : neighbors) sum -= n.dist * n.scale;
      return sum / static_cast<Scalar>(neighbors.size());
    }
    case Combinator::kKth: {
      const auto& last = neighbors.back();
      return -last.dist * last.scale;
    }
    case Combinator::kMedian: {
      const auto& mid = neighbors[MedianPosition(neighbors.size())];
      return -mid.dist * mid.scale;
    }
  }
  return Scalar(0);
}

template <typename Scalar>
Scalar Score(const NeighborList<Scalar>& neighbors, Combinator combinator) {
  return Score(std::span<const Neighbor<Scalar>>(neighbors), combinator);
}

/// Log-likelihood-ratio score with explicit per-neighbor labels. Both sums
/// are divided by the total neighbor count. A missing label is an error.
template <typename Scalar>
Scalar LogRatioScore(std::span<const Neighbor<Scalar>> neighbors,
                     std::span<const std::optional<Truth>> labels) {
  if (neighbors.empty()) throw Error(ErrorCode::kEmptyNeighbors, "score needs >= 1 neighbor");
  if (labels.size() != neighbors.size()) {
    throw Error(ErrorCode::kMissingLabel, "expected " + std::to_string(neighbors.size()) +
                                              " labels, got " + std::to_string(labels.size()));
  }
  Scalar sum(0);
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    if (!labels[i]) {
      throw Error(ErrorCode::kMissingLabel, "neighbor " + std::to_string(i) + " has no label");
    }
    const Scalar term = neighbors[i].dist * neighbors[i].scale;
    sum += *labels[i] == Truth::kOod ? term : -term;
  }
  return sum / static_cast<Scalar>(neighbors.size());
}

/// Estimated-label mode: entries inserted as detected OOD count as OOD.
template <typename Scalar>
Scalar LogRatioScore(std::span<const Neighbor<Scalar>> neighbors) {
  if (neighbors.empty()) throw Error(ErrorCode::kEmptyNeighbors, "score needs >= 1 neighbor");
  Scalar sum(0);
  for (const auto& n : neighbors) {
    const Scalar term = n.dist * n.scale;
    sum += n.provenance == Provenance::kAugmentedOod ? term : -term;
  }
  return sum / static_cast<Scalar>(neighbors.size());
}

}  // namespace oddstream
