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

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <queue>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oddstream/error.hpp"
#include "oddstream/geometry.hpp"

namespace oddstream {

enum class Provenance : std::uint8_t { kIdTrain, kAugmentedId, kAugmentedOod };

constexpr std::string_view ProvenanceName(Provenance p) {
  switch (p) {
    case Provenance::kIdTrain: return "id-train";
    case Provenance::kAugmentedId: return "augmented-id";
    case Provenance::kAugmentedOod: return "augmented-ood";
  }
  return "unknown";
}

template <typename Scalar>
struct Neighbor {
  std::size_t index;  // insertion sequence number, which is also the bank slot
  Scalar dist;
  Scalar scale;
  Provenance provenance;
};

template <typename Scalar>
using NeighborList = std::vector<Neighbor<Scalar>>;

// Read-only view of one stored entry.
template <typename Scalar>
struct MemoryEntry {
  Eigen::Ref<const Feature<Scalar>> vector;
  Scalar scale;
  Provenance provenance;
  std::size_t insert_seq;
};

/// Scaled feature store with exact k-nearest-neighbor search.
///
/// Vectors live column-wise in one dense matrix that grows geometrically.
/// Entries are append-only, so the slot index doubles as the insertion
/// sequence number and ties in distance resolve to the older entry.
///
/// Const member functions may run concurrently; Insert() must be exclusive.
template <typename Scalar>
class MemoryBank {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Feature<Scalar>;

  MemoryBank(Eigen::Index dim, bool normalize) : dim_(dim), normalize_(normalize) {
    if (dim < 1) {
      throw Error(ErrorCode::kInvalidConfig, "bank dimension must be >= 1");
    }
  }

  /// One IdTrain entry with scale 1 per feature.
  static MemoryBank FromFeatures(const FeatureList<Scalar>& features, bool normalize) {
    if (features.empty()) {
      throw Error(ErrorCode::kEmptyInput, "cannot initialize a bank from zero features");
    }
    MemoryBank bank(features.front().size(), normalize);
    bank.Reserve(features.size());
    for (const auto& f : features) bank.Insert(f, Scalar(1), Provenance::kIdTrain);
    return bank;
  }

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }
  bool normalizes() const { return normalize_; }

  void Reserve(std::size_t capacity) {
    if (static_cast<Eigen::Index>(capacity) > data_.cols()) {
      data_.conservativeResize(dim_, static_cast<Eigen::Index>(capacity));
    }
    scales_.reserve(capacity);
    provenance_.reserve(capacity);
  }

  /// Applies the bank's normalization policy to an incoming vector.
  Vector Prepare(const Vector& v) const {
    CheckDimension(v);
    if (normalize_) return Normalize(v);
    if (!AllFinite(v)) {
      throw Error(ErrorCode::kNonFinite, "feature has a NaN or Inf component");
    }
    return v;
  }

  void Insert(const Vector& v, Scalar scale, Provenance provenance) {
    CheckDimension(v);
    if (!(scale >= Scalar(1)) || !std::isfinite(static_cast<double>(scale))) {
      throw Error(ErrorCode::kInvalidScale,
                  "scale must be finite and >= 1, got " + std::to_string(static_cast<double>(scale)));
    }
    if (provenance != Provenance::kAugmentedOod && scale != Scalar(1)) {
      throw Error(ErrorCode::kInvalidScale, "in-distribution entries must have scale 1");
    }
    if (static_cast<Eigen::Index>(size_) == data_.cols()) {
      Reserve(std::max<std::size_t>(16, 2 * size_));
    }
    auto slot = data_.col(static_cast<Eigen::Index>(size_));
    if (!normalize_) {
      if (!AllFinite(v)) throw Error(ErrorCode::kNonFinite, "feature has a NaN or Inf component");
      slot = v;
    } else if (std::abs(static_cast<double>(v.norm()) - 1.0) <= 1e-12 && AllFinite(v)) {
      // Already prepared by the caller; storing it verbatim keeps a
      // re-query of the same vector at distance exactly zero.
      slot = v;
    } else {
      slot = Normalize(v);
    }
    scales_.push_back(scale);
    provenance_.push_back(provenance);
    ++size_;
  }

  MemoryEntry<Scalar> entry(std::size_t i) const {
    return {data_.col(static_cast<Eigen::Index>(i)), scales_[i], provenance_[i], i};
  }
  Scalar scale(std::size_t i) const { return scales_[i]; }
  Provenance provenance(std::size_t i) const { return provenance_[i]; }

  /// Overrides one entry's scale. Used by tests and seeding experiments.
  void SetScale(std::size_t i, Scalar scale) {
    if (!(scale >= Scalar(1))) throw Error(ErrorCode::kInvalidScale, "scale must be >= 1");
    scales_[i] = scale;
  }

  std::size_t Count(Provenance p) const {
    return static_cast<std::size_t>(std::count(provenance_.begin(), provenance_.end(), p));
  }

  /// Exact k nearest neighbors of `query`, ascending by distance with ties
  /// resolved by insertion order. Returns min(k, size()) neighbors. The query
  /// is used as given; call Prepare() first when the bank normalizes.
  template <typename Derived>
  NeighborList<Scalar> Query(const Eigen::MatrixBase<Derived>& query, std::size_t k) const {
    if (query.size() != dim_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "query dimension " + std::to_string(query.size()) + " vs bank " +
                      std::to_string(dim_));
    }
    if (k == 0) throw Error(ErrorCode::kInvalidConfig, "k must be >= 1");
    if (size_ == 0) throw Error(ErrorCode::kEmptyBank, "query against an empty bank");

    const std::size_t take = std::min(k, size_);
    // Max-heap on (squared distance, slot): the top is the current worst.
    using Key = std::pair<Scalar, std::size_t>;
    std::vector<Key> heap;
    heap.reserve(take + 1);
    const Eigen::Index n = static_cast<Eigen::Index>(size_);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Scalar d2 = (data_.col(i) - query).squaredNorm();
      const Key key{d2, static_cast<std::size_t>(i)};
      if (heap.size() < take) {
        heap.push_back(key);
        std::push_heap(heap.begin(), heap.end());
      } else if (key < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = key;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    std::sort_heap(heap.begin(), heap.end());

    using std::sqrt;
    NeighborList<Scalar> out;
    out.reserve(heap.size());
    for (const auto& [d2, slot] : heap) {
      out.push_back({slot, sqrt(d2), scales_[slot], provenance_[slot]});
    }
    return out;
  }

 private:
  template <typename Derived>
  void CheckDimension(const Eigen::MatrixBase<Derived>& v) const {
    if (v.size() != dim_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "feature dimension " + std::to_string(v.size()) + " vs bank " +
                      std::to_string(dim_));
    }
  }

  Eigen::Index dim_;
  bool normalize_;
  std::size_t size_ = 0;
  Matrix data_;
  std::vector<Scalar> scales_;
  std::vector<Provenance> provenance_;
};

using MemoryBankd = MemoryBank<double>;
using Neighbord = Neighbor<double>;

}  // namespace oddstream
